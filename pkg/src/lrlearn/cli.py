"""Command-line entry point: ``lrlearn <command> --config cfg.json [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

log = logging.getLogger("lrlearn")

COMMANDS = ("gen-data", "train", "sweep", "shadows", "exponents", "clt", "fit-expsum")
OUTPUTS = {
    "gen-data": "data.jsonl",
    "train": "model.json",
    "sweep": "sweep.csv",
    "shadows": "shadows.jsonl",
    "exponents": "exponents.csv",
    "clt": "clt.csv",
    "fit-expsum": "expsum.json",
}


class ConfigError(ValueError):
    pass


def load_schema(command: str) -> dict:
    text = resources.files("lrlearn").joinpath("schemas", f"{command}.json").read_text()
    return json.loads(text)


def validate(command: str, config: dict) -> None:
    try:
        jsonschema.validate(config, load_schema(command))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{command} config invalid at {where}: {exc.message}") from None


def config_hash(command: str, config: dict) -> str:
    blob = json.dumps({"command": command, "config": config}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _family(cfg):
    from .hamiltonian import HamiltonianFamily

    return HamiltonianFamily.from_dict(cfg["family"])


def _observable(cfg, family, default="avg-correlation"):
    from .hamiltonian import build_observable

    spec = cfg.get("observable", {"kind": default})
    return build_observable(spec["kind"], family, spec.get("sites"))


def plan(command: str, cfg: dict) -> list[str]:
    """Human-readable steps for --dry-run."""
    if command == "gen-data":
        from .exactdiag import choose_solver

        n = cfg["family"]["n"]
        return [f"solve {cfg['N']} ground states of {cfg['family']['kind']} n={n} with "
                f"{choose_solver(n, cfg.get('solver', 'auto'))}", f"measure {cfg['observable']['kind']}"]
    if command == "train":
        return [f"read {cfg['data']}", "cross-validate the RFF LASSO grid", "refit and write the model"]
    if command == "sweep":
        return [f"n={n}: grow N until test RMSE <= {cfg['eps']}" for n in cfg["n_list"]]
    if command == "shadows":
        return [f"{cfg['N']} draws, T={cfg.get('T', 'default')} snapshots each, {len(cfg['paulis'])} Paulis"]
    if command == "exponents":
        return [f"exponent curves for D={cfg.get('D', [1, 2, 3, 4, 5])} on a {cfg.get('grid', 200)}-point grid"]
    if command == "clt":
        return [f"n={n}: {cfg.get('num_samples', 100)} disorder samples" for n in cfg["n_list"]]
    return [f"exp-sum fit alpha={cfg['alpha']} ({cfg.get('boundary', 'open')})"]


def run(command: str, cfg: dict, *, threads: int = 1) -> str:
    """Execute one command and return the output body (no header)."""
    seed = cfg.get("seed", 0)
    if command == "gen-data":
        from .exactdiag import generate_dataset

        fam = _family(cfg)
        obs = _observable(cfg, fam)
        mask = (cfg["mask"]["sites"], cfg["mask"]["delta"]) if "mask" in cfg else None
        rows = generate_dataset(fam, obs, cfg["N"], seed, mask=mask, noise_sigma=cfg.get("noise_sigma", 0.0),
                                solver=cfg.get("solver", "auto"), threads=threads)
        return "".join(json.dumps(r) + "\n" for r in rows)
    if command == "train":
        from .features import FeatureSpec
        from .learner import train

        fam = _family(cfg)
        obs = _observable(cfg, fam)
        path = Path(cfg["data"])
        if not path.exists():
            raise ConfigError(f"data file {path} not found")
        rows = [json.loads(s) for s in path.read_text().splitlines() if s.strip() and not s.startswith("#")]
        if not rows:
            raise ConfigError(f"data file {path} has no rows")
        X = np.array([r["x"] for r in rows], dtype=float)
        y = np.array([r["y"] for r in rows], dtype=float)
        spec = FeatureSpec.from_dict(cfg.get("features", {}))
        model, cv = train(X, y, fam.hypergraph, obs.supports, spec, grids=cfg.get("grids"), seed=seed,
                          family=fam.to_dict(), tol=cfg.get("tol", 1e-6), max_iter=cfg.get("max_iter", 10_000))
        log.info("selected alpha=%g gamma=%g R=%d (CV RMSE %.4g)", cv.alpha, cv.gamma, cv.R, cv.rmse)
        return model.to_json()
    if command == "sweep":
        from .learner import sweep_samples

        fam = _family(cfg)
        res = sweep_samples(fam, cfg["observable"]["kind"], cfg["eps"], cfg["n_list"], cfg.get("schedule"),
                            cfg.get("test_N", 40), seed, delta=cfg.get("delta", 4), grids=cfg.get("grids"),
                            solver=cfg.get("solver", "auto"), threads=threads,
                            feature_seed=cfg.get("feature_seed", 0))
        return res.to_csv()
    if command == "shadows":
        from .hamiltonian import PauliTerm
        from .shadows import shadow_dataset

        fam = _family(cfg)
        paulis = [PauliTerm.parse(p) for p in cfg["paulis"]]
        if any(max(P.support) >= fam.n for P in paulis):
            raise ConfigError("a Pauli acts outside the chain")
        data = shadow_dataset(fam, paulis, cfg["N"], cfg.get("T"), seed, gamma=cfg.get("gamma", 0.1),
                              eps=cfg.get("eps", 0.2), const=cfg.get("const", 1.0))
        return "".join(json.dumps(r) + "\n" for P in paulis for r in data[P.label()])
    if command == "exponents":
        from .theory import emit_exponent_curves

        return emit_exponent_curves(cfg.get("D", [1, 2, 3, 4, 5]), cfg.get("grid", 200), cfg.get("x_min", 1e-6))
    if command == "clt":
        from .stats import disorder_ensemble, table1_csv

        fam = _family(cfg)
        obs_kind = cfg.get("observable", {}).get("kind", "avg-correlation")
        reps = []
        for n in cfg["n_list"]:
            rep = disorder_ensemble(fam, obs_kind, n, cfg.get("num_samples", 100), seed,
                                    solver=cfg.get("solver", "auto"), threads=threads)
            log.info("n=%d mean %.4f sd %.4f", n, rep.mean, rep.sd)
            reps.append(rep)
        return table1_csv(reps)
    if command == "fit-expsum":
        from .tensor.expsum import fit_exp_sum

        fit = fit_exp_sum(cfg["alpha"], cfg.get("L", 128), cfg.get("K", 10), cfg.get("boundary", "open"),
                          cfg.get("n"), cfg.get("tol"), cfg.get("K_max"))
        return fit.to_json()
    raise ConfigError(f"unknown command {command!r}")


def with_header(command: str, body: str, digest: str) -> str:
    if OUTPUTS[command].endswith(".json"):
        d = json.loads(body)
        d["config_hash"] = digest
        return json.dumps(d, sort_keys=True) + "\n"
    return f"# config_hash={digest} command={command}\n" + body


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrlearn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, required=name != "exponents")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", type=Path, default=Path("."))
        s.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        s.add_argument("--dry-run", action="store_true")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "exponents":
            s.add_argument("--D", type=str, help="e.g. 1..5 or 1,2,4")
            s.add_argument("--grid", type=int)
    return p


def _parse_D(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    log.setLevel(logging.INFO)
    try:
        cfg = {}
        if args.config is not None:
            if not args.config.exists():
                raise ConfigError(f"config {args.config} not found")
            try:
                cfg = json.loads(args.config.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.command == "exponents":
            if args.D:
                cfg["D"] = _parse_D(args.D)
            if args.grid:
                cfg["grid"] = args.grid
        validate(args.command, cfg)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        digest = config_hash(args.command, cfg)
        target = args.out / OUTPUTS[args.command]
        if args.dry_run:
            print(f"command: {args.command}\nconfig_hash: {digest}\noutput: {target}")
            for step in plan(args.command, cfg):
                print(f"  - {step}")
            return 0
        log.info("running %s (config %s)", args.command, digest)
        body = run(args.command, cfg, threads=args.threads)
        args.out.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="\n", encoding="utf-8") as f:
            f.write(with_header(args.command, body, digest))
        log.info("wrote %s", target)
        return 0
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.error("%s failed: %s", args.command, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
