"""LASSO with intercept, grid cross-validation, the sample-size sweep and the
equivariant single-term training trick."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .exactdiag import choose_solver, expectation, generate_dataset, sample_seeds, solve_ed
from .features import FeatureMap, FeatureSpec
from .geometry import InteractionHypergraph, as_site_set, automorphism_orbits
from .hamiltonian import HamiltonianFamily, build_observable, correlation_terms, Observable, sample_params

log = logging.getLogger(__name__)

ALPHA_GRID = tuple(2.0 ** -p for p in (8, 7, 6, 5))
GAMMA_GRID = (0.4, 0.5, 0.6, 0.65, 0.7, 0.75)
R_GRID = (5, 10, 20, 40)
N_FOLDS = 5


def default_schedule(stop: int = 200, step: int = 5) -> list[int]:
    return list(range(step, stop + 1, step))


@dataclass
class LassoResult:
    w: np.ndarray
    y0: float
    n_iter: int
    objective: np.ndarray
    converged: bool
    alpha: float

    @property
    def l1(self) -> float:
        return float(np.abs(self.w).sum())


def lasso_objective(Phi, y, w, y0, alpha) -> float:
    r = y - y0 - Phi @ w
    return 0.5 * float(r @ r) / len(y) + alpha * float(np.abs(w).sum())


def lasso_fit(Phi: np.ndarray, y: np.ndarray, alpha: float, *, fit_intercept: bool = True, tol: float = 1e-6,
              max_iter: int = 10_000, w0: np.ndarray | None = None, y0: float | None = None) -> LassoResult:
    """Minimize (1/2N)||y - y0 - Phi w||^2 + alpha ||w||_1 by cyclic coordinate descent."""
    Phi = np.asfortranarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise ValueError("Phi must be (N, m) with N = len(y) >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if not (np.all(np.isfinite(Phi)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite inputs")
    w0 = np.zeros(Phi.shape[1]) if w0 is None else np.asarray(w0, dtype=float)
    if y0 is None:
        y0 = float(np.mean(y - Phi @ w0)) if fit_intercept else 0.0
    w, b, it, objs, conv = kernels.cd_lasso(Phi, y, float(alpha), w0, float(y0), float(tol), int(max_iter),
                                            bool(fit_intercept))
    if not conv:
        log.debug("LASSO hit max_iter=%d at alpha=%g", max_iter, alpha)
    return LassoResult(np.asarray(w), float(b), int(it), np.asarray(objs), bool(conv), float(alpha))


def lasso_path(Phi: np.ndarray, y: np.ndarray, alphas: Sequence[float], **kw) -> list[LassoResult]:
    """Fits for descending alphas, each warm-started from the previous solution."""
    Phi = np.asfortranarray(Phi, dtype=float)
    out, w, b = [], None, None
    for a in sorted(alphas, reverse=True):
        res = lasso_fit(Phi, y, a, w0=w, y0=b, **kw)
        w, b = res.w, res.y0
        out.append(res)
    return out


def kkt_residuals(Phi, y, res: LassoResult) -> tuple[float, float]:
    """(max over active |grad_j + alpha sign w_j|, max over inactive (|grad_j| - alpha)+)."""
    r = y - res.y0 - Phi @ res.w
    g = -(Phi.T @ r) / len(y)
    act = res.w != 0
    a = float(np.max(np.abs(g[act] + res.alpha * np.sign(res.w[act])), initial=0.0))
    b = float(np.max(np.maximum(np.abs(g[~act]) - res.alpha, 0.0), initial=0.0))
    return a, b


@dataclass
class TrainedModel:
    feature_map: FeatureMap
    w: np.ndarray
    y0: float
    hyperparams: dict
    diagnostics: dict = field(default_factory=dict)
    family: dict | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Phi = self.feature_map.transform(X)
        if Phi.shape[1] != len(self.w):
            raise ValueError("feature dimension does not match the weights")
        return self.y0 + Phi @ self.w

    def to_json(self) -> str:
        return json.dumps({
            "feature_spec": self.feature_map.to_dict(),
            "hypergraph": json.loads(self.feature_map.hg.to_json()),
            "family": self.family,
            "w": self.w.tolist(),
            "y0": self.y0,
            "hyperparams": self.hyperparams,
            "diagnostics": self.diagnostics,
        })

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        d = json.loads(text)
        hg = InteractionHypergraph.from_json(json.dumps(d["hypergraph"]))
        fmap = FeatureMap.from_dict(d["feature_spec"], hg)
        return cls(fmap, np.array(d["w"], dtype=float), float(d["y0"]), d["hyperparams"], d.get("diagnostics", {}),
                   d.get("family"))


def predict(model: TrainedModel, x: np.ndarray) -> float | np.ndarray:
    out = model.predict(x)
    return float(out[0]) if np.ndim(x) == 1 else out


def rmse(model: TrainedModel, X: np.ndarray, y: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    return float(np.sqrt(np.mean((model.predict(X) - y) ** 2)))


def fit_model(X, y, hg, supports, spec: FeatureSpec, alpha: float, *, tol=1e-6, max_iter=10_000,
              family: dict | None = None) -> TrainedModel:
    fmap = FeatureMap(hg, supports, spec)
    res = lasso_fit(fmap.transform(X), y, alpha, tol=tol, max_iter=max_iter)
    hp = {"alpha": alpha, "gamma": spec.gamma, "R": spec.R, "delta": spec.delta}
    diag = {"objective": float(res.objective[-1]) if len(res.objective) else None, "iterations": res.n_iter,
            "converged": res.converged, "l1": res.l1}
    return TrainedModel(fmap, res.w, res.y0, hp, diag, family)


@dataclass
class CVResult:
    alpha: float
    gamma: float
    R: int
    rmse: float
    table: list

    @property
    def best(self) -> tuple:
        return self.alpha, self.gamma, self.R


def fold_indices(N: int, k: int = N_FOLDS, seed=0) -> list[np.ndarray]:
    if N < k:
        raise ValueError(f"need at least {k} samples for {k}-fold CV, got {N}")
    perm = np.random.default_rng(seed).permutation(N)
    return np.array_split(perm, k)


def _cv_path(Phi, y, parts, alphas, tol, max_iter) -> dict:
    """Validation RMSE per fold for every alpha, warm-starting down the alpha path."""
    errs = {a: [] for a in alphas}
    for f, val in enumerate(parts):
        trn = np.concatenate([p for g, p in enumerate(parts) if g != f])
        for res in lasso_path(Phi[trn], y[trn], alphas, tol=tol, max_iter=max_iter):
            pred = res.y0 + Phi[val] @ res.w
            errs[res.alpha].append(float(np.sqrt(np.mean((pred - y[val]) ** 2))))
    return errs


def cv_lasso(Phi: np.ndarray, y: np.ndarray, alphas: Sequence[float], *, folds: int = N_FOLDS, seed=0,
             tol: float = 1e-6, max_iter: int = 10_000) -> tuple[float, dict]:
    """k-fold CV over alpha for a fixed design; returns (best alpha, {alpha: mean RMSE}).

    Ties go to the larger alpha (sparser model).
    """
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    errs = _cv_path(Phi, y, fold_indices(len(y), folds, seed), alphas, tol, max_iter)
    mean = {float(a): float(np.mean(e)) for a, e in errs.items()}
    best = min(mean.values())
    pick = max(a for a, e in mean.items() if e <= best + 1e-12 * max(1.0, abs(best)))
    return pick, mean


def cross_validate(X: np.ndarray, y: np.ndarray, hg: InteractionHypergraph, supports, base_spec: FeatureSpec,
                   *, alphas=ALPHA_GRID, gammas=GAMMA_GRID, Rs=R_GRID, folds: int = N_FOLDS, seed=0,
                   tol: float = 1e-6, max_iter: int = 10_000) -> CVResult:
    """Exhaustive grid over (alpha, gamma, R) with k-fold CV; mean validation RMSE decides.

    Ties (to 1e-12 relative) go to smaller R, then larger alpha, then smaller gamma.
    Fits along each alpha path are warm-started from the previous, larger alpha.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    parts = fold_indices(len(y), folds, seed)
    table = []
    for R in Rs:
        for gamma in gammas:
            Phi = FeatureMap(hg, supports, base_spec.replace(R=int(R), gamma=float(gamma))).transform(X)
            errs = _cv_path(Phi, y, parts, alphas, tol, max_iter)
            for a in alphas:
                table.append({"alpha": float(a), "gamma": float(gamma), "R": int(R),
                              "cv_rmse": float(np.mean(errs[a]))})
    best_err = min(r["cv_rmse"] for r in table)
    ties = [r for r in table if r["cv_rmse"] <= best_err + 1e-12 * max(1.0, abs(best_err))]
    pick = min(ties, key=lambda r: (r["R"], -r["alpha"], r["gamma"]))
    return CVResult(pick["alpha"], pick["gamma"], pick["R"], pick["cv_rmse"], table)


def train(X, y, hg, supports, base_spec: FeatureSpec, *, grids: dict | None = None, seed=0, family=None,
          tol=1e-6, max_iter=10_000) -> tuple[TrainedModel, CVResult]:
    """Cross-validate, then refit on all data with the chosen hyperparameters."""
    g = grids or {}
    cv = cross_validate(X, y, hg, supports, base_spec, alphas=g.get("alpha", ALPHA_GRID),
                        gammas=g.get("gamma", GAMMA_GRID), Rs=g.get("R", R_GRID), seed=seed, tol=tol,
                        max_iter=max_iter)
    model = fit_model(X, y, hg, supports, base_spec.replace(R=cv.R, gamma=cv.gamma), cv.alpha, tol=tol,
                      max_iter=max_iter, family=family)
    model.diagnostics["cv_rmse"] = cv.rmse
    return model, cv


@dataclass
class SweepRow:
    n: int
    N_needed: int | None
    rmse: float
    alpha: float
    gamma: float
    R: int
    seconds: float
    censored: bool = False
    history: list = field(default_factory=list)


@dataclass
class SweepResult:
    rows: list
    eps_target: float
    meta: dict = field(default_factory=dict)

    def table(self) -> list[tuple]:
        return [(r.n, r.N_needed, r.censored) for r in self.rows]

    def to_csv(self, header: str | None = None) -> str:
        lines = [header] if header else []
        lines.append("n,N_needed,rmse,alpha,gamma,R,seconds,censored")
        for r in self.rows:
            N = "" if r.N_needed is None else str(r.N_needed)
            lines.append(f"{r.n},{N},{r.rmse!r},{r.alpha!r},{r.gamma!r},{r.R},{r.seconds:.3f},{int(r.censored)}")
        return "\n".join(lines) + "\n"


def _xy(rows):
    return np.array([r["x"] for r in rows], dtype=float), np.array([r["y"] for r in rows], dtype=float)


def sweep_samples(family: HamiltonianFamily, observable: str, eps_target: float, n_list: Sequence[int],
                  N_schedule: Sequence[int] | None = None, test_N: int = 40, seed: int = 0, *,
                  delta: int = 4, grids: dict | None = None, solver: str = "auto", threads: int = 1,
                  feature_seed: int = 0, tol: float = 1e-6, max_iter: int = 10_000) -> SweepResult:
    """For each n, grow the training set along the schedule until test RMSE <= eps_target.

    The test set is fixed per n; training prefixes are nested. Runs that exhaust the
    schedule are marked censored with N_needed = None.
    """
    schedule = sorted(N_schedule or default_schedule())
    if schedule[0] < N_FOLDS:
        raise ValueError(f"schedule must start at >= {N_FOLDS} samples")
    rows = []
    for n in n_list:
        t0 = time.perf_counter()
        fam = family.with_n(n)
        obs = build_observable(observable, fam)
        hg = fam.hypergraph
        spec = FeatureSpec("rff", delta=delta, seed=feature_seed)
        solver_n = choose_solver(n, solver)
        test = generate_dataset(fam, obs, test_N, seeds=sample_seeds([seed, n, 1], test_N), solver=solver_n,
                                threads=threads)
        X_te, y_te = _xy(test)
        train_seeds = sample_seeds([seed, n, 0], schedule[-1])
        data: list = []
        hit, history, last = None, [], None
        for N in schedule:
            if N > len(data):
                data += generate_dataset(fam, obs, N - len(data), seeds=train_seeds[len(data):N],
                                         solver=solver_n, threads=threads)
            X_tr, y_tr = _xy(data[:N])
            model, cv = train(X_tr, y_tr, hg, obs.supports, spec, grids=grids, seed=[seed, n, N], tol=tol,
                              max_iter=max_iter)
            err = rmse(model, X_te, y_te)
            history.append({"N": N, "rmse": err})
            last = (err, cv)
            log.info("n=%d N=%d test RMSE %.4f (alpha=%g gamma=%g R=%d)", n, N, err, cv.alpha, cv.gamma, cv.R)
            if err <= eps_target:
                hit = N
                break
        err, cv = last
        rows.append(SweepRow(n, hit, err, cv.alpha, cv.gamma, cv.R, time.perf_counter() - t0, hit is None, history))
        if hit is None:
            log.warning("n=%d: schedule exhausted without reaching RMSE %.3g (censored)", n, eps_target)
    return SweepResult(rows, eps_target, {"observable": observable, "family": family.to_dict(), "delta": delta})


def bond_correlations(family: HamiltonianFamily, x: np.ndarray, bonds, seed=0) -> np.ndarray:
    """C_{ij} for every bond from one exact ground-state solve."""
    res = solve_ed(family, x, seed=seed)
    return np.array([expectation(res, Observable("C", ((b, correlation_terms(*b)),))) for b in bonds])


@dataclass
class EquivariantResult:
    model: TrainedModel
    per_site_rmse: np.ndarray
    average_rmse: float
    bonds: list
    cv: CVResult | None = None


def predict_member(model: TrainedModel, hg: InteractionHypergraph, g, X: np.ndarray) -> np.ndarray:
    """Prediction for the term g(rep) from a model of the representative: evaluate at g.x."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return model.predict(np.array([hg.act_on_params(g, x) for x in X]))


def train_equivariant_local(family: HamiltonianFamily, N: int = 40, seed: int = 0, *, rep=(0, 1), delta: int = 4,
                            test_N: int = 40, grids: dict | None = None, threads: int = 1,
                            feature_seed: int = 0, tol: float = 1e-6, max_iter: int = 10_000) -> EquivariantResult:
    """Fit one model on C_rep and reuse it for every bond by cycling the parameters."""
    if family.boundary != "periodic":
        raise ValueError("equivariant training needs a periodic chain")
    if family.n > 16:
        raise ValueError("per-bond test targets are computed exactly (n <= 16)")
    hg = family.hypergraph
    rep = as_site_set(rep)
    bonds = list(hg.edges)
    orbits = automorphism_orbits(hg, bonds)
    if len(orbits) != 1:
        raise ValueError("bond terms do not form a single orbit")
    obs = build_observable("local-correlation", family, rep)
    train_rows = generate_dataset(family, obs, N, seeds=sample_seeds([seed, family.n, 0], N), solver="ed",
                                  threads=threads)
    X_tr, y_tr = _xy(train_rows)
    spec = FeatureSpec("rff", delta=delta, seed=feature_seed)
    model, cv = train(X_tr, y_tr, hg, [rep], spec, grids=grids, seed=[seed, family.n], tol=tol, max_iter=max_iter)
    test_seeds = sample_seeds([seed, family.n, 1], test_N)
    X_te = np.array([sample_params(family, s) for s in test_seeds])
    Y_te = np.array([bond_correlations(family, x, bonds, seed=s) for x, s in zip(X_te, test_seeds)])
    # element mapping rep -> bond, re-based so that it is relative to rep
    elem = automorphism_orbits(hg, [rep]).element
    per = []
    for k, b in enumerate(bonds):
        g = elem[as_site_set(b)]
        pred = predict_member(model, hg, g, X_te)
        per.append(float(np.sqrt(np.mean((pred - Y_te[:, k]) ** 2))))
    per = np.array(per)
    return EquivariantResult(model, per, float(per.mean()), bonds, cv)
