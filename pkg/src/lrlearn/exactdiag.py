"""Exact diagonalization: restarted Lanczos with full reorthogonalization,
deflation for the first excited state, and dataset generation."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import neighborhood
from .hamiltonian import (
    HamiltonianFamily,
    Observable,
    apply_pauli,
    build_dense,
    mask_params,
    sample_params,
)

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-8
ED_MAX_N = 20


class ConvergenceError(RuntimeError):
    pass


@dataclass
class SpectralResult:
    E0: float
    vector: np.ndarray
    E1: float | None = None
    iterations: int = 0
    residual: float = 0.0
    degenerate: bool = False

    @property
    def gap(self) -> float | None:
        return None if self.E1 is None else self.E1 - self.E0

    @property
    def n(self) -> int:
        return int(round(math.log2(self.vector.shape[0])))


def _orthogonalize(w, V, k, deflate):
    # two passes of classical Gram-Schmidt against V[:k] and the deflated vectors
    for _ in range(2):
        for q in deflate:
            w -= q * np.vdot(q, w)
        if k:
            Q = V[:k]
            w -= Q.T @ (Q.conj() @ w)
    return w


def lanczos_lowest(matvec: Callable[[np.ndarray], np.ndarray], v0: np.ndarray, *,
                   tol: float = 1e-10, max_restarts: int = 500, krylov: int = 40,
                   deflate: Sequence[np.ndarray] = ()) -> tuple[float, np.ndarray, int, float]:
    """Lowest eigenpair of a Hermitian operator given by ``matvec``.

    Explicitly restarted Lanczos with full reorthogonalization. Vectors in
    ``deflate`` (orthonormal) are projected out of every Krylov vector, so the
    result is the lowest eigenpair in their orthogonal complement. Converged when
    ||Av - theta v|| <= tol * max(1, ||A||_est).

    Returns (eigenvalue, vector, total matvecs, residual norm).
    """
    dim = v0.shape[0]
    krylov = max(1, min(krylov, dim - len(deflate)))
    dtype = np.result_type(v0, *deflate) if deflate else v0.dtype
    v = _orthogonalize(np.array(v0, dtype=dtype), None, 0, deflate)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("start vector lies in the deflated space")
    v /= nv
    V = np.empty((krylov, dim), dtype=dtype)
    scale = 1.0
    matvecs = 0
    res = np.inf
    for _ in range(max_restarts):
        V[0] = v
        alphas, betas = [], []
        k = 0
        while True:
            w = matvec(V[k])
            matvecs += 1
            a = np.vdot(V[k], w).real
            alphas.append(a)
            w = _orthogonalize(w, V, k + 1, deflate)
            b = np.linalg.norm(w)
            if k == krylov - 1 or b <= 1e-14 * max(scale, abs(a)):
                break
            betas.append(b)
            k += 1
            V[k] = w / b
        m = len(alphas)
        T = np.diag(alphas)
        if m > 1:
            off = np.array(betas[: m - 1])
            T = T + np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = np.linalg.eigh(T)
        scale = max(scale, float(np.max(np.abs(evals))))
        theta = float(evals[0])
        x = evecs[:, 0] @ V[:m]
        x /= np.linalg.norm(x)
        r = matvec(x) - theta * x
        matvecs += 1
        for q in deflate:
            r -= q * np.vdot(q, r)
        res = float(np.linalg.norm(r))
        if res <= tol * scale or m < krylov:
            # m < krylov means an invariant subspace was found: the Ritz pair is exact
            if res > 1e-8 * scale:
                raise ConvergenceError(f"Lanczos breakdown with residual {res:.3e}")
            return theta, x, matvecs, res
        v = x
    raise ConvergenceError(f"Lanczos did not converge: residual {res:.3e} after {matvecs} matvecs")


def ground_state(H, *, tol: float = 1e-10, max_iter: int = 500, seed: int = 0,
                 excited: bool = True) -> SpectralResult:
    """Ground state (and optionally first excited level) of a Hermitian matrix."""
    dim = H.shape[0]
    if dim > 2 ** ED_MAX_N:
        raise ValueError(f"dimension {dim} exceeds 2^{ED_MAX_N}")
    real = not np.iscomplexobj(H.data if sp.issparse(H) else H)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    if not real:
        v0 = v0 + 1j * rng.standard_normal(dim)
    matvec = H.dot
    if dim <= 64:
        # tiny problems: dense diagonalization is exact and cheap
        dense = H.toarray() if sp.issparse(H) else np.asarray(H)
        ev, vecs = np.linalg.eigh(dense)
        vec = vecs[:, 0]
        E1 = float(ev[1]) if (excited and dim > 1) else None
        res = float(np.linalg.norm(dense @ vec - ev[0] * vec))
        out = SpectralResult(float(ev[0]), vec, E1, 0, res)
    else:
        E0, vec, it, res = lanczos_lowest(matvec, v0, tol=tol, max_restarts=max_iter)
        E1 = None
        if excited:
            v1 = rng.standard_normal(dim) if real else v0.conj()
            E1, _, it1, _ = lanczos_lowest(matvec, v1, tol=tol, max_restarts=max_iter, deflate=[vec])
            it += it1
        out = SpectralResult(E0, vec, E1, it, res)
    if out.E1 is not None and out.E1 - out.E0 < DEGENERACY_TOL:
        out.degenerate = True
        log.warning("degenerate ground state detected (gap %.2e)", out.E1 - out.E0)
    return out


def expectation(state: np.ndarray | SpectralResult, O: Observable) -> float:
    """<v|O|v> for a normalized state vector."""
    vec = state.vector if isinstance(state, SpectralResult) else np.asarray(state)
    n = int(round(math.log2(vec.shape[0])))
    if 1 << n != vec.shape[0]:
        raise ValueError("state dimension is not a power of two")
    if O.is_energy:
        raise ValueError("energy observables must be bound to x before measuring")
    total = 0.0 + 0.0j
    for t in O.terms:
        if max(t.support) >= n:
            raise ValueError(f"term {t.label()} outside {n} sites")
        total += np.vdot(vec, apply_pauli(vec, n, t))
    if abs(total.imag) > 1e-12 * max(1.0, abs(total.real)):
        raise ValueError(f"expectation has imaginary part {total.imag:.3e}")
    return float(total.real)


def solve_ed(family: HamiltonianFamily, x: np.ndarray, *, excited: bool = False, seed: int = 0,
             tol: float = 1e-10) -> SpectralResult:
    return ground_state(build_dense(family, x), tol=tol, seed=seed, excited=excited)


def measure(family: HamiltonianFamily, x: np.ndarray, observable: Observable, *,
            solver: str = "auto", seed: int = 0, dmrg_policy=None) -> float:
    """Ground-state value of ``observable`` at parameters ``x``."""
    solver = choose_solver(family.n, solver)
    if solver == "ed":
        res = solve_ed(family, x, seed=seed)
        if observable.is_energy:
            return observable.energy_scale * res.E0
        return expectation(res, observable)
    from .tensor.dmrg import dmrg_ground, mps_expectation
    from .tensor.mpo import build_mpo

    mps, energy = dmrg_ground(build_mpo(family, x), dmrg_policy, seed=seed)
    if observable.is_energy:
        return observable.energy_scale * energy
    return mps_expectation(mps, observable)


AUTO_THRESHOLD = 16


def choose_solver(n: int, solver: str = "auto") -> str:
    if solver not in ("ed", "dmrg", "auto"):
        raise ValueError(f"unknown solver {solver!r}")
    if solver == "auto":
        solver = "ed" if n <= AUTO_THRESHOLD else "dmrg"
        log.info("auto solver at n=%d -> %s", n, solver)
    return solver


def sample_seeds(seed: int, N: int) -> list[int]:
    """Independent per-sample integer seeds derived by seed splitting."""
    return [int(s.generate_state(1, dtype=np.uint32)[0]) for s in np.random.SeedSequence(seed).spawn(N)]


def generate_dataset(family: HamiltonianFamily, observable: Observable, N: int, seed: int = 0, *,
                     mask: tuple[Sequence[int], int] | None = None, noise_sigma: float = 0.0,
                     solver: str = "auto", threads: int = 1, seeds: Sequence[int] | None = None) -> list[dict]:
    """N independent (x, y) rows: x drawn per row seed, y the ground-state value.

    ``mask=(I, delta)`` replaces x by chi_{S_{I,delta}}(x) before solving.
    Rows are dicts with keys x, y, seed, observable.
    """
    if N < 1 and seeds is None:
        raise ValueError("N must be >= 1")
    seeds = list(seeds) if seeds is not None else sample_seeds(seed, N)
    solver = choose_solver(family.n, solver)
    nbhd = None
    if mask is not None:
        nbhd = neighborhood(family.hypergraph, mask[0], int(mask[1]))

    def one(k_s):
        k, s = k_s
        x = sample_params(family, s)
        xs = mask_params(x, family.hypergraph, nbhd) if nbhd is not None else x
        try:
            y = measure(family, xs, observable, solver=solver, seed=s)
        except Exception as exc:  # noqa: BLE001
            raise RuntimeError(f"sample {k} (seed {s}) failed: {exc}") from exc
        if noise_sigma > 0:
            y += float(np.random.default_rng([s, 1]).normal(0.0, noise_sigma))
        return {"x": xs.tolist(), "y": float(y), "seed": int(s), "observable": observable.name}

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, enumerate(seeds)))
    return [one(ks) for ks in enumerate(seeds)]
