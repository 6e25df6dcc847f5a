"""Two-site DMRG with SVD truncation and an excited-state search by explicit projection."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from ..exactdiag import lanczos_lowest
from .mpo import MPO
from .mps import MPS, mps_expectation, overlap, random_mps  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncationPolicy:
    cutoff: float = 1e-9
    max_bond: int = 100
    max_sweeps: int = 100
    rel_tol: float = 1e-6
    start_bond: int = 16
    grow_every: int = 10
    min_sweeps: int = 2
    local_tol: float = 1e-10
    local_iter: int = 200

    def __post_init__(self):
        for name in ("cutoff", "max_bond", "max_sweeps", "rel_tol", "start_bond", "grow_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def bond_limit(self, sweep: int) -> int:
        return min(self.max_bond, self.start_bond * 2 ** (sweep // self.grow_every))

    @classmethod
    def from_dict(cls, d: dict | None) -> "TruncationPolicy":
        return cls(**(d or {}))


@dataclass
class DMRGResult:
    mps: MPS
    energy: float
    converged: bool
    sweeps: list = field(default_factory=list)

    def __iter__(self):
        # unpacks as (mps, energy)
        yield self.mps
        yield self.energy

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "energy", "max_bond", "trunc_err"])
        for row in self.sweeps:
            w.writerow([row["sweep"], repr(row["energy"]), row["max_bond"], repr(row["trunc_err"])])
        return buf.getvalue()


def _left_env(L, A, W):
    t = np.tensordot(L, A, axes=(2, 0))
    t = np.tensordot(t, W, axes=([1, 2], [0, 3]))
    t = np.tensordot(t, A.conj(), axes=([0, 3], [0, 1]))
    return t.transpose(2, 1, 0)


def _right_env(R, B, W):
    t = np.tensordot(B, R, axes=(2, 2))
    t = np.tensordot(t, W, axes=([1, 3], [3, 1]))
    t = np.tensordot(t, B.conj(), axes=([1, 3], [2, 1]))
    return t.transpose(2, 1, 0)


def _ov_left(E, A, G):
    t = np.tensordot(E, G, axes=(1, 0))
    return np.tensordot(A.conj(), t, axes=([0, 1], [0, 1]))


def _ov_right(E, B, G):
    t = np.tensordot(G, E, axes=(2, 1))
    return np.tensordot(B.conj(), t, axes=([1, 2], [1, 2]))


def _two_site_matvec(L, W1, W2, R, shape):
    def mv(v):
        t = np.tensordot(L, v.reshape(shape), axes=(2, 0))
        t = np.tensordot(t, W1, axes=([1, 2], [0, 3]))
        t = np.tensordot(t, W2, axes=([3, 1], [0, 3]))
        t = np.tensordot(t, R, axes=([1, 3], [2, 1]))
        return t.reshape(-1)
    return mv


def _local_ground(mv, v0, deflate, policy):
    dim = v0.shape[0]
    if dim <= 32:
        H = np.stack([mv(e) for e in np.eye(dim, dtype=v0.dtype)], axis=1)
        H = 0.5 * (H + H.conj().T)
        if deflate:
            P = np.eye(dim, dtype=H.dtype) - sum(np.outer(q, q.conj()) for q in deflate)
            H = P @ H @ P
            # push the deflated direction above the spectrum
            H = H + (np.abs(H).sum() + 1.0) * (np.eye(dim) - P)
        ev, vec = np.linalg.eigh(H)
        return float(ev[0]), vec[:, 0]
    E, v, _, _ = lanczos_lowest(mv, v0, tol=policy.local_tol, max_restarts=policy.local_iter,
                                krylov=min(40, dim), deflate=deflate)
    return E, v


def _split(theta, limit, cutoff, direction):
    a, s1, s2, b = theta.shape
    U, S, Vh = np.linalg.svd(theta.reshape(a * s1, s2 * b), full_matrices=False)
    w = S ** 2
    w_tot = w.sum()
    # smallest rank whose discarded weight stays below the cutoff
    tail = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]]) / w_tot
    keep = int(np.argmax(tail <= cutoff)) + 1
    saturated = keep > limit
    keep = min(keep, limit)
    trunc = float(w[keep:].sum() / w_tot)
    U, S, Vh = U[:, :keep], S[:keep], Vh[:keep]
    S = S / np.linalg.norm(S)
    if direction == "right":
        A = U.reshape(a, s1, keep)
        B = (S[:, None] * Vh).reshape(keep, s2, b)
    else:
        A = (U * S[None, :]).reshape(a, s1, keep)
        B = Vh.reshape(keep, s2, b)
    return A, B, trunc, saturated


def _run(mpo: MPO, policy: TruncationPolicy, seed, ground: MPS | None) -> DMRGResult:
    n = mpo.n
    if n < 2:
        raise ValueError("DMRG needs at least two sites")
    cplx = any(np.iscomplexobj(W) for W in mpo.tensors) or (
        ground is not None and any(np.iscomplexobj(A) for A in ground.tensors))
    mps = random_mps(n, policy.bond_limit(0), seed=seed, dtype=complex if cplx else float)
    Ws = mpo.tensors
    one = np.ones((1, 1, 1))
    Ls = [one] + [None] * n
    Rs = [None] * n + [one]
    for i in range(n - 1, 0, -1):
        Rs[i] = _right_env(Rs[i + 1], mps.tensors[i], Ws[i])
    if ground is not None:
        g = ground.copy()
        Lo = [np.ones((1, 1))] + [None] * n
        Ro = [None] * n + [np.ones((1, 1))]
        for i in range(n - 1, 0, -1):
            Ro[i] = _ov_right(Ro[i + 1], mps.tensors[i], g.tensors[i])

    energies = []
    sweeps = []
    converged = False
    E = np.inf
    for sweep in range(policy.max_sweeps):
        limit = policy.bond_limit(sweep)
        trunc_max, saturated_any = 0.0, False
        order = [(i, "right") for i in range(n - 1)] + [(i, "left") for i in range(n - 2, -1, -1)]
        for i, direction in order:
            A, B = mps.tensors[i], mps.tensors[i + 1]
            theta = np.tensordot(A, B, axes=(2, 0))
            shape = theta.shape
            mv = _two_site_matvec(Ls[i], Ws[i], Ws[i + 1], Rs[i + 2], shape)
            deflate = []
            if ground is not None:
                phi = np.tensordot(Lo[i], np.tensordot(g.tensors[i], g.tensors[i + 1], axes=(2, 0)), axes=(1, 0))
                phi = np.tensordot(phi, Ro[i + 2], axes=(3, 1)).reshape(-1)
                nphi = np.linalg.norm(phi)
                if nphi > 1e-14:
                    deflate = [phi / nphi]
            v0 = theta.reshape(-1)
            if deflate:
                v0 = v0 - deflate[0] * np.vdot(deflate[0], v0)
                if np.linalg.norm(v0) < 1e-8:
                    v0 = np.random.default_rng([seed, sweep, i]).standard_normal(v0.shape).astype(v0.dtype)
            E, v = _local_ground(mv, v0, deflate, policy)
            A, B, trunc, sat = _split(v.reshape(shape), limit, policy.cutoff, direction)
            trunc_max = max(trunc_max, trunc)
            saturated_any |= sat
            mps.tensors[i], mps.tensors[i + 1] = A, B
            if direction == "right":
                mps.center = i + 1
                Ls[i + 1] = _left_env(Ls[i], A, Ws[i])
                if ground is not None:
                    Lo[i + 1] = _ov_left(Lo[i], A, g.tensors[i])
            else:
                mps.center = i
                Rs[i + 1] = _right_env(Rs[i + 2], B, Ws[i + 1])
                if ground is not None:
                    Ro[i + 1] = _ov_right(Ro[i + 2], B, g.tensors[i + 1])
        energies.append(float(E))
        sweeps.append({"sweep": sweep, "energy": float(E), "max_bond": max(mps.bond_dims),
                       "trunc_err": trunc_max, "bond_limit": limit})
        if len(energies) >= policy.min_sweeps:
            prev = energies[-2]
            rel = abs(E - prev) / max(abs(E), 1e-300)
            if rel < policy.rel_tol and (limit >= policy.max_bond or not saturated_any):
                converged = True
                break
    if not converged:
        log.warning("DMRG reached %d sweeps without convergence", policy.max_sweeps)
    mps.info.update(energy=float(E), converged=converged)
    return DMRGResult(mps, float(E), converged, sweeps)


def dmrg_ground(mpo: MPO, policy: TruncationPolicy | None = None, seed=0) -> DMRGResult:
    """Two-site DMRG ground state. Unpacks as ``(mps, energy)``; see ``.converged``."""
    return _run(mpo, policy or TruncationPolicy(), seed, None)


def dmrg_excited(mpo: MPO, ground: MPS, policy: TruncationPolicy | None = None, seed=1) -> DMRGResult:
    """Lowest state orthogonal to ``ground``: every local problem is projected
    onto the complement of the ground state's local image."""
    g = ground.copy()
    g.move_center(0)
    g.normalize()
    res = _run(mpo, policy or TruncationPolicy(), seed, g)
    res.mps.info["overlap"] = abs(overlap(res.mps, g))
    return res
