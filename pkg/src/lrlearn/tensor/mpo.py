"""Matrix product operators for the Heisenberg and long-range Ising chains.

Site tensors have shape (left bond, right bond, out, in); the boundary row and
column vectors are absorbed into the first and last tensors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..hamiltonian import HamiltonianFamily
from .expsum import ExpSumFit, fit_exp_sum

log = logging.getLogger(__name__)

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z = np.diag([1.0, -1.0])
iY = np.array([[0.0, 1.0], [-1.0, 0.0]])
# Y (x) Y = (-iY) (x) (iY): keeps the Heisenberg grids real
LEFT = (X, -iY, Z)
RIGHT = (X, iY, Z)
MAX_BOND = 512
ISING_FIT_TOL = 1e-8


@dataclass
class MPO:
    tensors: list

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [W.shape[1] for W in self.tensors[:-1]]

    @property
    def W_L(self) -> np.ndarray:
        return self.tensors[0][0]

    @property
    def W_R(self) -> np.ndarray:
        return self.tensors[-1][:, 0]

    def to_dense(self) -> np.ndarray:
        if self.n > 12:
            raise ValueError("dense contraction limited to n <= 12")
        acc = self.tensors[0][0]  # (bond, out, in)
        for W in self.tensors[1:]:
            acc = np.einsum("aij,abkl->bikjl", acc, W)
            b = acc.shape[0]
            dim = acc.shape[1] * acc.shape[2]
            acc = acc.reshape(b, dim, dim)
        return acc[0]

    def element(self, bra: str, ket: str) -> complex:
        """<bra|H|ket> for computational basis strings, by a row-vector sweep."""
        v = np.ones(1)
        for W, s, t in zip(self.tensors, bra, ket):
            v = v @ W[:, :, int(s), int(t)]
        return complex(v[0])


def _pack(grids: list[np.ndarray]) -> MPO:
    for W in grids:
        if max(W.shape[:2]) > MAX_BOND:
            raise ValueError("MPO bond dimension overflow")
    return MPO([np.ascontiguousarray(W) for W in grids])


def _heisenberg_open(J: np.ndarray, n: int) -> MPO:
    # states: 0 nothing placed, 1..3 sigma_a placed awaiting partner, 4 done
    grids = []
    for i in range(n):
        W = np.zeros((5, 5, 2, 2))
        W[0, 0] = I2
        W[4, 4] = I2
        for a in range(1, 4):
            if i < n - 1:
                W[0, a] = J[i] * LEFT[a - 1]
            W[a, 4] = RIGHT[a - 1]
        grids.append(W)
    grids[0] = grids[0][:1]
    grids[-1] = grids[-1][:, 4:]
    return _pack(grids)


def _heisenberg_periodic(J_bond: dict, n: int) -> MPO:
    """The fixed 8-state grid: states 1..3 carry the wrap bond, 4..6 the running bond."""
    grids = []
    for i in range(n):
        W = np.zeros((8, 8, 2, 2))
        W[0, 0] = I2
        for a in range(1, 4):
            W[a, a] = I2
        W[7, 7] = I2
        for a in range(3):
            if i < n - 1:
                W[0, 4 + a] = J_bond[(i, i + 1)] * LEFT[a]
            W[4 + a, 7] = RIGHT[a]
        grids.append(W)
    WL = np.zeros((1, 8, 2, 2))
    WL[0, 0] = I2
    for a in range(3):
        WL[0, 1 + a] = J_bond[(0, n - 1)] * LEFT[a]
        WL[0, 4 + a] = J_bond[(0, 1)] * LEFT[a]
    WR = np.zeros((8, 1, 2, 2))
    for a in range(3):
        WR[1 + a, 0] = RIGHT[a]
        WR[4 + a, 0] = RIGHT[a]
    WR[7, 0] = I2
    grids[0], grids[-1] = WL, WR
    return _pack(grids)


def _ising_open(J: np.ndarray, h: float, fit: ExpSumFit) -> MPO:
    """Bond dimension 2K+2: K channels carry J_i Z_i, K carry Z_i, each decaying by lambda_l."""
    n = len(J)
    a, lam = fit.a, fit.lam
    K = len(a)
    D = 2 * K + 2
    last = D - 1
    cplx = np.iscomplexobj(a) or np.iscomplexobj(lam)
    grids = []
    for i in range(n):
        W = np.zeros((D, D, 2, 2), dtype=complex if cplx else float)
        W[0, 0] = I2
        W[last, last] = I2
        W[0, last] = h * X
        for l in range(K):
            W[0, 1 + l] = lam[l] * J[i] * Z
            W[0, 1 + K + l] = lam[l] * Z
            W[1 + l, 1 + l] = lam[l] * I2
            W[1 + K + l, 1 + K + l] = lam[l] * I2
            W[1 + l, last] = a[l] * J[i] * Z
            W[1 + K + l, last] = a[l] * Z
        grids.append(W)
    grids[0] = grids[0][:1]
    grids[-1] = grids[-1][:, last:]
    return _pack(grids)


def _ising_periodic(J: np.ndarray, h: float, fit: ExpSumFit) -> MPO:
    """Periodic couplings sum_l c_l (b_l^(j-i) + b_l^(n-j+i)).

    The second term is written as (c_l b_l^i)(b_l^(n-j)), carried by channels
    that propagate with the identity; this is the doubled set {c b^n, 1/b} with
    every tensor entry bounded by one in magnitude.
    """
    n = len(J)
    c, b = fit.meta["c"], fit.meta["b"]
    K = len(c)
    D = 4 * K + 2
    last = D - 1
    cplx = np.iscomplexobj(c) or np.iscomplexobj(b)
    grids = []
    for i in range(n):
        W = np.zeros((D, D, 2, 2), dtype=complex if cplx else float)
        W[0, 0] = I2
        W[last, last] = I2
        W[0, last] = h * X
        for l in range(K):
            for blk, wJ in ((0, J[i]), (1, 1.0)):
                dec = 1 + blk * K + l
                wrap = 1 + (2 + blk) * K + l
                W[0, dec] = b[l] * wJ * Z
                W[dec, dec] = b[l] * I2
                W[dec, last] = c[l] * wJ * Z
                W[0, wrap] = c[l] * b[l] ** i * wJ * Z
                W[wrap, wrap] = I2
                W[wrap, last] = b[l] ** (n - i) * wJ * Z
        grids.append(W)
    grids[0] = grids[0][:1]
    grids[-1] = grids[-1][:, last:]
    return _pack(grids)


def ising_fit_for(family: HamiltonianFamily, tol: float = ISING_FIT_TOL) -> ExpSumFit:
    """Adaptive exp-sum fit covering the chain's distances.

    Open chains fit on at least 1..32 so that short chains still admit enough
    bases; periodic chains fit the symmetric target on their own ring.
    """
    n = family.n
    if family.boundary == "periodic":
        return fit_exp_sum(family.alpha, n - 1, 2, boundary="periodic", n=n, tol=tol)
    return fit_exp_sum(family.alpha, max(n - 1, 32), 1, tol=tol)


def field_mpo(h: np.ndarray, letter: str = "X") -> MPO:
    """sum_i h_i P_i, bond dimension 2."""
    P = {"X": X, "Y": Y, "Z": Z}[letter]
    grids = []
    for hi in h:
        W = np.zeros((2, 2, 2, 2), dtype=complex if letter == "Y" else float)
        W[0, 0] = W[1, 1] = I2
        W[0, 1] = hi * P
        grids.append(W)
    grids[0] = grids[0][:1]
    grids[-1] = grids[-1][:, 1:]
    return _pack(grids)


def build_mpo(family: HamiltonianFamily, x: np.ndarray, fit: ExpSumFit | None = None) -> MPO:
    x = np.asarray(x, dtype=float)
    if x.shape != (family.m,):
        raise ValueError(f"expected {family.m} parameters")
    n = family.n
    if family.kind == "disordered-heisenberg":
        if family.boundary == "periodic":
            return _heisenberg_periodic(dict(zip(family.hypergraph.edges, x)), n)
        return _heisenberg_open(x, n)
    if n < 2:
        raise ValueError("Ising MPO needs n >= 2")
    if fit is None:
        fit = ising_fit_for(family)
        log.info("Ising MPO exp-sum fit: K=%d, max rel err %.2e", fit.K, fit.max_rel_err)
    if family.boundary == "periodic":
        if "c" not in fit.meta:
            raise ValueError("periodic Ising MPO needs a periodic fit")
        return _ising_periodic(x, family.h, fit)
    return _ising_open(x, family.h, fit)
