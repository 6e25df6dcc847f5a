"""Matrix product states: construction, canonical forms, overlaps and Pauli expectations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..hamiltonian import Observable

_PAULI = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Z": np.diag([1.0, -1.0]),
}


@dataclass
class MPS:
    """Site tensors of shape (left bond, physical, right bond) and the orthogonality center."""

    tensors: list
    center: int = 0
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [A.shape[2] for A in self.tensors[:-1]]

    def copy(self) -> "MPS":
        return MPS([A.copy() for A in self.tensors], self.center, dict(self.info))

    def to_dense(self) -> np.ndarray:
        if self.n > 20:
            raise ValueError("dense conversion limited to n <= 20")
        v = self.tensors[0].reshape(-1, self.tensors[0].shape[2])
        for A in self.tensors[1:]:
            v = (v @ A.reshape(A.shape[0], -1)).reshape(-1, A.shape[2])
        return v[:, 0]

    def norm(self) -> float:
        return float(np.sqrt(abs(overlap(self, self))))

    def move_center(self, k: int) -> None:
        while self.center < k:
            i = self.center
            A = self.tensors[i]
            Q, R = np.linalg.qr(A.reshape(-1, A.shape[2]))
            self.tensors[i] = Q.reshape(A.shape[0], A.shape[1], -1)
            self.tensors[i + 1] = np.tensordot(R, self.tensors[i + 1], axes=(1, 0))
            self.center += 1
        while self.center > k:
            i = self.center
            A = self.tensors[i]
            Q, R = np.linalg.qr(A.reshape(A.shape[0], -1).T)
            self.tensors[i] = Q.T.reshape(-1, A.shape[1], A.shape[2])
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], R.T, axes=(2, 0))
            self.center -= 1

    def normalize(self) -> None:
        c = self.center
        self.tensors[c] = self.tensors[c] / np.linalg.norm(self.tensors[c])

    def isometry_residual(self) -> float:
        """Largest deviation from the left/right isometry conditions away from the center."""
        worst = 0.0
        for i, A in enumerate(self.tensors):
            if i < self.center:
                M = A.reshape(-1, A.shape[2])
                G = M.conj().T @ M
            elif i > self.center:
                M = A.reshape(A.shape[0], -1)
                G = M @ M.conj().T
            else:
                continue
            worst = max(worst, float(np.max(np.abs(G - np.eye(G.shape[0])))))
        return worst


def product_mps(bits) -> MPS:
    tensors = []
    for b in bits:
        A = np.zeros((1, 2, 1))
        A[0, int(b), 0] = 1.0
        tensors.append(A)
    return MPS(tensors, 0)


def random_mps(n: int, bond: int, seed=0, dtype=float) -> MPS:
    """Seeded random MPS, right-canonical with center 0 and unit norm."""
    rng = np.random.default_rng(seed)
    dims = [1] + [min(bond, 2 ** min(i, n - i)) for i in range(1, n)] + [1]
    tensors = []
    for i in range(n):
        shape = (dims[i], 2, dims[i + 1])
        A = rng.standard_normal(shape)
        if np.issubdtype(np.dtype(dtype), np.complexfloating):
            A = A + 1j * rng.standard_normal(shape)
        tensors.append(A)
    mps = MPS(tensors, n - 1)
    mps.move_center(0)
    mps.normalize()
    return mps


def from_dense(vec: np.ndarray, max_bond: int | None = None) -> MPS:
    """Exact (or truncated) MPS of a state vector by successive SVDs."""
    n = int(round(np.log2(vec.shape[0])))
    tensors = []
    rest = np.asarray(vec).reshape(1, -1)
    for _ in range(n - 1):
        Dl = rest.shape[0]
        M = rest.reshape(Dl * 2, -1)
        U, S, Vh = np.linalg.svd(M, full_matrices=False)
        keep = max(1, int(np.sum(S > 1e-14 * S[0])))
        if max_bond is not None:
            keep = min(keep, max_bond)
        tensors.append(U[:, :keep].reshape(Dl, 2, keep))
        rest = S[:keep, None] * Vh[:keep]
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MPS(tensors, n - 1)


def overlap(a: MPS, b: MPS) -> complex:
    """<a|b>."""
    if a.n != b.n:
        raise ValueError("MPS length mismatch")
    E = np.ones((1, 1))
    for A, B in zip(a.tensors, b.tensors):
        E = np.tensordot(E, B, axes=(1, 0))
        E = np.tensordot(A.conj(), E, axes=([0, 1], [0, 1]))
    return complex(E[0, 0])


def _term_value(mps: MPS, support, letters, lo: int, hi: int) -> complex:
    ops = dict(zip(support, letters))
    E = np.ones((1, 1))
    if lo > 0:
        D = mps.tensors[lo].shape[0]
        E = np.eye(D)
    for i in range(lo, hi + 1):
        A = mps.tensors[i]
        B = A if i not in ops else np.tensordot(_PAULI[ops[i]], A, axes=(1, 1)).transpose(1, 0, 2)
        E = np.tensordot(E, B, axes=(1, 0))
        E = np.tensordot(A.conj(), E, axes=([0, 1], [0, 1]))
    return complex(np.trace(E))


def mps_expectation(mps: MPS, O: Observable) -> float:
    """Exact contraction of every Pauli term, using the canonical form to skip isometries."""
    if O.is_energy:
        raise ValueError("energy observables must be bound to x before measuring")
    c = mps.center
    total = 0.0 + 0.0j
    for t in O.terms:
        if max(t.support) >= mps.n:
            raise ValueError(f"term {t.label()} outside {mps.n} sites")
        lo = min(t.support[0], c)
        hi = max(t.support[-1], c)
        total += t.coefficient * _term_value(mps, t.support, t.letters, lo, hi)
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise ValueError(f"expectation has imaginary part {total.imag:.3e}")
    return float(total.real)
