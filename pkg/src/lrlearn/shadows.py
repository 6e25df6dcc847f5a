"""Classical shadows from randomized single-qubit Pauli measurements on exact states."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels
from .exactdiag import sample_seeds, solve_ed
from .hamiltonian import HamiltonianFamily, PauliTerm, sample_params

log = logging.getLogger(__name__)

BASES = "XYZ"
MAX_QUBITS = 16
MAX_RDM = 4
_SIGMA = {
    0: np.array([[0, 1], [1, 0]], dtype=complex),
    1: np.array([[0, -1j], [1j, 0]], dtype=complex),
    2: np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass
class ShadowRecord:
    """bases[t, q] in {0:X, 1:Y, 2:Z}; bits[t, q] = 0 for eigenvalue +1, 1 for -1."""

    bases: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        self.bases = np.asarray(self.bases, dtype=np.uint8)
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bases.ndim != 2 or self.bases.shape != self.bits.shape or self.bases.shape[0] < 1:
            raise ValueError("bases and bits must be matching (T, n) arrays with T >= 1")

    @property
    def T(self) -> int:
        return self.bases.shape[0]

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    def to_jsonl(self) -> str:
        lines = []
        for t in range(self.T):
            lines.append(json.dumps({
                "t": t,
                "bases": "".join(BASES[b] for b in self.bases[t]),
                "bits": "".join(str(int(b)) for b in self.bits[t]),
            }))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ShadowRecord":
        rows = [json.loads(line) for line in text.splitlines() if line.strip() and not line.startswith("#")]
        bases = [[BASES.index(c) for c in r["bases"]] for r in rows]
        bits = [[int(c) for c in r["bits"]] for r in rows]
        return cls(np.array(bases), np.array(bits))


@dataclass
class ShadowEstimate:
    target: str
    value: float
    stderr: float


def sample_shadow(state: np.ndarray, T: int, seed=0) -> ShadowRecord:
    """T snapshots: uniform basis per qubit, outcomes by sequential Born sampling with collapse."""
    psi = np.ascontiguousarray(state, dtype=complex)
    n = int(round(math.log2(psi.shape[0])))
    if 1 << n != psi.shape[0]:
        raise ValueError("state dimension is not a power of two")
    if n > MAX_QUBITS:
        raise ValueError(f"shadow sampling limited to {MAX_QUBITS} qubits")
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    bases = rng.integers(0, 3, size=(T, n), dtype=np.uint8)
    u = rng.random((T, n))
    bits = kernels.shadow_collapse(psi, bases, u)
    return ShadowRecord(bases, bits)


def _factors(record: ShadowRecord, sites: Sequence[int], letters: str) -> np.ndarray:
    vals = np.ones(record.T)
    for q, a in zip(sites, letters):
        match = record.bases[:, q] == BASES.index(a)
        vals *= np.where(match, 3.0 * (1.0 - 2.0 * record.bits[:, q]), 0.0)
    return vals


def estimate_pauli(record: ShadowRecord, P: PauliTerm) -> ShadowEstimate:
    """Mean over snapshots of the product of single-qubit factors 3(+-1) or 0 (coefficient included)."""
    if max(P.support) >= record.n:
        raise ValueError(f"{P.label()} exceeds record width {record.n}")
    if len(P.support) > 4:
        raise ValueError("Pauli weight above 4")
    vals = P.coefficient * _factors(record, P.support, P.letters)
    se = float(np.std(vals, ddof=1) / math.sqrt(record.T)) if record.T > 1 else float("inf")
    return ShadowEstimate(P.label(), float(vals.mean()), se)


def reduced_dm(record: ShadowRecord, sites: Sequence[int]) -> np.ndarray:
    """(1/T) sum_t tensor_q (3|s_q><s_q| - 1) over the qubits in ``sites`` (kron order = given order)."""
    sites = list(sites)
    if len(sites) > MAX_RDM:
        raise ValueError(f"subset larger than {MAX_RDM}")
    if max(sites) >= record.n:
        raise ValueError("site outside record")
    # each snapshot on these qubits is one of 6^|I| patterns; sum counts per pattern
    code = np.zeros(record.T, dtype=np.int64)
    for q in sites:
        code = code * 6 + record.bases[:, q].astype(np.int64) * 2 + record.bits[:, q]
    patterns, counts = np.unique(code, return_counts=True)
    dim = 2 ** len(sites)
    rho = np.zeros((dim, dim), dtype=complex)
    for c, cnt in zip(patterns, counts):
        op = np.ones((1, 1), dtype=complex)
        digits = []
        for _ in sites:
            digits.append(int(c % 6))
            c //= 6
        for dgt in reversed(digits):
            b, bit = divmod(dgt, 2)
            op = np.kron(op, 0.5 * (np.eye(2) + 3.0 * (1 - 2 * bit) * _SIGMA[b]))
        rho += cnt * op
    rho /= record.T
    return 0.5 * (rho + rho.conj().T)


def default_T(n: int, k: int, gamma: float, eps: float, const: float = 1.0) -> int:
    """ceil(const * k * 12^k * log(n / gamma) / eps^2); the constant is a free choice."""
    if n < 1 or k < 1 or gamma <= 0 or eps <= 0:
        raise ValueError("invalid shadow-size inputs")
    T = int(math.ceil(const * k * 12 ** k * math.log(n / gamma) / eps ** 2))
    log.info("default shadow size T=%d (n=%d, k=%d, gamma=%g, eps=%g, const=%g)", T, n, k, gamma, eps, const)
    return max(T, 1)


def shadow_dataset(family: HamiltonianFamily, paulis: Sequence[PauliTerm], N: int, T: int | None = None,
                   seed: int = 0, *, gamma: float = 0.1, eps: float = 0.2, const: float = 1.0) -> dict:
    """Per-Pauli datasets sharing the same parameter draws and one ground-state solve per draw.

    Returns {label: list of rows {x, y, seed, observable, pauli}}.
    """
    if family.n > MAX_QUBITS:
        raise ValueError("shadow datasets need exact states")
    paulis = list(paulis)
    if T is None:
        k = max(len(P.support) for P in paulis)
        T = default_T(family.n, k, gamma, eps, const)
    out = {P.label(): [] for P in paulis}
    for s in sample_seeds(seed, N):
        x = sample_params(family, s)
        state = solve_ed(family, x, seed=s).vector
        rec = sample_shadow(state / np.linalg.norm(state), T, seed=s)
        for P in paulis:
            est = estimate_pauli(rec, P)
            out[P.label()].append({"x": x.tolist(), "y": est.value, "seed": int(s),
                                   "observable": P.label(), "pauli": P.label()})
    return out
