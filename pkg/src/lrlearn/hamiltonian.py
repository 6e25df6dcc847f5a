"""Parameterized spin-chain Hamiltonians, Pauli observables and parameter sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import (
    InteractionHypergraph,
    LatticeSpec,
    Neighborhood,
    as_site_set,
    cyclic_shift,
    distance_matrix,
    nearest_neighbor_hypergraph,
)

DENSE_GUARD = 20
FAMILIES = ("disordered-heisenberg", "longrange-ising")
OBSERVABLE_KINDS = ("local-correlation", "avg-correlation", "energy-over-n", "energy-over-sqrt-n")


@dataclass(frozen=True)
class PauliTerm:
    support: tuple[int, ...]
    letters: str
    coefficient: float = 1.0

    def __post_init__(self):
        if len(self.support) != len(self.letters):
            raise ValueError("letters must align with support")
        if any(c not in "XYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        order = sorted(range(len(self.support)), key=lambda k: self.support[k])
        sup = tuple(int(self.support[k]) for k in order)
        if len(set(sup)) != len(sup):
            raise ValueError("repeated site in Pauli support")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "letters", "".join(self.letters[k] for k in order))
        object.__setattr__(self, "coefficient", float(self.coefficient))

    def scaled(self, c: float) -> "PauliTerm":
        return PauliTerm(self.support, self.letters, self.coefficient * c)

    def label(self) -> str:
        return "".join(f"{a}{s}" for a, s in zip(self.letters, self.support))

    @classmethod
    def parse(cls, text: str, coefficient: float = 1.0) -> "PauliTerm":
        """Parse labels like ``"X0Z2"``."""
        letters, sites, k = [], [], 0
        while k < len(text):
            letters.append(text[k])
            k += 1
            j = k
            while j < len(text) and text[j].isdigit():
                j += 1
            sites.append(int(text[k:j]))
            k = j
        return cls(tuple(sites), "".join(letters), coefficient)


_P = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "I": np.eye(2, dtype=complex),
}


def local_matrix(terms: Sequence[PauliTerm], sites: Sequence[int]) -> np.ndarray:
    """Dense matrix of a sum of Pauli terms restricted to ``sites`` (site order = kron order)."""
    sites = list(sites)
    dim = 2 ** len(sites)
    out = np.zeros((dim, dim), dtype=complex)
    for t in terms:
        op = np.ones((1, 1), dtype=complex)
        for s in sites:
            letter = t.letters[t.support.index(s)] if s in t.support else "I"
            op = np.kron(op, _P[letter])
        out += t.coefficient * op
    return out


def operator_norm(terms: Sequence[PauliTerm]) -> float:
    """Exact operator norm of a few-site Pauli sum via dense eigendecomposition."""
    if not terms:
        return 0.0
    sites = sorted({s for t in terms for s in t.support})
    if len(sites) > 10:
        raise ValueError("operator_norm is meant for few-site terms")
    ev = np.linalg.eigvalsh(local_matrix(terms, sites))
    return float(np.max(np.abs(ev)))


def _flip_phase(n: int, term: PauliTerm, basis: np.ndarray):
    flip = 0
    phase = np.ones(basis.shape, dtype=complex)
    for s, a in zip(term.support, term.letters):
        bit = (basis >> (n - 1 - s)) & 1
        sign = 1 - 2 * bit
        if a == "X":
            flip |= 1 << (n - 1 - s)
        elif a == "Y":
            flip |= 1 << (n - 1 - s)
            phase = phase * (1j * sign)
        else:
            phase = phase * sign
    return flip, phase


def pauli_sum_sparse(n: int, terms: Sequence[PauliTerm]) -> sp.csr_matrix:
    """Sparse 2^n x 2^n matrix of a Pauli sum; site 0 is the most significant bit."""
    if n > DENSE_GUARD:
        raise ValueError(f"dense build limited to n <= {DENSE_GUARD}")
    dim = 1 << n
    basis = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for t in terms:
        if t.coefficient == 0.0:
            continue
        if max(t.support) >= n:
            raise ValueError(f"term {t.label()} outside {n} sites")
        flip, phase = _flip_phase(n, t, basis)
        rows.append(basis ^ flip)
        cols.append(basis)
        vals.append(t.coefficient * phase)
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=float)
    data = np.concatenate(vals)
    mat = sp.coo_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)).tocsr()
    mat.sum_duplicates()
    if np.all(mat.data.imag == 0.0):
        mat = mat.real.tocsr()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def apply_pauli(vec: np.ndarray, n: int, term: PauliTerm) -> np.ndarray:
    """Return term|vec> (coefficient included)."""
    basis = np.arange(vec.shape[0], dtype=np.int64)
    flip, phase = _flip_phase(n, term, basis)
    out = np.empty(vec.shape, dtype=complex)
    out[basis ^ flip] = phase * vec
    return term.coefficient * out


@dataclass(frozen=True)
class HamiltonianFamily:
    """A disordered Heisenberg chain or a long-range transverse-field Ising chain.

    Heisenberg: H = sum_<ij> J_ij (XX + YY + ZZ) with one parameter per bond.
    Ising: H = sum_{i<j} (1 + J_i J_j) / d(i,j)^alpha Z_i Z_j + sum_i h X_i with one
    parameter J_i per site and a constant field h.
    """

    kind: str
    n: int
    boundary: str = "open"
    alpha: float | None = None
    h: float = math.e
    domain: tuple[float, float] = (0.0, 2.0)

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown family {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "longrange-ising" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("Ising family needs alpha > 0")
        if self.kind == "disordered-heisenberg" and self.n < 2:
            raise ValueError("Heisenberg chain needs n >= 2")

    @classmethod
    def from_dict(cls, d: dict) -> "HamiltonianFamily":
        return cls(d["kind"], int(d["n"]), d.get("boundary", "open"), d.get("alpha"),
                   float(d.get("h", math.e)))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "boundary": self.boundary}
        if self.kind == "longrange-ising":
            d.update(alpha=self.alpha, h=self.h)
        return d

    def with_n(self, n: int) -> "HamiltonianFamily":
        return HamiltonianFamily(self.kind, n, self.boundary, self.alpha, self.h, self.domain)

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec.chain(self.n, self.boundary)

    @cached_property
    def hypergraph(self) -> InteractionHypergraph:
        if self.kind == "disordered-heisenberg":
            if self.boundary == "periodic" and self.n < 3:
                raise ValueError("periodic Heisenberg chain needs n >= 3")
            return nearest_neighbor_hypergraph(self.n, self.boundary)
        # parameters live on sites; pair couplings read (J_i, J_j)
        gens = (cyclic_shift(self.n),) if self.boundary == "periodic" and self.n > 1 else ()
        return InteractionHypergraph(self.lattice, tuple((i,) for i in range(self.n)), generators=gens)

    @property
    def m(self) -> int:
        return self.hypergraph.m

    def terms(self, x: np.ndarray) -> list[PauliTerm]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m,):
            raise ValueError(f"expected {self.m} parameters, got shape {x.shape}")
        if np.any(~np.isfinite(x)):
            raise ValueError("non-finite parameter")
        out = []
        if self.kind == "disordered-heisenberg":
            for J, (i, j) in zip(x, self.hypergraph.edges):
                for a in "XYZ":
                    out.append(PauliTerm((i, j), a + a, J))
            return out
        d = distance_matrix(self.lattice)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                c = (1.0 + x[i] * x[j]) / float(d[i, j]) ** self.alpha
                out.append(PauliTerm((i, j), "ZZ", c))
        for i in range(self.n):
            out.append(PauliTerm((i,), "X", self.h))
        return out

    def energy_supports(self) -> list[tuple[int, ...]]:
        """Site sets indexing the energy observable's feature blocks.

        Heisenberg: the bonds. Ising: single sites (terms attributed per site), so
        only one body-count of feature block is needed.
        """
        if self.kind == "disordered-heisenberg":
            return list(self.hypergraph.edges)
        return [(i,) for i in range(self.n)]


def sample_params(family: HamiltonianFamily, seed) -> np.ndarray:
    """Draw J uniformly from [0, 2] for every parameter (bonds or sites)."""
    rng = np.random.default_rng(seed)
    lo, hi = family.domain
    return rng.uniform(lo, hi, size=family.m)


def build_dense(family: HamiltonianFamily, x: np.ndarray) -> sp.csr_matrix:
    if family.n > DENSE_GUARD:
        raise ValueError(f"dense build limited to n <= {DENSE_GUARD}")
    return pauli_sum_sparse(family.n, family.terms(x))


def mask_params(x: np.ndarray, hg: InteractionHypergraph, S: Neighborhood | Sequence[int],
                reference: float = 0.0) -> np.ndarray:
    """Keep the components of edges in S; set all others to ``reference``."""
    members = S.members if isinstance(S, Neighborhood) else tuple(S)
    out = np.full(np.shape(x), reference, dtype=float)
    for e in members:
        sl = hg.param_slice(e)
        out[sl] = np.asarray(x)[sl]
    return out


@dataclass(frozen=True)
class Observable:
    """Sum of Pauli terms grouped by their support site set.

    Energy observables depend on x; for them ``groups`` is empty and
    ``energy_scale`` holds the factor multiplying H(x) (use :meth:`bind`).
    """

    name: str
    groups: tuple[tuple[tuple[int, ...], tuple[PauliTerm, ...]], ...] = ()
    energy_scale: float | None = None
    supports: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if not self.supports:
            object.__setattr__(self, "supports", tuple(I for I, _ in self.groups))

    @property
    def is_energy(self) -> bool:
        return self.energy_scale is not None

    @property
    def terms(self) -> list[PauliTerm]:
        return [t for _, ts in self.groups for t in ts]

    @cached_property
    def r(self) -> float:
        if self.is_energy:
            raise ValueError("r(O) of an energy observable depends on x; bind it first")
        return float(sum(operator_norm(ts) for _, ts in self.groups))

    def bind(self, family: HamiltonianFamily, x: np.ndarray) -> "Observable":
        if not self.is_energy:
            return self
        by_set: dict = {}
        for t in family.terms(x):
            by_set.setdefault(t.support, []).append(t.scaled(self.energy_scale))
        groups = tuple((I, tuple(ts)) for I, ts in by_set.items())
        return Observable(self.name, groups)

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(f"{self.name}+{other.name}", self.groups + other.groups)

    @classmethod
    def from_terms(cls, name: str, terms: Sequence[PauliTerm]) -> "Observable":
        by_set: dict = {}
        for t in terms:
            by_set.setdefault(t.support, []).append(t)
        return cls(name, tuple((I, tuple(ts)) for I, ts in by_set.items()))


def correlation_terms(i: int, j: int, weight: float = 1.0) -> tuple[PauliTerm, ...]:
    c = weight / 3.0
    return tuple(PauliTerm((i, j), a + a, c) for a in "XYZ")


def build_observable(kind: str, family: HamiltonianFamily, sites: Sequence[int] | None = None) -> Observable:
    """Observables used in the experiments.

    local-correlation: C_ij = (XX + YY + ZZ)/3 on ``sites`` (default (0, 1)).
    avg-correlation: mean of C_{i,i+1} over the chain's bonds.
    energy-over-n / energy-over-sqrt-n: H(x)/n or H(x)/sqrt(n).
    """
    n = family.n
    if kind == "local-correlation":
        i, j = as_site_set(sites if sites is not None else (0, 1))
        return Observable(f"C{i}{j}", ((( i, j), correlation_terms(i, j)),))
    if kind == "avg-correlation":
        bonds = [(i, i + 1) for i in range(n - 1)]
        if family.boundary == "periodic" and n > 2:
            bonds.append((0, n - 1))
        w = 1.0 / len(bonds)
        return Observable("avg-correlation", tuple((b, correlation_terms(*b, weight=w)) for b in bonds))
    if kind == "energy-over-n":
        return Observable("energy-over-n", energy_scale=1.0 / n, supports=tuple(family.energy_supports()))
    if kind == "energy-over-sqrt-n":
        return Observable("energy-over-sqrt-n", energy_scale=1.0 / math.sqrt(n),
                          supports=tuple(family.energy_supports()))
    raise ValueError(f"unknown observable kind {kind!r}")


def check_decay(family: HamiltonianFamily, x: np.ndarray) -> dict:
    """Largest d(i,j)^alpha * sum_{I containing i,j} ||h_I|| over site pairs."""
    if family.n > 64:
        raise ValueError("check_decay limited to n <= 64")
    d = distance_matrix(family.lattice)
    alpha = family.alpha if family.alpha is not None else 0.0
    pair_norm: dict = {}
    for t in family.terms(x):
        if len(t.support) == 2:
            pair_norm.setdefault(t.support, []).append(t)
    best, arg = 0.0, None
    for (i, j), ts in pair_norm.items():
        val = float(d[i, j]) ** alpha * operator_norm(ts)
        if val > best:
            best, arg = val, (i, j)
    return {"g": best, "argmax": arg, "alpha": alpha}
