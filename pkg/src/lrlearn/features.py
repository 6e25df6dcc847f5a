"""Feature maps on local parameter neighborhoods: random Fourier features and the
one-hot discretization, with optional orbit pooling for equivariant models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .geometry import InteractionHypergraph, as_site_set, automorphism_orbits, neighborhood

DENSE_ONEHOT_GUARD = 10**6


@dataclass(frozen=True)
class FeatureSpec:
    """kind: 'rff' or 'discretized'; mode: 'plain' or 'equivariant'."""

    kind: str = "rff"
    delta: int = 4
    R: int = 10
    gamma: float = 0.5
    seed: int = 0
    mode: str = "plain"
    delta2: float | None = None
    domain: tuple = (0.0, 2.0)

    def __post_init__(self):
        if self.kind not in ("rff", "discretized"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.mode not in ("plain", "equivariant"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.kind == "rff" and (self.R < 1 or self.gamma <= 0):
            raise ValueError("RFF needs R >= 1 and gamma > 0")
        if self.kind == "discretized" and not (self.delta2 and 0 < self.delta2 <= 1):
            raise ValueError("discretized features need delta2 in (0, 1]")
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))

    def replace(self, **kw) -> "FeatureSpec":
        d = asdict(self)
        d.update(kw)
        return FeatureSpec(**d)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "delta": self.delta, "seed": self.seed, "mode": self.mode,
             "domain": list(self.domain)}
        if self.kind == "rff":
            d.update(R=self.R, gamma=self.gamma)
        else:
            d["delta2"] = self.delta2
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        d = dict(d)
        if "domain" in d:
            d["domain"] = tuple(d["domain"])
        return cls(**d)


def delta2_from_eps(eps: float, C_prime: float, S_size: int) -> float:
    """1 / ceil(sqrt(C' |S|) / eps)."""
    if eps <= 0 or C_prime <= 0 or S_size < 1:
        raise ValueError("invalid discretization inputs")
    v = math.sqrt(C_prime * S_size) / eps
    return 1.0 / max(1, math.ceil(v - 1e-9 * v))


def canonical_order(hg: InteractionHypergraph, edges: Sequence[int]) -> list[int]:
    """Edges sorted by (min site, then lexicographic site tuple)."""
    return sorted(edges, key=lambda e: (min(hg.edges[e]), hg.edges[e]))


def _param_index(hg: InteractionHypergraph, edges: Sequence[int]) -> np.ndarray:
    off = hg.offsets
    return np.concatenate([np.arange(off[e], off[e + 1]) for e in edges]).astype(int) if edges else np.zeros(0, int)


def z_edges(hg: InteractionHypergraph, I: Sequence[int], delta: int) -> list[int]:
    return canonical_order(hg, neighborhood(hg, I, delta).members)


def extract_Z(x: np.ndarray, hg: InteractionHypergraph, I: Sequence[int], delta: int) -> np.ndarray:
    """(x_J | J in S_{I,delta}) in canonical order; length sum of arities."""
    return np.asarray(x, dtype=float)[..., _param_index(hg, z_edges(hg, I, delta))]


def rff_block(Z: np.ndarray, omega: np.ndarray, gamma: float) -> np.ndarray:
    """Interleaved [cos(g/sqrt(l) w_k.Z), sin(g/sqrt(l) w_k.Z)] for k = 1..R (rows of Z are samples)."""
    Z = np.asarray(Z, dtype=float)
    l = omega.shape[1]
    if Z.shape[-1] != l:
        raise ValueError(f"Z has length {Z.shape[-1]}, frequencies expect {l}")
    P = (gamma / math.sqrt(l)) * (Z @ omega.T) if l else np.zeros(Z.shape[:-1] + (omega.shape[0],))
    out = np.empty(P.shape[:-1] + (2 * P.shape[-1],))
    out[..., 0::2] = np.cos(P)
    out[..., 1::2] = np.sin(P)
    return out


def grid_size(delta2: float) -> int:
    return int(round(2.0 / delta2)) + 1


def cell_index(Z: np.ndarray, delta2: float, domain=(0.0, 2.0)) -> np.ndarray:
    """Per-component nearest grid point on [-1, 1] after mapping the domain affinely; ties go down."""
    lo, hi = domain
    u = 2.0 * (np.asarray(Z, dtype=float) - lo) / (hi - lo) - 1.0
    if np.any(u < -1 - 1e-12) or np.any(u > 1 + 1e-12):
        raise ValueError("parameter outside the domain")
    K = grid_size(delta2)
    k = np.ceil((u + 1.0) / delta2 - 0.5 - 1e-12).astype(np.int64)
    return np.clip(k, 0, K - 1)


@dataclass(frozen=True)
class DiscreteCell:
    index: int
    size: int


def discretize(x: np.ndarray, hg: InteractionHypergraph, I: Sequence[int], spec: FeatureSpec) -> DiscreteCell:
    """Active cell of the product grid over S_{I,delta}; the grid itself is never built."""
    Z = extract_Z(x, hg, I, spec.delta)
    K = grid_size(spec.delta2)
    ks = cell_index(Z, spec.delta2, spec.domain)
    idx = 0
    for k in ks:
        idx = idx * K + int(k)
    return DiscreteCell(idx, K ** len(Z))


@dataclass
class FeatureVector:
    values: np.ndarray
    blocks: dict = field(default_factory=dict)  # key -> (offset, length)


class FeatureMap:
    """Concatenated per-support blocks for one observable.

    plain: one block per support, in the observable's term order; RFF
    frequencies shared by all supports of equal size and neighborhood length.
    equivariant: supports grouped into orbits of the hypergraph's automorphism
    group; each member uses the representative's frequencies on Z_rep(g.x) and
    the member blocks are summed.
    """

    def __init__(self, hg: InteractionHypergraph, supports: Sequence[Sequence[int]], spec: FeatureSpec):
        self.hg = hg
        self.spec = spec
        self.supports = [as_site_set(I) for I in supports]
        if not self.supports:
            raise ValueError("observable has no supports")
        self.groups = []  # (key, [index arrays of members])
        if spec.mode == "plain":
            for I in self.supports:
                self.groups.append((I, [_param_index(hg, z_edges(hg, I, spec.delta))]))
        else:
            if not hg.generators:
                raise ValueError("equivariant mode needs automorphism generators")
            orbits = automorphism_orbits(hg, self.supports)
            wanted = set(self.supports)
            for orb in orbits.orbits:
                rep = orb[0]
                rep_edges = z_edges(hg, rep, spec.delta)
                members = []
                for I in orb:
                    if I not in wanted:
                        continue
                    g = orbits.element[I]
                    perm = hg.edge_permutation(g)
                    members.append(_param_index(hg, [int(perm[e]) for e in rep_edges]))
                if members:
                    self.groups.append((rep, members))
        self.omegas = {}
        self.blocks = {}
        off = 0
        for key, members in self.groups:
            l = len(members[0])
            if spec.kind == "rff":
                self.omegas[key] = self._omega(key, l)
                length = 2 * spec.R
            else:
                length = grid_size(spec.delta2) ** l
            self.blocks[key] = (off, length)
            off += length
        self.dim = off

    def _omega(self, key, l):
        # keyed by term size and block length in both modes, so orbits (and a lone
        # term) see the same frequencies whichever mode built the map
        ss = np.random.SeedSequence([self.spec.seed, 0, len(key), l])
        return np.random.default_rng(ss).standard_normal((self.spec.R, l))

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Feature matrix (N, dim) for parameter rows X (N, m)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.hg.m:
            raise ValueError(f"expected {self.hg.m} parameters, got {X.shape[1]}")
        if self.spec.kind == "discretized" and self.dim > DENSE_ONEHOT_GUARD:
            raise ValueError(f"one-hot feature dimension {self.dim} too large to materialize")
        out = np.zeros((X.shape[0], self.dim))
        for key, members in self.groups:
            off, length = self.blocks[key]
            for idx in members:
                if self.spec.kind == "rff":
                    out[:, off:off + length] += rff_block(X[:, idx], self.omegas[key], self.spec.gamma)
                else:
                    out[np.arange(X.shape[0]), off + self._cells(X[:, idx])] += 1.0
        return out

    def _cells(self, Z):
        K = grid_size(self.spec.delta2)
        ks = cell_index(Z, self.spec.delta2, self.spec.domain)
        flat = np.zeros(Z.shape[0], dtype=np.int64)
        for c in range(ks.shape[1]):
            flat = flat * K + ks[:, c]
        return flat

    def active_cells(self, x: np.ndarray) -> dict:
        """Discretized mode: the active flat index per block without materializing."""
        x = np.asarray(x, dtype=float)
        return {key: [int(self._cells(x[None, idx])[0]) for idx in members] for key, members in self.groups}

    def vector(self, x: np.ndarray) -> FeatureVector:
        return FeatureVector(self.transform(x)[0], dict(self.blocks))

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "supports": [list(I) for I in self.supports]}

    @classmethod
    def from_dict(cls, d: dict, hg: InteractionHypergraph) -> "FeatureMap":
        return cls(hg, [tuple(I) for I in d["supports"]], FeatureSpec.from_dict(d["spec"]))


def full_features(x: np.ndarray, hg: InteractionHypergraph, supports, spec: FeatureSpec) -> FeatureVector:
    return FeatureMap(hg, supports, spec).vector(x)
