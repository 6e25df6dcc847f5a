"""Lattice geometry: site distances, set diameters, delta-neighborhoods,
brute-force counting of interaction sets and hypergraph orbits."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from math import comb, prod
from typing import Iterable, Sequence

import numpy as np

SiteSet = tuple  # sorted tuple of distinct site indices

COUNT_GUARD = 10**7


def as_site_set(sites: Iterable[int]) -> SiteSet:
    """Normalize an iterable of site indices into a sorted tuple of unique ints."""
    out = tuple(sorted(int(s) for s in sites))
    if not out:
        raise ValueError("site set must be nonempty")
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate sites in {out}")
    return out


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple[int, ...]
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"invalid side lengths {self.dims}")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @classmethod
    def chain(cls, n: int, boundary: str = "open") -> "LatticeSpec":
        return cls((n,), boundary)

    @property
    def D(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        return prod(self.dims)

    def coords(self, i: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(i, self.dims))

    def check_site(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"site {i} out of range for n={self.n}")

    def to_dict(self) -> dict:
        return {"D": self.D, "dims": list(self.dims), "boundary": self.boundary}


def site_distance(lattice: LatticeSpec, i: int, j: int) -> int:
    """Graph distance between two sites.

    1D open chains use |i - j|, periodic chains min(|i - j|, n - |i - j|).
    For D > 1 the Chebyshev metric is used, wrapped per axis when periodic.
    """
    lattice.check_site(i)
    lattice.check_site(j)
    if lattice.D == 1:
        d = abs(i - j)
        if lattice.boundary == "periodic":
            d = min(d, lattice.n - d)
        return d
    best = 0
    for a, b, L in zip(lattice.coords(i), lattice.coords(j), lattice.dims):
        d = abs(a - b)
        if lattice.boundary == "periodic":
            d = min(d, L - d)
        best = max(best, d)
    return best


def distance_matrix(lattice: LatticeSpec) -> np.ndarray:
    n = lattice.n
    if lattice.D == 1:
        idx = np.arange(n)
        d = np.abs(idx[:, None] - idx[None, :])
        if lattice.boundary == "periodic":
            d = np.minimum(d, n - d)
        return d
    coords = np.array(np.unravel_index(np.arange(n), lattice.dims)).T
    diff = np.abs(coords[:, None, :] - coords[None, :, :])
    if lattice.boundary == "periodic":
        diff = np.minimum(diff, np.array(lattice.dims) - diff)
    return diff.max(axis=-1)


def set_distance(lattice: LatticeSpec, I: Sequence[int], J: Sequence[int]) -> int:
    if not I or not J:
        raise ValueError("set_distance of an empty set")
    return min(site_distance(lattice, i, j) for i in I for j in J)


def diameter(lattice: LatticeSpec, I: Sequence[int]) -> int:
    # 1 + max pairwise distance; a singleton has diameter 1
    if not I:
        raise ValueError("diameter of an empty set")
    return 1 + max((site_distance(lattice, i, j) for i, j in itertools.combinations(I, 2)), default=0)


@dataclass(frozen=True)
class InteractionHypergraph:
    """Sites of a lattice plus parameterized hyperedges and automorphism generators.

    ``edges[e]`` is a site set carrying ``arities[e]`` consecutive components of the
    flat parameter vector; ``generators`` are site permutations (as tuples) that map
    the edge set onto itself.
    """

    lattice: LatticeSpec
    edges: tuple[SiteSet, ...]
    arities: tuple[int, ...] = ()
    generators: tuple[tuple[int, ...], ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(as_site_set(e) for e in self.edges)
        arities = tuple(self.arities) if self.arities else (1,) * len(edges)
        if len(arities) != len(edges) or any(q < 1 for q in arities):
            raise ValueError("arities must be positive and match edges")
        for e in edges:
            for s in e:
                self.lattice.check_site(s)
        index = {e: k for k, e in enumerate(edges)}
        if len(index) != len(edges):
            raise ValueError("duplicate edges")
        gens = tuple(tuple(int(v) for v in g) for g in self.generators)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "arities", arities)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "_index", index)
        for g in gens:
            self._check_generator(g)

    def _check_generator(self, g):
        n = self.lattice.n
        if sorted(g) != list(range(n)):
            raise ValueError(f"generator {g} is not a permutation of {n} sites")
        for e in self.edges:
            if permute_set(g, e) not in self._index:
                raise ValueError(f"generator {g} does not fix the edge set (edge {e})")

    @property
    def m(self) -> int:
        return sum(self.arities)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.arities)]).astype(int)

    def edge_index(self, J: Sequence[int]) -> int:
        return self._index[as_site_set(J)]

    def param_slice(self, e: int) -> slice:
        off = self.offsets
        return slice(off[e], off[e + 1])

    def edge_permutation(self, g: Sequence[int]) -> np.ndarray:
        """Index array p with edges[p[e]] == g(edges[e])."""
        return np.array([self._index[permute_set(g, e)] for e in self.edges], dtype=int)

    def act_on_params(self, g: Sequence[int], x: np.ndarray) -> np.ndarray:
        """Return g.x with (g.x)_J = x_{gJ}."""
        x = np.asarray(x)
        perm = self.edge_permutation(g)
        if all(q == 1 for q in self.arities):
            return x[perm]
        out = np.empty_like(x)
        for e, pe in enumerate(perm):
            out[self.param_slice(e)] = x[self.param_slice(pe)]
        return out

    def to_json(self) -> str:
        return json.dumps({
            "lattice": self.lattice.to_dict(),
            "edges": [{"sites": list(e), "arity": q} for e, q in zip(self.edges, self.arities)],
            "generators": [list(g) for g in self.generators],
        })

    @classmethod
    def from_json(cls, text: str) -> "InteractionHypergraph":
        d = json.loads(text)
        lat = LatticeSpec(tuple(d["lattice"]["dims"]), d["lattice"]["boundary"])
        if lat.D != d["lattice"].get("D", lat.D):
            raise ValueError("lattice D does not match dims")
        return cls(
            lat,
            tuple(tuple(e["sites"]) for e in d["edges"]),
            tuple(e.get("arity", 1) for e in d["edges"]),
            tuple(tuple(g) for g in d.get("generators", [])),
        )


def permute_set(g: Sequence[int], I: Sequence[int]) -> SiteSet:
    return tuple(sorted(g[i] for i in I))


def cyclic_shift(n: int, k: int = 1) -> tuple[int, ...]:
    return tuple((i + k) % n for i in range(n))


def compose(g: Sequence[int], h: Sequence[int]) -> tuple[int, ...]:
    """(g o h)(i) = g(h(i))."""
    return tuple(g[h[i]] for i in range(len(h)))


def nearest_neighbor_hypergraph(n: int, boundary: str = "open", with_shift: bool | None = None):
    lat = LatticeSpec.chain(n, boundary)
    edges = [(i, i + 1) for i in range(n - 1)]
    if boundary == "periodic":
        if n < 3:
            raise ValueError("periodic chain needs n >= 3")
        edges.append((0, n - 1))
    if with_shift is None:
        with_shift = boundary == "periodic"
    gens = (cyclic_shift(n),) if with_shift else ()
    return InteractionHypergraph(lat, tuple(edges), generators=gens)


@dataclass(frozen=True)
class Neighborhood:
    center: SiteSet
    radius: int
    members: tuple[int, ...]


def neighborhood(hg: InteractionHypergraph, I: Sequence[int], delta: int) -> Neighborhood:
    """Edges J with d(I, J) <= delta and diam(J) <= delta, in edge order."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    I = as_site_set(I)
    lat = hg.lattice
    members = tuple(
        e for e, J in enumerate(hg.edges)
        if diameter(lat, J) <= delta and set_distance(lat, I, J) <= delta
    )
    return Neighborhood(I, delta, members)


def _all_subsets_features(lattice: LatticeSpec, ell: int):
    n = lattice.n
    if n ** ell > COUNT_GUARD:
        raise ValueError(f"enumeration guard exceeded: n^ell = {n ** ell} > {COUNT_GUARD}")
    dist = distance_matrix(lattice)
    subsets = np.array(list(itertools.combinations(range(n), ell)), dtype=int).reshape(-1, ell)
    if ell == 1:
        diam = np.ones(len(subsets), dtype=int)
    else:
        pairs = list(itertools.combinations(range(ell), 2))
        diam = 1 + np.max(np.stack([dist[subsets[:, a], subsets[:, b]] for a, b in pairs]), axis=0)
    return subsets, diam, dist


def count_sets(lattice: LatticeSpec, I: Sequence[int], ell: int, r: int, R: int) -> int:
    """Number of ell-subsets J with diam(J) == r and d(I, J) == R (exact enumeration)."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    I = as_site_set(I)
    subsets, diam, dist = _all_subsets_features(lattice, ell)
    dIJ = dist[np.ix_(list(I), range(lattice.n))].min(axis=0)[subsets].min(axis=1)
    return int(np.count_nonzero((diam == r) & (dIJ == R)))


def count_table(lattice: LatticeSpec, I: Sequence[int], ell: int) -> dict[tuple[int, int], int]:
    """All nonzero M_ell(I, r, R) at once, keyed by (r, R)."""
    I = as_site_set(I)
    subsets, diam, dist = _all_subsets_features(lattice, ell)
    dIJ = dist[np.ix_(list(I), range(lattice.n))].min(axis=0)[subsets].min(axis=1)
    keys, counts = np.unique(np.stack([diam, dIJ], axis=1), axis=0, return_counts=True)
    return {(int(a), int(b)): int(c) for (a, b), c in zip(keys, counts)}


def count_pair_sets(lattice: LatticeSpec, i: int, j: int, ell: int, R: int) -> int:
    """Number of ell-subsets containing both i and j whose diameter equals R."""
    if ell < 2:
        raise ValueError("pair counts need ell >= 2")
    if i == j:
        raise ValueError("i and j must differ")
    n = lattice.n
    if n ** (ell - 2) > COUNT_GUARD:
        raise ValueError("enumeration guard exceeded")
    others = [s for s in range(n) if s not in (i, j)]
    total = 0
    for rest in itertools.combinations(others, ell - 2):
        if diameter(lattice, (i, j) + rest) == R:
            total += 1
    return total


def pair_count_bound_shape(lattice: LatticeSpec, i: int, j: int, ell: int, R: int) -> float:
    """Shape of the pair-count bound without its constant C_ell."""
    D = lattice.D
    dij = site_distance(lattice, i, j)
    lead = 1.0 if dij == R - 1 else 0.0
    tail = (0.5 * ell * (ell - 1) - 1) * (1.0 if dij <= R - 1 else 0.0) / R
    return (lead + tail) * float(R) ** ((ell - 2) * D)


def set_count_bound_shape(lattice: LatticeSpec, ell: int, r: int, R: int) -> float:
    """r^((ell-1)D-1) R^(D-1), the shape of the ell-subset count bound."""
    D = lattice.D
    rpow = float(r) ** ((ell - 1) * D - 1) if r > 0 else 0.0
    Rpow = 1.0 if D == 1 else float(R) ** (D - 1)
    return rpow * Rpow


@dataclass
class Orbits:
    orbits: list[list[SiteSet]]
    representative: dict  # member -> representative
    element: dict  # member -> permutation g with g(rep) == member

    def __len__(self):
        return len(self.orbits)


def automorphism_orbits(hg: InteractionHypergraph, sets: Iterable[Sequence[int]]) -> Orbits:
    """Partition ``sets`` into orbits of the group generated by ``hg.generators``.

    The orbit representative is the lexicographically smallest member; each member
    carries a group element mapping the representative onto it. Orbits are closed
    under the group, so members not in ``sets`` may appear.
    """
    n = hg.lattice.n
    identity = tuple(range(n))
    sets = [as_site_set(s) for s in sets]
    seen: set = set()
    orbits, rep_of, elem_of = [], {}, {}
    for s in sets:
        if s in seen:
            continue
        # BFS from s; elements recorded relative to s, re-based on the rep afterwards
        found = {s: identity}
        queue = deque([s])
        while queue:
            cur = queue.popleft()
            for g in hg.generators:
                nxt = permute_set(g, cur)
                if nxt not in found:
                    found[nxt] = compose(g, found[cur])
                    queue.append(nxt)
        rep = min(found)
        inv_rep = _inverse(found[rep])
        members = sorted(found)
        for mbr in members:
            rep_of[mbr] = rep
            elem_of[mbr] = compose(found[mbr], inv_rep)
        seen.update(members)
        orbits.append(members)
    return Orbits(orbits, rep_of, elem_of)


def _inverse(g: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(g)
    for i, gi in enumerate(g):
        inv[gi] = i
    return tuple(inv)


inverse = _inverse


def binom_count_sets(n: int, k: int) -> int:
    """|P_k(Lambda)| for a lattice with n sites."""
    return sum(comb(n, ell) for ell in range(1, k + 1))
