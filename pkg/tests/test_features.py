import itertools
import math

import numpy as np
import pytest

from lrlearn.features import (
    FeatureMap,
    FeatureSpec,
    cell_index,
    delta2_from_eps,
    discretize,
    extract_Z,
    full_features,
    grid_size,
    rff_block,
    z_edges,
)
from lrlearn.geometry import automorphism_orbits, cyclic_shift, neighborhood
from lrlearn.hamiltonian import HamiltonianFamily, build_observable, sample_params


def heis(n, boundary="open"):
    return HamiltonianFamily("disordered-heisenberg", n, boundary)


def test_extract_Z_heisenberg_example():
    hg = heis(8).hypergraph
    x = np.arange(7, dtype=float)
    assert [hg.edges[e] for e in z_edges(hg, (0, 1), 2)] == [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert np.array_equal(extract_Z(x, hg, (0, 1), 2), [0, 1, 2, 3])


def test_extract_Z_covering_is_x():
    hg = heis(6).hypergraph
    x = np.linspace(0.1, 1.9, 5)
    assert np.array_equal(np.sort(extract_Z(x, hg, (2, 3), 10)), np.sort(x))


def test_extract_Z_ising_sites():
    fam = HamiltonianFamily("longrange-ising", 8, alpha=3.0)
    x = np.arange(8, dtype=float)
    assert np.array_equal(extract_Z(x, fam.hypergraph, (2, 5), 1), [1, 2, 3, 4, 5, 6])


def test_delta2_example():
    assert delta2_from_eps(0.5, 1.0, 4) == 0.25
    with pytest.raises(ValueError):
        delta2_from_eps(0.0, 1.0, 4)


def test_cell_index_grid_points_and_ties():
    # domain [0, 2] maps onto [-1, 1]; delta2 = 1/2 gives grid -1, -0.5, 0, 0.5, 1
    d2 = 0.5
    assert grid_size(d2) == 5
    assert list(cell_index(np.array([0.0, 0.5, 1.0, 1.5, 2.0]), d2)) == [0, 1, 2, 3, 4]
    # midpoint between grid points goes to the smaller one
    assert list(cell_index(np.array([0.25, 0.75]), d2)) == [0, 1]
    assert list(cell_index(np.array([0.26, 0.74]), d2)) == [1, 1]
    with pytest.raises(ValueError):
        cell_index(np.array([2.5]), d2)


def test_discretized_block_is_one_hot_and_local():
    fam = heis(12)
    hg = fam.hypergraph
    spec = FeatureSpec(kind="discretized", delta=2, delta2=0.5)
    fmap = FeatureMap(hg, [(5, 6)], spec)
    # bonds (2,3) .. (8,9) sit within distance 2: |S| = 7, 5 grid points each
    assert fmap.dim == 5 ** 7
    for s in range(5):
        x = sample_params(fam, s)
        phi = fmap.transform(x)[0]
        assert np.count_nonzero(phi) == 1 and phi.max() == 1.0
        cell = discretize(x, hg, (5, 6), spec)
        assert cell.size == 5 ** 7 and phi[cell.index] == 1.0
        far = x.copy()
        far[[0, 1, 9, 10]] = [0.05, 1.95, 0.3, 1.2]
        assert np.array_equal(fmap.transform(far)[0], phi)


def test_rff_examples():
    omega = np.random.default_rng(0).standard_normal((5, 4))
    out = rff_block(np.zeros(4), omega, 0.5)
    assert np.array_equal(out[0::2], np.ones(5)) and np.array_equal(out[1::2], np.zeros(5))
    one = rff_block(np.array([math.pi, 0, 0, 0]), np.array([[1.0, 0, 0, 0]]), 0.5)
    assert np.allclose(one, [math.cos(math.pi / 4), math.sin(math.pi / 4)], atol=1e-15)
    Z = np.random.default_rng(1).uniform(0, 2, size=(10, 4))
    B = rff_block(Z, omega, 0.6)
    assert np.abs(B[:, 0::2] ** 2 + B[:, 1::2] ** 2 - 1).max() <= 1e-14
    with pytest.raises(ValueError):
        rff_block(np.zeros(3), omega, 0.5)


def test_single_term_same_in_both_modes():
    fam = heis(6, "periodic")
    spec = FeatureSpec(R=4, gamma=0.5, delta=2)
    x = sample_params(fam, 2)
    a = full_features(x, fam.hypergraph, [(0, 1)], spec).values
    b = full_features(x, fam.hypergraph, [(0, 1)], spec.replace(mode="equivariant")).values
    assert np.array_equal(a, b)


def test_dimensions_plain_vs_equivariant():
    fam = heis(6, "periodic")
    obs = build_observable("avg-correlation", fam)
    R = 5
    plain = FeatureMap(fam.hypergraph, obs.supports, FeatureSpec(R=R, delta=2))
    eq = FeatureMap(fam.hypergraph, obs.supports, FeatureSpec(R=R, delta=2, mode="equivariant"))
    assert plain.dim == 12 * R and eq.dim == 2 * R
    disc = FeatureMap(fam.hypergraph, obs.supports, FeatureSpec(kind="discretized", delta=2, delta2=1.0))
    # on the 6-ring every bond lies within distance 2; 3 grid points per component
    assert disc.dim == 6 * 3 ** 6


def test_equivariant_features_invariant_under_shift():
    fam = heis(6, "periodic")
    hg = fam.hypergraph
    obs = build_observable("avg-correlation", fam)
    fmap = FeatureMap(hg, obs.supports, FeatureSpec(R=6, delta=2, mode="equivariant"))
    x = sample_params(fam, 3)
    for k in range(1, 6):
        gx = hg.act_on_params(cyclic_shift(6, k), x)
        assert np.abs(fmap.transform(gx) - fmap.transform(x)).max() <= 1e-12


def test_block_covariance():
    # the member block for gI at x equals the representative block at g.x
    fam = heis(8, "periodic")
    hg = fam.hypergraph
    spec = FeatureSpec(R=4, delta=2, mode="equivariant")
    bonds = [(i, (i + 1) % 8) for i in range(8)]
    fmap = FeatureMap(hg, bonds, spec)
    orbits = automorphism_orbits(hg, bonds)
    (rep, members), = fmap.groups
    omega = fmap.omegas[rep]
    rep_idx = members[0]
    x = sample_params(fam, 4)
    for I, idx in zip(orbits.orbits[0], members):
        g = orbits.element[I]
        lhs = rff_block(x[idx], omega, spec.gamma)
        rhs = rff_block(hg.act_on_params(g, x)[rep_idx], omega, spec.gamma)
        assert np.abs(lhs - rhs).max() <= 1e-14


def test_equivariant_needs_generators():
    with pytest.raises(ValueError):
        FeatureMap(heis(6).hypergraph, [(0, 1), (1, 2)], FeatureSpec(mode="equivariant"))


def test_plain_rff_frequencies_shared_by_size():
    fam = heis(10)
    fmap = FeatureMap(fam.hypergraph, [(3, 4), (5, 6)], FeatureSpec(R=3, delta=1))
    assert np.array_equal(fmap.omegas[(3, 4)], fmap.omegas[(5, 6)])
    # frozen: rebuilding from the serialized spec reproduces the features
    x = sample_params(fam, 0)
    again = FeatureMap.from_dict(fmap.to_dict(), fam.hypergraph)
    assert np.array_equal(again.transform(x), fmap.transform(x))


def test_spec_validation():
    with pytest.raises(ValueError):
        FeatureSpec(kind="poly")
    with pytest.raises(ValueError):
        FeatureSpec(kind="discretized")
    with pytest.raises(ValueError):
        FeatureSpec(R=0)


def test_discretized_weight_table_reproduces_grid_function():
    # a one-hot model whose weight per cell is f(cell center) evaluates f exactly on grid points
    fam = heis(4)
    hg = fam.hypergraph
    spec = FeatureSpec(kind="discretized", delta=2, delta2=1.0)
    fmap = FeatureMap(hg, [(1, 2)], spec)
    grid = np.array([0.0, 1.0, 2.0])
    f = lambda z: np.sin(z).sum()
    w = np.array([f(grid[list(c)]) for c in itertools.product(range(3), repeat=3)])
    for c in itertools.product(range(3), repeat=3):
        x = grid[list(c)]
        assert abs(fmap.transform(x)[0] @ w - f(x)) <= 1e-14
    assert len(neighborhood(hg, (1, 2), 2).members) == 3
