import itertools
import math

import numpy as np
import pytest

from lrlearn.exactdiag import expectation, generate_dataset, solve_ed
from lrlearn.hamiltonian import HamiltonianFamily, Observable, PauliTerm
from lrlearn.shadows import (
    ShadowRecord,
    default_T,
    estimate_pauli,
    reduced_dm,
    sample_shadow,
    shadow_dataset,
)

SIG = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
       "Z": np.diag([1.0, -1.0])}


def dense_pauli(word):
    # word[q] is the letter on qubit q; qubit 0 is the most significant bit
    out = np.ones((1, 1))
    for c in word:
        out = np.kron(out, SIG[c])
    return out


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    return v / np.linalg.norm(v)


def test_z_basis_on_zero_state_is_deterministic():
    rec = sample_shadow(np.array([1.0, 0.0]), 2000, seed=1)
    z = rec.bases[:, 0] == 2
    assert z.sum() > 0
    assert np.all(rec.bits[z, 0] == 0)


def test_x_basis_on_zero_state_is_fair():
    rec = sample_shadow(np.array([1.0, 0.0]), 30_000, seed=2)
    x = rec.bases[:, 0] == 0
    p = rec.bits[x, 0].mean()
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / x.sum())


def test_determinism_and_jsonl_roundtrip():
    psi = random_state(3, 0)
    a, b = sample_shadow(psi, 300, seed=5), sample_shadow(psi, 300, seed=5)
    assert np.array_equal(a.bases, b.bases) and np.array_equal(a.bits, b.bits)
    c = ShadowRecord.from_jsonl(a.to_jsonl())
    assert np.array_equal(a.bases, c.bases) and np.array_equal(a.bits, c.bits)
    assert a.to_jsonl().splitlines()[0].startswith('{"t": 0, "bases": "')


def test_errors():
    with pytest.raises(ValueError):
        sample_shadow(np.array([1.0, 1.0]), 10)
    rec = sample_shadow(np.array([1.0, 0, 0, 0]), 10)
    with pytest.raises(ValueError):
        estimate_pauli(rec, PauliTerm.parse("Z2"))
    rec5 = sample_shadow(random_state(5, 1), 10)
    with pytest.raises(ValueError):
        reduced_dm(rec5, [0, 1, 2, 3, 4])


def test_eigenstate_estimate():
    rec = sample_shadow(np.array([1.0, 0.0]), 100_000, seed=3)
    est = estimate_pauli(rec, PauliTerm.parse("Z0"))
    assert abs(est.value - 1.0) <= 5 * est.stderr


def test_maximally_mixed_qubit():
    # qubit 0 of a Bell pair is maximally mixed
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rec = sample_shadow(bell, 50_000, seed=4)
    for c in "XYZ":
        est = estimate_pauli(rec, PauliTerm.parse(f"{c}0"))
        assert abs(est.value) <= 5 * est.stderr


def test_random_state_matches_dense_expectation():
    psi = random_state(3, 7)
    exact = np.vdot(psi, dense_pauli("XIZ") @ psi).real
    est = estimate_pauli(sample_shadow(psi, 100_000, seed=8), PauliTerm.parse("X0Z2"))
    assert abs(est.value - exact) <= 5 * est.stderr


def test_unbiased_over_many_records():
    psi = random_state(2, 11)
    words = [a + b for a, b in itertools.product("IXYZ", repeat=2) if a + b != "II"]
    vals = {w: [] for w in words}
    for r in range(200):
        rec = sample_shadow(psi, 500, seed=[12, r])
        for w in words:
            label = "".join(f"{c}{q}" for q, c in enumerate(w) if c != "I")
            vals[w].append(estimate_pauli(rec, PauliTerm.parse(label)).value)
    for w in words:
        v = np.array(vals[w])
        exact = np.vdot(psi, dense_pauli(w) @ psi).real
        assert abs(v.mean() - exact) <= 5 * v.std(ddof=1) / math.sqrt(len(v)), w


def test_stderr_scales_as_inverse_sqrt_T():
    psi = random_state(2, 13)
    P = PauliTerm.parse("X0Y1")
    s1 = estimate_pauli(sample_shadow(psi, 1000, seed=14), P).stderr
    s4 = estimate_pauli(sample_shadow(psi, 4000, seed=15), P).stderr
    assert 1.6 <= s1 / s4 <= 2.5


def test_reduced_dm_trace_hermitian_and_accuracy():
    rec = sample_shadow(np.array([1.0, 0, 0, 0]), 100_000, seed=16)
    for sites in ([0], [1], [0, 1]):
        rho = reduced_dm(rec, sites)
        assert abs(np.trace(rho) - 1.0) <= 1e-12
        assert np.abs(rho - rho.conj().T).max() <= 1e-14
    rho0 = reduced_dm(rec, [0])
    dist = np.abs(np.linalg.eigvalsh(rho0 - np.diag([1.0, 0.0]))).sum()
    assert dist <= 0.05


def test_reduced_dm_factorizes_on_product_state():
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    psi = np.kron(plus, np.array([1.0, 0.0]))
    rec = sample_shadow(psi, 100_000, seed=17)
    joint = reduced_dm(rec, [0, 1])
    prod = np.kron(reduced_dm(rec, [0]), reduced_dm(rec, [1]))
    assert np.abs(np.linalg.eigvalsh(joint - prod)).sum() <= 0.1


def test_reduced_dm_matches_pauli_estimates():
    psi = random_state(2, 18)
    rec = sample_shadow(psi, 2000, seed=19)
    rho = reduced_dm(rec, [0, 1])
    for w in ("XZ", "YY", "ZI"):
        label = "".join(f"{c}{q}" for q, c in enumerate(w) if c != "I")
        est = estimate_pauli(rec, PauliTerm.parse(label)).value
        assert abs(np.trace(rho @ dense_pauli(w)).real - est) <= 1e-12


def test_default_T_formula():
    T = default_T(8, 2, 0.1, 0.2)
    assert T == math.ceil(2 * 144 * math.log(80) / 0.04)
    with pytest.raises(ValueError):
        default_T(8, 2, 0.1, 0.0)


def test_shadow_dataset_shares_draws_and_converges():
    fam = HamiltonianFamily("disordered-heisenberg", 4)
    paulis = [PauliTerm.parse("Z1Z2"), PauliTerm.parse("X1X2")]
    data = shadow_dataset(fam, paulis, N=4, T=20_000, seed=3)
    assert [r["x"] for r in data["Z1Z2"]] == [r["x"] for r in data["X1X2"]]
    obs = Observable.from_terms("Z1Z2", [paulis[0]])
    exact = generate_dataset(fam, obs, 4, seed=3)
    assert [r["x"] for r in exact] == [r["x"] for r in data["Z1Z2"]]
    gap = np.sqrt(np.mean([(a["y"] - b["y"]) ** 2 for a, b in zip(exact, data["Z1Z2"])]))
    # per-snapshot variance is at most 9, so T=2e4 gives stderr <= 0.021
    assert gap <= 0.1


def test_shadow_estimate_of_ground_state():
    fam = HamiltonianFamily("disordered-heisenberg", 4)
    x = np.array([1.0, 0.3, 1.0])
    res = solve_ed(fam, x)
    P = PauliTerm.parse("Z0Z1")
    exact = expectation(res, Observable.from_terms("Z0Z1", [P]))
    est = estimate_pauli(sample_shadow(res.vector, 50_000, seed=20), P)
    assert abs(est.value - exact) <= 5 * est.stderr
