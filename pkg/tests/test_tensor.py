import json
import math

import numpy as np
import pytest

from lrlearn.exactdiag import expectation, solve_ed
from lrlearn.hamiltonian import (
    HamiltonianFamily,
    Observable,
    PauliTerm,
    build_dense,
    correlation_terms,
    sample_params,
)
from lrlearn.tensor.dmrg import TruncationPolicy, dmrg_excited, dmrg_ground, mps_expectation
from lrlearn.tensor.expsum import ExpSumFit, fit_exp_sum, pencil_bases, periodic_g
from lrlearn.tensor.mpo import build_mpo, field_mpo
from lrlearn.tensor.mps import from_dense, overlap, product_mps, random_mps


def test_single_exponential_recovered():
    d = np.arange(1, 41, dtype=float)
    lam = pencil_bases(0.5 * 0.9 ** d, 1)
    assert abs(lam[0] - 0.9) <= 1e-10
    B = lam[None, :] ** d[:, None]
    a = np.linalg.lstsq(B, 0.5 * 0.9 ** d, rcond=None)[0]
    assert abs(a[0] - 0.5) <= 1e-10


def test_open_fit_tolerance_and_monotone():
    d = np.arange(1, 129, dtype=float)
    errs = [np.max(np.abs(fit_exp_sum(3.0, 128, K)(d) * d ** 3 - 1)) for K in (2, 4, 6, 8, 10)]
    assert errs[-1] <= 1e-3
    assert all(b < a for a, b in zip(errs, errs[1:]))
    fit = fit_exp_sum(3.0, 128, 10)
    assert np.all((fit.lam > 0) & (fit.lam <= 1))


def test_periodic_g_midpoint():
    n, alpha = 20, 3.0
    g = periodic_g(alpha, n, np.array([n / 2]))
    assert math.isclose(2 * g[0], (n / 2) ** -alpha)


def test_fit_json_roundtrip():
    fit = fit_exp_sum(3.0, 63, 10, "periodic", n=64, tol=5e-3)
    d = json.loads(fit.to_json())
    assert {"K", "a", "lambda", "max_rel_err"} <= set(d)
    back = ExpSumFit.from_json(fit.to_json())
    x = np.arange(1, 64, dtype=float)
    assert np.allclose(back(x), fit(x), rtol=1e-12)


def test_heisenberg_mpo_dense():
    for n, bc in ((4, "open"), (6, "periodic")):
        fam = HamiltonianFamily("disordered-heisenberg", n, bc)
        x = sample_params(fam, 1)
        mpo = build_mpo(fam, x)
        assert np.max(np.abs(mpo.to_dense() - build_dense(fam, x).toarray())) <= 1e-12
    periodic = build_mpo(HamiltonianFamily("disordered-heisenberg", 6, "periodic"), np.ones(6))
    assert max(periodic.bond_dims) == 8


def test_ising_mpo_dense_within_fit_error():
    fam = HamiltonianFamily("longrange-ising", 6, alpha=3.0)
    x = sample_params(fam, 2)
    fit = fit_exp_sum(3.0, 32, 6)
    mpo = build_mpo(fam, x, fit)
    assert max(mpo.bond_dims) == 2 * fit.K + 2
    diff = np.max(np.abs(mpo.to_dense() - build_dense(fam, x).toarray()))
    coupling_sum = sum(abs(1 + x[i] * x[j]) for i in range(6) for j in range(i + 1, 6))
    assert diff <= fit.max_rel_err * coupling_sum + 1e-12


def test_ising_periodic_mpo_dense():
    fam = HamiltonianFamily("longrange-ising", 8, "periodic", alpha=3.0)
    x = sample_params(fam, 3)
    fit = fit_exp_sum(3.0, 7, 3, "periodic", n=8)
    mpo = build_mpo(fam, x, fit)
    assert max(mpo.bond_dims) == 4 * fit.K + 2
    diff = np.max(np.abs(mpo.to_dense() - build_dense(fam, x).toarray()))
    coupling_sum = sum(abs(1 + x[i] * x[j]) for i in range(8) for j in range(i + 1, 8))
    assert diff <= fit.max_rel_err * coupling_sum + 1e-12


def test_dmrg_product_hamiltonian():
    h = np.array([0.3, 1.0, 2.0, 0.7, 1.1])
    res = dmrg_ground(field_mpo(h), TruncationPolicy(start_bond=4))
    assert abs(res.energy + h.sum()) <= 1e-10
    assert max(res.mps.bond_dims) == 1


def test_dmrg_sweeps_variational_and_logged():
    fam = HamiltonianFamily("disordered-heisenberg", 10)
    x = sample_params(fam, 4)
    res = dmrg_ground(build_mpo(fam, x), seed=0)
    E = [row["energy"] for row in res.sweeps]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(E, E[1:]))
    assert res.converged
    assert res.log_csv().splitlines()[0] == "sweep,energy,max_bond,trunc_err"
    e_ed = solve_ed(fam, x).E0
    assert res.energy >= e_ed - 1e-9 and abs(res.energy - e_ed) / abs(e_ed) <= 1e-6
    assert res.mps.isometry_residual() <= 1e-10


def test_dmrg_excited_gap():
    fam = HamiltonianFamily("disordered-heisenberg", 8)
    x = sample_params(fam, 6)
    mpo = build_mpo(fam, x)
    g = dmrg_ground(mpo)
    e = dmrg_excited(mpo, g.mps)
    ed = solve_ed(fam, x, excited=True)
    assert abs((e.energy - g.energy) - ed.gap) <= 1e-4 * ed.gap
    assert abs(overlap(g.mps, e.mps)) <= 1e-6
    two = HamiltonianFamily("disordered-heisenberg", 2)
    m2 = build_mpo(two, np.array([1.0]))
    g2 = dmrg_ground(m2)
    assert abs(dmrg_excited(m2, g2.mps).energy - g2.energy - 4) <= 1e-8


def test_truncation_consistency():
    fam = HamiltonianFamily("disordered-heisenberg", 12)
    x = sample_params(fam, 9)
    mpo = build_mpo(fam, x)
    loose = dmrg_ground(mpo, TruncationPolicy(cutoff=1e-7)).energy
    tight = dmrg_ground(mpo, TruncationPolicy(cutoff=1e-9)).energy
    assert tight <= loose + 1e-8 * abs(loose)


def test_mps_expectations():
    zero = product_mps([0, 0, 0, 0])
    assert mps_expectation(zero, Observable.from_terms("Z", [PauliTerm((2,), "Z")])) == pytest.approx(1.0)
    singlet = np.array([0, 1, -1, 0]) / math.sqrt(2)
    C01 = Observable("C01", (((0, 1), correlation_terms(0, 1)),))
    assert mps_expectation(from_dense(singlet), C01) == pytest.approx(-1.0, abs=1e-12)
    psi = random_mps(8, 4, seed=3)
    psi.normalize()
    Zsum = Observable.from_terms("Zsum", [PauliTerm((i,), "Z") for i in range(8)])
    assert abs(mps_expectation(psi, Zsum) - expectation(psi.to_dense(), Zsum)) <= 1e-10
    with pytest.raises(ValueError):
        mps_expectation(psi, Observable.from_terms("Z", [PauliTerm((9,), "Z")]))
