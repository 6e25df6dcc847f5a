import math

import numpy as np
import pytest

from lrlearn.exactdiag import expectation, sample_seeds, solve_ed
from lrlearn.geometry import neighborhood, set_distance
from lrlearn.hamiltonian import (
    HamiltonianFamily,
    Observable,
    build_observable,
    correlation_terms,
    mask_params,
    sample_params,
)
from lrlearn.learner import lasso_fit
from lrlearn.stats import (
    EnsembleReport,
    TargetTransform,
    correlation,
    disorder_ensemble,
    fit_inverse_n,
    log_fit,
    normality_indicators,
    report_from_values,
    rescale_observable,
    table1_csv,
    variance_scaling_fit,
)


def heis(n, boundary="open"):
    return HamiltonianFamily("disordered-heisenberg", n, boundary)


def test_report_fields():
    r = report_from_values([1.0, 2.0, 4.0], n=4, name="o")
    assert (r.min, r.max, r.range, r.count) == (1.0, 4.0, 3.0, 3)
    assert r.sd == pytest.approx(np.std([1, 2, 4], ddof=1), abs=1e-15)
    assert r.sqrt_n_sd == pytest.approx(2 * r.sd)
    assert r.min <= r.mean <= r.max
    with pytest.raises(ValueError):
        report_from_values([1.0], 4)


def test_heisenberg_n4_sd():
    rep = disorder_ensemble(heis(4), "avg-correlation", num_samples=100, seed=0, solver="ed")
    assert 0.04 <= rep.sd <= 0.10


def test_constant_observable():
    # two antiferromagnetically coupled spins always form the singlet: C01 = -1
    rep = disorder_ensemble(heis(2), "local-correlation", num_samples=20, seed=1)
    assert abs(rep.mean + 1) <= 1e-12
    assert rep.sd <= 1e-12 and rep.range <= 1e-12


def test_mean_consistent_when_doubling():
    a = disorder_ensemble(heis(6), num_samples=100, seed=2)
    b = disorder_ensemble(heis(6), num_samples=200, seed=3)
    assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)


def test_deterministic_and_threads():
    a, va = disorder_ensemble(heis(6), num_samples=8, seed=4, return_values=True)
    b, vb = disorder_ensemble(heis(6), num_samples=8, seed=4, threads=2, return_values=True)
    assert np.array_equal(va, vb) and a == b


def test_variance_fit_synthetic():
    ns = [4, 8, 12, 16]
    reps = []
    for n in ns:
        # mean 1, so Var/Mean^2 = sd^2
        v = -0.002 + 0.3 / n
        reps.append(EnsembleReport(n, 100, "s", 0.0, 2.0, 1.0, math.sqrt(v)))
    fit = variance_scaling_fit(reps)
    assert abs(fit.a + 0.002) <= 1e-14 and abs(fit.b - 0.3) <= 1e-13
    assert np.abs(fit.residuals).max() <= 1e-15
    with pytest.raises(ValueError):
        variance_scaling_fit(reps[:2])


def test_log_fit_synthetic():
    n = np.array([4.0, 8, 12, 16, 32])
    a, b, c = log_fit(n, 3 * np.log(n) + 2 - 5 / n)
    assert np.allclose([a, b, c], [3, 2, -5], atol=1e-12)
    assert fit_inverse_n(n, 1 + 2 / n).b == pytest.approx(2.0)


@pytest.mark.slow
def test_variance_fit_heisenberg():
    reps = [disorder_ensemble(heis(n), num_samples=100, seed=0, solver="ed") for n in (8, 12, 16)]
    fit = variance_scaling_fit(reps)
    print(f"a={fit.a:.2e} b={fit.b:.4f}")
    assert abs(fit.a) <= 0.01 and 0.005 <= fit.b <= 0.1


def test_sqrt_n_sd_roughly_constant():
    reps = [disorder_ensemble(heis(n), num_samples=100, seed=5, solver="ed") for n in (6, 10)]
    assert 0.5 <= reps[1].sqrt_n_sd / reps[0].sqrt_n_sd <= 2.0


def test_rescale_examples():
    tr, _ = rescale_observable(None, "times-sqrt-n", 4)
    assert tr.forward(-0.5) == -1.0 and tr.inverse(-1.0) == -0.5
    y = np.random.default_rng(0).normal(0.3, 0.1, 50)
    tr, _ = rescale_observable(None, "centered-sqrt-n", 9, train_y=y)
    assert abs(tr.forward(y).mean()) <= 1e-12
    assert np.allclose(tr.inverse(tr.forward(y)), y, atol=1e-15)
    with pytest.raises(ValueError):
        TargetTransform("centered-sqrt-n", 4)
    with pytest.raises(ValueError):
        TargetTransform("log", 4)


def test_rescaled_observable_matches_scaled_targets():
    fam = heis(4)
    obs = build_observable("local-correlation", fam, (1, 2))
    tr, scaled = rescale_observable(obs, "times-sqrt-n", 4)
    res = solve_ed(fam, sample_params(fam, 0))
    assert abs(expectation(res, scaled) - tr.forward(expectation(res, obs))) <= 1e-13


def test_centering_only_shifts_intercept():
    rng = np.random.default_rng(1)
    Phi = rng.standard_normal((40, 8))
    y = 0.2 + Phi[:, :3] @ [0.5, -0.3, 0.1] + 0.05 * rng.standard_normal(40)
    n = 16
    mu = float(y.mean())
    plain = TargetTransform("times-sqrt-n", n)
    cent = TargetTransform("centered-sqrt-n", n, mu)
    a = lasso_fit(Phi, plain.forward(y), 0.01, tol=1e-12)
    b = lasso_fit(Phi, cent.forward(y), 0.01, tol=1e-12)
    assert np.abs(a.w - b.w).max() <= 1e-8
    assert abs((a.y0 - b.y0) - math.sqrt(n) * mu) <= 1e-8


def test_masked_targets_far_apart_are_uncorrelated():
    fam = heis(12)
    hg = fam.hypergraph
    delta = 2
    I, J = (0, 1), (10, 11)
    assert set_distance(fam.lattice, I, J) > 4 * delta
    SI, SJ = neighborhood(hg, I, delta), neighborhood(hg, J, delta)
    CI = Observable("CI", ((I, correlation_terms(*I)),))
    CJ = Observable("CJ", ((J, correlation_terms(*J)),))
    a, b = [], []
    for s in sample_seeds(6, 200):
        x = sample_params(fam, s)
        # each masked Hamiltonian leaves the far spins free, so the ground space is degenerate
        # but the observable only sees the coupled segment
        a.append(expectation(solve_ed(fam, mask_params(x, hg, SI)), CI))
        b.append(expectation(solve_ed(fam, mask_params(x, hg, SJ)), CJ))
    assert abs(correlation(a, b)) <= 4 / math.sqrt(200)


@pytest.mark.slow
def test_normality_indicators_at_largest_size():
    # skew shrinks with n (about 1.07, 0.82, 0.57 at n = 8, 10, 12); n = 14 is the largest quick ED size
    _, vals = disorder_ensemble(heis(14), num_samples=200, seed=7, solver="ed", return_values=True)
    ind = normality_indicators(vals)
    print(f"n=14 skew={ind['skew']:.3f} excess kurtosis={ind['excess_kurtosis']:.3f}")
    assert abs(ind["skew"]) <= 0.5 and abs(ind["excess_kurtosis"]) <= 1.0


def test_normality_indicators_on_gaussian():
    g = normality_indicators(np.random.default_rng(0).standard_normal(10_000))
    assert abs(g["skew"]) < 0.1 and abs(g["excess_kurtosis"]) < 0.2


def test_table1_csv():
    reps = [report_from_values([0.1, 0.3, 0.2], 4), report_from_values([0.2, 0.25, 0.3], 8)]
    lines = table1_csv(reps, "# h").splitlines()
    assert lines[0] == "# h" and lines[1] == "n,range_lo,range_hi,range,sd,sqrt_n_sd"
    assert len(lines) == 4 and lines[2].startswith("4,0.1,0.3,")
