import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest

from lrlearn.theory import (
    delta_for_epsilon,
    emit_exponent_curves,
    exponents,
    nu_minus_D,
    nu_polynomial,
    sample_complexity_estimate,
)


def test_d1_alpha3_exact_values():
    e = exponents(3, 1)
    assert (e.eps_star, e.eps, e.alpha_prime, e.eta, e.mu, e.beta, e.nu) == (
        Fraction(1, 3), Fraction(1, 6), Fraction(5, 6), Fraction(1, 6), Fraction(5, 36), Fraction(23, 12),
        Fraction(515, 432))
    assert exponents(3, 1, k=2).omega == Fraction(864, 83)
    assert not e.clamped


def test_polynomial_identity_examples():
    assert nu_polynomial(3, 1) == 1 + Fraction(83, 432)
    assert abs(float(exponents(4.5, 2).nu) - float(nu_polynomial(4.5, 2))) <= 1e-12
    assert nu_minus_D(1e-9, 1) < 1e-7
    with pytest.raises(ValueError):
        nu_polynomial(3.5, 1)


def test_nu_tends_to_D_near_2D():
    for D in (1, 2, 3):
        vals = [float(exponents(2 * D + x, D).nu) - D for x in (1e-2, 1e-4, 1e-6)]
        assert vals[0] > vals[1] > vals[2] > 0 and vals[2] < 1e-4


def test_clamp_and_errors():
    e = exponents(3.5, 1)
    assert e.clamped and e.alpha_eval == 3 - 1e-12
    assert abs(float(e.nu) - float(exponents(3 - 1e-12, 1).nu)) == 0.0
    # exactly 2D+1 is not clamped and stays exact
    assert not exponents(3, 1).clamped
    with pytest.raises(ValueError):
        exponents(2, 1)
    with pytest.raises(ValueError):
        exponents(3, 0)


def test_dual_route_and_claimed_inequalities():
    rng = np.random.default_rng(0)
    for _ in range(200):
        D = int(rng.integers(1, 6))
        x = float(rng.uniform(1e-6, 1.0))
        a = 2 * D + x
        e = exponents(a, D)
        nu, mu, eta = float(e.nu), float(e.mu), float(e.eta)
        assert abs(nu - float(nu_polynomial(a, D))) <= 1e-12
        assert nu > D
        assert -a + 1 <= -nu + 1e-12
        assert nu - D - a <= 0
        assert 0 < eta < 1 / (2 * (2 * D + 1))
        assert 0 < mu < eta
        assert float(e.omega) > 0


def test_delta_for_epsilon():
    assert delta_for_epsilon("exponential", math.exp(-1)).delta == 1
    d = delta_for_epsilon("power-law", 0.1, alpha=3)
    first = 0.1 ** (-432 / 83)
    second = math.log(30) ** (2 * 36 / 5)
    assert abs(math.log10(first) - 432 / 83) < 1e-12
    assert d.delta == math.ceil(max(first, second))
    for regime, kw in (("exponential", {}), ("power-law", {"alpha": 2.6})):
        prev = 0
        for eps in (0.3, 0.15, 0.075, 0.01):
            cur = delta_for_epsilon(regime, eps, **kw).delta
            assert cur >= prev
            prev = cur
    with pytest.raises(ValueError):
        delta_for_epsilon("exponential", 0.5)
    with pytest.raises(ValueError):
        delta_for_epsilon("power-law", 0.1)


def test_exponent_curves():
    rows = list(csv.DictReader(io.StringIO(emit_exponent_curves(grid=50))))
    for D in range(1, 6):
        sub = [r for r in rows if int(r["D"]) == D]
        xs = [float(r["x"]) for r in sub]
        assert xs == sorted(xs) and xs[0] == 1e-6 and 1 - 1e-12 in xs
        for key in ("inv_nu_minus_D", "inv_mu"):
            v = np.array([float(r[key]) for r in sub])
            assert np.all(np.diff(v) < 0)
            assert v[0] > 1e3
    d1 = [r for r in rows if r["D"] == "1" and float(r["x"]) == 1.0][0]
    assert abs(float(d1["inv_nu_minus_D"]) - 432 / 83) < 1e-12


def test_sample_complexity_structure():
    base = dict(eps1=0.1, eps3=0.1, r_O=1.0, gamma=0.05)
    a = sample_complexity_estimate("exponential", S_size=10, **base)
    b = sample_complexity_estimate("exponential", S_size=100, **base)
    assert abs(b["log_term"] - a["log_term"] - math.log(10)) < 1e-12
    half = sample_complexity_estimate("exponential", S_size=10, **{**base, "eps3": 0.05})
    assert abs(half["N"] / a["N"] - 4) < 1e-9
    for eps in (0.05, 0.01):
        e = sample_complexity_estimate("exponential", S_size=10, **{**base, "eps1": eps})
        p = sample_complexity_estimate("power-law", S_size=10, alpha=2.5, **{**base, "eps1": eps})
        assert p["log10_N"] >= e["log10_N"]
    assert "not a testable prediction" in a["note"]
