"""Exponent calculus for power-law interactions and the delta/N(eps) scaling formulas.

All unspecified O(1) constants default to 1; outputs that depend on them are
order-of-magnitude illustrations, not predictions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from numbers import Rational

import numpy as np

ZETA = 1e-12
# constants quoted for the spectral-flow filter function; display only
FILTER_K = 14708
XI_STAR_RANGE = (36057, 36058)
NON_PREDICTIVE = "order of magnitude only, not a testable prediction"


@dataclass(frozen=True)
class ExponentSet:
    alpha: object
    D: int
    k: int
    eps_star: object
    eps: object
    alpha_prime: object
    beta: object
    eta: object
    mu: object
    nu: object
    omega: object
    clamped: bool
    alpha_eval: object

    def as_floats(self) -> dict:
        return {k: (float(v) if isinstance(v, (Fraction, float, int)) and not isinstance(v, bool) else v)
                for k, v in asdict(self).items()}


def _num(v):
    return v if isinstance(v, Rational) else float(v)


def exponents(alpha, D: int = 1, k: int = 1, zeta: float = ZETA) -> ExponentSet:
    """eps_* -> eps -> alpha' -> beta -> eta -> mu -> nu -> omega, with x = alpha - 2D.

    Rational inputs (int or Fraction) give exact Fractions. alpha above 2D+1 is
    evaluated at 2D+1-zeta (float).
    """
    if D < 1 or k < 1:
        raise ValueError("D and k must be >= 1")
    a = Fraction(alpha) if isinstance(alpha, Rational) else float(alpha)
    if a <= 2 * D:
        raise ValueError(f"alpha={alpha} <= 2D={2 * D}: the locality bound is vacuous")
    clamped = a > 2 * D + 1
    if clamped:
        a = 2 * D + 1 - zeta
    x = a - 2 * D
    eps_star = x * x / (x * x + a - D)
    eps = eps_star / 2
    alpha_p = x - eps
    beta = (a - D) / x - eps / 2
    eta = x / (2 * (2 * a - 2 * D - 1))
    mu = alpha_p * eta
    nu = alpha_p * beta - mu * (beta + 1)
    omega = k * D / (nu - D)
    return ExponentSet(alpha, D, k, eps_star, eps, alpha_p, beta, eta, mu, nu, omega, clamped, a)


def nu_polynomial(alpha, D: int = 1):
    """nu from the closed rational identity for nu - D in x = alpha - 2D, x in (0, 1]."""
    a = Fraction(alpha) if isinstance(alpha, Rational) else float(alpha)
    x = a - 2 * D
    if not 0 < x <= 1:
        raise ValueError("nu_polynomial needs alpha - 2D in (0, 1]")
    num = (8 * (D - 1) * D * D * x + 4 * D * (5 * D - 4) * x ** 2 + (24 * D * D - 8) * x ** 3
           + (42 * D - 14) * x ** 4 + (16 * D + 9) * x ** 5 + 10 * x ** 6)
    den = 16 * (2 * D - 1 + 2 * x) * (D + x * x + x) ** 2
    return D + num / den


def nu_minus_D(x, D: int = 1):
    """nu - D from the rational identity; stable for tiny x."""
    return nu_polynomial(2 * D + x, D) - D if isinstance(x, Rational) else _nmd_float(float(x), D)


def _nmd_float(x, D):
    num = (8 * (D - 1) * D * D * x + 4 * D * (5 * D - 4) * x ** 2 + (24 * D * D - 8) * x ** 3
           + (42 * D - 14) * x ** 4 + (16 * D + 9) * x ** 5 + 10 * x ** 6)
    return num / (16 * (2 * D - 1 + 2 * x) * (D + x * x + x) ** 2)


@dataclass(frozen=True)
class DeltaChoice:
    regime: str
    eps: float
    constants: dict
    delta: int
    note: str = NON_PREDICTIVE


def delta_for_epsilon(regime: str, eps: float, *, c: float = 1.0, c_tilde: float = 1.0, C2: float = 1.0,
                      alpha: float | None = None, D: int = 1) -> DeltaChoice:
    """exponential: c log^2(c~/eps); power-law: c~ max(eps^(-1/(nu-D)), log^(2/mu)(3 C2/eps)). Ceiling, >= 1."""
    if not 0 < eps <= math.exp(-1) * (1 + 1e-12):
        raise ValueError("eps must lie in (0, 1/e]")
    if regime == "exponential":
        val = c * math.log(c_tilde / eps) ** 2
    elif regime == "power-law":
        if alpha is None:
            raise ValueError("power-law regime needs alpha")
        ex = exponents(alpha, D)
        nmd = float(ex.nu) - D
        val = c_tilde * max(eps ** (-1.0 / nmd), math.log(3 * C2 / eps) ** (2.0 / float(ex.mu)))
    else:
        raise ValueError(f"unknown regime {regime!r}")
    # guard against ceil(1 + 1ulp) from rounding in log(e)
    delta = max(1, math.ceil(val - 1e-9 * max(1.0, val)))
    return DeltaChoice(regime, eps, {"c": c, "c_tilde": c_tilde, "C2": C2}, delta)


def emit_exponent_curves(D_list=(1, 2, 3, 4, 5), grid: int = 200, x_min: float = 1e-6,
                         zeta: float = ZETA) -> str:
    """CSV rows (D, x, inv_nu_minus_D, inv_mu) on x in {x_min} u {1/grid, ..., 1}, plus x = 1 - zeta."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["D", "x", "inv_nu_minus_D", "inv_mu"])
    xs = sorted({x_min, *np.linspace(1.0 / grid, 1.0, grid).tolist(), 1.0 - zeta})
    for D in D_list:
        for x in xs:
            mu = float(exponents(2 * D + x, D).mu)
            w.writerow([D, repr(float(x)), repr(1.0 / _nmd_float(x, D)), repr(1.0 / mu)])
    return buf.getvalue()


def log2_N_eps(regime: str, eps: float, k: int = 1, D: int = 1, alpha: float | None = None,
               C_prime: float = 1.0) -> float:
    """log2 of the feature-count factor N(eps) with unit constants.

    exponential: delta = log^2(1/eps) and log2 N = delta^(kD) log2(2 sqrt(C') delta^(kD/2)/eps + 3);
    power-law: log2 N = eps^(-omega) log2(1/eps).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if regime == "exponential":
        delta = max(1.0, math.log(1 / eps) ** 2)
        return delta ** (k * D) * math.log2(2 * math.sqrt(C_prime) * delta ** (k * D / 2) / eps + 3)
    if regime == "power-law":
        omega = float(exponents(alpha, D, k).omega)
        return eps ** (-omega) * math.log2(1 / eps)
    raise ValueError(f"unknown regime {regime!r}")


def sample_complexity_estimate(regime: str, eps1: float, eps3: float, r_O: float, S_size: int, gamma: float,
                               k: int = 1, D: int = 1, alpha: float | None = None) -> dict:
    """N = r(O)^4 eps3^-2 N(eps1) log(|S|/gamma), all O-constants 1, reported in log10 too."""
    if eps3 <= 0 or r_O <= 0 or S_size < 1 or not 0 < gamma < 1:
        raise ValueError("invalid inputs")
    logterm = math.log(S_size / gamma)
    log10 = (4 * math.log10(r_O) - 2 * math.log10(eps3) + log2_N_eps(regime, eps1, k, D, alpha) * math.log10(2)
             + math.log10(logterm))
    N = 10 ** log10 if log10 < 300 else math.inf
    return {"regime": regime, "N": N, "log10_N": log10, "log_term": logterm, "note": NON_PREDICTIVE}
