"""Disorder-ensemble statistics, variance scaling fits and sqrt(n) target rescaling."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .exactdiag import generate_dataset, sample_seeds
from .hamiltonian import HamiltonianFamily, Observable, build_observable


@dataclass
class EnsembleReport:
    n: int
    count: int
    observable: str
    min: float
    max: float
    mean: float
    sd: float

    @property
    def range(self) -> float:
        return self.max - self.min

    @property
    def sqrt_n_sd(self) -> float:
        return math.sqrt(self.n) * self.sd

    @property
    def var_over_mean2(self) -> float:
        return self.sd ** 2 / self.mean ** 2 if self.mean != 0 else math.inf

    @property
    def stderr(self) -> float:
        return self.sd / math.sqrt(self.count)


def report_from_values(values: Sequence[float], n: int, name: str = "") -> EnsembleReport:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two samples")
    return EnsembleReport(n, int(v.size), name, float(v.min()), float(v.max()), float(v.mean()),
                          float(v.std(ddof=1)))


def disorder_ensemble(family: HamiltonianFamily, observable: str | Observable = "avg-correlation",
                      n: int | None = None, num_samples: int = 100, seed=0, *, solver: str = "auto",
                      threads: int = 1, return_values: bool = False):
    """num_samples independent draws of the ground-state value; unbiased SD."""
    fam = family.with_n(n) if n is not None else family
    obs = build_observable(observable, fam) if isinstance(observable, str) else observable
    rows = generate_dataset(fam, obs, num_samples, seeds=sample_seeds([seed, fam.n], num_samples),
                            solver=solver, threads=threads)
    vals = np.array([r["y"] for r in rows])
    rep = report_from_values(vals, fam.n, obs.name)
    return (rep, vals) if return_values else rep


@dataclass
class ScalingFit:
    a: float
    b: float
    residuals: np.ndarray


def variance_scaling_fit(reports: Sequence[EnsembleReport]) -> ScalingFit:
    """Least-squares Var/Mean^2 ~ a + b/n."""
    if len(reports) < 3:
        raise ValueError("need at least three system sizes")
    n = np.array([r.n for r in reports], dtype=float)
    v = np.array([r.var_over_mean2 for r in reports])
    return fit_inverse_n(n, v)


def fit_inverse_n(n, v) -> ScalingFit:
    A = np.column_stack([np.ones_like(n, dtype=float), 1.0 / np.asarray(n, dtype=float)])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return ScalingFit(float(coef[0]), float(coef[1]), v - A @ coef)


def log_fit(n, N) -> tuple[float, float, float]:
    """Least-squares N ~ a log n + b + c/n."""
    n = np.asarray(n, dtype=float)
    A = np.column_stack([np.log(n), np.ones_like(n), 1.0 / n])
    coef, *_ = np.linalg.lstsq(A, np.asarray(N, dtype=float), rcond=None)
    return float(coef[0]), float(coef[1]), float(coef[2])


@dataclass(frozen=True)
class TargetTransform:
    """times-sqrt-n: y' = sqrt(n) y; centered-sqrt-n: y' = sqrt(n) (y - mu)."""

    mode: str
    n: int
    mu: float | None = None

    def __post_init__(self):
        if self.mode not in ("times-sqrt-n", "centered-sqrt-n", "identity"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "centered-sqrt-n" and self.mu is None:
            raise ValueError("centered mode needs mu (estimate it on the training split)")

    @property
    def shift(self) -> float:
        return self.mu if self.mode == "centered-sqrt-n" else 0.0

    @property
    def scale(self) -> float:
        return 1.0 if self.mode == "identity" else math.sqrt(self.n)

    def forward(self, y):
        return self.scale * (np.asarray(y, dtype=float) - self.shift)

    def inverse(self, yp):
        return np.asarray(yp, dtype=float) / self.scale + self.shift


def rescale_observable(observable: Observable | None, mode: str, n: int, mu: float | None = None,
                       train_y: Sequence[float] | None = None):
    """Target transform (and, for times-sqrt-n, the scaled observable).

    For the centered mode mu may be given or estimated from ``train_y`` (training split only).
    """
    if mode == "centered-sqrt-n" and mu is None and train_y is not None:
        mu = float(np.mean(train_y))
    tr = TargetTransform(mode, n, mu)
    if observable is None or observable.is_energy:
        return tr, None
    scaled = Observable(f"{observable.name}*sqrt{n}",
                        tuple((I, tuple(t.scaled(tr.scale) for t in ts)) for I, ts in observable.groups))
    return tr, scaled


def normality_indicators(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"skew": float(sps.skew(v)), "excess_kurtosis": float(sps.kurtosis(v))}


def correlation(a, b) -> float:
    return float(np.corrcoef(a, b)[0, 1])


def table1_csv(reports: Sequence[EnsembleReport], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "range_lo", "range_hi", "range", "sd", "sqrt_n_sd"])
    for r in reports:
        w.writerow([r.n, repr(r.min), repr(r.max), repr(r.range), repr(r.sd), repr(r.sqrt_n_sd)])
    return buf.getvalue()
