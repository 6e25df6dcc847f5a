"""Sums of exponentials approximating power-law decay, via a matrix-pencil fit."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class ExpSumFit:
    """1/d^alpha ~ sum_l a_l lambda_l^d on d = 1..L.

    For periodic fits ``a``/``lam`` hold the doubled set, so the same formula
    reproduces min(d, n-d)^-alpha for d = 1..n-1.
    """

    K: int
    a: np.ndarray
    lam: np.ndarray
    alpha: float
    L: int
    boundary: str = "open"
    n: int | None = None
    max_rel_err: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __call__(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if d.ndim:
            return np.real(self.lam[None, :] ** d[:, None] @ self.a)
        return float(np.real(self.lam ** d @ self.a))

    @property
    def terms(self) -> int:
        return len(self.a)

    def to_json(self) -> str:
        d = {"K": self.K, "a": _encode(self.a), "lambda": _encode(self.lam),
             "max_rel_err": self.max_rel_err, "alpha": self.alpha, "L": self.L, "boundary": self.boundary}
        if self.n is not None:
            d["n"] = self.n
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "ExpSumFit":
        d = json.loads(text)
        return cls(d["K"], _decode(d["a"]), _decode(d["lambda"]), d["alpha"], d["L"],
                   d.get("boundary", "open"), d.get("n"), d["max_rel_err"])


def _encode(v):
    # complex entries become [re, im] pairs
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return [[float(z.real), float(z.imag)] for z in v]
    return [float(z) for z in v]


def _decode(v):
    arr = np.array(v, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1] if arr.ndim == 2 else arr


def pencil_bases(f: np.ndarray, K: int) -> np.ndarray:
    """Rank-K shift-invariance bases of samples f[0], f[1], ... (Hankel SVD)."""
    L = len(f)
    P = L // 2
    if K > min(P, L - P - 1):
        raise ValueError(f"K={K} too large for {L} samples")
    Y = np.array([f[i:i + P + 1] for i in range(L - P)])
    _, _, Vt = np.linalg.svd(Y, full_matrices=False)
    V = Vt[:K].T
    return np.linalg.eigvals(np.linalg.pinv(V[:-1]) @ V[1:])


def _clean_bases(lam: np.ndarray, allow_growth: bool) -> np.ndarray:
    keep = []
    for b in lam:
        if abs(b.imag) > 1e-8 * max(abs(b), 1e-300):
            log.info("dropping complex base %s", b)
            continue
        b = b.real
        if b <= 0 or (b > 1 + 1e-12 and not allow_growth):
            log.info("dropping unstable base %.3g", b)
            continue
        keep.append(min(b, 1.0) if not allow_growth else b)
    return np.array(sorted(keep))


def _relative_lsq(B: np.ndarray, target: np.ndarray) -> np.ndarray:
    # weights minimizing the relative residual sum_d ((B c)_d / t_d - 1)^2
    return np.linalg.lstsq(B / target[:, None], np.ones_like(target), rcond=None)[0]


def _open_fit(alpha, L, K):
    d = np.arange(1, L + 1, dtype=float)
    f = d ** -alpha
    lam = _clean_bases(pencil_bases(f, K), allow_growth=False)
    if lam.size == 0:
        raise ValueError("no stable bases found")
    A = lam[None, :] ** d[:, None]
    a = _relative_lsq(A, f)
    err = float(np.max(np.abs(A @ a - f) / f))
    return a, lam, err, {}


def _periodic_fit(alpha, n, K):
    # fit the piecewise g whose symmetrization g(x) + g(n-x) equals min(x, n-x)^-alpha;
    # the kink at n/2 needs oscillating modes, so conjugate pairs of complex bases are kept
    x = np.arange(1, n, dtype=float)
    g = periodic_g(alpha, n, x)
    target = np.minimum(x, n - x) ** -alpha
    b = pencil_bases(g, K)
    b = b[(np.abs(b) > 1e-12) & (np.abs(b) <= 1 + 1e-9)]
    if b.size == 0:
        raise ValueError("no usable bases found")
    b = b[np.lexsort((b.imag, b.real))]
    B = b[None, :] ** x[:, None] + b[None, :] ** (n - x)[:, None]
    c = _relative_lsq(B, target)
    if np.all(np.abs(b.imag) == 0):
        b, c = b.real, c.real
    err = float(np.max(np.abs(B @ c - target) / target))
    a = np.concatenate([c, c * b ** n])
    lam = np.concatenate([b, 1.0 / b])
    return a, lam, err, {"c": c, "b": b}


def periodic_g(alpha: float, n: int, x) -> np.ndarray:
    """Piecewise target whose symmetric sum g(x) + g(n - x) is min(x, n-x)^-alpha."""
    x = np.asarray(x, dtype=float)
    return np.where(x < n / 2, x ** -alpha - 0.5 * (n - x) ** -alpha, 0.5 * x ** -alpha)


def fit_exp_sum(alpha: float, L: int, K: int, boundary: str = "open", n: int | None = None,
                tol: float | None = None, K_max: int | None = None) -> ExpSumFit:
    """Matrix-pencil fit of d^-alpha by K exponentials, weights refit by relative least squares.

    Open: fits d = 1..L. Periodic: fits the piecewise g on 1..n-1 and returns the
    doubled set {c_l, b_l} u {c_l b_l^n, 1/b_l}. With ``tol`` set, K is raised
    (up to ``K_max``) until the maximum relative error meets it; the K used is stored.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if boundary == "periodic":
        if n is None:
            n = L + 1
        L = n - 1
    if L < 2:
        raise ValueError("L must be >= 2")
    samples = L if boundary == "open" else n - 1
    limit = (samples - 1) // 2
    if K_max is None:
        K_max = limit
    K_max = min(K_max, limit)
    if K > limit:
        # too few distances for K bases: the fit is exact at a smaller K
        K = limit
    fitter = (lambda k: _open_fit(alpha, L, k)) if boundary == "open" else (lambda k: _periodic_fit(alpha, n, k))
    a, lam, err, meta = fitter(K)
    used = K
    if tol is not None:
        while err > tol and used < K_max:
            used += 1
            a, lam, err, meta = fitter(used)
        if err > tol:
            log.warning("exp-sum fit reached K=%d with max relative error %.2e > %.2e", used, err, tol)
    return ExpSumFit(used, a, lam, float(alpha), L, boundary, n, err, meta)
