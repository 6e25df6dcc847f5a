"""Pure-Python/numpy versions of the hot loops (fallback when the extension is absent)."""

from __future__ import annotations

import numpy as np

_SQ2 = np.sqrt(0.5)


def _soft(z, a):
    if z > a:
        return z - a
    if z < -a:
        return z + a
    return 0.0


def _kkt(X, r, w, alpha, N):
    g = -(X.T @ r) / N
    active = w != 0
    viol = np.where(active, np.abs(g + alpha * np.sign(w)), np.maximum(np.abs(g) - alpha, 0.0))
    return float(viol.max()) if viol.size else 0.0


def cd_lasso(X, y, alpha, w0, y0, tol, max_iter, fit_intercept):
    """Cyclic coordinate descent for (1/2N)||y - y0 - Xw||^2 + alpha ||w||_1.

    Full cycles alternate with cycles restricted to the active set. Stops once a
    full cycle moves no coordinate by more than ``tol`` and the KKT violation is at
    most ``tol``. Returns (w, y0, cycles, objective per cycle, converged).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    N, m = X.shape
    w = np.array(w0, dtype=float, copy=True)
    y0 = float(y0) if fit_intercept else 0.0
    r = y - y0 - X @ w
    col = (X * X).sum(axis=0) / N
    objs = []
    converged = False
    full = True
    cycles = 0
    while cycles < max_iter:
        cycles += 1
        idx = range(m) if full else np.flatnonzero(w)
        dmax = 0.0
        for j in idx:
            if col[j] == 0.0:
                continue
            xj = X[:, j]
            wj = w[j]
            rho = xj @ r / N + col[j] * wj
            new = _soft(rho, alpha) / col[j]
            if new != wj:
                r -= (new - wj) * xj
                w[j] = new
                dmax = max(dmax, abs(new - wj))
        if fit_intercept:
            shift = r.mean()
            y0 += shift
            r -= shift
            dmax = max(dmax, abs(shift))
        objs.append(0.5 * (r @ r) / N + alpha * np.abs(w).sum())
        if dmax <= tol:
            if full and _kkt(X, r, w, alpha, N) <= tol:
                converged = True
                break
            full = True
        else:
            full = False
    return w, y0, cycles, np.array(objs), converged


def shadow_collapse(psi, bases, u):
    """Outcome bits of sequential single-qubit measurements (qubit 0 = most significant)."""
    T, n = bases.shape
    bits = np.zeros((T, n), dtype=np.uint8)
    chunk = max(1, min(T, (1 << 22) // psi.shape[0]))
    for start in range(0, T, chunk):
        stop = min(T, start + chunk)
        v = np.broadcast_to(psi, (stop - start, psi.shape[0])).copy()
        for q in range(n):
            half = v.shape[1] // 2
            a, b = v[:, :half], v[:, half:]
            bq = bases[start:stop, q][:, None]
            amp0 = np.where(bq == 2, a, np.where(bq == 0, (a + b) * _SQ2, (a - 1j * b) * _SQ2))
            amp1 = np.where(bq == 2, b, np.where(bq == 0, (a - b) * _SQ2, (a + 1j * b) * _SQ2))
            p0 = (np.abs(amp0) ** 2).sum(axis=1)
            p1 = (np.abs(amp1) ** 2).sum(axis=1)
            bit = u[start:stop, q] * (p0 + p1) >= p0
            bits[start:stop, q] = bit
            v = np.where(bit[:, None], amp1, amp0)
    return bits
