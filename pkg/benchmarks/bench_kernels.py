"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from lrlearn._backend import load


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def lasso_case(seed=0, N=200, m=800):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, m))
    w = np.zeros(m)
    w[rng.choice(m, 20, replace=False)] = rng.normal(size=20)
    return X, X @ w + 0.3


def shadow_case(seed=0, n=10, T=20_000):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    psi /= np.linalg.norm(psi)
    return psi, rng.integers(0, 3, size=(T, n), dtype=np.uint8), rng.random((T, n))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    py, _ = load("python")
    try:
        cy, _ = load("cython")
    except ImportError:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return
    X, y = lasso_case()
    psi, bases, u = shadow_case()
    cases = {
        "cd_lasso": lambda k: k.cd_lasso(X, y, 0.01, np.zeros(X.shape[1]), 0.0, 1e-8, 10_000, True),
        "shadow_collapse": lambda k: k.shadow_collapse(psi, bases, u),
    }
    print(f"{'kernel':<16}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  agree")
    for name, call in cases.items():
        tp, op = best_of(lambda: call(py), args.repeat)
        tc, oc = best_of(lambda: call(cy), args.repeat)
        if name == "cd_lasso":
            agree = float(np.max(np.abs(op[0] - oc[0])))
        else:
            agree = float(np.mean(op != oc))
        print(f"{name:<16}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}  {agree:.1e}")


if __name__ == "__main__":
    main()
