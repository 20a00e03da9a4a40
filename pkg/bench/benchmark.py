"""Compare the numba kernel lane against the pure-numpy fallback.

Times the three hot paths on representative workloads:
  * adaptive integration of the 29x29 example to t=10,
  * batched Sturm eigensolve of a recorded trajectory,
  * dense symmetric integration of a random 8x8 matrix.

Run:  python bench/benchmark.py [--repeat N]
"""

import argparse
import time

import numpy as np

from kvmflow import kernels

EX3 = np.array([
    -6.0, 7.0, -8.0, 2.0, -13.0, 7.0, -12.0, 7.0, -2.0, 9.0, 2.0, -4.0, 2.0,
    4.0, 6.0, -15.0, -7.0, 11.0, -7.0, 9.0, 9.0, 15.0, 1.0, 5.0, -3.0, 11.0,
    -1.0, -3.0,
])


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    eq_eps = 1e-10 * (1 + float(np.sum(EX3 * EX3)))
    int_args = (EX3, 10.0, 1e-3, False, 1e-10, 1e-10, eq_eps, 1e-13, 1, 10_000)

    states = kernels._integrate_offdiag_impl(*int_args)[1][:1200]
    states = np.ascontiguousarray(states)
    sturm_args = (np.zeros(EX3.size + 1), states, 1e-10, 128)

    rng = np.random.default_rng(0)
    H = rng.normal(size=(8, 8))
    H = 0.5 * (H + H.T)
    dense_args = (H, 2.0, 1e-3, False, 1e-10, 1e-10, 0.0, 1e-16, 1, 10_000)

    return [
        ("integrate 29x29 to t=10",
         kernels._integrate_offdiag_impl,
         getattr(kernels, "_integrate_offdiag_jit", None), int_args),
        (f"sturm eigensolve {states.shape[0]}x{EX3.size + 1}",
         kernels._sturm_batch_numpy,
         getattr(kernels, "_sturm_batch_jit", None), sturm_args),
        ("dense integrate 8x8 to t=2",
         kernels._integrate_dense_impl,
         getattr(kernels, "_integrate_dense_jit", None), dense_args),
    ]


def main(repeat=3):
    print(f"active lane: {kernels.lane()} (numba available: {kernels.HAVE_NUMBA})")
    rows = []
    for name, py_fn, jit_fn, args in workloads():
        t_py = _time(lambda: py_fn(*args), repeat)
        if jit_fn is not None:
            jit_fn(*args)  # compile outside the timer
            t_jit = _time(lambda: jit_fn(*args), repeat)
            rows.append((name, t_py, t_jit, t_py / t_jit))
        else:
            rows.append((name, t_py, None, None))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name, t_py, t_jit, speedup in rows:
        if t_jit is None:
            print(f"{name:<{width}}  {t_py * 1e3:>8.2f}ms  {'-':>10}  {'-':>8}")
        else:
            print(f"{name:<{width}}  {t_py * 1e3:>8.2f}ms  {t_jit * 1e3:>8.2f}ms"
                  f"  {speedup:>7.1f}x")
    return rows


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    main(parser.parse_args().repeat)
