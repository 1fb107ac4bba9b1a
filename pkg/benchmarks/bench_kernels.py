"""Compare the numba and numpy backends of the hot kernels.

Usage: python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Timings exclude the first (compiling) call.  Each row also reports the
largest difference between the two backends' outputs.  The
``simulate_quality`` rows include the exactly rounded reduction, which
costs about as much as the numba kernel itself.
"""

import argparse
import time

import numpy as np

from fraccache import kernels
from fraccache.channel_model import ChannelParams
from fraccache.content_model import ContentLibrary
from fraccache.distance import Fixed, TabulatedPdf, UniformDisk
from fraccache.monte_carlo import _trial_values, simulate_quality
from fraccache.policy_optimizer import waterfill


def best_of(fn, repeat):
    fn()  # warm-up / JIT compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_monte_carlo(n_trials, repeat):
    lib = ContentLibrary.zipf(20, 1.0)
    params = ChannelParams.from_db(r0_m=1.75)
    laws = [Fixed(40.0), UniformDisk(60.0), TabulatedPdf([5, 20, 40, 70], [0, 3, 1, 0.5])]
    for law in laws:
        policy = waterfill(lib, params, law)
        kern = {
            b: best_of(lambda b=b: _trial_values(policy, law, lib, params, 1, 0, n_trials, b), repeat)
            for b in ("numpy", "numba")
        }
        diff = float(np.max(np.abs(kern["numpy"][1] - kern["numba"][1])))
        report(f"trial kernel {law.kind} n={n_trials:.0e}", kern, diff)
        row = {}
        for backend in ("numpy", "numba"):
            row[backend] = best_of(
                lambda: simulate_quality(policy, law, lib, params, n_trials, seed=1, backend=backend), repeat
            )
        diff = abs(row["numpy"][1].mean - row["numba"][1].mean)
        report(f"simulate_quality {law.kind} n={n_trials:.0e}", row, diff)


def bench_gamma(repeat):
    s_values = np.array([0.5, 2 / 3, 1.0, 1.5])
    t_values = np.logspace(-6, 2, 5000)

    def run(backend):
        return np.array([kernels.lower_gamma(s, t, backend) for s in s_values for t in t_values])

    row = {b: best_of(lambda b=b: run(b), repeat) for b in ("numpy", "numba")}
    diff = float(np.max(np.abs(row["numpy"][1] - row["numba"][1]) / row["numpy"][1]))
    report(f"lower_gamma x{s_values.size * t_values.size}", row, diff, rel=True)


def report(name, row, diff, rel=False):
    t_np, t_nb = row["numpy"][0], row["numba"][0]
    kind = "rel" if rel else "abs"
    print(f"{name:<38} numpy {t_np:8.4f}s  numba {t_nb:8.4f}s  speedup {t_np / t_nb:6.1f}x  max {kind} diff {diff:.1e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=float, default=1e6)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not kernels.NUMBA_ENABLED:
        raise SystemExit("numba backend disabled (FRACCACHE_DISABLE_NUMBA is set or numba is missing)")
    bench_monte_carlo(int(args.trials), args.repeat)
    bench_gamma(args.repeat)


if __name__ == "__main__":
    main()
