"""Compare the compiled kernel backend against the pure-numpy fallback.

Runs each hot kernel on representative workloads, checks that the two
backends agree (bit-exact for the integer kernels and the AR(1) filter,
~1e-15 relative for the weighted error kernel), and reports best-of-N
wall times with the speedup ratio.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats N] [--scale {desk,tiny}]
"""

import argparse
import time

import numpy as np

from climashift._kernels import _fallback

try:
    from climashift._kernels import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(scale):
    rng = np.random.default_rng(0)
    if scale == "desk":
        n_draws = 2_000_000
        ar_shape = (3120, 2, 36, 24)
        blob = rng.bytes(8 * 1024 * 1024)
        n_fc, n_lat, n_lon = (512, 36, 24)
    else:
        n_draws = 100_000
        ar_shape = (132, 2, 6, 4)
        blob = rng.bytes(256 * 1024)
        n_fc, n_lat, n_lon = (64, 6, 4)
    ar_x = rng.normal(size=ar_shape)
    pred = rng.normal(size=(n_fc, n_lat, n_lon))
    truth = rng.normal(size=(n_fc, n_lat, n_lon))
    w = np.cos(np.deg2rad(np.linspace(-80.0, 80.0, n_lat)))
    w /= w.mean()
    return [
        ("pcg32_fill", f"{n_draws:,} draws",
         lambda k: k.pcg32_fill(n_draws, 0x853C49E6748FEA9B, 0xDA3E39CB94B95BDB)),
        ("ar1_filter", f"shape {ar_shape}",
         lambda k: k.ar1_filter(ar_x, 0.5)),
        ("fnv1a64", f"{len(blob) // 1024:,} KiB",
         lambda k: k.fnv1a64(blob)),
        ("weighted_sqerr", f"{n_fc} forecasts {n_lat}x{n_lon}",
         lambda k: k.weighted_sqerr(pred, truth, w)),
    ]


def check_agreement(run):
    a = run(_fallback)
    b = run(_speedups)
    if isinstance(a, tuple):  # pcg32_fill -> (array, state)
        assert (a[0] == b[0]).all() and a[1] == b[1]
        return "bit-exact"
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if (a == b).all():
        return "bit-exact"
    rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
    assert rel < 1e-12, f"backends disagree ({rel:.2e} relative)"
    return f"rel {rel:.1e}"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--scale", choices=("desk", "tiny"), default="desk")
    args = parser.parse_args(argv)

    if _speedups is None:
        print("compiled backend not available; nothing to compare")
        print("(build it with: pip install -e . --no-build-isolation)")
        return 1

    print(f"{'kernel':<16} {'workload':<28} {'fallback':>10} "
          f"{'compiled':>10} {'speedup':>8}  agreement")
    for name, desc, run in workloads(args.scale):
        agreement = check_agreement(run)
        t_fb = best_of(lambda: run(_fallback), args.repeats)
        t_ext = best_of(lambda: run(_speedups), args.repeats)
        print(f"{name:<16} {desc:<28} {t_fb * 1e3:>8.2f}ms "
              f"{t_ext * 1e3:>8.2f}ms {t_fb / t_ext:>7.1f}x  {agreement}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
