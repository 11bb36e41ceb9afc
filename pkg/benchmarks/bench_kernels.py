"""Timing comparison of the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from macroplace.kernels import available


def time_call(fn, *args, repeats=15):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def bench_wa(impls, n_pins, n_nets, label):
    rng = np.random.default_rng(0)
    cuts = np.sort(rng.choice(np.arange(1, n_pins), size=n_nets - 1, replace=False))
    net_start = np.concatenate([[0], cuts, [n_pins]]).astype(np.int64)
    coords = rng.uniform(0.0, 128.0, n_pins)
    rows = []
    for name, mod in impls.items():
        rows.append((f"wa_axis {label}", name, time_call(mod.wa_axis, coords, net_start, 0.5)))
    return rows


def bench_scatter(impls, n_boxes, bins, label):
    rng = np.random.default_rng(1)
    w = rng.uniform(0.1, 3.0, n_boxes)
    h = rng.uniform(0.1, 5.0, n_boxes)
    x = rng.uniform(0, 128 - 3.0, n_boxes)
    y = rng.uniform(0, 256 - 5.0, n_boxes)
    rows = []
    for name, mod in impls.items():
        rows.append(
            (
                f"density_scatter {label}",
                name,
                time_call(mod.density_scatter, x, y, w, h, 128 / bins, 256 / bins, bins, bins),
            )
        )
    return rows


def main():
    impls = available()
    print(f"implementations: {', '.join(impls)}")
    rows = []
    rows += bench_wa(impls, 20_000, 6_000, "20k pins")
    rows += bench_wa(impls, 160_000, 50_000, "160k pins")
    rows += bench_scatter(impls, 5_000, 128, "5k boxes/128b")
    rows += bench_scatter(impls, 100_000, 256, "100k boxes/256b")

    width = max(len(r[0]) for r in rows) + 2
    print(f"\n{'kernel':<{width}}{'impl':<10}{'ms/call':>9}")
    by_case = {}
    for case, name, ms in rows:
        print(f"{case:<{width}}{name:<10}{ms:>9.3f}")
        by_case.setdefault(case, {})[name] = ms
    if "compiled" in impls:
        print("\nspeedup (python / compiled):")
        for case, times in by_case.items():
            print(f"  {case:<{width}}{times['python'] / times['compiled']:>6.2f}x")


if __name__ == "__main__":
    main()
