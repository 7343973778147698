#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Run after an editable install::

    python benchmarks/compare_backends.py [--replicas 4000]

Both backends draw identical uniform streams, so the timing comparison
is apples to apples and the outputs are asserted equal along the way.
"""

import argparse
import time

import numpy as np

from cutoffsim import ModelSpec, Family, build_model
from cutoffsim.backends import available_backends


def _workloads(replicas):
    coupon = build_model(ModelSpec(Family.COUPON_COLLECTOR, 200))
    target = np.zeros(201, dtype=bool)
    target[0] = True
    diff = build_model(ModelSpec(Family.PARTIAL_DIFFUSIVE, 4000, {"eps": 0.4}))
    diff_cdf = np.cumsum(diff.stationary())
    mag = build_model(ModelSpec(Family.ISING_MAGNETIZATION, 400, {"beta": 0.5}))
    mag_cdf = np.cumsum(mag.stationary())
    cyl = build_model(ModelSpec(Family.CYLINDER_WALK, 75,
                                {"q": 0.7, "r": 0.75, "l": 15, "m": 5}))
    height, _ = cyl.lump()
    layer_cdf = np.cumsum(height.stationary())
    x = min(cyl.q / 4, (1 - cyl.rr) / 2)
    b0 = cyl.q / 2 - 2 * x
    bounds = (b0, b0 + x, b0 + 2 * x, b0 + 3 * x, b0 + 4 * x,
              b0 + 4 * x + (cyl.rr / 2 - x),
              b0 + 4 * x + (cyl.rr / 2 - x) + ((1 - cyl.rr) / 2 - x),
              cyl.q / 2, 0.5 + cyl.rr / 2)
    return [
        ("bd_hit/coupon-200",
         lambda k: k.bd_hit(coupon.p, coupon.q, 200, target.view(np.uint8),
                            10**8, 7, replicas)),
        ("independent/diffusive-4000",
         lambda k: k.bd_independent_coupling(diff.p, diff.q, diff_cdf,
                                             diff.diffusive_cap, 10**8, 7,
                                             replicas)),
        ("sandwich/ising-400",
         lambda k: k.bd_sandwich(mag.p, mag.q, mag_cdf, 200, 214, 223,
                                 177, 223, 10**8, 7, replicas)),
        ("cylinder/l15-m5",
         lambda k: k.cylinder_coupling(15, 5, 0.7, 0.75, layer_cdf, 0,
                                       bounds, 10**8, 7, replicas)),
        ("tiar/n200",
         lambda k: k.tiar_sim(200, np.array([4, 5], dtype=np.int64),
                              np.array([4], dtype=np.int64), 10**7, 7,
                              max(replicas // 4, 1))),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicas", type=int, default=4000)
    args = ap.parse_args()
    backends = available_backends()
    print(f"backends: {', '.join(backends)}   replicas={args.replicas}")
    header = f"{'kernel':<30}" + "".join(f"{name:>12}" for name in backends)
    print(header)
    print("-" * len(header))
    for label, run in _workloads(args.replicas):
        times = {}
        outputs = {}
        for name, mod in backends.items():
            t0 = time.perf_counter()
            outputs[name] = run(mod)
            times[name] = time.perf_counter() - t0
        if len(outputs) == 2:
            a, b = outputs.values()
            assert all(np.array_equal(x, y) for x, y in zip(a, b)), label
        row = f"{label:<30}" + "".join(f"{times[n]:>11.3f}s" for n in backends)
        if "native" in times and "python" in times:
            row += f"   x{times['python'] / times['native']:.1f}"
        print(row)


if __name__ == "__main__":
    main()
