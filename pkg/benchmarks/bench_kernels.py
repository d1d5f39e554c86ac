"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--drops 200000] [--repeat 5]

Times the two segmented kernels on block-sized inputs, then a full Monte Carlo
run per backend, and checks that both backends give the same numbers.
"""

import argparse
import time

import numpy as np

from dude_lab import _kernels
from dude_lab import montecarlo as mc
from dude_lab.model import SimulationParams, default_params


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--drops", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    params = default_params()
    block = mc.generate_block(params, SimulationParams(drops=mc.BLOCK_DROPS, seed=args.seed), 0)
    print(f"block of {block.size} drops: {block.macro.shape[0]} macro, {block.small.shape[0]} small, "
          f"{block.interferers.size} interferers")

    xs, ys = block.small[:, 0].copy(), block.small[:, 1].copy()
    for name in ("numpy", "numba"):
        nearest, interf = _kernels.kernels(name)
        nearest(xs, ys, block.small_off)  # compile / warm up
        interf(block.interferers, block.marks, block.fading, block.interferer_off, params.alpha)
        t_n, d = best_of(lambda: nearest(xs, ys, block.small_off), args.repeat)
        t_i, i = best_of(lambda: interf(block.interferers, block.marks, block.fading, block.interferer_off,
                                        params.alpha), args.repeat)
        print(f"{name:>6}: nearest {1e3 * t_n:8.3f} ms   interference {1e3 * t_i:8.3f} ms")

    ref = _kernels.kernels("numpy")[1](block.interferers, block.marks, block.fading, block.interferer_off, 3.0)
    alt = _kernels.kernels("numba")[1](block.interferers, block.marks, block.fading, block.interferer_off, 3.0)
    print(f"max relative kernel difference: {np.max(np.abs(alt / ref - 1)):.2e}")

    sim = SimulationParams(drops=args.drops, seed=args.seed)
    results = {}
    for name in ("numpy", "numba"):
        t0 = time.perf_counter()
        results[name] = mc.run_monte_carlo(params, sim, backend=name)
        print(f"{name:>6}: run_monte_carlo({args.drops} drops) {time.perf_counter() - t0:7.2f} s")
    same_case = np.array_equal(results["numpy"].decoupled.case, results["numba"].decoupled.case)
    sinr_diff = np.max(np.abs(results["numba"].decoupled.sinr / results["numpy"].decoupled.sinr - 1))
    print(f"identical cases: {same_case}, max relative SINR difference: {sinr_diff:.2e}")


if __name__ == "__main__":
    main()
