"""Time the compiled and numpy kernels on a 540x960 frame.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from monostereo import kernels
from monostereo.edge import build_carry_plan, edge_mask

H, W = 540, 960


def scene(seed=0):
    rng = np.random.default_rng(seed)
    image = rng.random((H, W, 3))
    disp = np.tile(np.linspace(10.0, 30.0, W), (H, 1))
    for _ in range(8):
        r, c = rng.integers(0, H - 100), rng.integers(0, W - 200)
        disp[r:r + 100, c:c + 200] = rng.uniform(40, 90)
    return image, disp


def cases(impl, image, disp):
    """Map kernel name -> (prepare, run); only ``run(prepare())`` is timed."""
    out, src, hole = impl.warp_rows(image, disp)
    plan = build_carry_plan(disp, edge_mask(disp, 3.0), 3)
    return {
        "warp": (lambda: None, lambda _: impl.warp_rows(image, disp)),
        "carry": (lambda: (out.copy(), src.copy(), hole.copy()),
                  lambda bufs: impl.carry_fill(image, *bufs, plan.rows, plan.cols, plan.carried)),
        "inpaint": (lambda: None, lambda _: impl.fill_rows(out, hole)),
    }


def best_time(prepare, run, repeat):
    times = []
    for _ in range(repeat):
        state = prepare()
        start = time.perf_counter()
        run(state)
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    image, disp = scene()
    backends = kernels.available_backends()
    results = {name: {k: best_time(*pair, args.repeat) for k, pair in cases(impl, image, disp).items()}
               for name, impl in sorted(backends.items())}
    names = sorted(results)
    print(f"{'kernel':<10}" + "".join(f"{n + ' ms':>14}" for n in names)
          + (f"{'speedup':>10}" if len(names) == 2 else ""))
    for kernel in ("warp", "carry", "inpaint"):
        row = f"{kernel:<10}" + "".join(f"{results[n][kernel] * 1e3:>14.2f}" for n in names)
        if len(names) == 2:
            row += f"{results['python'][kernel] / results['cython'][kernel]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
