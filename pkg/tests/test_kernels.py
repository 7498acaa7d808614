import os
import subprocess
import sys

import numpy as np
import pytest

from monostereo import kernels
from monostereo.edge import build_carry_plan, edge_mask

BACKENDS = kernels.available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def both(name, *args):
    return [getattr(BACKENDS[b], name)(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])
            for b in ("cython", "python")]


@needs_both
def test_warp_rows_agree(rng):
    for _ in range(30):
        img = rng.random((5, 40, 3))
        disp = rng.random((5, 40)) * rng.integers(1, 30)
        c, p = both("warp_rows", img, disp)
        for x, y in zip(c, p):
            assert np.array_equal(x, y)


@needs_both
def test_carry_fill_agree(rng):
    for _ in range(30):
        img = rng.random((4, 30, 3))
        disp = rng.integers(0, 9, (4, 30)).astype(float)
        out, src, hole = BACKENDS["python"].warp_rows(img, disp)
        plan = build_carry_plan(disp, edge_mask(disp, 1.0), int(rng.integers(1, 6)))
        c, p = both("carry_fill", img, out, src, hole, plan.rows, plan.cols, plan.carried)
        assert np.array_equal(c, p)


@needs_both
def test_fill_rows_agree(rng):
    for _ in range(30):
        img = rng.random((6, 25, 3))
        holes = rng.random((6, 25)) < rng.random()
        c, p = both("fill_rows", img, holes)
        for x, y in zip(c, p):
            assert np.array_equal(x, y)


def test_env_forces_pure_python():
    env = dict(os.environ, MONOSTEREO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from monostereo import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
