"""Forward warping of a left view into a synthetic right view.

A left pixel at column ``x`` with disparity ``d`` lands on right-view column
``round(x - d)`` in the same row.  When several sources land on one target
the larger disparity (the nearer surface) wins; equal disparities keep the
source further right.  Targets nobody lands on are reported as holes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from monostereo import kernels
from monostereo.core import DimensionError, DisparityField, ParameterError, as_image


@dataclass(frozen=True, eq=False)
class WarpResult:
    right_image: np.ndarray
    hole_mask: np.ndarray
    source_disparity: DisparityField


def scale_disparity(rel, alpha: float):
    """Convert relative disparity in ``[0, 1]`` to pixels by multiplying with ``alpha``.

    Accepts a :class:`DisparityField` (returned with the same valid mask) or
    a plain array.
    """
    if not (isinstance(alpha, (int, float, np.floating, np.integer)) and math.isfinite(alpha) and alpha > 0):
        raise ParameterError(f"alpha must be a positive finite number, got {alpha!r}")
    if isinstance(rel, DisparityField):
        if not rel.relative:
            rel = DisparityField(rel.values, rel.valid, relative=True)
        return DisparityField(rel.values * float(alpha), rel.valid)
    values = np.asarray(rel, dtype=np.float64)
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ParameterError("relative disparity must lie within [0, 1]")
    return values * float(alpha)


def sample_alpha(seed, d_min: float, d_max: float) -> float:
    """Draw the disparity scale uniformly from ``[d_min, d_max]``, reproducibly per seed."""
    if not (math.isfinite(d_min) and math.isfinite(d_max)) or d_min <= 0:
        raise ParameterError(f"need 0 < d_min <= d_max, got d_min={d_min}, d_max={d_max}")
    if d_min > d_max:
        raise ParameterError(f"d_min ({d_min}) exceeds d_max ({d_max})")
    if d_min == d_max:
        return float(d_min)
    rng = np.random.default_rng(seed)
    return float(rng.uniform(d_min, d_max))


def _dense_values(disp) -> np.ndarray:
    if isinstance(disp, DisparityField):
        if not disp.is_dense:
            raise ParameterError("forward warping needs a dense disparity field")
        return np.ascontiguousarray(disp.values)
    return np.ascontiguousarray(disp, dtype=np.float64)


def _check_inputs(left, disp):
    image = np.ascontiguousarray(as_image(left))
    values = _dense_values(disp)
    if values.ndim != 2 or values.shape != image.shape[:2]:
        raise DimensionError(f"disparity shape {values.shape} does not match image {image.shape[:2]}")
    if not np.all(np.isfinite(values)):
        raise ParameterError("disparity must be finite")
    if values.size and values.min() < 0:
        raise ParameterError("disparity must be non-negative")
    return image, values


def forward_warp(left, disp) -> WarpResult:
    image, values = _check_inputs(left, disp)
    out, src, hole = kernels.impl.warp_rows(image, values)
    return WarpResult(out, hole, DisparityField(src, ~hole))
