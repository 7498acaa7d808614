"""Edge-aware carry of background pixels across disparity drops.

Where disparity falls sharply from one column to the next, warping opens a
gap between foreground and background.  A short strip of background pixels
to the right of each such edge is re-warped with the foreground's disparity
so it lands inside that gap, giving the inpainter true background context
next to the object boundary.  Carried pixels only ever fill holes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from monostereo import kernels
from monostereo.core import DimensionError, DisparityField, ParameterError, as_mask
from monostereo.warp import WarpResult, _check_inputs

DEFAULT_STRIP_WIDTH = 3


@dataclass(frozen=True, eq=False)
class EdgeCarryPlan:
    """Background pixels to re-warp: parallel arrays of source row, column and carried disparity."""

    rows: np.ndarray
    cols: np.ndarray
    carried: np.ndarray
    strip_width: int

    def __len__(self):
        return int(self.rows.size)

    @property
    def entries(self):
        return [(int(r), int(c), float(d)) for r, c, d in zip(self.rows, self.cols, self.carried)]

    @classmethod
    def empty(cls, strip_width: int = DEFAULT_STRIP_WIDTH) -> "EdgeCarryPlan":
        return cls(np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0, np.float64), strip_width)


def _values(disp) -> np.ndarray:
    if isinstance(disp, DisparityField):
        return disp.values
    values = np.asarray(disp, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionError(f"disparity must be 2-D, got shape {values.shape}")
    return values


def edge_mask(disp, tau: float) -> np.ndarray:
    """Flag pixels whose disparity exceeds their right neighbour's by more than ``tau``.

    The difference is signed: only drops (foreground to the left of
    background) open holes under the warp.  The last column is never flagged.
    """
    if not np.isfinite(tau) or tau < 0:
        raise ParameterError(f"tau must be a finite non-negative threshold, got {tau!r}")
    values = _values(disp)
    mask = np.zeros(values.shape, dtype=bool)
    mask[:, :-1] = (values[:, :-1] - values[:, 1:]) > tau
    return mask


def build_carry_plan(disp, edge, strip_width: int = DEFAULT_STRIP_WIDTH) -> EdgeCarryPlan:
    if int(strip_width) != strip_width or strip_width < 1:
        raise ParameterError(f"strip_width must be a positive integer, got {strip_width!r}")
    strip_width = int(strip_width)
    values = _values(disp)
    edge = as_mask(edge, values.shape)
    er, ec = np.nonzero(edge)
    offsets = np.arange(1, strip_width + 1)
    rows = np.repeat(er, strip_width)
    cols = (ec[:, None] + offsets[None, :]).ravel()
    carried = np.repeat(values[er, ec], strip_width)
    inside = cols < values.shape[1]
    return EdgeCarryPlan(
        rows[inside].astype(np.intp),
        cols[inside].astype(np.intp),
        carried[inside].astype(np.float64),
        strip_width,
    )


def warp_with_carry(left, disp, plan: EdgeCarryPlan) -> WarpResult:
    """Forward warp, then let carried background pixels fill the remaining holes."""
    image, values = _check_inputs(left, disp)
    h, w = values.shape
    if len(plan) and (plan.rows.min() < 0 or plan.rows.max() >= h or plan.cols.min() < 0 or plan.cols.max() >= w):
        raise DimensionError("carry plan references pixels outside the image")
    impl = kernels.impl
    out, src, hole = impl.warp_rows(image, values)
    if len(plan):
        impl.carry_fill(
            image, out, src, hole,
            np.ascontiguousarray(plan.rows, dtype=np.intp),
            np.ascontiguousarray(plan.cols, dtype=np.intp),
            np.ascontiguousarray(plan.carried, dtype=np.float64),
        )
    return WarpResult(out, hole, DisparityField(src, ~hole))
