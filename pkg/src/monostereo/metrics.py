"""Stereo evaluation metrics over valid ground-truth pixels."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from monostereo.core import DimensionError, DisparityField, EmptySelectionError


@dataclass(frozen=True)
class EvalReport:
    epe: float
    d1: float
    bad2: float
    evaluated_pixels: int

    def as_dict(self):
        return asdict(self)


def evaluate(pred, gt, valid=None) -> EvalReport:
    """End-point error, KITTI D1 and >2px fraction.

    D1 counts pixels whose error exceeds both 3 px and 5% of the ground
    truth; >2px counts errors strictly above 2 px.  The error sum is
    correctly rounded, so the result does not depend on pixel order.  When ``gt`` is a
    :class:`DisparityField` its validity mask is always applied.
    """
    gt_valid = None
    if isinstance(gt, DisparityField):
        gt_valid = gt.valid
        gt = gt.values
    if isinstance(pred, DisparityField):
        pred = pred.values
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction shape {pred.shape} does not match ground truth {gt.shape}")
    mask = np.ones(gt.shape, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    if mask.shape != gt.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match {gt.shape}")
    if gt_valid is not None:
        mask = mask & gt_valid
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise EmptySelectionError("no pixels to evaluate")
    err = np.abs(pred[mask] - gt[mask])
    d1 = (err > 3.0) & (err > 0.05 * gt[mask])
    return EvalReport(
        epe=math.fsum(err.tolist()) / n,
        d1=float(np.count_nonzero(d1) / n),
        bad2=float(np.count_nonzero(err > 2.0) / n),
        evaluated_pixels=n,
    )
