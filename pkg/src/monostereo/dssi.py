"""Supervision losses for stereo training with sparse and monocular labels.

The dynamic scale- and shift-invariant (DSSI) loss compares a predicted
disparity with a relative monocular pseudo-label.  The prediction is first
aligned to the pseudo-label with a least-squares scale and shift, pixels
whose squared residual is not below a residual quantile are dropped, the
alignment is refitted on the survivors and the loss is the mean squared
residual over them.  The combined objective adds this, weighted by
``beta``, to the masked L1 loss against sparse ground truth.

All losses are means over the selected pixels.  Gradients treat the refitted
alignment and the inlier mask as constants.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from monostereo.core import DegenerateFitError, DimensionError, DisparityField, EmptySelectionError, ParameterError

DEFAULT_Q = 0.8
DEFAULT_BETA = 1.0


@dataclass(frozen=True)
class AffineAlignment:
    scale: float
    shift: float

    def apply(self, values):
        return self.scale * np.asarray(values, dtype=np.float64) + self.shift


@dataclass(frozen=True, eq=False)
class DssiReport:
    loss: float
    alignment_initial: AffineAlignment
    alignment_refined: AffineAlignment
    inlier_mask: np.ndarray
    threshold: float
    inlier_count: int
    fallback: bool = False


@dataclass(frozen=True)
class LossBreakdown:
    sparse: float
    dssi: float
    beta: float
    total: float


def _arrays(*arrays, mask=None):
    out = [np.asarray(a.values if isinstance(a, DisparityField) else a, dtype=np.float64) for a in arrays]
    shape = out[0].shape
    for a in out[1:]:
        if a.shape != shape:
            raise DimensionError(f"shape mismatch: {a.shape} vs {shape}")
    if mask is None:
        mask = np.ones(shape, dtype=bool)
    else:
        mask = np.asarray(mask)
        mask = mask if mask.dtype == np.bool_ else mask != 0
        if mask.shape != shape:
            raise DimensionError(f"mask shape {mask.shape} does not match {shape}")
    return (*out, mask)


def _check_q(q):
    if not (0.0 < q < 1.0):
        raise ParameterError(f"quantile level must be in (0, 1), got {q!r}")


def sparse_loss(pred, gt, valid=None) -> float:
    """Mean absolute error over ``valid`` pixels."""
    pred, gt, valid = _arrays(pred, gt, mask=valid)
    n = np.count_nonzero(valid)
    if n == 0:
        raise EmptySelectionError("valid mask selects no pixels")
    return float(np.abs(gt[valid] - pred[valid]).sum() / n)


def sparse_loss_grad(pred, gt, valid=None) -> np.ndarray:
    """Subgradient of :func:`sparse_loss` (zero where the error is zero)."""
    pred, gt, valid = _arrays(pred, gt, mask=valid)
    n = np.count_nonzero(valid)
    if n == 0:
        raise EmptySelectionError("valid mask selects no pixels")
    return np.where(valid, np.sign(pred - gt) / n, 0.0)


def lstsq_align(pred, mono, mask=None) -> AffineAlignment:
    """Scale and shift minimising ``sum((scale * pred + shift - mono) ** 2)`` over ``mask``."""
    pred, mono, mask = _arrays(pred, mono, mask=mask)
    p = pred[mask]
    m = mono[mask]
    if p.size < 2:
        raise EmptySelectionError(f"alignment needs at least 2 pixels, got {p.size}")
    p_mean = p.mean()
    m_mean = m.mean()
    dp = p - p_mean
    var = np.dot(dp, dp)
    if var == 0.0 or not math.isfinite(var):
        raise DegenerateFitError("prediction is constant over the mask; scale is undetermined")
    scale = np.dot(dp, m - m_mean) / var
    shift = m_mean - scale * p_mean
    return AffineAlignment(float(scale), float(shift))


def squared_residuals(pred, mono, align: AffineAlignment) -> np.ndarray:
    return (align.scale * np.asarray(pred, dtype=np.float64) + align.shift - np.asarray(mono, dtype=np.float64)) ** 2


def nearest_rank(values, q: float) -> float:
    """The ``ceil(q * n)``-th smallest of ``values``."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptySelectionError("quantile of an empty selection")
    # guard against q * n landing a hair above an integer
    k = max(1, math.ceil(q * values.size - 1e-9))
    return float(np.partition(values, k - 1)[k - 1])


def outlier_mask(pred, mono, align: AffineAlignment, mask=None, q: float = DEFAULT_Q):
    """Inlier mask and threshold: keep pixels whose squared residual is below the q-quantile.

    Returns ``(inliers, threshold)``.  The comparison is strict, so the pixel
    sitting at the quantile itself is dropped.
    """
    _check_q(q)
    pred, mono, mask = _arrays(pred, mono, mask=mask)
    if not mask.any():
        raise EmptySelectionError("mask selects no pixels")
    res = squared_residuals(pred, mono, align)
    threshold = nearest_rank(res[mask], q)
    return mask & (res < threshold), threshold


def _trimmed_fit(pred, mono, mask, q, iterations):
    if iterations < 1:
        raise ParameterError(f"iterations must be >= 1, got {iterations}")
    initial = lstsq_align(pred, mono, mask)
    align = initial
    fallback = False
    for _ in range(iterations):
        inliers, threshold = outlier_mask(pred, mono, align, mask, q)
        if np.count_nonzero(inliers) < 2:
            warnings.warn(
                "fewer than 2 pixels strictly below the residual quantile; using the full mask",
                RuntimeWarning,
            )
            inliers = mask.copy()
            fallback = True
        align = lstsq_align(pred, mono, inliers)
        if fallback:
            break
    return initial, align, inliers, threshold, fallback


def dssi_loss(pred, mono, mask=None, q: float = DEFAULT_Q, iterations: int = 1) -> DssiReport:
    """Trimmed scale/shift-invariant MSE between ``pred`` and ``mono``.

    ``iterations`` sets how many trim-and-refit rounds run; each round
    re-thresholds the full mask using the latest alignment.
    """
    _check_q(q)
    pred, mono, mask = _arrays(pred, mono, mask=mask)
    initial, refined, inliers, threshold, fallback = _trimmed_fit(pred, mono, mask, q, iterations)
    res = squared_residuals(pred, mono, refined)[inliers]
    loss = float(res.sum() / res.size)
    return DssiReport(loss, initial, refined, inliers, threshold, int(res.size), fallback)


def dssi_loss_grad(pred, mono, mask=None, q: float = DEFAULT_Q, iterations: int = 1, report: DssiReport | None = None) -> np.ndarray:
    """Gradient of the DSSI loss w.r.t. ``pred`` with alignment and inliers frozen.

    Pass a ``report`` from :func:`dssi_loss` to skip refitting.
    """
    pred, mono, mask = _arrays(pred, mono, mask=mask)
    if report is None:
        report = dssi_loss(pred, mono, mask, q, iterations)
    a = report.alignment_refined.scale
    b = report.alignment_refined.shift
    inliers = report.inlier_mask
    return np.where(inliers, (2.0 / report.inlier_count) * a * (a * pred + b - mono), 0.0)


def combined_loss(pred, gt, valid, mono, mono_mask=None, q: float = DEFAULT_Q, beta: float = DEFAULT_BETA) -> LossBreakdown:
    if not math.isfinite(beta) or beta < 0:
        raise ParameterError(f"beta must be finite and non-negative, got {beta!r}")
    sparse = sparse_loss(pred, gt, valid)
    dssi = dssi_loss(pred, mono, mono_mask, q).loss
    return LossBreakdown(sparse, dssi, float(beta), sparse + beta * dssi)


def combined_loss_grad(pred, gt, valid, mono, mono_mask=None, q: float = DEFAULT_Q, beta: float = DEFAULT_BETA) -> np.ndarray:
    grad = sparse_loss_grad(pred, gt, valid)
    if beta:
        grad = grad + beta * dssi_loss_grad(pred, mono, mono_mask, q)
    return grad

