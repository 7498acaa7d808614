"""Raster containers, mask algebra and masked statistics.

Images are ``(H, W, 3)`` float64 arrays in ``[0, 1]``, masks are ``(H, W)``
bool arrays and disparity lives in :class:`DisparityField`, which pairs the
values with a validity mask.  Invalid pixels always hold ``0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MonoStereoError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(MonoStereoError, ValueError):
    pass


class ParameterError(MonoStereoError, ValueError):
    pass


class EmptySelectionError(MonoStereoError, ValueError):
    pass


class DegenerateFitError(MonoStereoError, ArithmeticError):
    pass


class FormatError(MonoStereoError, ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_image(data) -> np.ndarray:
    """Validate and return a read-only ``(H, W, 3)`` float64 image."""
    img = np.array(data, dtype=np.float64, copy=True)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min(initial=0.0) < 0.0 or img.max(initial=0.0) > 1.0:
        raise ParameterError("image values must be finite and within [0, 1]")
    return _frozen(img)


def as_mask(data, shape: tuple[int, int] | None = None) -> np.ndarray:
    mask = np.asarray(data)
    if mask.dtype != np.bool_:
        mask = mask != 0
    if mask.ndim != 2:
        raise DimensionError(f"expected a 2-D mask, got shape {mask.shape}")
    if shape is not None and mask.shape != tuple(shape):
        raise DimensionError(f"mask shape {mask.shape} does not match {tuple(shape)}")
    return mask


@dataclass(frozen=True, eq=False)
class DisparityField:
    """Per-pixel horizontal displacement with a validity mask.

    ``values`` is zero wherever ``valid`` is False.  A ``relative`` field
    additionally stays within ``[0, 1]``.
    """

    values: np.ndarray
    valid: np.ndarray
    relative: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DimensionError(f"disparity must be 2-D, got shape {values.shape}")
        valid = np.array(as_mask(self.valid, values.shape), copy=True)
        if not np.all(np.isfinite(values[valid])):
            raise ParameterError("valid disparity values must be finite")
        values[~valid] = 0.0
        if self.relative and valid.any():
            v = values[valid]
            if v.min() < 0.0 or v.max() > 1.0:
                raise ParameterError("relative disparity must lie within [0, 1]")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "valid", _frozen(valid))

    @classmethod
    def dense(cls, values, relative: bool = False) -> "DisparityField":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool), relative=relative)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def is_dense(self) -> bool:
        return bool(self.valid.all())


def popcount(mask) -> int:
    return int(np.count_nonzero(mask))


def mask_and(a, b) -> np.ndarray:
    a = as_mask(a)
    b = as_mask(b)
    if a.shape != b.shape:
        raise DimensionError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return np.logical_and(a, b)


def masked_stats(values, mask) -> tuple[int, float, float]:
    """Count, mean and population variance of ``values`` over ``mask``.

    ``values`` may be a :class:`DisparityField`, in which case ``mask`` must
    lie inside its valid region.
    """
    if isinstance(values, DisparityField):
        mask = as_mask(mask, values.shape)
        if np.any(mask & ~values.valid):
            raise ParameterError("mask selects pixels outside the field's valid region")
        values = values.values
    values = np.asarray(values, dtype=np.float64)
    mask = as_mask(mask, values.shape) if values.ndim == 2 else np.asarray(mask, dtype=bool)
    if mask.shape != values.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match {values.shape}")
    selected = values[mask]
    if selected.size == 0:
        raise EmptySelectionError("mask selects no pixels")
    mean = selected.mean()
    var = np.mean((selected - mean) ** 2)
    return int(selected.size), float(mean), float(var)
