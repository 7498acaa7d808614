"""Vectorised numpy versions of the compiled kernels in ``_ckernels``.

Same signatures, same outputs bit for bit.
"""
import numpy as np


def _last_per_group(keys):
    """Index of the last element of each run in a sorted key array."""
    if keys.size == 0:
        return np.empty(0, dtype=np.intp)
    is_last = np.ones(keys.size, dtype=bool)
    is_last[:-1] = keys[:-1] != keys[1:]
    return np.flatnonzero(is_last)


def warp_rows(image, disp):
    image = np.asarray(image, dtype=np.float64)
    disp = np.asarray(disp, dtype=np.float64)
    h, w = disp.shape
    rows, cols = np.indices((h, w))
    target = np.floor(cols - disp + 0.5)
    keep = (target >= 0) & (target < w)
    r, x, d, t = rows[keep], cols[keep], disp[keep], target[keep].astype(np.intp)
    flat = r * w + t
    order = np.lexsort((x, d, flat))
    win = order[_last_per_group(flat[order])]

    out = np.zeros(image.shape, dtype=np.float64)
    src = np.zeros((h, w), dtype=np.float64)
    hole = np.ones((h, w), dtype=bool)
    out[r[win], t[win]] = image[r[win], x[win]]
    src[r[win], t[win]] = d[win]
    hole[r[win], t[win]] = False
    return out, src, hole


def carry_fill(image, out, src, hole, rows, cols, carried):
    h, w = hole.shape
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    carried = np.asarray(carried, dtype=np.float64)
    target = np.floor(cols - carried + 0.5)
    keep = (target >= 0) & (target < w)
    r, x, d, t = rows[keep], cols[keep], carried[keep], target[keep].astype(np.intp)
    into_hole = hole[r, t]
    r, x, d, t = r[into_hole], x[into_hole], d[into_hole], t[into_hole]
    flat = r * w + t
    order = np.lexsort((x, d, flat))
    win = order[_last_per_group(flat[order])]

    filled = np.zeros((h, w), dtype=bool)
    out[r[win], t[win]] = image[r[win], x[win]]
    src[r[win], t[win]] = d[win]
    hole[r[win], t[win]] = False
    filled[r[win], t[win]] = True
    return filled


def fill_rows(image, holes):
    image = np.asarray(image, dtype=np.float64)
    holes = np.asarray(holes, dtype=bool)
    h, w = holes.shape
    cols = np.broadcast_to(np.arange(w), (h, w))
    right = np.where(holes, w, cols)
    right = np.minimum.accumulate(right[:, ::-1], axis=1)[:, ::-1]
    left = np.maximum.accumulate(np.where(holes, -1, cols), axis=1)
    nearest = np.where(right < w, right, left)
    empty = ~(~holes).any(axis=1)

    out = image.copy()
    fill = holes & ~empty[:, None]
    r, x = np.nonzero(fill)
    out[r, x] = image[r, nearest[r, x]]
    return out, empty
