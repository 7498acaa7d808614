# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pixel loops. Must stay bit-identical to ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def warp_rows(const double[:, :, ::1] image, const double[:, ::1] disp):
    """Z-buffered forward splat along rows; target column = floor(x - d + 0.5)."""
    cdef Py_ssize_t h = disp.shape[0], w = disp.shape[1], c = image.shape[2]
    cdef Py_ssize_t r, x, t, k
    cdef double d
    out_np = np.zeros((h, w, c), dtype=np.float64)
    src_np = np.zeros((h, w), dtype=np.float64)
    hole_np = np.ones((h, w), dtype=np.uint8)
    winner_np = np.full(w, -1, dtype=np.intp)
    cdef double[:, :, ::1] out = out_np
    cdef double[:, ::1] src = src_np
    cdef unsigned char[:, ::1] hole = hole_np
    cdef Py_ssize_t[::1] winner = winner_np
    with nogil:
        for r in range(h):
            for t in range(w):
                winner[t] = -1
            for x in range(w):
                d = disp[r, x]
                t = <Py_ssize_t>floor(<double>x - d + 0.5)
                if t < 0 or t >= w:
                    continue
                # ascending x, so >= keeps the larger column on ties
                if winner[t] < 0 or d >= src[r, t]:
                    winner[t] = x
                    src[r, t] = d
            for t in range(w):
                x = winner[t]
                if x >= 0:
                    hole[r, t] = 0
                    for k in range(c):
                        out[r, t, k] = image[r, x, k]
    return out_np, src_np, hole_np.view(np.bool_)


def carry_fill(image, out, src, hole, rows, cols, carried):
    """Write carried background pixels into hole targets, in place.

    Competing entries resolve by (carried disparity, source column), largest wins.
    Returns a mask of the targets that were filled.
    """
    return _carry_fill(image, out, src, hole.view(np.uint8), rows, cols, carried).view(np.bool_)


def _carry_fill(const double[:, :, ::1] image, double[:, :, ::1] out,
               double[:, ::1] src, unsigned char[:, ::1] hole,
               const Py_ssize_t[::1] rows, const Py_ssize_t[::1] cols,
               const double[::1] carried):
    cdef Py_ssize_t h = out.shape[0], w = out.shape[1], c = out.shape[2]
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t i, r, x, t, k
    cdef double d
    # winner index + 1 per target; 0 = none (zeroed allocation stays cheap for sparse plans)
    best_np = np.zeros((h, w), dtype=np.intp)
    filled_np = np.zeros((h, w), dtype=np.uint8)
    cdef Py_ssize_t[:, ::1] best = best_np
    cdef unsigned char[:, ::1] filled = filled_np
    with nogil:
        for i in range(n):
            r = rows[i]
            x = cols[i]
            d = carried[i]
            t = <Py_ssize_t>floor(<double>x - d + 0.5)
            if t < 0 or t >= w or not hole[r, t]:
                continue
            k = best[r, t] - 1
            if k < 0 or d > carried[k] or (d == carried[k] and x >= cols[k]):
                best[r, t] = i + 1
        for i in range(n):
            r = rows[i]
            x = cols[i]
            t = <Py_ssize_t>floor(<double>x - carried[i] + 0.5)
            if t < 0 or t >= w or best[r, t] != i + 1:
                continue
            for k in range(c):
                out[r, t, k] = image[r, x, k]
            src[r, t] = carried[i]
            hole[r, t] = 0
            filled[r, t] = 1
    return filled_np


def fill_rows(image, holes):
    out, empty = _fill_rows(image, np.ascontiguousarray(holes, dtype=np.bool_).view(np.uint8))
    return out, empty.view(np.bool_)


def _fill_rows(const double[:, :, ::1] image, const unsigned char[:, ::1] holes):
    """Copy into each hole the nearest known pixel to its right, else to its left.

    Returns the filled image and a per-row flag for rows with no known pixel.
    """
    cdef Py_ssize_t h = image.shape[0], w = image.shape[1], c = image.shape[2]
    cdef Py_ssize_t r, x, k, nxt, prv
    out_np = np.array(image, dtype=np.float64, copy=True)
    empty_np = np.zeros(h, dtype=np.uint8)
    nearest_np = np.empty(w, dtype=np.intp)
    cdef double[:, :, ::1] out = out_np
    cdef unsigned char[::1] empty = empty_np
    cdef Py_ssize_t[::1] nearest = nearest_np
    with nogil:
        for r in range(h):
            nxt = -1
            for x in range(w - 1, -1, -1):
                if not holes[r, x]:
                    nxt = x
                nearest[x] = nxt
            prv = -1
            for x in range(w):
                if not holes[r, x]:
                    prv = x
                elif nearest[x] < 0:
                    nearest[x] = prv
            if nxt < 0:
                empty[r] = 1
                continue
            for x in range(w):
                if holes[r, x]:
                    for k in range(c):
                        out[r, x, k] = image[r, nearest[x], k]
    return out_np, empty_np
