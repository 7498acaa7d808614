"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's compute paths.
"""
import math
from fractions import Fraction

import numpy as np


def splat_row(colors, disp):
    """O(W^2) brute-force splat of one row.

    For every target column, scan every source and keep the one with the
    largest disparity (ties: largest source column).  Returns
    (winner_source_index or -1 per target).
    """
    w = len(disp)
    winners = []
    for t in range(w):
        best = -1
        for x in range(w):
            if math.floor(x - disp[x] + 0.5) != t:
                continue
            if best < 0 or (disp[x], x) > (disp[best], best):
                best = x
        winners.append(best)
    return winners


def splat_image(image, disp):
    h, w = disp.shape
    out = np.zeros_like(image)
    src = np.zeros((h, w))
    hole = np.ones((h, w), dtype=bool)
    for r in range(h):
        for t, x in enumerate(splat_row(None, list(disp[r]))):
            if x >= 0:
                out[r, t] = image[r, x]
                src[r, t] = disp[r, x]
                hole[r, t] = False
    return out, src, hole


def loop_stats(values, mask):
    picked = [v for v, m in zip(np.ravel(values), np.ravel(mask)) if m]
    n = len(picked)
    mean = sum(picked) / n
    var = sum((v - mean) ** 2 for v in picked) / n
    return n, mean, var


def loop_metrics(pred, gt, mask):
    """Per-pixel loop; the error sum is exact and rounded once."""
    n = d1 = bad2 = 0
    total = Fraction(0)
    for p, g, m in zip(np.ravel(pred), np.ravel(gt), np.ravel(mask)):
        if not m:
            continue
        e = abs(p - g)
        n += 1
        total += Fraction(float(e))
        d1 += e > 3 and e > 0.05 * g
        bad2 += e > 2
    return float(total) / n, d1 / n, bad2 / n, n


def frozen_dssi_objective(pred, mono, scale, shift, inliers):
    """DSSI objective with alignment and inlier set held fixed."""
    r = (scale * pred + shift - mono)[inliers]
    return float(np.sum(r * r) / r.size)


def central_difference(f, x, eps=1e-4):
    grad = np.zeros_like(x)
    flat = x.ravel()
    g = grad.ravel()
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = f(x)
        flat[i] = old - eps
        fm = f(x)
        flat[i] = old
        g[i] = (fp - fm) / (2 * eps)
    return grad


def normal_equations(pred, mono):
    """Solve the 2x2 least-squares normal equations directly."""
    p = np.asarray(pred, dtype=float)
    m = np.asarray(mono, dtype=float)
    A = np.array([[np.dot(p, p), p.sum()], [p.sum(), p.size]])
    rhs = np.array([np.dot(p, m), m.sum()])
    return np.linalg.solve(A, rhs)
