import numpy as np
import pytest

from monostereo.core import DimensionError, DisparityField, EmptySelectionError
from monostereo.metrics import evaluate
from oracles import loop_metrics


def test_identity(rng):
    gt = rng.random((4, 4)) * 50
    r = evaluate(gt, gt, np.ones((4, 4), bool))
    assert (r.epe, r.d1, r.bad2, r.evaluated_pixels) == (0.0, 0.0, 0.0, 16)


def test_hand_example():
    r = evaluate(np.array([[1.0, 2], [3, 4]]), np.array([[1.0, 1], [5, 4]]), np.ones((2, 2), bool))
    assert (r.epe, r.bad2, r.d1) == (0.75, 0.0, 0.0)


def test_single_large_error():
    r = evaluate(np.array([[10.0]]), np.array([[100.0]]))
    assert (r.epe, r.d1, r.bad2) == (90.0, 1.0, 1.0)


def test_d1_needs_both_conditions():
    # error 4 > 3 but < 5% of 100
    r = evaluate(np.array([[104.0]]), np.array([[100.0]]))
    assert r.d1 == 0.0 and r.bad2 == 1.0


def test_field_mask_applied():
    gt = DisparityField(np.array([[1.0, 50.0]]), np.array([[True, False]]))
    r = evaluate(np.array([[1.0, 0.0]]), gt)
    assert r.evaluated_pixels == 1 and r.epe == 0.0


def test_matches_loop(rng):
    for _ in range(100):
        gt = rng.random((8, 8)) * 80
        pred = gt + rng.normal(size=(8, 8)) * 4
        mask = rng.random((8, 8)) > 0.3
        if not mask.any():
            continue
        r = evaluate(pred, gt, mask)
        epe, d1, bad2, n = loop_metrics(pred, gt, mask)
        assert r.evaluated_pixels == n
        assert r.d1 == d1 and r.bad2 == bad2
        assert r.epe == epe


def test_permutation_invariant(rng):
    gt = rng.random(64) * 40
    pred = gt + rng.normal(size=64) * 5
    perm = rng.permutation(64)
    a = evaluate(pred.reshape(8, 8), gt.reshape(8, 8))
    b = evaluate(pred[perm].reshape(8, 8), gt[perm].reshape(8, 8))
    assert (a.d1, a.bad2, a.evaluated_pixels) == (b.d1, b.bad2, b.evaluated_pixels)
    assert a.epe == b.epe


def test_monotone_under_error_inflation(rng):
    gt = rng.random((8, 8)) * 40 + 1
    pred = gt + rng.normal(size=(8, 8)) * 3
    a = evaluate(pred, gt)
    b = evaluate(gt + (pred - gt) * 1.7, gt)
    assert b.d1 >= a.d1 and b.bad2 >= a.bad2


def test_errors():
    with pytest.raises(EmptySelectionError):
        evaluate(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2), bool))
    with pytest.raises(DimensionError):
        evaluate(np.zeros((2, 2)), np.zeros((2, 3)))
