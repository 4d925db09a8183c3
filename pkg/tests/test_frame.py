from dataclasses import replace

import numpy as np
import pytest

from qwivar.frame import (FrameError, Source, ZeroClass, build_frame, classify_zero, composite_employment,
                          composite_matrix, compute_weights, structural_mask, ui_counts)


def test_composite_ladder(small_world):
    w = small_world
    value, source = composite_matrix(w)
    full = ~np.isnan(w.qcew[:, :, 0])
    assert np.array_equal(value[full], w.qcew[:, :, 0][full])
    assert (source[full] == Source.QCEW_M1).all()

    # knock out month 1 for one employer-quarter: month 2 takes over
    q = w.qcew.copy()
    q[0, 3, 0] = np.nan
    count, src = composite_employment(replace(w, qcew=q), 0, 3)
    assert src is Source.QCEW_M2 and count == q[0, 3, 1]

    # no QCEW at all: fall back to UI B, then UI B of t+1, then UI M
    q[0, 3, :] = np.nan
    M, B, B_next, *_ = ui_counts(w)
    count, src = composite_employment(replace(w, qcew=q), 0, 3)
    assert src is Source.UI_B and count == B[0, 3]
    rep = w.ui_reported.copy()
    rep[0, 2] = False
    count, src = composite_employment(replace(w, qcew=q, ui_reported=rep), 0, 3)
    assert src is Source.UI_B_NEXT and count == B_next[0, 3]
    rep[0, 4] = False
    count, src = composite_employment(replace(w, qcew=q, ui_reported=rep), 0, 3)
    assert src is Source.UI_M and count == M[0, 3]


def test_weights_are_ratio_of_composites(small_world):
    frame = build_frame(small_world)
    table = compute_weights(frame, small_world).table
    assert (table.w >= 1.0).all()
    assert np.allclose(table.w * table.N_UB, table.N_B)
    assert np.allclose(table.f, 1.0 / table.w)
    all_rep = compute_weights(frame, small_world.with_reporting(np.ones_like(small_world.ui_reported))).table
    assert (all_rep.w == 1.0).all()


def test_weight_undefined_raises(small_world):
    frame = build_frame(small_world)
    rep = small_world.ui_reported.copy()
    rep[small_world.sector == 0, 2] = False
    with pytest.raises(FrameError, match="weight undefined"):
        compute_weights(frame, small_world.with_reporting(rep))


def test_frame_excludes_ui_only_employers(small_world):
    w = replace(small_world, in_qcew_window=small_world.in_qcew_window.copy())
    w.in_qcew_window[0] = False
    assert not build_frame(w).in_frame[0]
    assert build_frame(small_world).in_frame[0]
    with pytest.raises(FrameError):
        build_frame(small_world, (small_world.quarters[3], small_world.quarters[1]))


def test_structural_zeros(small_world):
    frame = build_frame(small_world)
    mask = structural_mask(small_world, frame, ("industry", "gender"), (1, 3, 2))
    # person features never create structural zeros
    assert np.array_equal(mask[..., 0], mask[..., 1])
    missing_ind = [k for k in range(3) if mask[0, k, 0]]
    for k in range(3):
        cls = classify_zero({"state": 0, "industry": k}, small_world, frame, 0.0)
        assert (cls is ZeroClass.STRUCTURAL) == (k in missing_ind)
    assert classify_zero({"state": 0, "gender": 1}, small_world, frame, 0.0) is ZeroClass.SAMPLING
    assert classify_zero({"state": 0, "industry": 99}, small_world, frame) is ZeroClass.STRUCTURAL
    present = [k for k in range(3) if k not in missing_ind]
    assert classify_zero({"state": 0, "industry": present[0]}, small_world, frame, 12.0) is ZeroClass.NONZERO
