import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presstrack.geometry import Box
from presstrack.metrics import (MetricsConfig, RigidTransform2D, Trajectory, clearmot, evaluate_trajectories, rte,
                                segment_error, umeyama_align)
from presstrack.simulate import NoiseConfig, corrupt_detections, gt_rows
from presstrack.tracker import TrackerConfig, run

B = Box(10, 10, 8, 20)


def rows(spec):
    """spec: list of (frame, id) with the shared box B."""
    return [(f, i, B) for f, i in spec]


def rot(deg):
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def walk(n=100, seed=0):
    rng = np.random.default_rng(seed)
    steps = rng.normal([1.0, 0.2], 0.3, (n, 2))
    return np.cumsum(steps, axis=0)


# ---------------------------------------------------------------- CLEAR MOT

def test_perfect_tracking():
    gt = rows([(1, 1), (2, 1), (3, 1), (1, 2), (2, 2)])
    r = clearmot(gt, gt)
    assert (r.mota, r.motp, r.idsw, r.idf1, r.frag) == (1.0, 1.0, 0, 1.0, 0)


def test_single_miss():
    r = clearmot(rows([(1, 1), (2, 1), (3, 1)]), rows([(1, 7), (3, 7)]))
    assert (r.fn_count, r.fp_count, r.idsw, r.frag) == (1, 0, 0, 1)
    assert r.mota == pytest.approx(2 / 3)


def test_single_id_switch():
    r = clearmot(rows([(1, 1), (2, 1), (3, 1), (4, 1)]), rows([(1, 5), (2, 5), (3, 6), (4, 6)]))
    assert r.idsw == 1 and r.fn_count == 0 and r.fp_count == 0
    assert r.mota == 0.75
    assert r.idf1 == 0.5


def test_false_positive_and_gating():
    gt = rows([(1, 1)])
    hyp = [(1, 3, Box(100, 100, 5, 5))]
    r = clearmot(gt, hyp)
    assert (r.fn_count, r.fp_count, r.matches) == (1, 1, 0)
    assert r.mota == -1.0
    assert r.motp == 0.0


def test_carry_over_keeps_previous_correspondence():
    # two hypotheses overlap the gt; the previous partner is kept while above threshold
    gt = [(1, 1, Box(0, 0, 10, 10)), (2, 1, Box(0, 0, 10, 10))]
    hyp = [(1, 5, Box(0, 0, 10, 10)),
           (2, 5, Box(1, 0, 10, 10)), (2, 6, Box(0, 0, 10, 10))]
    r = clearmot(gt, hyp)
    assert r.idsw == 0 and r.fp_count == 1


def test_empty_gt_raises():
    with pytest.raises(ValueError):
        clearmot([], rows([(1, 1)]))


def test_distance_motp():
    gt = [(1, 1, Box(0, 0, 10, 10))]
    hyp = [(1, 2, Box(1, 0, 10, 10))]
    assert clearmot(gt, hyp, motp_mode="distance").motp == pytest.approx(1.0)


def test_metrics_config_validation():
    with pytest.raises(ValueError):
        MetricsConfig(motp_mode="area").validate()
    with pytest.raises(ValueError):
        MetricsConfig(seg_len=1).validate()


def test_report_identity_on_noisy_run(sim_small):
    seq, gt = sim_small
    g = gt_rows(gt)
    hyp = run(corrupt_detections(g, NoiseConfig(), 6, len(seq)), TrackerConfig())
    r = clearmot(g, hyp)
    assert r.mota == 1 - (r.fn_count + r.fp_count + r.idsw) / r.gt_count
    for v in (r.motp, r.idf1, r.idp, r.idr):
        assert 0.0 <= v <= 1.0
    assert r.matches + r.fn_count == r.gt_count
    assert r.matches + r.fp_count == r.hyp_count
    # relabeling hypothesis ids changes nothing
    perm = {i: 1000 - i for i in {h.id for h in hyp}}
    r2 = clearmot(g, [(h.frame, perm[h.id], h.box) for h in hyp])
    assert (r2.mota, r2.idf1, r2.idsw) == (r.mota, r.idf1, r.idsw)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_idf1_one_iff_single_bijection(seed):
    rng = np.random.default_rng(seed)
    frames = 8
    gt = [(f, i, Box(30.0 * i, 0, 10, 10)) for f in range(1, frames + 1) for i in (1, 2)]
    hyp = []
    for f, i, b in gt:
        hid = i + 10
        if rng.random() < 0.15:
            hid = 90 + i  # stray identity
        if rng.random() < 0.9:
            hyp.append((f, hid, b))
    r = clearmot(gt, hyp)
    single = all(h[1] < 90 for h in hyp) and len(hyp) == len(gt)
    assert (r.idf1 == 1.0) == single
    assert r.idf1 <= 1.0


# ---------------------------------------------------------------- alignment

def test_umeyama_identity_and_translation():
    src = walk(20)
    tf = umeyama_align(src, src)
    assert tf.angle == pytest.approx(0.0, abs=1e-12)
    assert tf.translation == pytest.approx((0.0, 0.0), abs=1e-9)
    tf = umeyama_align(src, src + (3.0, -1.0))
    assert tf.angle == pytest.approx(0.0, abs=1e-12)
    assert tf.translation == pytest.approx((3.0, -1.0), abs=1e-9)


def test_umeyama_recovers_rotation():
    rng = np.random.default_rng(37)
    src = rng.uniform(-50, 50, (30, 2))
    dst = src @ rot(37).T + (4.0, -9.0)
    tf = umeyama_align(src, dst)
    assert abs(tf.angle - math.radians(37)) <= 1e-9
    assert np.linalg.det(tf.rotation) == pytest.approx(1.0)


def test_umeyama_scale_and_reflection():
    src = walk(30, 3)
    dst = 2.5 * src @ rot(-20).T
    tf = umeyama_align(src, dst, with_scale=True)
    assert tf.scale == pytest.approx(2.5)
    mirrored = src * (1, -1)
    tf = umeyama_align(src, mirrored)
    assert np.linalg.det(tf.rotation) == pytest.approx(1.0)


def test_umeyama_degenerate():
    with pytest.raises(ValueError):
        umeyama_align([(1, 1), (1, 1)], [(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        umeyama_align([(1, 1)], [(0, 0)])


def test_segment_error_self_is_zero():
    g = walk(250)
    for mode in ("first_two", "whole"):
        assert segment_error(g, g, 100, mode) == 0.0


def test_segment_error_whole_removes_rigid_transform():
    g = walk(250)
    e = g @ rot(33).T + (12.0, -40.0)
    assert segment_error(g, e, 100, "whole") <= 1e-6


def test_heading_drift_first_two_exceeds_whole():
    g = walk(100, 1)
    # heading drifts linearly up to 5 degrees over the segment
    e = np.array([g[0] + rot(5.0 * k / 99) @ (p - g[0]) for k, p in enumerate(g)])
    w = segment_error(g, e, 100, "first_two")
    wa = segment_error(g, e, 100, "whole")
    assert w > 0 and wa < w
    tf = umeyama_align(e[:2], g[:2])
    err = np.linalg.norm(tf.apply(e) - g, axis=1)
    assert err[-1] > err[10]


def test_partial_segments():
    g = walk(205)
    e = g + np.linspace(0, 1, 205)[:, None]
    a = segment_error(g, e, 100, "whole", keep_partial=True)
    b = segment_error(g, e, 100, "whole", keep_partial=False)
    assert a != b
    # a trailing single frame is always dropped
    assert segment_error(g[:201], e[:201], 100, "whole") == segment_error(g[:200], e[:200], 100, "whole")
    with pytest.raises(ValueError):
        segment_error(g[:1], e[:1])


def test_rte_examples():
    g = np.column_stack([np.arange(101.0), np.zeros(101)])
    assert rte(g, g) == 0.0
    assert rte(g, g + (5.0, 7.0)) == pytest.approx(0.0, abs=1e-12)
    e = g.copy()
    e[-1, 1] += 1.0
    assert abs(rte(g, e) - 1.0) <= 1e-9
    with pytest.raises(ValueError):
        rte(np.zeros((5, 2)), np.zeros((5, 2)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-500, 500), st.floats(-500, 500), st.integers(0, 1000))
def test_whole_mode_invariance_and_non_negativity(angle, tx, ty, seed):
    g = walk(150, seed)
    e = g + np.random.default_rng(seed).normal(0, 0.5, g.shape)
    tf = RigidTransform2D(angle, (tx, ty))
    base = segment_error(g, e, 100, "whole")
    assert abs(segment_error(g, tf.apply(e), 100, "whole") - base) <= 1e-6
    assert base >= 0 and rte(g, e) >= 0 and segment_error(g, e, 100, "first_two") >= 0


def test_trajectory_type_and_report():
    with pytest.raises(ValueError):
        Trajectory(1, [(2, 0.0, 0.0), (1, 1.0, 0.0)])
    g = walk(120)
    pts = [(k + 1, float(x), float(y)) for k, (x, y) in enumerate(g)]
    rep = evaluate_trajectories({1: pts}, {1: Trajectory(1, pts)})
    assert rep.rte_pct == 0.0 and rep.w_error_mm == 0.0 and rep.wa_error_mm == 0.0
    assert list(rep.per_person) == [1]
    with pytest.raises(ValueError):
        evaluate_trajectories({1: pts}, {2: pts})
