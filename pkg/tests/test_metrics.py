"""Classic and weighted measures, curve construction, AP summaries."""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from criteval.criticality import CriticalityConfig, classify, criticality_components, weights_from_class
from criteval.matching import match_frame
from criteval.metrics import (
    CurveAccumulator,
    CurvePoint,
    WeightedCounts,
    _kappa_array,
    average_precision,
    build_curve,
    classic_pr,
    counts_from_match,
    devkit_average_precision,
    resample_curve,
    weighted_pr,
    worker_count,
    write_curve_csv,
)
from criteval.model import Dataset, Detection, Vec2
from criteval.synthgen import ErrorModel, corrupt, gen_dataset

from helpers import (
    make_ego,
    make_frame,
    make_state,
    perfect_detections,
    random_scenario_spec,
)

CFG = CriticalityConfig(20.0, 20.0, 8.0)

nonneg = st.floats(min_value=0.0, max_value=1e6, allow_nan=False)
counts_strategy = st.builds(
    lambda tg, tp, fp, fn, a, b, c: WeightedCounts(tg, tp, fp, fn, a, b, c),
    nonneg, nonneg, nonneg, nonneg,
    st.integers(min_value=0, max_value=10**6),
    st.integers(min_value=0, max_value=10**6),
    st.integers(min_value=0, max_value=10**6),
)


def test_classic_pr_examples():
    assert classic_pr(WeightedCounts(0, 0, 0, 0, n_tp=3, n_fp=1, n_fn=0)) == (0.75, 1.0)
    assert classic_pr(WeightedCounts(0, 0, 0, 0, n_tp=0, n_fp=0, n_fn=5)) == (1.0, 0.0)
    assert classic_pr(WeightedCounts(0, 0, 0, 0, n_tp=0, n_fp=0, n_fn=0)) == (1.0, 1.0)


def test_weighted_pr_examples():
    # One TP (gt weight 0.8, predicted weight 0.9) plus one FP at 0.1.
    counts = WeightedCounts(0.8, 0.9, 0.1, 0.0, 1, 1, 0)
    p_r, r_s = weighted_pr(counts)
    assert p_r == 0.8
    assert r_s == 1.0  # 0.9 / 0.8 clamped

    counts = WeightedCounts(3.0, 3.0, 1.0, 2.0, 3, 1, 2)
    assert weighted_pr(counts) == (0.75, 0.6)

    counts = WeightedCounts(0.0, 0.0, 0.0, 0.5, 0, 0, 1)
    assert weighted_pr(counts) == (1.0, 0.0)


@given(counts=counts_strategy)
@settings(max_examples=1000)
def test_weighted_pr_always_clamped(counts):
    p_r, r_s = weighted_pr(counts)
    assert 0.0 <= p_r <= 1.0
    assert 0.0 <= r_s <= 1.0


def test_average_precision_hand_curve_is_exact():
    curve = [
        CurvePoint(0.9, 1.0, 0.2, 1.0, 0.2),
        CurvePoint(0.5, 0.8, 0.5, 0.8, 0.5),
        CurvePoint(0.1, 0.5, 1.0, 0.5, 1.0),
    ]
    assert average_precision(curve, use_weighted=False) == 0.69
    assert average_precision(curve, use_weighted=True) == 0.69


def test_average_precision_single_perfect_point():
    assert average_precision([CurvePoint(1.0, 1.0, 1.0, 1.0, 1.0)]) == 1.0


def test_average_precision_noise_floor_filters_everything():
    curve = [CurvePoint(0.9, 0.05, 0.5, 0.05, 0.5), CurvePoint(0.5, 0.01, 1.0, 0.01, 1.0)]
    assert average_precision(curve) == 0.0
    assert average_precision([]) == 0.0


def test_average_precision_anchors_at_predecessor_recall():
    curve = [
        CurvePoint(0.9, 0.05, 0.05, 0.05, 0.05),  # filtered out
        CurvePoint(0.5, 1.0, 0.5, 1.0, 0.5),
        CurvePoint(0.1, 0.8, 1.0, 0.8, 1.0),
    ]
    expected = (0.5 - 0.05) * 1.0 + (1.0 - 0.5) * 0.8
    assert average_precision(curve) == pytest.approx(expected, abs=1e-15)


def test_average_precision_rejects_unsorted_curve():
    curve = [CurvePoint(0.5, 0.8, 0.9, 0.8, 0.9), CurvePoint(0.9, 1.0, 0.2, 1.0, 0.2)]
    with pytest.raises(ValueError, match="sorted"):
        average_precision(curve)


@given(
    # Both curves stay above the 0.1 floors: dropping a point from one curve
    # but not the other redistributes recall mass and can break dominance.
    recalls=st.lists(st.floats(min_value=0.1, max_value=1.0), min_size=1, max_size=10),
    precisions_low=st.lists(st.floats(min_value=0.1, max_value=1.0), min_size=10, max_size=10),
    deltas=st.lists(st.floats(min_value=0.0, max_value=0.9), min_size=10, max_size=10),
)
@settings(max_examples=300)
def test_dominated_curve_has_no_larger_ap(recalls, precisions_low, deltas):
    r = sorted(recalls)
    low = [
        CurvePoint(0.5, precisions_low[i], r[i], precisions_low[i], r[i])
        for i in range(len(r))
    ]
    high = [
        CurvePoint(0.5, min(1.0, precisions_low[i] + deltas[i]), r[i],
                   min(1.0, precisions_low[i] + deltas[i]), r[i])
        for i in range(len(r))
    ]
    assert average_precision(low) <= average_precision(high) + 1e-12


def test_devkit_ap_perfect_detector():
    assert devkit_average_precision([CurvePoint(1.0, 1.0, 1.0, 1.0, 1.0)]) == 1.0


def test_devkit_ap_between_zero_and_one():
    curve = [
        CurvePoint(0.9, 1.0, 0.2, 1.0, 0.2),
        CurvePoint(0.5, 0.8, 0.5, 0.8, 0.5),
        CurvePoint(0.1, 0.5, 1.0, 0.5, 1.0),
    ]
    value = devkit_average_precision(curve)
    assert 0.0 < value < 1.0


def _two_frame_dataset():
    frames = []
    for k, frame_id in enumerate(["f0", "f1"]):
        ego = make_ego(velocity=(0.0, 0.0))
        objects = [
            # head-on, maximally critical
            make_state(object_id="critical", center=(0.0, 10.0 - k), velocity=(0.0, -3.0)),
            # already past its closest point, receding: only distance matters
            make_state(object_id="mild", center=(18.0, 1.0 + k), velocity=(0.0, 2.0)),
        ]
        frames.append(make_frame(frame_id, 0.5 * k, ego, objects))
    return Dataset(frames=frames)


def test_perfect_detector_single_point_all_ones():
    dataset = _two_frame_dataset()
    curve = build_curve(dataset, perfect_detections(dataset, 1.0), "car", 0.5, CFG)
    assert len(curve) == 1
    pt = curve[0]
    assert (pt.precision, pt.recall, pt.p_r, pt.r_s) == (1.0, 1.0, 1.0, 1.0)
    assert average_precision(curve) == 1.0
    assert average_precision(curve, use_weighted=True) == 1.0


def test_empty_detections_give_single_vacuous_point():
    dataset = _two_frame_dataset()
    curve = build_curve(dataset, [], "car", 0.5, CFG)
    assert curve == [CurvePoint(1.0, 1.0, 0.0, 1.0, 0.0)]
    assert average_precision(curve) == 0.0


def test_missed_critical_object_hurts_weighted_recall_more():
    dataset = _two_frame_dataset()
    detections = [
        d for d in perfect_detections(dataset, 0.9)
        if not (d.state.center.y in (10.0, 9.0) and d.state.center.x == 0.0)
    ]
    curve = build_curve(dataset, detections, "car", 0.5, CFG)
    for pt in curve:
        assert pt.r_s < pt.recall


def test_curve_thresholds_are_distinct_confidences_descending():
    dataset = _two_frame_dataset()
    dets = perfect_detections(dataset, 0.9)
    dets[0] = dataclasses.replace(dets[0], confidence=0.4)
    dets[1] = dataclasses.replace(dets[1], confidence=0.7)
    curve = build_curve(dataset, dets, "car", 0.5, CFG)
    thresholds = [pt.threshold for pt in curve]
    assert thresholds == sorted({d.confidence for d in dets}, reverse=True)
    recalls = [pt.recall for pt in curve]
    assert recalls == sorted(recalls)


def test_weighted_recall_never_increases_with_threshold():
    spec = random_scenario_spec(seed=5, n_frames=8)
    dataset = gen_dataset(spec)
    detections = corrupt(
        dataset,
        ErrorModel(miss_prob_by_distance=[(20.0, 0.1), (50.0, 0.4)],
                   center_noise_sigma=0.3, velocity_noise_sigma=0.5,
                   fp_rate_per_frame=1.0),
        seed=99,
    )
    curve = build_curve(dataset, detections, "car", 2.0, CFG)
    r_s = [pt.r_s for pt in curve]  # emitted highest threshold first
    assert all(a <= b + 1e-15 for a, b in zip(r_s, r_s[1:]))
    assert r_s == sorted(r_s)


def _sum_counts(items):
    return WeightedCounts(
        sum_tp_gt=sum(c.sum_tp_gt for c in items),
        sum_tp_pred=sum(c.sum_tp_pred for c in items),
        sum_fp_pred=sum(c.sum_fp_pred for c in items),
        sum_fn_gt=sum(c.sum_fn_gt for c in items),
        n_tp=sum(c.n_tp for c in items),
        n_fp=sum(c.n_fp for c in items),
        n_fn=sum(c.n_fn for c in items),
    )


def test_curve_matches_per_threshold_rematch_oracle():
    # Independent route: re-match every frame at each threshold and sum counts.
    from criteval.model import detections_by_frame, filter_eval_range, select_class

    spec = random_scenario_spec(seed=11, n_frames=5)
    dataset = gen_dataset(spec)
    detections = corrupt(
        dataset,
        ErrorModel(miss_prob_by_distance=0.25, center_noise_sigma=0.4,
                   velocity_noise_sigma=0.6, fp_rate_per_frame=1.5),
        seed=12,
    )
    limit = 2.0
    curve = build_curve(dataset, detections, "car", limit, CFG)
    grouped = detections_by_frame(detections)
    for pt in curve:
        per_frame = []
        for frame in dataset.frames:
            sub, dets = select_class(frame, grouped.get(frame.frame_id, []), "car")
            sub, dets = filter_eval_range(sub, dets, 50.0)
            result = match_frame(sub.ground_truth, dets, limit, pt.threshold)
            per_frame.append(counts_from_match(result, sub.ego, CFG))
        total = _sum_counts(per_frame)
        assert total.sum_tp_gt <= total.n_tp and total.sum_tp_pred <= total.n_tp
        assert total.sum_fp_pred <= total.n_fp and total.sum_fn_gt <= total.n_fn
        precision, recall = classic_pr(total)
        p_r, r_s = weighted_pr(total)
        assert pt.precision == pytest.approx(precision, abs=1e-12)
        assert pt.recall == pytest.approx(recall, abs=1e-12)
        assert pt.p_r == pytest.approx(p_r, abs=1e-12)
        assert pt.r_s == pytest.approx(r_s, abs=1e-12)


def test_counts_at_agrees_with_match_oracle():
    dataset = _two_frame_dataset()
    detections = perfect_detections(dataset, 0.8)
    acc = CurveAccumulator(dataset, detections, "car", 0.5)
    counts = acc.counts_at(0.5, CFG)
    assert counts.n_tp == 4 and counts.n_fp == 0 and counts.n_fn == 0
    counts = acc.counts_at(0.9, CFG)
    assert counts.n_tp == 0 and counts.n_fn == 4


def test_unit_weight_injection_reduces_to_classic():
    for seed in (3, 17):
        spec = random_scenario_spec(seed=seed, n_frames=6)
        dataset = gen_dataset(spec)
        detections = corrupt(
            dataset,
            ErrorModel(miss_prob_by_distance=0.2, center_noise_sigma=0.3,
                       velocity_noise_sigma=0.4, fp_rate_per_frame=1.0),
            seed=seed + 100,
        )
        curve = build_curve(dataset, detections, "car", 1.0, CFG,
                            weight_fn=lambda e, o, c: 1.0)
        for pt in curve:
            assert abs(pt.p_r - pt.precision) <= 1e-12
            assert abs(pt.r_s - pt.recall) <= 1e-12
        assert abs(
            average_precision(curve, True) - average_precision(curve, False)
        ) <= 1e-12


def test_vectorized_kappa_matches_scalar_path():
    ego = make_ego(velocity=(1.5, -0.5))
    states = [
        make_state(object_id=f"s{i}", center=(4.0 * i - 20.0, 3.0 * i - 10.0),
                   velocity=None if i % 5 == 0 else (2.0 * math.sin(i), 1.5 * math.cos(i)))
        for i in range(25)
    ]
    rows = [classify(ego, s) for s in states]
    case = np.array([r[0] for r in rows])
    d_b = np.array([r[1] for r in rows])
    d_c = np.array([r[2] for r in rows])
    d_t = np.array([r[3] for r in rows])
    vec = _kappa_array(case, d_b, d_c, d_t, CFG)
    for i, row in enumerate(rows):
        assert vec[i] == weights_from_class(*row, CFG).kappa


def test_resample_curve_grid():
    dataset = _two_frame_dataset()
    curve = build_curve(dataset, perfect_detections(dataset, 1.0), "car", 0.5, CFG)
    grid = resample_curve(curve)
    assert len(grid["grid"]) == 101
    assert grid["precision"][0] == 1.0
    assert grid["p_r"][100] == 1.0


def test_write_curve_csv(tmp_path):
    curve = [CurvePoint(0.9, 1.0, 0.25, 0.875, 0.3)]
    path = tmp_path / "curve.csv"
    write_curve_csv(curve, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "threshold,precision,recall,p_r,r_s"
    assert lines[1] == "0.900000,1.000000,0.250000,0.875000,0.300000"


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("CRIT_EVAL_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("CRIT_EVAL_THREADS", "zebra")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.delenv("CRIT_EVAL_THREADS")
    assert worker_count() >= 1
