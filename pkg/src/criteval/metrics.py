"""Precision/recall, their criticality-weighted counterparts, and AP summaries.

Curves are built over the distinct confidence values present in the
detections, evaluated from high to low, with one set of counts
accumulated over the whole dataset per threshold. Matching and approach
geometry do not depend on the criticality caps, so
:class:`CurveAccumulator` computes them once and reweights cheaply for
any number of configurations.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .criticality import (
    CASE_MISSING_VELOCITY,
    CASE_NONFINITE_TIME,
    CASE_TRACKED,
    NONFINITE_TIME_SCORE,
    CriticalityConfig,
    classify,
    criticality_components,
)
from .matching import MatchResult, greedy_assign
from .model import (
    Dataset,
    Detection,
    ObjectState,
    detections_by_frame,
    filter_eval_range,
    ingest_summary,
    select_class,
)

DEFAULT_EVAL_RANGE = 50.0
AP_MIN_RECALL = 0.1
AP_MIN_PRECISION = 0.1
AP_STYLES = ("paper", "devkit")

# Optional replacement for the criticality weight of one object; the
# default is the combined kappa. Tests inject a constant to check that the
# weighted measures reduce to the classic ones.
WeightFn = Callable[[ObjectState, ObjectState, CriticalityConfig], float]


@dataclass(frozen=True)
class WeightedCounts:
    """Criticality-weighted and raw tallies for one (limit, threshold) cut.

    ``sum_tp_gt``/``sum_fn_gt`` sum ground-truth weights, ``sum_tp_pred``/
    ``sum_fp_pred`` sum predicted-state weights.
    """

    sum_tp_gt: float
    sum_tp_pred: float
    sum_fp_pred: float
    sum_fn_gt: float
    n_tp: int
    n_fp: int
    n_fn: int


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    precision: float
    recall: float
    p_r: float
    r_s: float


def classic_pr(counts: WeightedCounts) -> tuple[float, float]:
    """Count-based precision and recall; empty ratios are vacuously 1."""
    p_den = counts.n_tp + counts.n_fp
    r_den = counts.n_tp + counts.n_fn
    precision = counts.n_tp / p_den if p_den else 1.0
    recall = counts.n_tp / r_den if r_den else 1.0
    return precision, recall


def weighted_pr(counts: WeightedCounts) -> tuple[float, float]:
    """Reliability-weighted precision and safety-weighted recall.

    Ground-truth weights sit where the detector should not overstate
    criticality (precision numerator, recall denominator); predicted
    weights sit on the other side. Both measures are clamped to 1.
    """
    p_den = counts.sum_tp_pred + counts.sum_fp_pred
    r_den = counts.sum_tp_gt + counts.sum_fn_gt
    p_r = 1.0 if p_den == 0.0 else min(1.0, counts.sum_tp_gt / p_den)
    r_s = 1.0 if r_den == 0.0 else min(1.0, counts.sum_tp_pred / r_den)
    return p_r, r_s


def counts_from_match(
    match: MatchResult,
    ego: ObjectState,
    cfg: CriticalityConfig,
    weight_fn: WeightFn | None = None,
) -> WeightedCounts:
    """Weighted counts for a single matched frame (reference path for tests)."""
    wf = weight_fn or (lambda e, o, c: criticality_components(e, o, c).kappa)
    return WeightedCounts(
        sum_tp_gt=sum(wf(ego, gt, cfg) for gt, _ in match.tp),
        sum_tp_pred=sum(wf(ego, pred, cfg) for _, pred in match.tp),
        sum_fp_pred=sum(wf(ego, pred, cfg) for pred in match.fp),
        sum_fn_gt=sum(wf(ego, gt, cfg) for gt in match.fn),
        n_tp=len(match.tp),
        n_fp=len(match.fp),
        n_fn=len(match.fn),
    )


def worker_count(requested: int | None = None) -> int:
    """Parallelism bound: explicit argument, else CRIT_EVAL_THREADS, else CPU count."""
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get("CRIT_EVAL_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"CRIT_EVAL_THREADS must be an integer, got {env!r}") from None
        if value > 0:
            return value
    return os.cpu_count() or 1


def _kappa_array(
    case: np.ndarray,
    d_ego_b: np.ndarray,
    d_ego_c: np.ndarray,
    delta_t: np.ndarray,
    cfg: CriticalityConfig,
) -> np.ndarray:
    """Vectorized combined kappa, mirroring the scalar path element for element."""
    with np.errstate(over="ignore"):
        kd = np.maximum(0.0, -(d_ego_b * d_ego_b) / (cfg.d_max * cfg.d_max) + 1.0)
        kr = np.zeros_like(kd)
        kt = np.zeros_like(kd)
        mask = case == CASE_MISSING_VELOCITY
        kr[mask] = 1.0
        kt[mask] = 1.0
        mask = case == CASE_NONFINITE_TIME
        if mask.any():
            doc = d_ego_c[mask]
            kr[mask] = np.where(
                np.isfinite(doc),
                np.maximum(0.0, -(doc * doc) / (cfg.r_max * cfg.r_max) + 1.0),
                NONFINITE_TIME_SCORE,
            )
            kt[mask] = NONFINITE_TIME_SCORE
        mask = case == CASE_TRACKED
        if mask.any():
            doc = d_ego_c[mask]
            dts = delta_t[mask]
            kr[mask] = np.maximum(0.0, -(doc * doc) / (cfg.r_max * cfg.r_max) + 1.0)
            kt[mask] = np.maximum(0.0, -(dts * dts) / (cfg.t_max * cfg.t_max) + 1.0)
        return 1.0 - (1.0 - kd) * (1.0 - kr) * (1.0 - kt)


class CurveAccumulator:
    """Per-(detector, distance limit) cache of matches and approach geometry.

    Frames are processed in sorted frame_id order and predictions kept in a
    fixed global order (descending confidence, then frame_id, then within-
    frame rank), so repeated evaluations are bit-reproducible regardless of
    how callers parallelize.
    """

    def __init__(
        self,
        dataset: Dataset,
        detections: Iterable[Detection],
        class_name: str,
        distance_limit: float,
        max_range: float = DEFAULT_EVAL_RANGE,
    ):
        if not distance_limit > 0:
            raise ValueError(f"distance_limit must be positive, got {distance_limit}")
        self.class_name = class_name
        self.distance_limit = distance_limit
        self.max_range = max_range

        grouped = detections_by_frame(detections)
        gt_rows: list[tuple[int, float, float, float]] = []
        gt_refs: list[tuple[ObjectState, ObjectState]] = []
        entries: list[tuple] = []
        for frame in sorted(dataset.frames, key=lambda f: f.frame_id):
            sub, dets = select_class(frame, grouped.get(frame.frame_id, []), class_name)
            sub, dets = filter_eval_range(sub, dets, max_range)
            base = len(gt_rows)
            for gt in sub.ground_truth:
                gt_rows.append(classify(sub.ego, gt))
                gt_refs.append((sub.ego, gt))
            assignment = greedy_assign(sub.ground_truth, dets, distance_limit)
            for rank, (det, j) in enumerate(assignment):
                entries.append(
                    (
                        det.confidence,
                        sub.frame_id,
                        rank,
                        classify(sub.ego, det.state),
                        base + j if j is not None else -1,
                        sub.ego,
                        det.state,
                    )
                )
        entries.sort(key=lambda e: (-e[0], e[1], e[2]))

        self.n_gt = len(gt_rows)
        self._gt_refs = gt_refs
        self._gt_case = np.array([r[0] for r in gt_rows], dtype=np.int64)
        self._gt_d_ego_b = np.array([r[1] for r in gt_rows], dtype=np.float64)
        self._gt_d_ego_c = np.array([r[2] for r in gt_rows], dtype=np.float64)
        self._gt_delta_t = np.array([r[3] for r in gt_rows], dtype=np.float64)

        self._pred_refs = [(e[5], e[6]) for e in entries]
        self._conf = np.array([e[0] for e in entries], dtype=np.float64)
        self._pred_case = np.array([e[3][0] for e in entries], dtype=np.int64)
        self._pred_d_ego_b = np.array([e[3][1] for e in entries], dtype=np.float64)
        self._pred_d_ego_c = np.array([e[3][2] for e in entries], dtype=np.float64)
        self._pred_delta_t = np.array([e[3][3] for e in entries], dtype=np.float64)
        self._pred_gt = np.array([e[4] for e in entries], dtype=np.int64)
        self._is_tp = self._pred_gt >= 0
        if len(self._conf):
            boundaries = np.flatnonzero(np.diff(self._conf) != 0.0)
            self._group_ends = np.append(boundaries, len(self._conf) - 1)
        else:
            self._group_ends = np.array([], dtype=np.int64)

    def _weights(
        self, cfg: CriticalityConfig, weight_fn: WeightFn | None
    ) -> tuple[np.ndarray, np.ndarray]:
        if weight_fn is None:
            kgt = _kappa_array(
                self._gt_case, self._gt_d_ego_b, self._gt_d_ego_c, self._gt_delta_t, cfg
            )
            kpred = _kappa_array(
                self._pred_case, self._pred_d_ego_b, self._pred_d_ego_c, self._pred_delta_t, cfg
            )
            return kgt, kpred
        kgt = np.array([weight_fn(ego, st, cfg) for ego, st in self._gt_refs], dtype=np.float64)
        kpred = np.array([weight_fn(ego, st, cfg) for ego, st in self._pred_refs], dtype=np.float64)
        return kgt, kpred

    def curve_arrays(
        self, cfg: CriticalityConfig, weight_fn: WeightFn | None = None
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(threshold, precision, recall, p_r, r_s) arrays, highest threshold first.

        Empty when there are no detections. The safety-weighted recall
        denominator is the total ground-truth weight, which does not depend
        on the threshold, so the recall side is exactly nonincreasing as
        the threshold rises. Allocation-free per configuration apart from
        the arrays themselves, which keeps 1000+-configuration sweeps cheap.
        """
        kgt, kpred = self._weights(cfg, weight_fn)
        total_gt_weight = float(np.sum(kgt))
        n_gt = self.n_gt
        if len(self._conf) == 0:
            empty = np.array([], dtype=np.float64)
            return empty, empty, empty, empty, empty

        if n_gt:
            tp_gt_weight = np.where(self._is_tp, kgt[np.maximum(self._pred_gt, 0)], 0.0)
        else:
            tp_gt_weight = np.zeros(len(self._conf))
        ends = self._group_ends
        cum_tp = np.cumsum(self._is_tp.astype(np.float64))[ends]
        cum_tp_gt = np.cumsum(tp_gt_weight)[ends]
        cum_tp_pred = np.cumsum(np.where(self._is_tp, kpred, 0.0))[ends]
        cum_fp_pred = np.cumsum(np.where(self._is_tp, 0.0, kpred))[ends]

        n_seen = (ends + 1).astype(np.float64)
        precision = cum_tp / n_seen
        recall = cum_tp / n_gt if n_gt else np.ones_like(cum_tp)
        p_den = cum_tp_pred + cum_fp_pred
        with np.errstate(invalid="ignore", divide="ignore"):
            p_r = np.where(p_den == 0.0, 1.0, np.minimum(1.0, cum_tp_gt / np.where(p_den == 0.0, 1.0, p_den)))
            if total_gt_weight == 0.0:
                r_s = np.ones_like(cum_tp_pred)
            else:
                r_s = np.minimum(1.0, cum_tp_pred / total_gt_weight)
        return self._conf[ends], precision, recall, p_r, r_s

    def curve(self, cfg: CriticalityConfig, weight_fn: WeightFn | None = None) -> list[CurvePoint]:
        """One operating point per distinct confidence, highest threshold first."""
        thresholds, precision, recall, p_r, r_s = self.curve_arrays(cfg, weight_fn)
        if len(thresholds) == 0:
            kgt, _ = self._weights(cfg, weight_fn)
            counts = WeightedCounts(0.0, 0.0, 0.0, float(np.sum(kgt)), 0, 0, self.n_gt)
            p, r = classic_pr(counts)
            pr, rs = weighted_pr(counts)
            return [CurvePoint(1.0, p, r, pr, rs)]
        return [
            CurvePoint(float(t), float(p), float(r), float(pr), float(rs))
            for t, p, r, pr, rs in zip(thresholds, precision, recall, p_r, r_s)
        ]

    def counts_at(
        self,
        threshold: float,
        cfg: CriticalityConfig,
        weight_fn: WeightFn | None = None,
    ) -> WeightedCounts:
        """Dataset-global weighted counts for one confidence threshold."""
        kgt, kpred = self._weights(cfg, weight_fn)
        keep = self._conf >= threshold
        is_tp = self._is_tp & keep
        matched = self._pred_gt[is_tp]
        sum_tp_gt = float(np.sum(kgt[matched])) if len(matched) else 0.0
        fn_mask = np.ones(self.n_gt, dtype=bool)
        fn_mask[matched] = False
        return WeightedCounts(
            sum_tp_gt=sum_tp_gt,
            sum_tp_pred=float(np.sum(kpred[is_tp])),
            sum_fp_pred=float(np.sum(kpred[keep & ~self._is_tp])),
            sum_fn_gt=float(np.sum(kgt[fn_mask])) if self.n_gt else 0.0,
            n_tp=int(np.count_nonzero(is_tp)),
            n_fp=int(np.count_nonzero(keep & ~self._is_tp)),
            n_fn=int(np.count_nonzero(fn_mask)),
        )


def build_curve(
    dataset: Dataset,
    detections: Iterable[Detection],
    class_name: str,
    distance_limit: float,
    cfg: CriticalityConfig,
    weight_fn: WeightFn | None = None,
    max_range: float = DEFAULT_EVAL_RANGE,
) -> list[CurvePoint]:
    """Operating points over the distinct confidences present in the detections."""
    acc = CurveAccumulator(dataset, detections, class_name, distance_limit, max_range)
    return acc.curve(cfg, weight_fn)


def _curve_arrays(curve: Sequence[CurvePoint], use_weighted: bool) -> tuple[np.ndarray, np.ndarray]:
    if use_weighted:
        r = np.array([pt.r_s for pt in curve], dtype=np.float64)
        p = np.array([pt.p_r for pt in curve], dtype=np.float64)
    else:
        r = np.array([pt.recall for pt in curve], dtype=np.float64)
        p = np.array([pt.precision for pt in curve], dtype=np.float64)
    if len(r) > 1 and np.any(np.diff(r) < 0):
        raise ValueError("curve must be sorted by nondecreasing recall")
    return r, p


def _ap_paper_arrays(r: np.ndarray, p: np.ndarray) -> float:
    if len(r) == 0:
        return 0.0
    keep = (p >= AP_MIN_PRECISION) & (r >= AP_MIN_RECALL)
    if not keep.any():
        return 0.0
    first = int(np.flatnonzero(keep)[0])
    anchor = float(r[first - 1]) if first > 0 else 0.0
    rk = r[keep]
    pk = p[keep]
    prev = np.concatenate(([anchor], rk[:-1]))
    return float(np.sum((rk - prev) * pk))


def _ap_devkit_arrays(
    r: np.ndarray,
    p: np.ndarray,
    min_recall: float = AP_MIN_RECALL,
    min_precision: float = AP_MIN_PRECISION,
) -> float:
    if len(r) == 0:
        return 0.0
    grid = np.linspace(0.0, 1.0, 101)
    prec = np.interp(grid, r, p, right=0.0)
    prec = prec[round(100 * min_recall) + 1 :] - min_precision
    prec[prec < 0] = 0.0
    return min(1.0, float(np.mean(prec)) / (1.0 - min_precision))


def average_precision(curve: Sequence[CurvePoint], use_weighted: bool = False) -> float:
    """Riemann-sum AP over operating points with both coordinates >= 0.1.

    Points below either 0.1 floor are dropped to suppress noise; the first
    retained point is anchored at its predecessor's recall (0 if none).
    With ``use_weighted`` the (r_s, p_r) coordinates are summarized instead.
    """
    return _ap_paper_arrays(*_curve_arrays(curve, use_weighted))


def devkit_average_precision(
    curve: Sequence[CurvePoint],
    use_weighted: bool = False,
    min_recall: float = AP_MIN_RECALL,
    min_precision: float = AP_MIN_PRECISION,
) -> float:
    """nuScenes-devkit style AP: 101-point interpolation, floors subtracted,
    renormalized. Offered for comparability with published tables."""
    r, p = _curve_arrays(curve, use_weighted)
    return _ap_devkit_arrays(r, p, min_recall, min_precision)


def ap_function(ap_style: str) -> Callable[[Sequence[CurvePoint], bool], float]:
    if ap_style not in AP_STYLES:
        raise ValueError(f"ap_style must be one of {AP_STYLES}, got {ap_style!r}")
    return average_precision if ap_style == "paper" else devkit_average_precision


def ap_from_arrays(ap_style: str, r: np.ndarray, p: np.ndarray) -> float:
    """Array fast path for sweeps; assumes ``r`` is already nondecreasing."""
    if ap_style not in AP_STYLES:
        raise ValueError(f"ap_style must be one of {AP_STYLES}, got {ap_style!r}")
    return _ap_paper_arrays(r, p) if ap_style == "paper" else _ap_devkit_arrays(r, p)


def resample_curve(curve: Sequence[CurvePoint], step: float = 0.01) -> dict[str, Any]:
    """Reporting view of a curve on a fixed recall grid (plots only).

    Interpolates precision over recall and weighted precision over
    weighted recall; beyond the achieved recall the value is 0.
    """
    n = round(1.0 / step)
    grid = np.linspace(0.0, 1.0, n + 1)
    out: dict[str, Any] = {"step": step, "grid": [float(g) for g in grid]}
    for key, use_weighted in (("precision", False), ("p_r", True)):
        r, p = _curve_arrays(curve, use_weighted)
        values = np.interp(grid, r, p, right=0.0) if len(r) else np.zeros(len(grid))
        out[key] = [float(v) for v in values]
    return out


@dataclass(frozen=True)
class LimitResult:
    distance_limit: float
    ap: float
    ap_crit: float
    curve: list[CurvePoint]
    resampled: dict[str, Any]


@dataclass(frozen=True)
class EvaluationReport:
    class_name: str
    config: CriticalityConfig
    ap_style: str
    max_range: float
    results: list[LimitResult]
    ingest: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "class": self.class_name,
            "criticality_config": {
                "d_max": self.config.d_max,
                "r_max": self.config.r_max,
                "t_max": self.config.t_max,
            },
            "ap_style": self.ap_style,
            "max_range": self.max_range,
            "ingest": self.ingest,
            "results": [
                {
                    "distance_limit": res.distance_limit,
                    "ap": res.ap,
                    "ap_crit": res.ap_crit,
                    "curve": [
                        {
                            "threshold": pt.threshold,
                            "precision": pt.precision,
                            "recall": pt.recall,
                            "p_r": pt.p_r,
                            "r_s": pt.r_s,
                        }
                        for pt in res.curve
                    ],
                    "curve_recall_grid": res.resampled,
                }
                for res in self.results
            ],
        }


def evaluate_detector(
    dataset: Dataset,
    detections: Iterable[Detection],
    class_name: str,
    dist_limits: Sequence[float],
    cfg: CriticalityConfig,
    ap_style: str = "paper",
    max_range: float = DEFAULT_EVAL_RANGE,
    workers: int | None = None,
) -> EvaluationReport:
    """Full per-class evaluation of one detector across distance limits."""
    detections = list(detections)
    ap_fn = ap_function(ap_style)

    def one(distance_limit: float) -> LimitResult:
        curve = build_curve(dataset, detections, class_name, distance_limit, cfg,
                            max_range=max_range)
        return LimitResult(
            distance_limit=distance_limit,
            ap=ap_fn(curve, False),
            ap_crit=ap_fn(curve, True),
            curve=curve,
            resampled=resample_curve(curve),
        )

    n_workers = min(worker_count(workers), max(1, len(dist_limits)))
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        results = list(pool.map(one, dist_limits))
    return EvaluationReport(
        class_name=class_name,
        config=cfg,
        ap_style=ap_style,
        max_range=max_range,
        results=results,
        ingest=ingest_summary(dataset, detections),
    )


def write_curve_csv(curve: Sequence[CurvePoint], path: str | Path) -> None:
    """One row per operating point, six decimal digits."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "precision", "recall", "p_r", "r_s"])
        for pt in curve:
            writer.writerow(
                [
                    f"{pt.threshold:.6f}",
                    f"{pt.precision:.6f}",
                    f"{pt.recall:.6f}",
                    f"{pt.p_r:.6f}",
                    f"{pt.r_s:.6f}",
                ]
            )
