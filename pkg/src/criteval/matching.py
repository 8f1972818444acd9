"""Greedy center-distance matching of detections to ground truth.

Predictions are processed in descending confidence order (ties broken by
input order); each claims the nearest not-yet-matched ground truth whose
2D center distance is within the distance limit. Matching never looks at
velocity, box extent or orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Detection, ObjectState


@dataclass(frozen=True)
class MatchResult:
    """Per-frame partition into TP pairs, FP predictions and FN ground truths."""

    tp: list[tuple[ObjectState, ObjectState]]
    fp: list[ObjectState]
    fn: list[ObjectState]
    distance_limit: float
    threshold: float


def distance_limits_default() -> list[float]:
    """Default center-distance limits (meters) used for evaluation."""
    return [0.5, 1.0, 2.0, 4.0]


def greedy_assign(
    gts: list[ObjectState], detections: list[Detection], distance_limit: float
) -> list[tuple[Detection, int | None]]:
    """Assign each detection to a ground-truth index or None (false positive).

    Returned in processing order: descending confidence, stable for ties.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    taken = [False] * len(gts)
    out: list[tuple[Detection, int | None]] = []
    for i in order:
        det = detections[i]
        cx, cy = det.state.center
        best: int | None = None
        best_dist = math.inf
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            dist = math.hypot(gt.center.x - cx, gt.center.y - cy)
            if dist <= distance_limit and dist < best_dist:
                best, best_dist = j, dist
        if best is not None:
            taken[best] = True
        out.append((det, best))
    return out


def match_frame(
    gts: list[ObjectState],
    preds: list[Detection],
    distance_limit: float,
    threshold: float,
) -> MatchResult:
    """Match one frame's detections (already class- and range-filtered)."""
    if not distance_limit > 0:
        raise ValueError(f"distance_limit must be positive, got {distance_limit}")
    kept = [d for d in preds if d.confidence >= threshold]
    assignment = greedy_assign(gts, kept, distance_limit)
    tp = [(gts[j], det.state) for det, j in assignment if j is not None]
    fp = [det.state for det, j in assignment if j is None]
    matched = {j for _, j in assignment if j is not None}
    fn = [gt for j, gt in enumerate(gts) if j not in matched]
    return MatchResult(tp, fp, fn, distance_limit, threshold)
