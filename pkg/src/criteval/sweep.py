"""Configuration sweeps and detector rankings.

A sweep evaluates every detector at every (distance limit, criticality
configuration) cell. Matching and geometry are cached per (detector,
limit); only the parabola caps change across configurations, and the
classic AP is hoisted out of the configuration loop entirely since it
never depends on the weights.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .criticality import CriticalityConfig
from .metrics import CurveAccumulator, ap_from_arrays, worker_count
from .model import Dataset, Detection

SWEEP_CSV_HEADER = ["detector", "class", "l", "d_max", "r_max", "t_max", "ap", "ap_crit"]


@dataclass(frozen=True)
class ConfigGrid:
    d_values: tuple[float, ...]
    r_values: tuple[float, ...]
    t_values: tuple[float, ...]

    def __post_init__(self) -> None:
        for name, values in (
            ("d_values", self.d_values),
            ("r_values", self.r_values),
            ("t_values", self.t_values),
        ):
            if not values:
                raise ValueError(f"{name} must be nonempty")
            if any(v <= 0 for v in values):
                raise ValueError(f"{name} must be positive")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError(f"{name} must be strictly increasing")

    def __len__(self) -> int:
        return len(self.d_values) * len(self.r_values) * len(self.t_values)

    def configs(self) -> list[CriticalityConfig]:
        return [
            CriticalityConfig(d, r, t)
            for d in self.d_values
            for r in self.r_values
            for t in self.t_values
        ]


def default_grid() -> ConfigGrid:
    """10 x 10 x 15 = 1500 configurations: caps at 5..50 m and 2..30 s."""
    return ConfigGrid(
        d_values=tuple(float(v) for v in range(5, 55, 5)),
        r_values=tuple(float(v) for v in range(5, 55, 5)),
        t_values=tuple(float(v) for v in range(2, 32, 2)),
    )


@dataclass(frozen=True)
class SweepRow:
    detector: str
    class_name: str
    distance_limit: float
    d_max: float
    r_max: float
    t_max: float
    ap: float
    ap_crit: float


@dataclass(frozen=True)
class RankingDiff:
    metric_a: str
    metric_b: str
    order_a: list[str]
    order_b: list[str]
    n_moved: int
    max_displacement: int


def evaluate_sweep(
    dataset: Dataset,
    detections_by_detector: Mapping[str, Iterable[Detection]],
    grid: ConfigGrid,
    dist_limits: Sequence[float],
    class_name: str,
    ap_style: str = "paper",
    max_range: float = 50.0,
    workers: int | None = None,
) -> list[SweepRow]:
    """Complete (detector, limit, configuration) table.

    Cells are computed independently per (detector, limit) task and merged
    in a canonical order, so the output is bit-identical for any worker
    count.
    """
    if not detections_by_detector:
        raise ValueError("at least one detector is required")
    materialized = {name: list(dets) for name, dets in detections_by_detector.items()}
    tasks = [(name, l) for name in sorted(materialized) for l in dist_limits]

    def one(task: tuple[str, float]) -> list[SweepRow]:
        name, distance_limit = task
        acc = CurveAccumulator(dataset, materialized[name], class_name, distance_limit, max_range)
        rows: list[SweepRow] = []
        ap: float | None = None
        for cfg in grid.configs():
            _, precision, recall, p_r, r_s = acc.curve_arrays(cfg)
            if ap is None:
                ap = ap_from_arrays(ap_style, recall, precision)
            rows.append(
                SweepRow(
                    detector=name,
                    class_name=class_name,
                    distance_limit=distance_limit,
                    d_max=cfg.d_max,
                    r_max=cfg.r_max,
                    t_max=cfg.t_max,
                    ap=ap,
                    ap_crit=ap_from_arrays(ap_style, r_s, p_r),
                )
            )
        return rows

    n_workers = max(1, min(worker_count(workers), len(tasks)))
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        chunks = list(pool.map(one, tasks))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(
        key=lambda r: (r.detector, r.distance_limit, r.d_max, r.r_max, r.t_max)
    )
    return rows


def rank(
    rows: Sequence[SweepRow],
    metric: str,
    distance_limit: float,
    config: CriticalityConfig | None = None,
) -> list[str]:
    """Detectors ordered by descending metric; ties broken by ascending name."""
    if metric not in ("ap", "ap_crit"):
        raise ValueError(f"metric must be 'ap' or 'ap_crit', got {metric!r}")
    selected = [r for r in rows if r.distance_limit == distance_limit]
    if config is not None:
        selected = [
            r
            for r in selected
            if (r.d_max, r.r_max, r.t_max) == (config.d_max, config.r_max, config.t_max)
        ]
    values: dict[str, float] = {}
    for row in selected:
        value = row.ap if metric == "ap" else row.ap_crit
        if row.detector in values and values[row.detector] != value:
            raise ValueError(
                f"ambiguous {metric} for detector {row.detector!r}; pass a config to select one cell"
            )
        values[row.detector] = value
    if not values:
        raise ValueError(f"no sweep rows for l={distance_limit} and the given config")
    return sorted(values, key=lambda name: (-values[name], name))


def ranking_diff(
    order_a: Sequence[str],
    order_b: Sequence[str],
    metric_a: str = "ap",
    metric_b: str = "ap_crit",
) -> RankingDiff:
    """Positional comparison of two orderings of the same detector set."""
    if sorted(order_a) != sorted(order_b):
        raise ValueError("orders must contain the same detectors")
    pos_b = {name: i for i, name in enumerate(order_b)}
    displacements = [abs(i - pos_b[name]) for i, name in enumerate(order_a)]
    return RankingDiff(
        metric_a=metric_a,
        metric_b=metric_b,
        order_a=list(order_a),
        order_b=list(order_b),
        n_moved=sum(1 for d in displacements if d > 0),
        max_displacement=max(displacements, default=0),
    )


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_CSV_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.detector,
                    r.class_name,
                    repr(r.distance_limit),
                    repr(r.d_max),
                    repr(r.r_max),
                    repr(r.t_max),
                    repr(r.ap),
                    repr(r.ap_crit),
                ]
            )


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    rows: list[SweepRow] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(SWEEP_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing sweep columns {sorted(missing)}")
        for rec in reader:
            rows.append(
                SweepRow(
                    detector=rec["detector"],
                    class_name=rec["class"],
                    distance_limit=float(rec["l"]),
                    d_max=float(rec["d_max"]),
                    r_max=float(rec["r_max"]),
                    t_max=float(rec["t_max"]),
                    ap=float(rec["ap"]),
                    ap_crit=float(rec["ap_crit"]),
                )
            )
    return rows


def rankings_report(rows: Sequence[SweepRow], dist_limits: Sequence[float]) -> dict[str, Any]:
    """Per-configuration orders plus how each differs from the AP order."""
    buckets: dict[tuple[float, float, float, float], list[SweepRow]] = {}
    for row in rows:
        buckets.setdefault(
            (row.distance_limit, row.d_max, row.r_max, row.t_max), []
        ).append(row)
    per_config: list[dict[str, Any]] = []
    differing: dict[str, int] = {}
    for key in sorted(buckets):
        distance_limit, d_max, r_max, t_max = key
        cell = buckets[key]
        order_ap = sorted(cell, key=lambda r: (-r.ap, r.detector))
        order_crit = sorted(cell, key=lambda r: (-r.ap_crit, r.detector))
        diff = ranking_diff(
            [r.detector for r in order_ap], [r.detector for r in order_crit]
        )
        per_config.append(
            {
                "l": distance_limit,
                "d_max": d_max,
                "r_max": r_max,
                "t_max": t_max,
                "order_ap": diff.order_a,
                "order_ap_crit": diff.order_b,
                "n_moved": diff.n_moved,
                "max_displacement": diff.max_displacement,
            }
        )
        if diff.n_moved:
            limit_key = repr(distance_limit)
            differing[limit_key] = differing.get(limit_key, 0) + 1
    return {
        "dist_limits": list(dist_limits),
        "n_configs": len({(c["d_max"], c["r_max"], c["t_max"]) for c in per_config}),
        "n_differing_by_l": differing,
        "per_config": per_config,
    }
