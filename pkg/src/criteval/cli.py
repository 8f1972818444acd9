"""Command-line front end: evaluate, sweep, rank, generate, birdview."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import metrics, model, render, sweep, synthgen
from .criticality import CriticalityConfig
from .matching import distance_limits_default


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _parse_config(text: str) -> CriticalityConfig:
    values = _parse_floats(text)
    if len(values) != 3:
        raise ValueError(f"expected dmax,rmax,tmax, got {text!r}")
    return CriticalityConfig(*values)


def _load_grid(spec: str) -> sweep.ConfigGrid:
    if spec == "default":
        return sweep.default_grid()
    with open(spec) as f:
        data = json.load(f)
    return sweep.ConfigGrid(
        d_values=tuple(float(v) for v in data["d_values"]),
        r_values=tuple(float(v) for v in data["r_values"]),
        t_values=tuple(float(v) for v in data["t_values"]),
    )


def _warn_unknown_frames(ingest: dict) -> None:
    unknown = ingest.get("unknown_frame_ids", [])
    if unknown:
        print(
            f"warning: {len(unknown)} detection frame_id(s) not present in ground truth "
            f"(skipped during evaluation): {', '.join(unknown[:5])}"
            + (" ..." if len(unknown) > 5 else ""),
            file=sys.stderr,
        )


def _cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = model.load_ground_truth(args.gt)
    detections = model.load_detections(args.pred)
    cfg = CriticalityConfig(args.dmax, args.rmax, args.tmax)
    report = metrics.evaluate_detector(
        dataset,
        detections,
        class_name=args.class_name,
        dist_limits=args.dist_limits,
        cfg=cfg,
        ap_style=args.ap_style,
        max_range=args.max_range,
        workers=args.workers,
    )
    _warn_unknown_frames(report.ingest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.dump_json(report.to_dict(), out / "report.json")
    for res in report.results:
        metrics.write_curve_csv(
            res.curve, out / f"curve_{args.class_name}_l{res.distance_limit:g}.csv"
        )
    print(
        f"class={args.class_name} ap_style={args.ap_style} "
        f"dmax={cfg.d_max:g} rmax={cfg.r_max:g} tmax={cfg.t_max:g}"
    )
    print(f"{'l':>6}  {'AP':>10}  {'AP_crit':>10}")
    for res in report.results:
        print(f"{res.distance_limit:>6g}  {res.ap:>10.6f}  {res.ap_crit:>10.6f}")
    print(f"report written to {out / 'report.json'}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    dataset = model.load_ground_truth(args.gt)
    detectors: dict[str, list[model.Detection]] = {}
    for spec in args.pred:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = Path(spec).stem, spec
        if name in detectors:
            raise ValueError(f"duplicate detector name {name!r}")
        detectors[name] = model.load_detections(path)
        _warn_unknown_frames(model.ingest_summary(dataset, detectors[name]))
    grid = _load_grid(args.grid)
    rows = sweep.evaluate_sweep(
        dataset,
        detectors,
        grid,
        dist_limits=args.dist_limits,
        class_name=args.class_name,
        ap_style=args.ap_style,
        max_range=args.max_range,
        workers=args.workers,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sweep.write_sweep_csv(rows, out / "sweep.csv")
    model.dump_json(sweep.rankings_report(rows, args.dist_limits), out / "rankings.json")
    print(
        f"swept {len(detectors)} detector(s) x {len(args.dist_limits)} limit(s) x "
        f"{len(grid)} config(s) -> {len(rows)} rows"
    )
    print(f"table written to {out / 'sweep.csv'}; rankings to {out / 'rankings.json'}")
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    rows = sweep.read_sweep_csv(args.table)
    limits = [args.limit] if args.limit is not None else sorted({r.distance_limit for r in rows})
    for limit in limits:
        if args.config is not None:
            config = args.config
        else:
            subset = [r for r in rows if r.distance_limit == limit]
            first = min(subset, key=lambda r: (r.d_max, r.r_max, r.t_max))
            config = CriticalityConfig(first.d_max, first.r_max, first.t_max)
        order = sweep.rank(rows, args.metric, limit, config)
        other = "ap" if args.metric == "ap_crit" else "ap_crit"
        diff = sweep.ranking_diff(
            sweep.rank(rows, other, limit, config), order, metric_a=other, metric_b=args.metric
        )
        values = {
            r.detector: (r.ap if args.metric == "ap" else r.ap_crit)
            for r in rows
            if r.distance_limit == limit
            and (r.d_max, r.r_max, r.t_max) == (config.d_max, config.r_max, config.t_max)
        }
        print(
            f"l={limit:g} config=({config.d_max:g},{config.r_max:g},{config.t_max:g}) "
            f"metric={args.metric}"
        )
        for i, name in enumerate(order, start=1):
            print(f"  {i}. {name}  {values[name]:.6f}")
        print(f"  vs {other}: n_moved={diff.n_moved} max_displacement={diff.max_displacement}")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    with open(args.spec) as f:
        data = json.load(f)
    scenario_data = data.get("scenario", data)
    spec = synthgen.scenario_from_dict(scenario_data)
    if args.seed is not None:
        spec = synthgen.ScenarioSpec(
            n_frames=spec.n_frames,
            ego_start=spec.ego_start,
            ego_velocity=spec.ego_velocity,
            objects=spec.objects,
            seed=args.seed,
            frame_prefix=spec.frame_prefix,
        )
    dataset = synthgen.gen_dataset(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.dump_json(model.dataset_to_dict(dataset), out / "gt.json")
    written = [out / "gt.json"]
    detectors = data.get("detectors", {})
    for i, name in enumerate(sorted(detectors)):
        error_model = synthgen.error_model_from_dict(detectors[name])
        detections = synthgen.corrupt(dataset, error_model, seed=spec.seed + i)
        path = out / f"{name}.json"
        model.dump_json(model.detections_to_dict(detections), path)
        written.append(path)
    print(f"generated {len(dataset.frames)} frame(s); wrote {', '.join(str(p) for p in written)}")
    return 0


def _cmd_birdview(args: argparse.Namespace) -> int:
    dataset = model.load_ground_truth(args.gt)
    try:
        frame = dataset.frame(args.frame)
    except KeyError:
        raise ValueError(f"unknown frame_id {args.frame!r}") from None
    detections = model.load_detections(args.pred) if args.pred else []
    grouped = model.detections_by_frame(detections)
    cfg = CriticalityConfig(args.dmax, args.rmax, args.tmax)
    svg = render.render_birdview(frame, grouped.get(args.frame, []), cfg, weight=args.weight)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    print(f"bird view written to {out}")
    return 0


def _add_common_eval_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--class", dest="class_name", default="car", help="object class to evaluate")
    parser.add_argument(
        "--dist-limits",
        type=_parse_floats,
        default=distance_limits_default(),
        help="comma-separated matching distance limits in meters (default 0.5,1,2,4)",
    )
    parser.add_argument("--ap-style", choices=list(metrics.AP_STYLES), default="paper")
    parser.add_argument("--max-range", type=float, default=metrics.DEFAULT_EVAL_RANGE,
                        help="evaluation range around ego in meters (default 50)")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel workers (default: CRIT_EVAL_THREADS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="criteval",
        description="Criticality-weighted evaluation of object detections for driving tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="evaluate one detector and write report + curves")
    p.add_argument("--gt", required=True, help="ground-truth JSON")
    p.add_argument("--pred", required=True, help="detection-results JSON")
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    _add_common_eval_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("sweep", help="evaluate a configuration grid for several detectors")
    p.add_argument("--gt", required=True)
    p.add_argument(
        "--pred",
        action="append",
        required=True,
        metavar="NAME=PATH",
        help="detector results file; repeatable (bare PATH uses the file stem as name)",
    )
    p.add_argument("--grid", default="default", help="'default' or a grid JSON path")
    _add_common_eval_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("rank", help="rank detectors from a sweep table")
    p.add_argument("--table", required=True, help="sweep.csv from the sweep command")
    p.add_argument("--metric", choices=["ap", "ap_crit"], required=True)
    p.add_argument("--l", dest="limit", type=float, default=None, help="distance limit filter")
    p.add_argument("--config", type=_parse_config, default=None, metavar="DMAX,RMAX,TMAX")
    p.set_defaults(fn=_cmd_rank)

    p = sub.add_parser("generate", help="generate a synthetic dataset (and detector files)")
    p.add_argument("--spec", required=True, help="scenario (+ optional detectors) JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="override the seed in the scenario file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("birdview", help="render one frame as an annotated SVG")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", default=None)
    p.add_argument("--frame", required=True)
    p.add_argument("--weight", choices=list(render.WEIGHT_NAMES), default="kappa")
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(fn=_cmd_birdview)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (model.IngestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
