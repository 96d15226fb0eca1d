"""Command-line entry point: ``edgeminer <command> --log FILE [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import datasets, experiments
from .alpha import alpha
from .collector import build_dfg, dependency_csv
from .events import generate_synthetic, read_log, skewed_weights, write_csv
from .network import Latency, SimConfig, load_config

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log", required=True, help="event log (XES, XES.gz or CSV)")
    p.add_argument("--format", choices=["xes", "csv"], help="log format; guessed from the suffix")
    p.add_argument("--case-col", help="CSV case column (default case_id)")
    p.add_argument("--activity-col", help="CSV activity column (default activity)")
    p.add_argument("--timestamp-col", help="CSV timestamp column (default timestamp_us)")
    p.add_argument("--ties", choices=["reject", "tiebreak"], default="reject",
                   help="equal timestamps within a case")
    p.add_argument("--config", help="TOML file with simulation settings")
    p.add_argument("--strategy", choices=["mfp", "query_all", "oracle"])
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--latency", help="zero | fixed:US | uniform:LO_US:HI_US")
    p.add_argument("--window", type=int, help="discard settled events older than this many microseconds")
    p.add_argument("--end-timeout", type=int, help="microseconds without successor before flagging an end")
    p.add_argument("--out", help="output file (default stdout)")


def _config(args) -> SimConfig:
    cfg = SimConfig(record_trace=False)
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {
        "strategy": args.strategy,
        "batch_size": args.batch_size,
        "seed": args.seed,
        "latency": Latency.parse(args.latency) if args.latency else None,
        "window_limit": args.window,
        "end_timeout": args.end_timeout,
    }
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _load(args):
    mapping = {"case": args.case_col, "activity": args.activity_col, "timestamp": args.timestamp_col}
    return read_log(args.log, args.format, ties=args.ties, mapping=mapping)


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.trace:
        cfg = replace(cfg, record_trace=True)
    summary, result = experiments.run_summary(_load(args), cfg)
    if args.trace:
        result.save_trace(args.trace)
    if args.fm_out:
        Path(args.fm_out).write_text(result.footprint.to_json() + "\n", encoding="utf-8")
    lines = [f"{k}: {str(v).lower() if isinstance(v, bool) else v}" for k, v in summary.items()]
    _emit(args, "\n".join(lines) + "\n")
    return 0 if summary["fm_equals_oracle"] else 1


def cmd_baselines(args) -> int:
    seeds = range(args.seeds) if args.seeds else [_config(args).seed]
    _emit(args, experiments.to_csv(experiments.baselines(_load(args), _config(args), seeds)))
    return 0


def cmd_cdf(args) -> int:
    _emit(args, experiments.to_csv(experiments.cdf(_load(args), _config(args))))
    return 0


def cmd_moving_average(args) -> int:
    windows = [tuple(int(x) for x in w.split(":")) for w in args.windows]
    rows = experiments.moving_average(_load(args), _config(args), windows, limit=args.limit)
    _emit(args, experiments.to_csv(rows))
    return 0


def cmd_batch_sweep(args) -> int:
    sizes = [int(x) for x in args.sizes.split(",")]
    _emit(args, experiments.to_csv(experiments.batch_sweep(_load(args), _config(args), sizes)))
    return 0


def cmd_fitness_curve(args) -> int:
    rows = experiments.fitness_curve(_load(args), _config(args), args.interval)
    _emit(args, experiments.to_csv(rows))
    return 0


def cmd_activity_breakdown(args) -> int:
    _emit(args, experiments.to_csv(experiments.activity_breakdown(_load(args), _config(args))))
    return 0


def cmd_stats(args) -> int:
    _emit(args, experiments.to_csv([experiments.dataset_stats(_load(args))]))
    return 0


def cmd_mine(args) -> int:
    from .events import central_footprint

    event_log = _load(args)
    if args.central:
        fm = central_footprint(event_log)
    else:
        summary, result = experiments.run_summary(event_log, _config(args))
        fm = result.footprint
    if args.what == "alpha-dot":
        text = alpha(fm).to_dot()
    elif args.what == "alpha-pnml":
        text = alpha(fm).to_pnml()
    elif args.what == "dfg-dot":
        text = build_dfg(fm).to_dot()
    elif args.what == "dependency-csv":
        text = dependency_csv(fm)
    elif args.what == "fm-csv":
        text = fm.to_csv()
    else:
        text = fm.to_json() + "\n"
    _emit(args, text)
    return 0


def cmd_generate(args) -> int:
    w = skewed_weights(args.activities, args.dominant, args.seed)
    event_log = generate_synthetic(
        args.activities, args.cases, w, length=(args.min_length, args.max_length), seed=args.seed
    )
    _emit(args, write_csv(event_log))
    return 0


def cmd_fetch(args) -> int:
    status = 0
    unknown = [k for k in args.datasets if k not in datasets.DATASETS]
    if unknown:
        raise ValueError(f"unknown datasets {unknown}; choose from {list(datasets.DATASETS)}")
    for key in args.datasets or list(datasets.DATASETS):
        try:
            path = datasets.fetch(key, args.url if args.datasets and len(args.datasets) == 1 else None)
            print(f"{key}: {path} (sha256 {datasets.verify(key)})")
        except (FileNotFoundError, ValueError, OSError) as exc:
            print(f"{key}: {exc}", file=sys.stderr)
            status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgeminer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replay a log and compare the collected footprint with the oracle")
    _add_common(p)
    p.add_argument("--trace", help="write the message trace (.csv or .npz)")
    p.add_argument("--fm-out", help="write the collected footprint as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baselines", help="mean queried nodes per event for each strategy")
    _add_common(p)
    p.add_argument("--seeds", type=int, help="number of seeds (0..N-1) to pool")
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("cdf", help="CDF of the share of nodes queried per event")
    _add_common(p)
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("moving-average", help="moving average of queried nodes over the replay")
    _add_common(p)
    p.add_argument("--windows", nargs="+", default=["50:1", "200:100"], help="WINDOW:STEP pairs")
    p.add_argument("--limit", type=int, help="only the first N events")
    p.set_defaults(func=cmd_moving_average)

    p = sub.add_parser("batch-sweep", help="queried nodes per event against batch size")
    _add_common(p)
    p.add_argument("--sizes", default="1,2,5,10,20,40")
    p.set_defaults(func=cmd_batch_sweep)

    p = sub.add_parser("fitness-curve", help="fitness of intermediate footprints against the final one")
    _add_common(p)
    p.add_argument("--interval", type=int, default=100, help="events between samples")
    p.set_defaults(func=cmd_fitness_curve)

    p = sub.add_parser("activity-breakdown", help="per-activity queried nodes and occurrences")
    _add_common(p)
    p.set_defaults(func=cmd_activity_breakdown)

    p = sub.add_parser("stats", help="log properties (events, activities, cases, self-loops, ...)")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("mine", help="export the footprint, DFG, dependency matrix or Alpha net")
    _add_common(p)
    p.add_argument("what", choices=["fm-json", "fm-csv", "dfg-dot", "dependency-csv", "alpha-dot", "alpha-pnml"])
    p.add_argument("--central", action="store_true", help="use the central footprint instead of a replay")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("generate", help="write a synthetic log with one dominant predecessor per activity")
    p.add_argument("--activities", type=int, default=16)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--min-length", type=int, default=10)
    p.add_argument("--max-length", type=int, default=30)
    p.add_argument("--dominant", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fetch", help="locate, download and checksum the evaluation logs")
    p.add_argument("datasets", nargs="*", metavar="DATASET", help=f"any of {', '.join(datasets.DATASETS)}")
    p.add_argument("--url", help="direct download URL (single dataset only)")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"edgeminer: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
