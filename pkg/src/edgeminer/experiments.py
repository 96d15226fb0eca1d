"""Experiment drivers behind the CLI; each returns rows ready for CSV output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .events import EventLog, central_footprint
from .footprint import MergedFM, fitness
from .network import Latency, SimConfig, SimResult, Simulation, oracle_predecessors, oracle_strategy_cost, run

__all__ = [
    "run_summary",
    "baselines",
    "cdf",
    "moving_average",
    "stabilization_index",
    "batch_sweep",
    "fitness_curve",
    "events_to_fitness",
    "activity_breakdown",
    "dataset_stats",
    "to_csv",
    "cdf_at",
    "skewed_log",
    "default_config",
]


def to_csv(rows: Sequence[dict], header: Sequence[str] | None = None) -> str:
    header = list(header or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 12))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def _stderr(values) -> float:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return 0.0
    return float(v.std(ddof=1) / math.sqrt(len(v)))


def run_summary(log: EventLog, config: SimConfig) -> tuple[dict, SimResult]:
    result = run(log, config)
    oracle = central_footprint(log)
    counts = result.message_counts
    phase1 = sum(counts.get(k, 0) for k in ("PredQuery", "PredResponse", "ChosenNotify", "CorrectionNotify"))
    summary = {
        "events": len(log),
        "activities": log.n_activities,
        "strategy": config.strategy,
        "batch_size": config.batch_size,
        "latency_model": f"{config.latency} (synthetic)",
        "fm_equals_oracle": result.footprint == oracle,
        "phase1_messages": phase1,
        "phase2_messages": counts.get("FMRequest", 0) + counts.get("FMResponse", 0),
        "corrections": counts.get("CorrectionNotify", 0),
        "mean_queried_nodes_per_event": result.mean_queried(),
        "mean_messages_per_event": phase1 / len(log) if len(log) else 0.0,
        "mean_messages_per_linked_event": _linked_mean(log, result),
        **{f"count_{k}": v for k, v in counts.items()},
    }
    if not summary["fm_equals_oracle"]:
        summary["mismatch"] = result.footprint.diff(oracle)
    return summary, result


def _linked_mean(log: EventLog, result: SimResult) -> float:
    """Mean Phase 1 messages over events that have a predecessor (starts excluded)."""
    preds = oracle_predecessors(log)
    costs = [m for m, p in zip(result.metrics.messages, preds) if p is not None]
    return float(np.mean(costs)) if costs else 0.0


def _queried(log: EventLog, config: SimConfig) -> np.ndarray:
    if config.strategy == "oracle" and config.batch_size == 1 and config.latency.kind == "zero":
        return np.asarray(oracle_strategy_cost(log), dtype=float)
    return np.asarray(run(log, replace(config, record_trace=False)).metrics.queried, dtype=float)


def baselines(log: EventLog, config: SimConfig, seeds: Iterable[int] = (0,)) -> list[dict]:
    """Mean queried nodes per event for the oracle, MFP and query-all strategies.

    Per-event costs are pooled over seeds; reduction is relative to query-all.
    """
    seeds = list(seeds)
    pooled = {}
    for strategy in ("oracle", "mfp", "query_all"):
        costs = [_queried(log, replace(config, strategy=strategy, seed=s)) for s in seeds]
        pooled[strategy] = np.concatenate(costs) if costs else np.zeros(0)
    ref = float(pooled["query_all"].mean()) if len(log) else 0.0
    rows = []
    for strategy, costs in pooled.items():
        mean = float(costs.mean()) if len(costs) else 0.0
        rows.append(
            {
                "strategy": strategy,
                "mean_queried_nodes": mean,
                "stderr_queried_nodes": _stderr(costs),
                "reduction_pct_vs_query_all": 100.0 * (1.0 - mean / ref) if ref else 0.0,
            }
        )
    return rows


def cdf(log: EventLog, config: SimConfig) -> list[dict]:
    """Empirical CDF of the share of other nodes queried per event."""
    q = _queried(log, config)
    others = max(log.n_activities - 1, 1)
    frac = np.sort(q / others)
    xs, idx = np.unique(frac, return_index=True)
    rows = []
    total = len(frac)
    for k, x in enumerate(xs):
        upto = idx[k + 1] if k + 1 < len(xs) else total
        rows.append({"fraction_nodes_queried": float(x), "fraction_events": upto / total})
    return rows


def cdf_at(rows: Sequence[dict], x: float) -> float:
    """CDF value at ``x`` (fraction of events whose share of queried nodes is <= x)."""
    y = 0.0
    for row in rows:
        if row["fraction_nodes_queried"] <= x + 1e-12:
            y = row["fraction_events"]
    return y


def moving_average(
    log: EventLog, config: SimConfig, windows: Sequence[tuple[int, int]], limit: int | None = None
) -> list[dict]:
    """Sliding mean of queried nodes per event for each ``(window, step)``."""
    q = _queried(log, config)
    if limit is not None:
        q = q[:limit]
    rows = []
    for window, step in windows:
        if window > len(q):
            raise ValueError(f"window {window} exceeds the {len(q)} available events")
        if window < 1 or step < 1:
            raise ValueError("window and step must be positive")
        csum = np.concatenate([[0.0], np.cumsum(q)])
        for end in range(window, len(q) + 1, step):
            rows.append(
                {
                    "window": window,
                    "step": step,
                    "event_index": end,
                    "mean_queried_nodes": float((csum[end] - csum[end - window]) / window),
                    "query_all_nodes": log.n_activities - 1,
                }
            )
    return rows


def stabilization_index(
    rows: Sequence[dict], threshold: float = 0.5, per: int = 100, patience: int = 5
) -> int | None:
    """First event index after which the series slope stays below ``threshold`` per ``per`` events.

    The slope must hold for ``patience`` consecutive steps. Returns None if it never does.
    """
    pts = [(r["event_index"], r["mean_queried_nodes"]) for r in rows]
    calm = 0
    for k in range(1, len(pts)):
        (x0, y0), (x1, y1) = pts[k - 1], pts[k]
        slope = abs(y1 - y0) / (x1 - x0) * per
        calm = calm + 1 if slope < threshold else 0
        if calm >= patience:
            return pts[k - patience][0]
    return None


def batch_sweep(log: EventLog, config: SimConfig, sizes: Sequence[int]) -> list[dict]:
    """Queried nodes per event against batch size; ``normalized`` divides by ``n - 1``."""
    others = max(log.n_activities - 1, 1)
    rows = []
    for b in sizes:
        result = run(log, replace(config, batch_size=b, record_trace=False))
        k = result.mean_queried()
        rows.append(
            {
                "batch_size": b,
                "mean_queried_nodes": k,
                "normalized_queried": k / others,
                "messages_per_event_2k_plus_1": 2 * k + 1,
                "measured_phase1_messages_per_event": result.mean_messages(),
            }
        )
    return rows


def fitness_curve(
    log: EventLog,
    config: SimConfig,
    interval: int,
    metric: Callable[[MergedFM, MergedFM], float] = fitness,
) -> list[dict]:
    """Fitness of intermediate merged footprints against the final one."""
    if interval < 1:
        raise ValueError("interval must be positive")
    sim = Simulation(log, replace(config, snapshot_every=interval, record_trace=False))
    result = sim.run()
    final = result.footprint
    total = max(len(log), 1)
    rows = []
    for processed, fm in result.snapshots:
        rows.append(
            {
                "events_processed": processed,
                "fraction_events": processed / total,
                "fitness": metric(fm, final),
            }
        )
    if rows:
        rows[-1]["fitness"] = metric(final, final)
    return rows


def events_to_fitness(rows: Sequence[dict], level: float = 0.9) -> int | None:
    for row in rows:
        if row["fitness"] >= level:
            return row["events_processed"]
    return None


def activity_breakdown(log: EventLog, config: SimConfig) -> list[dict]:
    q = _queried(log, config)
    n_cases = max(len(log.cases), 1)
    starts = np.zeros(log.n_activities, dtype=int)
    for trace in log.cases.values():
        if trace:
            starts[trace[0].activity_id] += 1
    per: dict[int, list[float]] = {a: [] for a in range(log.n_activities)}
    for e, cost in zip(log.events, q):
        per[e.activity_id].append(float(cost))
    rows = []
    for a in sorted(range(log.n_activities), key=lambda a: log.activities.name(a)):
        vals = per[a]
        rows.append(
            {
                "activity": log.activities.name(a),
                "occurrences": len(vals),
                "mean_queried_nodes": float(np.mean(vals)) if vals else 0.0,
                "stderr_queried_nodes": _stderr(vals),
                "is_start": bool(starts[a] > 0),
                "start_case_share": starts[a] / n_cases,
            }
        )
    return rows


def dataset_stats(log: EventLog) -> dict:
    """Log properties: sizes, start activities, self-loops and predecessor spread."""
    fm = central_footprint(log)
    lengths = [len(t) for t in log.cases.values()]
    preds = (fm.counts > 0).sum(axis=0)
    return {
        "events": len(log),
        "activities": log.n_activities,
        "start_activities": len(fm.starts),
        "cases": len(log.cases),
        "mean_length": float(np.mean(lengths)) if lengths else 0.0,
        "self_loops": int(np.trace(fm.counts)),
        "mean_predecessors": float(preds.mean()) if len(preds) else 0.0,
        "std_predecessors": float(preds.std(ddof=1)) if len(preds) > 1 else 0.0,
    }


def skewed_log(n: int = 16, n_cases: int = 200, dominant: float = 0.8, seed: int = 0, length=(10, 30)) -> EventLog:
    """Synthetic log whose activities each have one dominant predecessor."""
    from .events import generate_synthetic, skewed_weights

    return generate_synthetic(n, n_cases, skewed_weights(n, dominant, seed), length=length, seed=seed)


def default_config(**overrides) -> SimConfig:
    cfg = SimConfig(latency=Latency(), record_trace=False)
    return replace(cfg, **overrides)
