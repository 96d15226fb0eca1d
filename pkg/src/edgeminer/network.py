"""Deterministic discrete-event network simulation.

Virtual time is the log's own microsecond clock. Each log event is injected into
its activity's node at its timestamp; messages are delivered after a latency
drawn from the configured model. The scheduler is a single priority queue keyed
on ``(delivery_time, dst, src, sequence)``, so a run is a pure function of
``(log, config)``.
"""

from __future__ import annotations

import csv
import heapq
import io
import random
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .events import EventLog
from .footprint import MergedFM, PartialFM, merge_columns
from .node import (
    MFP,
    ORACLE,
    QUERY_ALL,
    EventMetrics,
    FMRequest,
    FMResponse,
    Kind,
    Message,
    Node,
    Strategy,
)

__all__ = [
    "Latency",
    "SimConfig",
    "SimResult",
    "Simulation",
    "CollectionError",
    "run",
    "oracle_predecessors",
    "oracle_strategy_cost",
    "default_end_timeout",
    "load_config",
]

INJECT = -1  # pseudo source id for sensed events
_KIND_NAMES = {
    Kind.PRED_QUERY: "PredQuery",
    Kind.PRED_RESPONSE: "PredResponse",
    Kind.CHOSEN_NOTIFY: "ChosenNotify",
    Kind.CORRECTION_NOTIFY: "CorrectionNotify",
    Kind.FM_REQUEST: "FMRequest",
    Kind.FM_RESPONSE: "FMResponse",
}


class CollectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Latency:
    """Message latency model in microseconds.

    ``kind`` is ``"zero"``, ``"fixed"`` (``lo`` microseconds) or ``"uniform"``
    (integer draw on ``[lo, hi]``). ``channels`` overrides the delay for specific
    ``(src, dst)`` pairs, which is how hand-built delivery races are expressed.
    """

    kind: str = "zero"
    lo: int = 0
    hi: int = 0
    channels: Mapping[tuple[int, int], int] | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "fixed", "uniform"):
            raise ValueError(f"unknown latency model {self.kind!r}")
        if self.lo < 0 or (self.kind == "uniform" and self.lo > self.hi):
            raise ValueError(f"invalid latency bounds lo={self.lo} hi={self.hi}")

    @classmethod
    def parse(cls, text: str) -> "Latency":
        """Parse ``zero``, ``fixed:D`` or ``uniform:LO:HI`` (microseconds)."""
        parts = text.strip().split(":")
        if parts[0] == "zero" and len(parts) == 1:
            return cls()
        if parts[0] == "fixed" and len(parts) == 2:
            return cls("fixed", int(parts[1]), int(parts[1]))
        if parts[0] == "uniform" and len(parts) == 3:
            return cls("uniform", int(parts[1]), int(parts[2]))
        raise ValueError(f"cannot parse latency {text!r}; use zero, fixed:D or uniform:LO:HI")

    def __str__(self) -> str:
        if self.kind == "zero":
            return "zero"
        if self.kind == "fixed":
            return f"fixed:{self.lo}"
        return f"uniform:{self.lo}:{self.hi}"


@dataclass(frozen=True)
class SimConfig:
    latency: Latency = field(default_factory=Latency)
    batch_size: int = 1
    strategy: str = MFP
    window_limit: int | None = None  # microseconds of age; None keeps everything
    memory_cap: int | None = None  # stored events per node
    end_timeout: int | None = None  # None derives it from the log
    seed: int = 0
    fifo: bool = True
    snapshot_every: int | None = None  # injected events between FM snapshots
    record_trace: bool = True
    max_searches: int = 1000

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.strategy not in Strategy.ALL:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if isinstance(self.latency, str):
            object.__setattr__(self, "latency", Latency.parse(self.latency))

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


def load_config(path, base: SimConfig | None = None) -> SimConfig:
    """Read a TOML key/value file whose keys match :class:`SimConfig` fields."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    doc = doc.get("simulation", doc)
    known = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    if "latency" in doc:
        doc["latency"] = Latency.parse(str(doc["latency"]))
    return replace(base or SimConfig(), **doc)


@dataclass
class SimResult:
    config: SimConfig
    nodes: list[Node]
    footprint: MergedFM
    trace: list[tuple[int, int, int, int, str]]  # (time_us, src, dst, kind, case_id)
    metrics: EventMetrics
    snapshots: list[tuple[int, MergedFM]]
    message_counts: dict[str, int]
    end_time: int
    n_events: int

    @property
    def n(self) -> int:
        return len(self.nodes)

    def mean_queried(self) -> float:
        return float(np.mean(self.metrics.queried)) if self.n_events else 0.0

    def mean_messages(self) -> float:
        return float(np.mean(self.metrics.messages)) if self.n_events else 0.0

    def total_corrections(self) -> int:
        return self.message_counts.get("CorrectionNotify", 0)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_us", "src", "dst", "variant", "case_id"])
        names = [k.name for k in Kind]
        for t, src, dst, kind, case in self.trace:
            w.writerow([t, src, dst, names[kind], case])
        return buf.getvalue()

    def save_trace(self, path) -> None:
        """Write the trace as CSV, or as a compact ``.npz`` when the suffix says so."""
        path = Path(path)
        if path.suffix == ".npz":
            cases = sorted({row[4] for row in self.trace})
            index = {c: i for i, c in enumerate(cases)}
            arr = np.array(
                [(t, s, d, k, index[c]) for t, s, d, k, c in self.trace],
                dtype=[("time_us", "<i8"), ("src", "<i4"), ("dst", "<i4"), ("kind", "i1"), ("case", "<i4")],
            )
            np.savez_compressed(path, trace=arr, cases=np.array(cases, dtype=object).astype(str))
        else:
            path.write_text(self.trace_csv(), encoding="utf-8")


def load_trace_npz(path) -> list[tuple[int, int, int, int, str]]:
    with np.load(path, allow_pickle=False) as data:
        arr, cases = data["trace"], data["cases"]
        return [(int(r["time_us"]), int(r["src"]), int(r["dst"]), int(r["kind"]), str(cases[r["case"]])) for r in arr]


def oracle_predecessors(log: EventLog) -> list[int | None]:
    """True predecessor activity of every event (indexed by position in ``log.events``)."""
    pos = {e.seq: i for i, e in enumerate(log.events)}
    out: list[int | None] = [None] * len(log.events)
    for trace in log.cases.values():
        for a, b in zip(trace, trace[1:]):
            out[pos[b.seq]] = a.activity_id
    return out


def oracle_strategy_cost(log: EventLog) -> list[int]:
    """Queries an all-knowing node would need: 0 for starts and self-loops, else 1."""
    preds = oracle_predecessors(log)
    return [0 if p is None or p == e.activity_id else 1 for e, p in zip(log.events, preds)]


def default_end_timeout(log: EventLog) -> int:
    """Twice the 99th percentile of within-case gaps (at least one microsecond)."""
    gaps = [b.timestamp - a.timestamp for t in log.cases.values() for a, b in zip(t, t[1:])]
    if not gaps:
        return 1
    return max(1, int(2 * np.percentile(gaps, 99)))


class Simulation:
    """One simulated network replaying ``log``.

    Use :meth:`run` for a complete replay, or :meth:`run_until` plus
    :meth:`collect` to request footprints part way through.
    """

    def __init__(self, log: EventLog, config: SimConfig | None = None):
        self.log = log
        self.config = config = config or SimConfig()
        self.n = n = log.n_activities
        self.collector_id = n
        events = log.events
        self.metrics = EventMetrics.zeros(len(events))
        self.end_timeout = config.end_timeout if config.end_timeout is not None else default_end_timeout(log)
        oracle = None
        if config.strategy == ORACLE:
            oracle = dict(enumerate(oracle_predecessors(log)))
        self.nodes = [
            Node(
                a,
                n,
                strategy=config.strategy,
                batch_size=config.batch_size,
                window_limit=config.window_limit,
                memory_cap=config.memory_cap,
                end_timeout=self.end_timeout,
                max_searches=config.max_searches,
                oracle_pred=oracle,
                metrics=self.metrics,
            )
            for a in range(n)
        ]
        self.now = events[0].timestamp if events else 0
        self.trace: list[tuple[int, int, int, int, str]] = []
        self._kind_counts = [0] * len(Kind)
        self._record = config.record_trace
        self.snapshots: list[tuple[int, MergedFM]] = []
        self.injected = 0
        self._heap: list = []
        self._seq = 0
        self._rng = random.Random(config.seed)
        self._last_delivery: dict[tuple[int, int], int] = {}
        self._collections: dict[int, dict[int, PartialFM]] = {}
        self._next_request = 0
        self._flushed = False
        self._settled = False

    # -- plumbing -----------------------------------------------------------

    def _delay(self, src: int, dst: int) -> int:
        lat = self.config.latency
        if lat.channels and (src, dst) in lat.channels:
            return lat.channels[(src, dst)]
        if lat.kind == "zero":
            return 0
        if lat.kind == "fixed":
            return lat.lo
        return lat.lo + int(self._rng.random() * (lat.hi - lat.lo + 1))

    def _send(self, src: int, out) -> None:
        now = self.now
        lat = self.config.latency
        simple = lat.kind == "zero" and not lat.channels
        fifo = self.config.fifo
        last_delivery = self._last_delivery
        heap = self._heap
        for dst, body in out:
            t = now if simple else now + self._delay(src, dst)
            if fifo and not simple:
                key = (src, dst)
                last = last_delivery.get(key)
                if last is not None and t < last:
                    t = last
                last_delivery[key] = t
            self._seq += 1
            heapq.heappush(heap, (t, dst, src, self._seq, body, now))

    def _deliver(self, t: int, dst: int, src: int, body) -> None:
        kind = body.kind
        self._kind_counts[kind] += 1
        if self._record:
            self.trace.append((t, src, dst, int(kind), body.case_id))
        if dst == self.collector_id:
            self._collections[body.request_id][src] = body.partial
            return
        node = self.nodes[dst]
        if kind == Kind.PRED_QUERY:
            out = node.on_query(src, body)
        elif kind == Kind.PRED_RESPONSE:
            out = node.on_response(src, body, t)
        elif kind == Kind.CHOSEN_NOTIFY:
            out = node.on_chosen_notify(body, t)
        elif kind == Kind.CORRECTION_NOTIFY:
            out = node.on_correction(body, t)
        elif kind == Kind.FM_REQUEST:
            out = [(src, FMResponse(body.request_id, node.partial))]
        else:
            raise ValueError(f"unexpected message {body!r} at node {dst}")
        if out:
            self._send(dst, out)

    @property
    def message_counts(self) -> dict[str, int]:
        return {_KIND_NAMES[k]: c for k, c in enumerate(self._kind_counts) if c}

    def _inject(self, idx: int) -> None:
        e = self.log.events[idx]
        node = self.nodes[e.activity_id]
        out = node.on_local_event(e, self.now, ref=idx)
        if out:
            self._send(e.activity_id, out)
        node.apply_window(self.now)
        node.flag_end_events(self.now)
        self.injected += 1
        every = self.config.snapshot_every
        if every and self.injected % every == 0:
            self.snapshots.append((self.injected, self.snapshot()))

    def _step_messages_until(self, limit_key) -> None:
        heap = self._heap
        pop = heapq.heappop
        deliver = self._deliver
        while heap and (limit_key is None or heap[0][:3] < limit_key):
            t, dst, src, _, body, _ = pop(heap)
            self.now = t
            deliver(t, dst, src, body)

    # -- driving ------------------------------------------------------------

    def run_until(self, n_events: int) -> None:
        """Inject events up to (excluding) index ``n_events``, delivering due messages."""
        events = self.log.events
        stop = min(n_events, len(events))
        while self.injected < stop:
            e = events[self.injected]
            self._step_messages_until((e.timestamp, e.activity_id, INJECT))
            self.now = max(self.now, e.timestamp)
            self._inject(self.injected)

    def drain(self) -> None:
        self._step_messages_until(None)

    def finish_phase1(self) -> None:
        """Inject everything, flush batches, drain, then let end flags settle."""
        self.run_until(len(self.log.events))
        self.drain()
        if not self._flushed:
            self._flushed = True
            for node in self.nodes:
                out = node.flush()
                if out:
                    self._send(node.activity, out)
            self.drain()
        if not self._settled:
            self._settled = True
            self.now += self.end_timeout + 1
            for node in self.nodes:
                node.flag_end_events(self.now)

    def snapshot(self) -> MergedFM:
        """Merged footprint read straight from node state, without messages."""
        return merge_columns([node.partial for node in self.nodes], self.log.activities.names)

    def pending_messages(self) -> list[Message]:
        """Messages in flight, in delivery order."""
        return [Message(src, dst, sent, t, body) for t, dst, src, _, body, sent in sorted(self._heap, key=lambda x: x[:4])]

    def collect(self) -> MergedFM:
        """Phase 2: request every partial column over the network and concatenate."""
        rid = self._next_request
        self._next_request += 1
        self._collections[rid] = {}
        self._send(self.collector_id, [(a, FMRequest(rid)) for a in range(self.n)])
        heap = self._heap
        got = self._collections[rid]
        while len(got) < self.n and heap:
            t, dst, src, _, body, _ = heapq.heappop(heap)
            self.now = t
            self._deliver(t, dst, src, body)
        missing = [a for a in range(self.n) if a not in got]
        if missing:
            raise CollectionError(f"no footprint response from nodes {missing}")
        del self._collections[rid]
        return merge_columns([got[a] for a in range(self.n)], self.log.activities.names)

    def run(self) -> SimResult:
        self.finish_phase1()
        fm = self.collect()
        every = self.config.snapshot_every
        if every and (not self.snapshots or self.snapshots[-1][0] != self.injected):
            self.snapshots.append((self.injected, fm))
        return SimResult(
            self.config,
            self.nodes,
            fm,
            self.trace,
            self.metrics,
            self.snapshots,
            dict(sorted(self.message_counts.items())),
            self.now,
            len(self.log.events),
        )


def run(log: EventLog, config: SimConfig | None = None, **overrides) -> SimResult:
    """Replay ``log`` through a fresh simulated network and collect the footprint."""
    config = config or SimConfig()
    if overrides:
        config = replace(config, **overrides)
    return Simulation(log, config).run()
