"""Event log data model, ingestion, synthetic generation and the central footprint oracle."""

from __future__ import annotations

import bisect
import csv
import gzip
import io
import random
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

from .footprint import MergedFM

__all__ = [
    "Event",
    "ActivityTable",
    "EventLog",
    "ValidationError",
    "SchemaError",
    "ValidationReport",
    "Relation",
    "parse_xes",
    "parse_csv",
    "read_log",
    "write_csv",
    "generate_synthetic",
    "validate_log",
    "central_footprint",
    "relation",
]

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class ValidationError(ValueError):
    """Raised when a log violates the distinct-timestamps-per-case assumption."""

    def __init__(self, message: str, pairs: Sequence[tuple[str, int]] = ()):
        super().__init__(message)
        self.pairs = list(pairs)


class SchemaError(ValueError):
    """Raised when an input file lacks a required attribute or column."""


class Event(NamedTuple):
    case_id: str
    activity_id: int
    timestamp: int  # microseconds since epoch
    seq: int


class ActivityTable:
    """Bidirectional map between activity names and dense ids ``0..n-1``."""

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        idx = self._ids.get(name)
        if idx is None:
            idx = len(self._names)
            self._ids[name] = idx
            self._names.append(name)
        return idx

    def id(self, name: str) -> int:
        return self._ids[name]

    def name(self, idx: int) -> str:
        return self._names[idx]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    @property
    def n(self) -> int:
        return len(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._ids

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ActivityTable) and self._names == other._names

    def __repr__(self) -> str:
        return f"ActivityTable({self._names!r})"


@dataclass(frozen=True, eq=False)
class EventLog:
    """Immutable event log.

    ``events`` are ordered by ``(timestamp, seq)``; ``cases`` maps each case id to
    its trace ordered by timestamp.
    """

    events: tuple[Event, ...]
    activities: ActivityTable
    cases: dict[str, tuple[Event, ...]] = field(repr=False)

    @classmethod
    def from_events(cls, events: Iterable[Event], activities: ActivityTable) -> "EventLog":
        ordered = tuple(sorted(events, key=lambda e: (e.timestamp, e.seq)))
        cases: dict[str, list[Event]] = {}
        for e in sorted(ordered, key=lambda e: e.seq):
            cases.setdefault(e.case_id, []).append(e)
        traces = {c: tuple(sorted(evs, key=lambda e: (e.timestamp, e.seq))) for c, evs in cases.items()}
        return cls(ordered, activities, traces)

    @classmethod
    def from_traces(cls, traces: Sequence[Sequence[str]], step: int = 1_000_000) -> "EventLog":
        """Build a log from activity-name sequences; case ``i`` is named ``str(i)``.

        Events of trace ``i`` get timestamps ``i + k * step`` so cases interleave.
        """
        table = ActivityTable()
        events = []
        for i, trace in enumerate(traces):
            for k, name in enumerate(trace):
                events.append(Event(str(i), table.add(name), i + k * step, len(events)))
        return cls.from_events(events, table)

    @property
    def n_activities(self) -> int:
        return self.activities.n

    def __len__(self) -> int:
        return len(self.events)

    def traces(self) -> list[list[int]]:
        return [[e.activity_id for e in trace] for trace in self.cases.values()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return (
            self.activities == other.activities
            and self.events == other.events
            and self.cases == other.cases
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass
class ValidationReport:
    policy: str
    violations: list[tuple[str, int]] = field(default_factory=list)
    # (case_id, seq, old_timestamp, new_timestamp)
    perturbations: list[tuple[str, int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return bool(self.violations or self.perturbations)


def validate_log(log: EventLog, policy: str = "reject") -> tuple[EventLog, ValidationReport]:
    """Check that timestamps are pairwise distinct within each case.

    With ``policy="reject"`` a :class:`ValidationError` lists every violating
    ``(case, timestamp)`` pair. With ``policy="tiebreak"`` each colliding event is
    moved to one microsecond after its predecessor in seq order and the move is
    recorded. Returns the (possibly repaired) log and the report.
    """
    if policy not in ("reject", "tiebreak"):
        raise ValueError(f"unknown tie policy {policy!r}")
    report = ValidationReport(policy)
    for case, trace in log.cases.items():
        seen = set()
        for e in trace:
            if e.timestamp in seen:
                report.violations.append((case, e.timestamp))
            seen.add(e.timestamp)
    if not report.violations:
        return log, report
    if policy == "reject":
        shown = ", ".join(f"({c!r}, {t})" for c, t in report.violations[:10])
        more = "" if len(report.violations) <= 10 else f" and {len(report.violations) - 10} more"
        raise ValidationError(
            f"{len(report.violations)} duplicate (case, timestamp) pairs: {shown}{more}",
            report.violations,
        )
    fixed: dict[int, Event] = {}
    for case, trace in log.cases.items():
        prev = None
        for e in trace:
            if prev is not None and e.timestamp <= prev:
                new = prev + 1
                report.perturbations.append((case, e.seq, e.timestamp, new))
                fixed[e.seq] = e._replace(timestamp=new)
                prev = new
            else:
                prev = e.timestamp
    events = [fixed.get(e.seq, e) for e in log.events]
    return EventLog.from_events(events, log.activities), report


# -- timestamps ---------------------------------------------------------------

_FRACTION = re.compile(r"(\.\d+)")


def _iso_to_us(text: str) -> int:
    s = text.strip()
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    m = _FRACTION.search(s)
    if m and len(m.group(1)) != 7:  # fromisoformat on 3.10 wants 3 or 6 digits
        frac = (m.group(1)[1:] + "000000")[:6]
        s = s[: m.start()] + "." + frac + s[m.end():]
    if re.search(r"[+-]\d{4}$", s):
        s = s[:-2] + ":" + s[-2:]
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1_000_000 + delta.microseconds


def parse_timestamp(text: str) -> int:
    """Parse an integer (microseconds) or ISO-8601 timestamp to microseconds since epoch."""
    s = text.strip()
    if re.fullmatch(r"-?\d+", s):
        return int(s)
    return _iso_to_us(s)


# -- XES ------------------------------------------------------------------------

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _open_source(source) -> IO[bytes]:
    if isinstance(source, (str, Path)):
        path = Path(source)
        raw = path.open("rb")
        head = raw.read(2)
        raw.seek(0)
        if head == b"\x1f\x8b":
            return gzip.GzipFile(fileobj=raw)
        return raw
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    head = source.read(2)
    rest = source.read()
    data = head + rest
    if head == b"\x1f\x8b":
        data = gzip.decompress(data)
    return io.BytesIO(data)


def parse_xes(
    source,
    *,
    ties: str = "reject",
    activity_key: str = "concept:name",
    timestamp_key: str = "time:timestamp",
    case_key: str = "concept:name",
) -> EventLog:
    """Read an XES document (path, bytes or binary stream; gzip is detected).

    Only the trace-level case name and event-level activity name and timestamp
    are read. Activity ids are assigned in first-seen order.
    """
    stream = _open_source(source)
    table = ActivityTable()
    events: list[Event] = []
    trace_idx = -1
    case_id: str | None = None
    pending: list[tuple[str | None, str | None, int]] = []
    depth_event = False
    try:
        for action, elem in ET.iterparse(stream, events=("start", "end")):
            tag = _local(elem.tag)
            if action == "start":
                if tag == "trace":
                    trace_idx += 1
                    case_id = None
                    pending = []
                elif tag == "event":
                    depth_event = True
                    pending.append([None, None, len(pending)])  # type: ignore[arg-type]
                continue
            if tag == "event":
                depth_event = False
                elem.clear()
            elif tag in ("string", "date") and trace_idx >= 0:
                key = elem.get("key")
                if depth_event:
                    cur = pending[-1]
                    if key == activity_key and tag == "string":
                        cur[0] = elem.get("value")
                    elif key == timestamp_key and tag == "date":
                        cur[1] = elem.get("value")
                elif key == case_key and tag == "string" and case_id is None:
                    case_id = elem.get("value")
            elif tag == "trace":
                if case_id is None:
                    raise SchemaError(f"trace {trace_idx} has no {case_key!r} attribute")
                for name, ts, k in pending:
                    if name is None or ts is None:
                        missing = activity_key if name is None else timestamp_key
                        raise SchemaError(
                            f"event {len(events)} (trace {trace_idx}, position {k}) lacks {missing!r}"
                        )
                    events.append(Event(case_id, table.add(name), _iso_to_us(ts), len(events)))
                elem.clear()
    except ET.ParseError as exc:
        line = exc.position[0] if getattr(exc, "position", None) else "?"
        raise SchemaError(f"malformed XES at line {line}: {exc}") from exc
    log = EventLog.from_events(events, table)
    log, _ = validate_log(log, ties)
    return log


# -- CSV ------------------------------------------------------------------------

DEFAULT_COLUMNS = {"case": "case_id", "activity": "activity", "timestamp": "timestamp_us"}


def parse_csv(source, mapping: dict[str, str] | None = None, *, ties: str = "reject") -> EventLog:
    """Read a headed UTF-8 CSV; ``mapping`` names the case/activity/timestamp columns."""
    cols = dict(DEFAULT_COLUMNS)
    if mapping:
        cols.update({k: v for k, v in mapping.items() if v})
    if isinstance(source, (str, Path)):
        text = Path(source).read_bytes()
    elif isinstance(source, bytes):
        text = source
    else:
        text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for role in ("case", "activity", "timestamp"):
        if cols[role] not in header:
            raise SchemaError(f"unknown {role} column {cols[role]!r}; header is {header}")
    table = ActivityTable()
    events = []
    for row_no, row in enumerate(reader, start=2):
        try:
            ts = parse_timestamp(row[cols["timestamp"]])
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"row {row_no}: unparseable timestamp {row[cols['timestamp']]!r}") from exc
        events.append(Event(row[cols["case"]], table.add(row[cols["activity"]]), ts, len(events)))
    log = EventLog.from_events(events, table)
    log, _ = validate_log(log, ties)
    return log


def write_csv(log: EventLog, target=None) -> str:
    """Canonical serialization ``case_id,activity,timestamp_us`` in ingestion order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", "activity", "timestamp_us"])
    names = log.activities.names
    for e in sorted(log.events, key=lambda e: e.seq):
        w.writerow([e.case_id, names[e.activity_id], e.timestamp])
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text, encoding="utf-8")
    return text


def read_log(path, fmt: str | None = None, *, ties: str = "reject", mapping=None) -> EventLog:
    path = Path(path)
    if fmt is None:
        suffixes = "".join(path.suffixes).lower()
        fmt = "xes" if ".xes" in suffixes else "csv"
    if fmt == "xes":
        return parse_xes(path, ties=ties)
    if fmt == "csv":
        return parse_csv(path, mapping, ties=ties)
    raise ValueError(f"unknown log format {fmt!r}")


# -- synthetic logs ---------------------------------------------------------------

def _default_name(i: int) -> str:
    if i < 26:
        return chr(ord("a") + i)
    return f"act{i}"


def generate_synthetic(
    n: int,
    n_cases: int,
    weights,
    *,
    length: tuple[int, int] | int = (1, 20),
    start_weights=None,
    seed: int = 0,
    gap_us: tuple[int, int] = (1_000, 60_000),
    case_spread_us: int = 1_000_000,
    names: Sequence[str] | None = None,
) -> EventLog:
    """Sample a log from a first-order transition matrix.

    ``weights[i][j]`` is the relative weight of ``j`` following ``i``. Trace lengths
    are uniform on the inclusive ``length`` range; case starts are uniform on
    ``[0, case_spread_us]`` and inter-event gaps uniform on ``gap_us``, so cases
    interleave. Activities that never occur still get an id.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = np.asarray(weights, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"weights must be {n}x{n}, got {w.shape}")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    s = np.ones(n) if start_weights is None else np.asarray(start_weights, dtype=float)
    if s.sum() <= 0:
        raise ValueError("start weights are all zero")
    lo, hi = (length, length) if isinstance(length, int) else length
    rng = random.Random(seed)
    cum_rows = [np.cumsum(row).tolist() for row in w]
    cum_start = np.cumsum(s).tolist()
    names = list(names) if names is not None else [_default_name(i) for i in range(n)]
    table = ActivityTable(names)

    def draw(cum):
        return bisect.bisect_right(cum, rng.random() * cum[-1])

    events = []
    for c in range(n_cases):
        t = rng.randint(0, case_spread_us)
        cur = min(draw(cum_start), n - 1)
        for k in range(rng.randint(lo, hi)):
            if k:
                if cum_rows[cur][-1] <= 0:
                    raise ValueError(f"transition row {cur} has all-zero weight")
                cur = min(draw(cum_rows[cur]), n - 1)
                t += rng.randint(*gap_us)
            events.append(Event(f"c{c}", cur, t, len(events)))
    return EventLog.from_events(events, table)


def skewed_weights(n: int, dominant: float = 0.8, seed: int = 0) -> np.ndarray:
    """Transition matrix where each activity has one dominant successor.

    Dominant successors form a random cyclic permutation, so every activity also
    has one dominant predecessor; the remaining mass is spread uniformly.
    """
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    succ = {order[i]: order[(i + 1) % n] for i in range(n)}
    w = np.full((n, n), (1.0 - dominant) / max(n - 1, 1))
    for i in range(n):
        w[i, succ[i]] = dominant if n > 1 else 1.0
    return w


# -- central oracle -------------------------------------------------------------

def central_footprint(log: EventLog) -> MergedFM:
    """Count adjacent pairs over all traces; starts/ends are first/last activities."""
    n = log.n_activities
    counts = np.zeros((n, n), dtype=np.int64)
    starts, ends = set(), set()
    for trace in log.cases.values():
        if not trace:
            continue
        starts.add(trace[0].activity_id)
        ends.add(trace[-1].activity_id)
        for a, b in zip(trace, trace[1:]):
            counts[a.activity_id, b.activity_id] += 1
    return MergedFM(counts, frozenset(starts), frozenset(ends), names=log.activities.names)


class Relation(str, Enum):
    CAUSALITY = "causality"  # a -> b
    REVERSE_CAUSALITY = "reverse_causality"  # b -> a
    PARALLEL = "parallel"
    NO_SUCCESSION = "no_succession"


def succession(fm: MergedFM, a: int, b: int) -> bool:
    """``a >_L b``: b directly follows a somewhere in the log."""
    return bool(fm.counts[a, b] > 0)


def relation(fm: MergedFM, a: int, b: int) -> Relation:
    ab, ba = succession(fm, a, b), succession(fm, b, a)
    if ab and not ba:
        return Relation.CAUSALITY
    if ba and not ab:
        return Relation.REVERSE_CAUSALITY
    if ab and ba:
        return Relation.PARALLEL
    return Relation.NO_SUCCESSION
