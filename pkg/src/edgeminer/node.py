"""Per-node protocol state machine.

Each node owns one activity. It stores the events it senses, finds each event's
predecessor by querying other nodes, keeps the successor links of its own events
consistent, and maintains its predecessor-count column.
"""

from __future__ import annotations

import bisect
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import ClassVar, Sequence

import numpy as np

from .events import Event
from .footprint import PartialFM

logger = logging.getLogger(__name__)

__all__ = [
    "Strategy",
    "Kind",
    "PredQuery",
    "PredResponse",
    "ChosenNotify",
    "CorrectionNotify",
    "FMRequest",
    "FMResponse",
    "Message",
    "LocalEvent",
    "EventMetrics",
    "Node",
    "ProtocolError",
    "InvariantError",
    "ConvergenceError",
]

QUERY_ALL = "query_all"
MFP = "mfp"
ORACLE = "oracle"


class Strategy:
    QUERY_ALL = QUERY_ALL
    MFP = MFP
    ORACLE = ORACLE
    ALL = (QUERY_ALL, MFP, ORACLE)


class ProtocolError(RuntimeError):
    pass


class InvariantError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    """A predecessor search restarted more often than the watchdog allows."""

    def __init__(self, message: str, case_id: str):
        super().__init__(message)
        self.case_id = case_id


class Kind(IntEnum):
    PRED_QUERY = 0
    PRED_RESPONSE = 1
    CHOSEN_NOTIFY = 2
    CORRECTION_NOTIFY = 3
    FM_REQUEST = 4
    FM_RESPONSE = 5


# -- wire messages --------------------------------------------------------------
# Event references are opaque handles minted by the sensing node.


@dataclass(frozen=True, slots=True)
class PredQuery:
    kind: ClassVar[Kind] = Kind.PRED_QUERY
    search_id: int
    items: tuple  # ((ref, case_id, timestamp), ...)

    @property
    def case_id(self) -> str:
        return self.items[0][1] if len(self.items) == 1 else ""


@dataclass(frozen=True, slots=True)
class PredResponse:
    kind: ClassVar[Kind] = Kind.PRED_RESPONSE
    search_id: int
    # ((queried ref, candidate ref or None, candidate timestamp or None), ...)
    candidates: tuple
    case_id: str = ""


@dataclass(frozen=True, slots=True)
class ChosenNotify:
    kind: ClassVar[Kind] = Kind.CHOSEN_NOTIFY
    pred_ref: int
    succ_ref: int
    succ_ts: int
    succ_activity: int
    case_id: str


@dataclass(frozen=True, slots=True)
class CorrectionNotify:
    kind: ClassVar[Kind] = Kind.CORRECTION_NOTIFY
    event_ref: int
    pred_ref: int
    case_id: str


@dataclass(frozen=True, slots=True)
class FMRequest:
    kind: ClassVar[Kind] = Kind.FM_REQUEST
    request_id: int
    case_id: str = ""


@dataclass(frozen=True, slots=True)
class FMResponse:
    kind: ClassVar[Kind] = Kind.FM_RESPONSE
    request_id: int
    partial: PartialFM
    case_id: str = ""


@dataclass(frozen=True, slots=True)
class Message:
    src: int
    dst: int
    send_time: int
    delivery_time: int
    body: object

    def __post_init__(self):
        if self.delivery_time < self.send_time:
            raise ValueError("delivery_time precedes send_time")

    @property
    def variant(self) -> str:
        return type(self.body).__name__


# -- local state ----------------------------------------------------------------

IDLE, QUERYING, RESOLVED, START = "idle", "querying", "resolved", "start_flagged"


class LocalEvent:
    __slots__ = ("ref", "case", "ts", "pred", "succ", "state", "searches", "end_flagged")

    def __init__(self, ref: int, case: str, ts: int):
        self.ref = ref
        self.case = case
        self.ts = ts
        self.pred: tuple[int, int, int] | None = None  # (ref, activity, timestamp)
        self.succ: tuple[int, int, int] | None = None
        self.state = IDLE
        self.searches = 0
        self.end_flagged = False

    def __repr__(self) -> str:
        return f"LocalEvent(ref={self.ref}, case={self.case!r}, ts={self.ts}, pred={self.pred}, succ={self.succ}, {self.state})"


@dataclass
class EventMetrics:
    """Per-event cost accounting, indexed by event reference.

    Query rounds shared by a batch are split evenly across the events in it.
    """

    queried: list[float]
    messages: list[float]
    corrections: list[int]

    @classmethod
    def zeros(cls, size: int) -> "EventMetrics":
        return cls([0.0] * size, [0.0] * size, [0] * size)


class _Search:
    __slots__ = ("id", "remaining", "order", "pos", "pending", "best")

    def __init__(self, sid: int, events: Sequence[LocalEvent]):
        self.id = sid
        self.remaining = {le.ref: le for le in events}
        self.order: list[int] = []
        self.pos = 0
        self.pending: set[int] = set()
        self.best: dict[int, tuple[int, int, int]] = {}


Outgoing = list  # [(dst, body), ...]


class Node:
    """State machine for the node that senses ``activity``.

    Handlers return a list of ``(destination, body)`` pairs; the caller is in
    charge of delivering them. Interactions of a node with itself (self-loop
    predecessors, corrections of its own events) are handled inline and never
    produce messages.
    """

    def __init__(
        self,
        activity: int,
        n: int,
        *,
        strategy: str = MFP,
        batch_size: int = 1,
        window_limit: int | None = None,
        memory_cap: int | None = None,
        end_timeout: int = 0,
        max_searches: int = 1000,
        oracle_pred: dict[int, int | None] | None = None,
        metrics: EventMetrics | None = None,
    ):
        if strategy not in Strategy.ALL:
            raise ValueError(f"unknown strategy {strategy!r}")
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if strategy == ORACLE and oracle_pred is None:
            raise ValueError("oracle strategy needs oracle_pred")
        self.activity = activity
        self.n = n
        self.strategy = strategy
        self.batch_size = batch_size
        self.window_limit = window_limit
        self.memory_cap = memory_cap
        self.end_timeout = end_timeout
        self.max_searches = max_searches
        self.oracle_pred = oracle_pred
        self.metrics = metrics

        self.counts = [0] * n
        self.start_count = 0
        self.end_count = 0
        self.store: dict[str, list[LocalEvent]] = {}
        self._store_ts: dict[str, list[int]] = {}
        self.events: dict[int, LocalEvent] = {}
        self.batch: list[LocalEvent] = []
        self.searches: dict[int, _Search] = {}
        self.draining = False
        self._others = [j for j in range(n) if j != activity]
        self._next_search = 0
        self._arrivals: deque[LocalEvent] = deque()
        self._end_pending: deque[LocalEvent] = deque()

    # -- views --------------------------------------------------------------

    @property
    def partial(self) -> PartialFM:
        return PartialFM(
            self.activity,
            np.asarray(self.counts, dtype=np.int64),
            self.start_count > 0,
            self.end_count > 0,
        )

    @property
    def mfp_counts(self) -> list[int]:
        return list(self.counts)

    def mfp_order(self, case_hint: str | None = None) -> list[int]:
        """Other nodes by descending predecessor count, ties by ascending id."""
        counts = self.counts
        return sorted(self._others, key=lambda j: (-counts[j], j))

    def stored(self) -> int:
        return len(self.events)

    # -- Phase 1 ------------------------------------------------------------

    def on_local_event(self, e: Event | tuple, now: int, ref: int | None = None) -> Outgoing:
        """Store a sensed event and start (or finish) its predecessor search.

        ``e`` is an :class:`Event`; ``ref`` defaults to ``e.seq``.
        """
        if e.activity_id != self.activity:
            raise ProtocolError(f"event for activity {e.activity_id} delivered to node {self.activity}")
        ref = e.seq if ref is None else ref
        case, ts = e.case_id, e.timestamp
        times = self._store_ts.setdefault(case, [])
        i = bisect.bisect_left(times, ts)
        if i < len(times) and times[i] == ts:
            raise ProtocolError(f"duplicate event (case={case!r}, timestamp={ts}) at node {self.activity}")
        le = LocalEvent(ref, case, ts)
        times.insert(i, ts)
        self.store.setdefault(case, []).insert(i, le)
        self.events[ref] = le
        self._arrivals.append(le)
        self._end_pending.append(le)
        return self._begin_search(le)

    def _candidate(self, case: str, ts: int, asking_ref: int | None) -> LocalEvent | None:
        """Latest own event of ``case`` before ``ts`` that may precede it.

        The event qualifies when it has no successor yet, or its successor is later
        than ``ts`` (then the asker is the better successor and the link gets
        rectified on its claim).
        """
        times = self._store_ts.get(case)
        if not times:
            return None
        i = bisect.bisect_left(times, ts)
        if i == 0:
            return None
        p = self.store[case][i - 1]
        s = p.succ
        if s is None or s[2] > ts or s[0] == asking_ref:
            return p
        return None

    def _begin_search(self, le: LocalEvent) -> Outgoing:
        le.searches += 1
        if le.searches > self.max_searches:
            raise ConvergenceError(
                f"event {le.ref} of case {le.case!r} restarted its search {le.searches} times",
                le.case,
            )
        le.state = QUERYING
        strategy = self.strategy
        if strategy != QUERY_ALL or self.n == 1:
            local = self._candidate(le.case, le.ts, le.ref)
            if local is not None:
                return self._accept(le, self.activity, local.ref, local.ts)
            if self.n == 1:
                self._flag_start(le)
                return []
        if strategy == ORACLE:
            target = self.oracle_pred.get(le.ref)
            if target is None or target == self.activity:
                self._flag_start(le)
                return []
        self.batch.append(le)
        if len(self.batch) >= self.batch_size or self.draining:
            return self._dispatch()
        return []

    def flush(self) -> Outgoing:
        """Stop buffering: dispatch the pending batch and every later one immediately."""
        self.draining = True
        return self._dispatch() if self.batch else []

    def _charge(self, events, nodes: int) -> None:
        m = self.metrics
        if m is None:
            return
        share = nodes / len(events)
        for le in events:
            m.queried[le.ref] += share
            m.messages[le.ref] += 2 * share

    def _dispatch(self) -> Outgoing:
        events, self.batch = self.batch, []
        search = _Search(self._next_search, events)
        self._next_search += 1
        self.searches[search.id] = search
        if self.strategy == MFP:
            search.order = self.mfp_order()
            return self._query_next(search)
        if self.strategy == QUERY_ALL:
            items = tuple((le.ref, le.case, le.ts) for le in events)
            search.pending = set(self._others)
            self._charge(events, len(self._others))
            return [(j, PredQuery(search.id, items)) for j in self._others]
        groups: dict[int, list[LocalEvent]] = {}
        for le in events:
            groups.setdefault(self.oracle_pred[le.ref], []).append(le)
        out = []
        for j in sorted(groups):
            group = groups[j]
            self._charge(group, 1)
            out.append((j, PredQuery(search.id, tuple((le.ref, le.case, le.ts) for le in group))))
        search.pending = set(groups)
        return out

    def _query_next(self, search: _Search) -> Outgoing:
        remaining = search.remaining
        if not remaining:
            del self.searches[search.id]
            return []
        if search.pos >= len(search.order):
            del self.searches[search.id]
            for le in remaining.values():
                self._flag_start(le)
            return []
        dst = search.order[search.pos]
        search.pos += 1
        events = list(remaining.values())
        self._charge(events, 1)
        return [(dst, PredQuery(search.id, tuple((le.ref, le.case, le.ts) for le in events)))]

    def on_query(self, src: int, q: PredQuery) -> Outgoing:
        cands = []
        for ref, case, ts in q.items:
            p = self._candidate(case, ts, ref)
            cands.append((ref, p.ref, p.ts) if p is not None else (ref, None, None))
        return [(src, PredResponse(q.search_id, tuple(cands), q.case_id))]

    def on_response(self, src: int, r: PredResponse, now: int = 0) -> Outgoing:
        search = self.searches.get(r.search_id)
        if search is None:
            logger.warning("node %d: response for finished search %d dropped", self.activity, r.search_id)
            return []
        remaining = search.remaining
        if self.strategy == MFP:
            out: Outgoing = []
            for ref, cref, cts in r.candidates:
                if cref is not None and ref in remaining:
                    out += self._accept(remaining.pop(ref), src, cref, cts)
            return out + self._query_next(search)
        best = search.best
        for ref, cref, cts in r.candidates:
            if cref is not None and ref in remaining:
                b = best.get(ref)
                if b is None or cts > b[2]:
                    best[ref] = (src, cref, cts)
        search.pending.discard(src)
        if search.pending:
            return []
        del self.searches[search.id]
        out = []
        for ref, le in remaining.items():
            b = best.get(ref)
            if self.strategy == QUERY_ALL:
                local = self._candidate(le.case, le.ts, le.ref)
                if local is not None and (b is None or local.ts > b[2]):
                    b = (self.activity, local.ref, local.ts)
            if b is None:
                self._flag_start(le)
            else:
                out += self._accept(le, *b)
        return out

    def _accept(self, le: LocalEvent, src: int, pred_ref: int, pred_ts: int) -> Outgoing:
        le.pred = (pred_ref, src, pred_ts)
        le.state = RESOLVED
        self.counts[src] += 1
        note = ChosenNotify(pred_ref, le.ref, le.ts, self.activity, le.case)
        if src == self.activity:
            return self.on_chosen_notify(note)
        if self.metrics is not None:
            self.metrics.messages[le.ref] += 1
        return [(src, note)]

    def _flag_start(self, le: LocalEvent) -> None:
        le.state = START
        self.start_count += 1

    def on_chosen_notify(self, m: ChosenNotify, now: int = 0) -> Outgoing:
        p = self.events.get(m.pred_ref)
        if p is None:
            raise ProtocolError(f"node {self.activity}: successor claim for unknown event {m.pred_ref}")
        s = p.succ
        claim = (m.succ_ref, m.succ_activity, m.succ_ts)
        if s is None:
            p.succ = claim
            if p.end_flagged:
                p.end_flagged = False
                self.end_count -= 1
            return []
        if s[0] == m.succ_ref:
            return []
        if s[2] > m.succ_ts:
            p.succ = claim
            return self._correct(s[1], s[0], m.pred_ref, m.case_id)
        return self._correct(m.succ_activity, m.succ_ref, m.pred_ref, m.case_id)

    def _correct(self, dst: int, ref: int, pred_ref: int, case: str) -> Outgoing:
        note = CorrectionNotify(ref, pred_ref, case)
        if dst == self.activity:
            return self.on_correction(note)
        return [(dst, note)]

    def on_correction(self, m: CorrectionNotify, now: int = 0) -> Outgoing:
        le = self.events.get(m.event_ref)
        if le is None or le.pred is None or le.pred[0] != m.pred_ref:
            logger.warning("node %d: stale correction for event %d dropped", self.activity, m.event_ref)
            return []
        act = le.pred[1]
        self.counts[act] -= 1
        if self.counts[act] < 0:
            raise InvariantError(f"node {self.activity}: count for predecessor {act} below zero")
        le.pred = None
        if self.metrics is not None:
            self.metrics.corrections[le.ref] += 1
        return self._begin_search(le)

    # -- housekeeping -------------------------------------------------------

    def apply_window(self, now: int) -> int:
        """Discard settled events past the age limit or over the memory cap, oldest first.

        Counters are untouched. Returns the number of discarded events.
        """
        if self.window_limit is None and self.memory_cap is None:
            return 0
        q = self._arrivals
        dropped = 0
        while q:
            le = q[0]
            if le.ref not in self.events:
                q.popleft()
                continue
            if le.state not in (RESOLVED, START):
                break
            too_old = self.window_limit is not None and now - le.ts > self.window_limit
            too_many = self.memory_cap is not None and len(self.events) > self.memory_cap
            if not (too_old or too_many):
                break
            q.popleft()
            self._evict(le)
            dropped += 1
        return dropped

    def _evict(self, le: LocalEvent) -> None:
        del self.events[le.ref]
        times = self._store_ts[le.case]
        i = bisect.bisect_left(times, le.ts)
        del times[i]
        del self.store[le.case][i]
        if not times:
            del self._store_ts[le.case]
            del self.store[le.case]

    def flag_end_events(self, now: int) -> int:
        """Flag settled events that saw no successor for longer than ``end_timeout``.

        A flag is withdrawn if a successor claim arrives later, so the end flag of
        the node is exact once the network is quiet. Returns the number flagged.
        """
        q = self._end_pending
        retry = []
        flagged = 0
        while q and now - q[0].ts > self.end_timeout:
            le = q.popleft()
            if le.succ is not None:
                continue
            if le.state in (RESOLVED, START):
                le.end_flagged = True
                self.end_count += 1
                flagged += 1
            else:
                retry.append(le)
        q.extendleft(reversed(retry))
        return flagged

    def check_consistency(self) -> None:
        """Counters agree with stored predecessor links (only valid without a window)."""
        seen = [0] * self.n
        for le in self.events.values():
            if le.pred is not None:
                seen[le.pred[1]] += 1
        if seen != self.counts:
            raise InvariantError(f"node {self.activity}: counts {self.counts} != links {seen}")
