"""Input coercion helpers shared by the estimators."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .events import ActivityTable, Event, EventLog, validate_log
from .footprint import MergedFM

XES_COLUMNS = ("case:concept:name", "concept:name", "time:timestamp")
CANONICAL_COLUMNS = ("case_id", "activity", "timestamp_us")


def check_event_log(X, *, ties: str = "reject") -> EventLog:
    """Coerce ``X`` to a validated :class:`EventLog`.

    Accepts an ``EventLog``, a pandas DataFrame with XES-style or canonical
    columns, or a sequence of traces given as activity-name sequences.
    """
    if isinstance(X, EventLog):
        log = X
    elif hasattr(X, "columns") and hasattr(X, "itertuples"):
        log = _from_frame(X)
    elif isinstance(X, Sequence) and not isinstance(X, (str, bytes)):
        if not all(isinstance(t, Sequence) and not isinstance(t, (str, bytes)) for t in X):
            raise TypeError("a sequence input must contain traces (sequences of activity names)")
        log = EventLog.from_traces([[str(a) for a in t] for t in X])
    else:
        raise TypeError(f"cannot interpret {type(X).__name__} as an event log")
    log, _ = validate_log(log, ties)
    return log


def _from_frame(df) -> EventLog:
    import pandas as pd

    cols = next((c for c in (XES_COLUMNS, CANONICAL_COLUMNS) if all(k in df.columns for k in c)), None)
    if cols is None:
        raise ValueError(
            f"DataFrame needs columns {list(XES_COLUMNS)} or {list(CANONICAL_COLUMNS)}; got {list(df.columns)}"
        )
    case_col, act_col, ts_col = cols
    ts = df[ts_col]
    if pd.api.types.is_integer_dtype(ts):
        micros = ts.to_numpy(dtype=np.int64)
    else:
        stamps = pd.to_datetime(ts, utc=True)
        micros = (stamps - pd.Timestamp(0, tz="UTC")) // pd.Timedelta(microseconds=1)
        micros = np.asarray(micros, dtype=np.int64)
    table = ActivityTable()
    events = [
        Event(str(c), table.add(str(a)), int(t), i)
        for i, (c, a, t) in enumerate(zip(df[case_col], df[act_col], micros))
    ]
    return EventLog.from_events(events, table)


def check_footprint(X) -> MergedFM:
    """Coerce ``X`` to a :class:`MergedFM`; square arrays get empty start/end sets."""
    if isinstance(X, MergedFM):
        return X
    if isinstance(X, EventLog):
        from .events import central_footprint

        return central_footprint(X)
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square count matrix, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("footprint counts must be integers")
        arr = arr.astype(np.int64)
    return MergedFM(arr)
