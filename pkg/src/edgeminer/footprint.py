"""Partial and merged footprint matrices."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PartialFM",
    "MergedFM",
    "MergeError",
    "merge_columns",
    "split_columns",
    "binarize",
    "fitness",
    "relation_recall",
]


class MergeError(ValueError):
    pass


@dataclass
class PartialFM:
    """One node's predecessor column.

    ``counts[l]`` is how often activity ``l`` directly preceded ``owner``.
    """

    owner: int
    counts: np.ndarray
    is_start: bool = False
    is_end: bool = False

    @classmethod
    def empty(cls, owner: int, n: int) -> "PartialFM":
        return cls(owner, np.zeros(n, dtype=np.int64))

    def copy(self) -> "PartialFM":
        return PartialFM(self.owner, self.counts.copy(), self.is_start, self.is_end)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialFM):
            return NotImplemented
        return (
            self.owner == other.owner
            and self.is_start == other.is_start
            and self.is_end == other.is_end
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(eq=False)
class MergedFM:
    """An ``n x n`` count matrix (row = predecessor, column = successor) plus start/end sets."""

    counts: np.ndarray
    starts: frozenset = frozenset()
    ends: frozenset = frozenset()
    names: list[str] | None = field(default=None)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"footprint must be square, got shape {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("footprint counts must be non-negative")
        self.starts = frozenset(int(s) for s in self.starts)
        self.ends = frozenset(int(e) for e in self.ends)
        bad = [x for x in self.starts | self.ends if not 0 <= x < self.n]
        if bad:
            raise ValueError(f"start/end activities out of range: {sorted(bad)}")
        if self.names is None:
            self.names = [str(i) for i in range(self.n)]
        elif len(self.names) != self.n:
            raise ValueError("names length does not match matrix size")

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    def occurring(self) -> list[int]:
        """Activities that appear in at least one relation or as a start/end."""
        seen = (self.counts.sum(axis=0) > 0) | (self.counts.sum(axis=1) > 0)
        return [i for i in range(self.n) if seen[i] or i in self.starts or i in self.ends]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MergedFM):
            return NotImplemented
        return (
            np.array_equal(self.counts, other.counts)
            and self.starts == other.starts
            and self.ends == other.ends
        )

    __hash__ = None  # type: ignore[assignment]

    def diff(self, other: "MergedFM") -> str:
        """Human-readable description of where two footprints disagree."""
        lines = []
        if self.counts.shape != other.counts.shape:
            return f"shape {self.counts.shape} != {other.counts.shape}"
        for i, j in zip(*np.nonzero(self.counts != other.counts)):
            lines.append(f"[{self.names[i]}][{self.names[j]}]: {self.counts[i, j]} != {other.counts[i, j]}")
        if self.starts != other.starts:
            lines.append(f"starts {sorted(self.starts)} != {sorted(other.starts)}")
        if self.ends != other.ends:
            lines.append(f"ends {sorted(self.ends)} != {sorted(other.ends)}")
        return "; ".join(lines) or "equal"

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "names": list(self.names),
                "counts": self.counts.tolist(),
                "starts": sorted(self.starts),
                "ends": sorted(self.ends),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "MergedFM":
        doc = json.loads(text)
        counts = np.asarray(doc["counts"], dtype=np.int64).reshape(doc["n"], doc["n"])
        return cls(counts, frozenset(doc["starts"]), frozenset(doc["ends"]), names=doc["names"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["predecessor", *self.names])
        for i, name in enumerate(self.names):
            w.writerow([name, *self.counts[i].tolist()])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MergedFM":
        rows = list(csv.reader(io.StringIO(text)))
        names = rows[0][1:]
        counts = np.array([[int(x) for x in r[1:]] for r in rows[1:]], dtype=np.int64)
        return cls(counts, names=names)


def merge_columns(parts: Sequence[PartialFM], names: Sequence[str] | None = None) -> MergedFM:
    """Concatenate one predecessor column per activity, ordered by owner id."""
    n = len(parts)
    owners = [p.owner for p in parts]
    missing = sorted(set(range(n)) - set(owners))
    dupes = sorted({o for o in owners if owners.count(o) > 1})
    if missing or dupes or any(not 0 <= o < n for o in owners):
        raise MergeError(f"expected one part per owner 0..{n - 1}; missing={missing} duplicate={dupes}")
    counts = np.zeros((n, n), dtype=np.int64)
    for p in parts:
        if len(p.counts) != n:
            raise MergeError(f"part {p.owner} has {len(p.counts)} entries, expected {n}")
        counts[:, p.owner] = p.counts
    starts = frozenset(p.owner for p in parts if p.is_start)
    ends = frozenset(p.owner for p in parts if p.is_end)
    return MergedFM(counts, starts, ends, names=list(names) if names is not None else None)


def split_columns(fm: MergedFM) -> list[PartialFM]:
    return [
        PartialFM(j, fm.counts[:, j].copy(), j in fm.starts, j in fm.ends) for j in range(fm.n)
    ]


def binarize(fm: MergedFM) -> MergedFM:
    return MergedFM((fm.counts > 0).astype(np.int64), fm.starts, fm.ends, names=list(fm.names))


def relation_recall(current: MergedFM, reference: MergedFM) -> float:
    """Share of the reference's nonzero cells that are also nonzero in ``current``."""
    if current.counts.shape != reference.counts.shape:
        raise ValueError(f"dimension mismatch: {current.counts.shape} vs {reference.counts.shape}")
    ref = reference.counts > 0
    total = int(ref.sum())
    if total == 0:
        return 1.0
    return int((ref & (current.counts > 0)).sum()) / total


FitnessMetric = Callable[[MergedFM, MergedFM], float]

#: default metric used by the convergence curves
fitness: FitnessMetric = relation_recall
