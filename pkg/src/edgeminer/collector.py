"""Phase 2 collection and the miner inputs derived from a merged footprint."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .footprint import MergedFM
from .network import Simulation

__all__ = ["collect", "DirectlyFollowsGraph", "build_dfg", "dependency_measures", "dependency_csv"]

SOURCE = "__source__"
SINK = "__sink__"


def collect(sim: Simulation) -> MergedFM:
    """Request every node's column and start/end flags over the simulated network.

    Costs exactly ``2n`` messages. A collect on a running simulation reflects each
    node's state when it answers; only a collect after :meth:`Simulation.finish_phase1`
    is guaranteed to match the central footprint.
    """
    return sim.collect()


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def to_dot(self) -> str:
        lines = ["digraph dfg {", "  rankdir=LR;"]
        lines.append(f'  "{SOURCE}" [shape=circle,label="",style=filled,fillcolor=green];')
        lines.append(f'  "{SINK}" [shape=doublecircle,label="",style=filled,fillcolor=orange];')
        for name in self.nodes:
            if name not in (SOURCE, SINK):
                lines.append(f'  "{_esc(name)}" [shape=box];')
        for a, b in sorted(self.edges):
            lines.append(f'  "{_esc(a)}" -> "{_esc(b)}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def build_dfg(fm: MergedFM) -> DirectlyFollowsGraph:
    names = fm.names
    edges = {(names[i], names[j]) for i, j in zip(*np.nonzero(fm.counts))}
    edges |= {(SOURCE, names[s]) for s in fm.starts}
    edges |= {(names[e], SINK) for e in fm.ends}
    return DirectlyFollowsGraph((SOURCE, *names, SINK), frozenset(edges))


def dependency_measures(fm: MergedFM) -> np.ndarray:
    """Heuristics-miner dependency values.

    Off the diagonal ``(|a>b| - |b>a|) / (|a>b| + |b>a| + 1)``; on it
    ``|a>a| / (|a>a| + 1)``.
    """
    c = fm.counts.astype(float)
    d = (c - c.T) / (c + c.T + 1.0)
    diag = np.diag(c)
    np.fill_diagonal(d, diag / (diag + 1.0))
    return d


def dependency_csv(fm: MergedFM) -> str:
    d = dependency_measures(fm)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["activity", *fm.names])
    for i, name in enumerate(fm.names):
        w.writerow([name, *(repr(float(x)) for x in d[i])])
    return buf.getvalue()
