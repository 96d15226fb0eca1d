"""Alpha Miner over a (binarized) merged footprint."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

import numpy as np

from .footprint import MergedFM, binarize

__all__ = ["PetriNet", "AlphaMinerError", "alpha", "causal_pairs", "place_name"]

SOURCE_PLACE = "i_L"
SINK_PLACE = "o_L"


class AlphaMinerError(ValueError):
    pass


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[str, ...]
    arcs: frozenset[tuple[str, str]]
    pairs: tuple[tuple[frozenset[int], frozenset[int]], ...] = ()

    def __post_init__(self):
        known = set(self.places) | set(self.transitions)
        for a, b in self.arcs:
            if a not in known or b not in known:
                raise ValueError(f"arc {a}->{b} references an unknown node")
            if b == SOURCE_PLACE or a == SINK_PLACE:
                raise ValueError(f"arc {a}->{b} touches the wrong side of i_L/o_L")

    def to_dot(self) -> str:
        out = ["digraph petrinet {", "  rankdir=LR;"]
        for p in self.places:
            out.append(f'  "{_esc(p)}" [shape=circle,label="{_esc(p)}"];')
        for t in self.transitions:
            out.append(f'  "t:{_esc(t)}" [shape=box,label="{_esc(t)}"];')
        ids = {p: p for p in self.places} | {t: f"t:{t}" for t in self.transitions}
        for a, b in sorted(self.arcs):
            out.append(f'  "{_esc(ids[a])}" -> "{_esc(ids[b])}";')
        out.append("}")
        return "\n".join(out) + "\n"

    def to_pnml(self) -> str:
        ids = {p: f"p{i}" for i, p in enumerate(self.places)}
        ids |= {t: f"t{i}" for i, t in enumerate(self.transitions)}
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            "<pnml>",
            '  <net id="net1" type="http://www.pnml.org/version-2009/grammar/pnmlcoremodel">',
            '    <page id="page1">',
        ]
        for p in self.places:
            out.append(f"      <place id={quoteattr(ids[p])}><name><text>{_xml(p)}</text></name>")
            if p == SOURCE_PLACE:
                out.append("        <initialMarking><text>1</text></initialMarking>")
            out.append("      </place>")
        for t in self.transitions:
            out.append(f"      <transition id={quoteattr(ids[t])}><name><text>{_xml(t)}</text></name></transition>")
        for k, (a, b) in enumerate(sorted(self.arcs)):
            out.append(f"      <arc id={quoteattr(f'a{k}')} source={quoteattr(ids[a])} target={quoteattr(ids[b])}/>")
        out += ["    </page>", "    <finalmarkings><marking>", f"      <place idref={quoteattr(ids[SINK_PLACE])}><text>1</text></place>",
                "    </marking></finalmarkings>", "  </net>", "</pnml>"]
        return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _xml(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def place_name(a_set, b_set, names) -> str:
    left = ",".join(names[i] for i in sorted(a_set))
    right = ",".join(names[i] for i in sorted(b_set))
    return f"p_({{{left}}},{{{right}}})"


def causal_pairs(fm: MergedFM) -> tuple[np.ndarray, np.ndarray]:
    """Boolean ``causal[a, b]`` (a -> b) and ``unrelated[a, b]`` (a # b) matrices."""
    s = fm.counts > 0
    return s & ~s.T, ~s & ~s.T


def _maximal_cliques(candidates: list[int], unrelated: np.ndarray):
    """Bron-Kerbosch with pivoting over the '#' graph restricted to ``candidates``."""
    adj = {v: {u for u in candidates if u != v and unrelated[u, v]} for v in candidates}

    def expand(r, p, x):
        if not p and not x:
            yield frozenset(r)
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            yield from expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    yield from expand(set(), set(candidates), set())


def alpha(fm: MergedFM, max_pairs: int = 1_000_000) -> PetriNet:
    """Run the Alpha algorithm on the footprint's binary relations.

    Candidate sets are cliques of the '#' relation. For each first set ``A`` only
    the maximal cliques of its common causal successors are kept as ``B``, then
    pairs dominated componentwise by another pair are dropped. ``max_pairs`` caps
    the enumeration.
    """
    fm = binarize(fm)
    names = fm.names
    activities = fm.occurring()
    if not activities:
        raise AlphaMinerError("footprint has no occurring activities")
    causal, unrelated = causal_pairs(fm)
    # an activity with a self-loop is never '#' with itself and so never in a set
    usable = [a for a in activities if unrelated[a, a]]
    succ = {a: frozenset(b for b in usable if causal[a, b]) for a in usable}
    sources = [a for a in usable if succ[a]]

    found: set[tuple[frozenset, frozenset]] = set()

    def grow(a_set: tuple[int, ...], common: frozenset, rest: list[int]):
        for b_set in _maximal_cliques(sorted(common), unrelated):
            found.add((frozenset(a_set), b_set))
            if len(found) > max_pairs:
                raise AlphaMinerError(
                    f"more than {max_pairs} candidate place pairs; the '#' relation is too dense"
                )
        for k, nxt in enumerate(rest):
            if all(unrelated[nxt, x] for x in a_set):
                inter = common & succ[nxt]
                if inter:
                    grow(a_set + (nxt,), inter, rest[k + 1:])

    for k, a in enumerate(sources):
        grow((a,), succ[a], sources[k + 1:])

    # B is already maximal for its A, so a pair is dominated exactly when A can grow
    def extendable(A, B):
        return any(
            a not in A and B <= succ[a] and all(unrelated[a, x] for x in A) for a in sources
        )

    maximal = [(A, B) for A, B in found if not extendable(A, B)]
    maximal.sort(key=lambda p: (sorted(p[0]), sorted(p[1])))

    places = [SOURCE_PLACE]
    arcs = set()
    for A, B in maximal:
        p = place_name(A, B, names)
        places.append(p)
        arcs |= {(names[a], p) for a in A}
        arcs |= {(p, names[b]) for b in B}
    places.append(SINK_PLACE)
    arcs |= {(SOURCE_PLACE, names[t]) for t in fm.starts}
    arcs |= {(names[t], SINK_PLACE) for t in fm.ends}
    transitions = tuple(names[a] for a in activities)
    return PetriNet(tuple(places), transitions, frozenset(arcs), tuple(maximal))
