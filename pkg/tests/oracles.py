"""Independent reference computations used as test oracles.

Nothing here imports the mining code paths under test; relations are recomputed
from the raw count matrix.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def _subsets(items):
    for k in range(1, len(items) + 1):
        yield from (frozenset(c) for c in combinations(items, k))


def brute_force_alpha(counts: np.ndarray) -> set[tuple[frozenset, frozenset]]:
    """Maximal place pairs by exhaustive enumeration of every (A, B) subset pair."""
    counts = np.asarray(counts)
    n = len(counts)
    follows = lambda a, b: counts[a, b] > 0
    causal = lambda a, b: follows(a, b) and not follows(b, a)
    unrelated = lambda a, b: not follows(a, b) and not follows(b, a)
    occurring = [a for a in range(n) if counts[a].any() or counts[:, a].any()]

    def ok(A, B):
        return (
            all(causal(a, b) for a in A for b in B)
            and all(unrelated(x, y) for x in A for y in A)
            and all(unrelated(x, y) for x in B for y in B)
        )

    subsets = list(_subsets(occurring))
    x_l = [(A, B) for A in subsets for B in subsets if ok(A, B)]
    return {
        (A, B)
        for A, B in x_l
        if not any((A <= A2 and B <= B2) and (A, B) != (A2, B2) for A2, B2 in x_l)
    }


def adjacent_pairs(traces) -> dict[tuple[str, str], int]:
    out: dict[tuple[str, str], int] = {}
    for t in traces:
        for a, b in zip(t, t[1:]):
            out[(a, b)] = out.get((a, b), 0) + 1
    return out
