import random

import numpy as np
import pytest

from edgeminer.alpha import AlphaMinerError, PetriNet, alpha, place_name
from edgeminer.events import EventLog, central_footprint
from edgeminer.footprint import MergedFM, binarize

from conftest import L1
from oracles import brute_force_alpha


def net_of(traces):
    log = EventLog.from_traces(traces)
    return log, alpha(central_footprint(log))


def test_ab_net():
    _, net = net_of([["a", "b"]])
    assert set(net.places) == {"i_L", "p_({a},{b})", "o_L"}
    assert net.arcs == {("i_L", "a"), ("a", "p_({a},{b})"), ("p_({a},{b})", "b"), ("b", "o_L")}


def test_self_loop_net():
    _, net = net_of([["a", "a"]])
    assert net.places == ("i_L", "o_L")
    assert net.arcs == {("i_L", "a"), ("a", "o_L")}


def test_l1_places():
    log, net = net_of(L1)
    names = log.activities.names
    expected = {(frozenset("a"), frozenset("be")), (frozenset("a"), frozenset("ce")),
                (frozenset("be"), frozenset("d")), (frozenset("ce"), frozenset("d"))}
    got = {(frozenset(names[i] for i in A), frozenset(names[i] for i in B)) for A, B in net.pairs}
    assert got == expected
    assert set(net.places) == {"i_L", "o_L", "p_({a},{b,e})", "p_({a},{c,e})", "p_({b,e},{d})", "p_({c,e},{d})"}


def test_l1_matches_brute_force():
    log, net = net_of(L1)
    assert set(net.pairs) == brute_force_alpha(central_footprint(log).counts)


def _random_counts(rng: random.Random, n: int, density: float) -> np.ndarray:
    return np.array([[rng.randint(1, 3) if rng.random() < density else 0 for _ in range(n)] for _ in range(n)])


@pytest.mark.parametrize("seed", range(150))
def test_random_footprints_match_brute_force(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 6)
    counts = _random_counts(rng, n, rng.choice([0.15, 0.3, 0.5]))
    if not counts.any():
        counts[0, 0] = 1
    net = alpha(MergedFM(counts, {0}, {n - 1}))
    assert set(net.pairs) == brute_force_alpha(counts)


def test_alpha_ignores_counts():
    rng = random.Random(0)
    for _ in range(50):
        n = rng.randint(2, 7)
        counts = _random_counts(rng, n, 0.35)
        counts[0, 1] = max(counts[0, 1], 1)
        fm = MergedFM(counts, {0}, {1})
        assert alpha(fm) == alpha(binarize(fm))


def test_empty_footprint_rejected():
    with pytest.raises(AlphaMinerError):
        alpha(MergedFM(np.zeros((2, 2), dtype=int)))


def test_single_activity_without_pairs():
    net = alpha(MergedFM(np.zeros((1, 1), int), {0}, {0}, ["a"]))
    assert net.arcs == {("i_L", "a"), ("a", "o_L")}


def test_pair_cap():
    log, _ = net_of(L1)
    with pytest.raises(AlphaMinerError, match="more than 2"):
        alpha(central_footprint(log), max_pairs=2)


def test_exports():
    _, net = net_of(L1)
    dot = net.to_dot()
    assert dot.startswith("digraph petrinet {") and '"p_({a},{b,e})" -> "t:b";' in dot
    pnml = net.to_pnml()
    assert pnml.count("<place id=") == len(net.places)
    assert pnml.count("<transition ") == len(net.transitions)
    assert pnml.count("<arc ") == len(net.arcs)
    assert "<initialMarking>" in pnml and "<finalmarkings>" in pnml


def test_petri_net_rejects_dangling_arc():
    with pytest.raises(ValueError):
        PetriNet(("i_L",), ("a",), frozenset({("i_L", "b")}))
    with pytest.raises(ValueError):
        PetriNet(("i_L", "o_L"), ("a",), frozenset({("o_L", "a")}))


def test_place_name():
    assert place_name({0}, {1, 4}, list("abcde")) == "p_({a},{b,e})"
