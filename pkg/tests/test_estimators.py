import numpy as np
import pandas as pd
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from edgeminer import AlphaMiner, CentralFootprint, DependencyMeasures, EdgeMiner
from edgeminer.events import EventLog

from conftest import L1, random_log


def test_get_params_and_clone():
    est = EdgeMiner(strategy="query_all", batch_size=5, latency="uniform:0:100", seed=3)
    params = est.get_params()
    assert params == {
        "strategy": "query_all", "batch_size": 5, "latency": "uniform:0:100",
        "window_limit": None, "end_timeout": None, "seed": 3, "ties": "reject",
    }
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    assert est.set_params(batch_size=1).batch_size == 1


def test_edgeminer_fit_score():
    log = random_log(17)
    est = EdgeMiner(latency="uniform:0:50000").fit(log)
    assert est.score(log) == 1.0
    assert est.footprint_.n == log.n_activities
    assert 0 <= est.mean_queried_nodes() <= log.n_activities - 1


def test_not_fitted():
    with pytest.raises(NotFittedError):
        EdgeMiner().score([["a"]])
    with pytest.raises(NotFittedError):
        CentralFootprint().transform([["a"]])


def test_central_footprint_transform_reorders():
    est = CentralFootprint().fit(L1)
    out = est.transform([["d", "a"]])
    names = est.activities_
    assert out[names.index("d"), names.index("a")] == 1 and out.sum() == 1
    with pytest.raises(ValueError, match="not seen"):
        est.transform([["z", "a"]])


def test_dataframe_inputs():
    df = pd.DataFrame({
        "case:concept:name": ["1", "1", "2"],
        "concept:name": ["a", "b", "a"],
        "time:timestamp": pd.to_datetime(["2020-01-01 00:00:00", "2020-01-01 00:00:01", "2020-01-01 00:00:02"], utc=True),
    })
    fm = CentralFootprint().fit(df).footprint_
    assert fm.counts.tolist() == [[0, 1], [0, 0]] and fm.starts == {0}
    canonical = pd.DataFrame({"case_id": ["1", "1"], "activity": ["a", "b"], "timestamp_us": [1, 2]})
    assert CentralFootprint().fit(canonical).footprint_.counts.tolist() == [[0, 1], [0, 0]]
    with pytest.raises(ValueError, match="columns"):
        CentralFootprint().fit(pd.DataFrame({"x": [1]}))


def test_tie_policy_parameter():
    df = pd.DataFrame({"case_id": ["1", "1"], "activity": ["a", "b"], "timestamp_us": [5, 5]})
    with pytest.raises(ValueError):
        CentralFootprint().fit(df)
    assert CentralFootprint(ties="tiebreak").fit(df).footprint_.counts[0, 1] == 1


def test_alpha_miner_inputs_agree():
    log = EventLog.from_traces(L1)
    a = AlphaMiner().fit(L1)
    b = AlphaMiner().fit(log)
    assert a.net_ == b.net_
    assert len(a.net_.pairs) == 4
    assert set(np.unique(a.footprint_.counts)) <= {0, 1}


def test_alpha_miner_array_input():
    net = AlphaMiner().fit(np.array([[0, 1], [0, 0]])).net_
    assert any(p.startswith("p_(") for p in net.places)
    with pytest.raises(ValueError):
        AlphaMiner().fit(np.zeros((2, 3)))
    with pytest.raises(TypeError):
        CentralFootprint().fit("not a log")


def test_dependency_transformer():
    d = DependencyMeasures().fit_transform([["a", "b"]])
    assert d[0, 1] == 0.5 and d[1, 0] == -0.5
