"""scikit-learn style front end.

The estimators wrap the simulator and miners so they can be configured with
``get_params``/``set_params``, cloned, and dropped into pipelines.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_event_log, check_footprint
from .alpha import alpha
from .collector import build_dfg, dependency_measures
from .events import central_footprint
from .footprint import binarize, fitness
from .network import Latency, SimConfig, Simulation

__all__ = ["CentralFootprint", "EdgeMiner", "AlphaMiner", "DependencyMeasures"]


class CentralFootprint(TransformerMixin, BaseEstimator):
    """Footprint computed from the whole log in one place.

    Parameters
    ----------
    ties : {"reject", "tiebreak"}, default="reject"
        What to do with equal timestamps inside a case.

    Attributes
    ----------
    footprint_ : MergedFM
    activities_ : list of str
    n_activities_ : int
    """

    def __init__(self, ties: str = "reject"):
        self.ties = ties

    def fit(self, X, y=None):
        log = check_event_log(X, ties=self.ties)
        self.footprint_ = central_footprint(log)
        self.activities_ = log.activities.names
        self.n_activities_ = log.n_activities
        return self

    def transform(self, X):
        """Count matrix of ``X`` laid out on the fitted activity order.

        Activities unseen during ``fit`` are an error.
        """
        check_is_fitted(self, "footprint_")
        log = check_event_log(X, ties=self.ties)
        index = {name: i for i, name in enumerate(self.activities_)}
        unknown = sorted(set(log.activities.names) - set(index))
        if unknown:
            raise ValueError(f"activities not seen during fit: {unknown}")
        remap = np.array([index[name] for name in log.activities.names], dtype=int)
        own = central_footprint(log).counts
        out = np.zeros((self.n_activities_, self.n_activities_), dtype=np.int64)
        if len(remap):
            out[np.ix_(remap, remap)] = own
        return out


class EdgeMiner(BaseEstimator):
    """Distributed footprint construction replayed on a simulated sensor network.

    Parameters
    ----------
    strategy : {"mfp", "query_all", "oracle"}, default="mfp"
    batch_size : int, default=1
    latency : str, default="zero"
        ``zero``, ``fixed:D`` or ``uniform:LO:HI`` in microseconds.
    window_limit : int or None, default=None
    end_timeout : int or None, default=None
    seed : int, default=0
    ties : {"reject", "tiebreak"}, default="reject"

    Attributes
    ----------
    footprint_ : MergedFM
        Footprint assembled by the collector after the replay.
    result_ : SimResult
    n_activities_ : int
    """

    def __init__(
        self,
        strategy: str = "mfp",
        batch_size: int = 1,
        latency: str = "zero",
        window_limit=None,
        end_timeout=None,
        seed: int = 0,
        ties: str = "reject",
    ):
        self.strategy = strategy
        self.batch_size = batch_size
        self.latency = latency
        self.window_limit = window_limit
        self.end_timeout = end_timeout
        self.seed = seed
        self.ties = ties

    def _config(self) -> SimConfig:
        latency = self.latency if isinstance(self.latency, Latency) else Latency.parse(str(self.latency))
        return SimConfig(
            latency=latency,
            batch_size=self.batch_size,
            strategy=self.strategy,
            window_limit=self.window_limit,
            end_timeout=self.end_timeout,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        log = check_event_log(X, ties=self.ties)
        self.result_ = Simulation(log, self._config()).run()
        self.footprint_ = self.result_.footprint
        self.n_activities_ = log.n_activities
        self.activities_ = log.activities.names
        return self

    def score(self, X, y=None) -> float:
        """Fitness of the fitted footprint against the central footprint of ``X``."""
        check_is_fitted(self, "footprint_")
        reference = central_footprint(check_event_log(X, ties=self.ties))
        return fitness(self.footprint_, reference)

    def mean_queried_nodes(self) -> float:
        check_is_fitted(self, "result_")
        return self.result_.mean_queried()


class AlphaMiner(BaseEstimator):
    """Alpha Miner on a footprint or event log.

    Attributes
    ----------
    net_ : PetriNet
    dfg_ : DirectlyFollowsGraph
    """

    def __init__(self, max_pairs: int = 1_000_000):
        self.max_pairs = max_pairs

    def fit(self, X, y=None):
        fm = check_footprint(X) if not isinstance(X, (list, tuple)) else central_footprint(check_event_log(X))
        self.footprint_ = binarize(fm)
        self.net_ = alpha(fm, max_pairs=self.max_pairs)
        self.dfg_ = build_dfg(fm)
        return self


class DependencyMeasures(TransformerMixin, BaseEstimator):
    """Maps a footprint (or log) to its matrix of dependency values."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        if isinstance(X, (list, tuple)):
            X = central_footprint(check_event_log(X))
        return dependency_measures(check_footprint(X))
