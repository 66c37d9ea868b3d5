"""scikit-learn style wrappers around the placement searches.

Both estimators take a base :class:`~uabs_hetnet.deployment.NetworkLayout`
(MBSs and UEs, no UABSs) as ``X``. ``fit`` searches, ``transform`` returns
the layout with the fitted UABSs added, ``predict`` gives per-UE spectral
efficiency and ``score`` the network 5pSE.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .association import IcicConfig, IcicMode, evaluate_network
from .deployment import DEFAULT_ALTITUDE, NetworkLayout, place_hex_grid
from .optimizer import Chromosome, GaSettings, IcicGrid, ga_optimize, grid_search_icic
from .radio import PowerModel

__all__ = ["check_layout", "HexGridIcicSearch", "GeneticPlacementOptimizer"]


def check_layout(X, *, allow_uabs: bool = False) -> NetworkLayout:
    """Validate ``X`` as a layout usable by the estimators."""
    if not isinstance(X, NetworkLayout):
        raise TypeError(f"expected a NetworkLayout, got {type(X).__name__}")
    if not allow_uabs and X.n_uabs:
        raise ValueError("expected a base layout without UABSs")
    if X.n_ue < 1:
        raise ValueError("layout needs at least one UE")
    return X


class _PlacementMixin:
    def _power_model(self) -> PowerModel:
        return self.power_model if self.power_model is not None else PowerModel.from_dbm()

    def transform(self, X) -> NetworkLayout:
        check_is_fitted(self, "uabs_")
        return check_layout(X).with_uabs(self.uabs_)

    def predict(self, X) -> np.ndarray:
        """Per-UE spectral efficiency (bps/Hz) under the fitted placement."""
        return evaluate_network(self.transform(X), self.icic_, self._power_model()).se

    def score(self, X, y=None) -> float:
        return evaluate_network(self.transform(X), self.icic_, self._power_model()).se_5pct


class HexGridIcicSearch(_PlacementMixin, BaseEstimator):
    """UABSs on a fixed hexagonal lattice, ICIC parameters by exhaustive grid search.

    Parameters
    ----------
    n_uabs : int
    mode : {"none", "eicic", "feicic"}
    grid : IcicGrid, optional
        Defaults to the standard grid; α collapses for eICIC/no-ICIC.
    altitude, beta, power_model
        Radio and geometry settings.

    Attributes
    ----------
    uabs_ : ndarray (n_uabs, 3)
    search_ : GridSearchResult with the full 5pSE table
    icic_ : IcicConfig at the best grid point
    best_score_ : float
    """

    def __init__(self, n_uabs=16, mode="feicic", grid=None, altitude=DEFAULT_ALTITUDE, beta=0.5,
                 power_model=None):
        self.n_uabs = n_uabs
        self.mode = mode
        self.grid = grid
        self.altitude = altitude
        self.beta = beta
        self.power_model = power_model

    def fit(self, X, y=None):
        X = check_layout(X)
        grid = (self.grid or IcicGrid()).for_mode(self.mode)
        self.uabs_ = place_hex_grid(self.n_uabs, X.region, self.altitude)
        self.search_ = grid_search_icic(X.with_uabs(self.uabs_), grid, self._power_model(), self.mode, self.beta)
        self.icic_ = self.search_.best_icic
        self.best_score_ = self.search_.best_score
        return self

    def icic_for(self, row) -> IcicConfig:
        """IcicConfig for one row of ``search_.table``."""
        tau, alpha, rho, rho_p = (float(v) for v in row[:4])
        return IcicConfig.from_db(self.mode, tau, alpha, rho, rho_p, self.beta)


class GeneticPlacementOptimizer(_PlacementMixin, BaseEstimator):
    """Joint UABS placement and ICIC tuning with a genetic algorithm.

    ``random_state`` is an int or ``numpy.random.SeedSequence``; each GA
    individual draws from a stream derived from it, so ``n_jobs`` never
    changes the result.
    """

    def __init__(self, n_uabs=16, mode="feicic", population_size=60, generations=100,
                 crossover_prob=0.7, mutation_prob=0.1, elitism=1, altitude=DEFAULT_ALTITUDE,
                 beta=0.5, power_model=None, random_state=0, initial=None, n_jobs=1):
        self.n_uabs = n_uabs
        self.mode = mode
        self.population_size = population_size
        self.generations = generations
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.elitism = elitism
        self.altitude = altitude
        self.beta = beta
        self.power_model = power_model
        self.random_state = random_state
        self.initial = initial
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_layout(X)
        settings = GaSettings(self.population_size, self.generations, self.crossover_prob,
                              self.mutation_prob, self.elitism)
        self.result_ = ga_optimize(X, settings, self._power_model(), self.mode, self.random_state,
                                   self.n_uabs, self.altitude, self.beta, self.initial, self.n_jobs)
        self.best_chromosome_: Chromosome = self.result_.best
        self.best_score_ = self.result_.best_fitness
        self.trace_ = self.result_.trace
        xy = self.best_chromosome_.uabs_xy
        self.uabs_ = np.column_stack([xy, np.full(len(xy), float(self.altitude))])
        self.icic_ = self.best_chromosome_.icic(IcicMode(self.mode), self.beta)
        return self
