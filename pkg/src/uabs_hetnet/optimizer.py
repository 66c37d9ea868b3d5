"""UABS placement and ICIC parameter search.

Two searches maximize the network 5pSE on a fixed drop:

* :func:`ga_optimize` evolves UABS coordinates together with the shared
  ICIC parameters (real-coded GA, roulette selection, single-point
  crossover, uniform-resampling mutation, elitism).
* :func:`grid_search_icic` keeps the UABSs on a fixed (hexagonal) layout
  and scans a τ × α × ρ × ρ' grid exhaustively.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .association import IcicConfig, IcicMode, NetworkEvaluation, evaluate_sir
from .deployment import DEFAULT_ALTITUDE, NetworkLayout
from .radio import PowerModel, TierField, macro_field, sir_arrays, uabs_field

logger = logging.getLogger(__name__)

__all__ = [
    "TAU_DB_RANGE",
    "ALPHA_RANGE",
    "RHO_DB_RANGE",
    "RHO_PRIME_DB_RANGE",
    "Chromosome",
    "GaSettings",
    "GaResult",
    "IcicGrid",
    "GridSearchResult",
    "PlacementObjective",
    "gene_bounds",
    "fitness",
    "roulette_select",
    "roulette_index",
    "crossover",
    "single_point_crossover",
    "mutate",
    "ga_optimize",
    "grid_search_icic",
    "derive_rng",
]

TAU_DB_RANGE = (0.0, 15.0)
ALPHA_RANGE = (0.0, 1.0)
RHO_DB_RANGE = (20.0, 40.0)
RHO_PRIME_DB_RANGE = (-20.0, -10.0)
N_ICIC_GENES = 4


def derive_rng(seed, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``seed`` (int or SeedSequence)."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    else:
        ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.default_rng(ss)


@dataclass
class Chromosome:
    """Flat gene vector ``[x1, y1, ..., xN, yN, tau_db, alpha, rho_db, rho_prime_db]``."""

    genes: np.ndarray
    fitness: Optional[float] = None

    def __post_init__(self):
        self.genes = np.array(self.genes, dtype=float).ravel()
        n_xy = self.genes.size - N_ICIC_GENES
        if n_xy < 2 or n_xy % 2:
            raise ValueError(f"chromosome needs 2 genes per UABS (at least one) plus 4 ICIC genes, "
                             f"got length {self.genes.size}")

    @property
    def n_uabs(self) -> int:
        return (self.genes.size - N_ICIC_GENES) // 2

    @property
    def uabs_xy(self) -> np.ndarray:
        return self.genes[:-N_ICIC_GENES].reshape(-1, 2)

    @property
    def tau_db(self) -> float:
        return float(self.genes[-4])

    @property
    def alpha(self) -> float:
        return float(self.genes[-3])

    @property
    def rho_db(self) -> float:
        return float(self.genes[-2])

    @property
    def rho_prime_db(self) -> float:
        return float(self.genes[-1])

    def icic(self, mode, beta: float = 0.5) -> IcicConfig:
        mode = IcicMode(mode)
        alpha = mode.fixed_alpha if mode.fixed_alpha is not None else self.alpha
        return IcicConfig.from_db(mode, self.tau_db, alpha, self.rho_db, self.rho_prime_db, beta)

    def copy(self) -> "Chromosome":
        return Chromosome(self.genes.copy(), self.fitness)


def gene_bounds(n_uabs: int, region, mode) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bound per gene; α is pinned for eICIC and no-ICIC."""
    if n_uabs < 1:
        raise ValueError("n_uabs must be at least 1")
    mode = IcicMode(mode)
    alpha = ALPHA_RANGE if mode.fixed_alpha is None else (mode.fixed_alpha, mode.fixed_alpha)
    lo = np.concatenate([np.zeros(2 * n_uabs),
                         [TAU_DB_RANGE[0], alpha[0], RHO_DB_RANGE[0], RHO_PRIME_DB_RANGE[0]]])
    hi = np.concatenate([np.tile([region.width, region.height], n_uabs),
                         [TAU_DB_RANGE[1], alpha[1], RHO_DB_RANGE[1], RHO_PRIME_DB_RANGE[1]]])
    return lo, hi


class PlacementObjective:
    """5pSE of a chromosome on one fixed drop.

    The macro tier does not depend on the chromosome, so its per-UE signal
    and interference are computed once here.
    """

    def __init__(self, base_layout: NetworkLayout, power_model: PowerModel, mode,
                 altitude: float = DEFAULT_ALTITUDE, beta: float = 0.5):
        if base_layout.n_uabs:
            raise ValueError("base layout must not contain UABSs")
        if base_layout.n_ue < 1:
            raise ValueError("base layout needs at least one UE")
        self.base_layout = base_layout
        self.power_model = power_model
        self.mode = IcicMode(mode)
        self.altitude = float(altitude)
        self.beta = beta
        self.macro: TierField = macro_field(base_layout, power_model)

    def bounds(self, n_uabs: int):
        return gene_bounds(n_uabs, self.base_layout.region, self.mode)

    def clamp(self, chromosome: Chromosome) -> Chromosome:
        lo, hi = self.bounds(chromosome.n_uabs)
        return Chromosome(np.clip(chromosome.genes, lo, hi), chromosome.fitness)

    def uabs_positions(self, chromosome: Chromosome) -> np.ndarray:
        xy = chromosome.uabs_xy
        return np.column_stack([xy, np.full(len(xy), self.altitude)])

    def layout_for(self, chromosome: Chromosome) -> NetworkLayout:
        return self.base_layout.with_uabs(self.uabs_positions(self.clamp(chromosome)))

    def evaluate(self, chromosome: Chromosome) -> NetworkEvaluation:
        c = self.clamp(chromosome)
        icic = c.icic(self.mode, self.beta)
        aerial = uabs_field(self.base_layout.ue, self.uabs_positions(c), self.power_model)
        sir = sir_arrays(self.macro, aerial, icic.alpha, self.power_model.sir_cap)
        return evaluate_sir(sir, icic, self.base_layout.n_mbs, c.n_uabs)

    def __call__(self, chromosome: Chromosome) -> float:
        return self.evaluate(chromosome).se_5pct


def fitness(chromosome: Chromosome, base_layout: NetworkLayout, power_model: PowerModel, mode,
            altitude: float = DEFAULT_ALTITUDE, beta: float = 0.5) -> float:
    """5pSE of the network with the chromosome's UABSs and ICIC parameters.

    Out-of-bounds genes are clamped, never rejected.
    """
    return PlacementObjective(base_layout, power_model, mode, altitude, beta)(chromosome)


def roulette_index(fitnesses: Sequence[float], rng: np.random.Generator) -> int:
    f = np.asarray(fitnesses, dtype=float)
    if (f < 0).any():
        raise ValueError("roulette selection needs non-negative fitness")
    total = f.sum()
    if total <= 0:
        return int(rng.integers(f.size))
    u = rng.random() * total
    return min(int(np.searchsorted(np.cumsum(f), u, side="right")), f.size - 1)


def roulette_select(population: Sequence[Chromosome], rng: np.random.Generator) -> Chromosome:
    """Fitness-proportional pick; uniform if every fitness is zero."""
    if any(c.fitness is None for c in population):
        raise ValueError("every individual must be evaluated before selection")
    return population[roulette_index([c.fitness for c in population], rng)]


def single_point_crossover(a: np.ndarray, b: np.ndarray, cut: int) -> np.ndarray:
    return np.concatenate([a[:cut], b[cut:]])


def crossover(parent1, parent2, prob: float, rng: np.random.Generator) -> np.ndarray:
    g1 = np.asarray(getattr(parent1, "genes", parent1), dtype=float)
    g2 = np.asarray(getattr(parent2, "genes", parent2), dtype=float)
    if g1.shape != g2.shape:
        raise ValueError("parents must have the same number of genes")
    if g1.size > 1 and rng.random() < prob:
        return single_point_crossover(g1, g2, int(rng.integers(1, g1.size)))
    return g1.copy()


def mutate(individual, prob: float, rng: np.random.Generator, bounds) -> np.ndarray:
    """Resample each gene uniformly within its bounds with probability ``prob``."""
    genes = np.array(getattr(individual, "genes", individual), dtype=float)
    lo, hi = bounds
    hit = rng.random(genes.size) < prob
    genes[hit] = rng.uniform(lo[hit], hi[hit])
    return genes


@dataclass(frozen=True)
class GaSettings:
    population_size: int = 60
    generations: int = 100
    crossover_prob: float = 0.7
    mutation_prob: float = 0.1
    elitism: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must lie in [0, population_size)")


@dataclass
class GaResult:
    best: Chromosome
    best_fitness: float
    trace: np.ndarray
    initial_best: float
    evaluations: int = 0
    best_evaluation: Optional[NetworkEvaluation] = field(default=None, repr=False)


def _evaluate_all(objective: Callable, genes: list, n_jobs: int) -> np.ndarray:
    if n_jobs > 1 and len(genes) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return np.array(list(pool.map(lambda g: objective(Chromosome(g)), genes)))
    return np.array([objective(Chromosome(g)) for g in genes])


def ga_optimize(base_layout: NetworkLayout, settings: GaSettings, power_model: PowerModel, mode,
                seed, n_uabs: int, altitude: float = DEFAULT_ALTITUDE, beta: float = 0.5,
                initial: Sequence | None = None, n_jobs: int = 1) -> GaResult:
    """Maximize the 5pSE over UABS coordinates and (τ, α, ρ, ρ').

    Generation 0 is drawn uniformly within bounds (``initial`` chromosomes,
    if given, replace its first members). Every later generation keeps the
    ``settings.elitism`` best individuals and fills the rest with children
    of two roulette-selected parents. Child ``i`` of generation ``g`` draws
    from its own stream derived from ``(seed, g, i)``, so results do not
    depend on ``n_jobs``.

    Returns:
        GaResult whose ``trace[g]`` is the best fitness in generation ``g``
        (length ``generations + 1``).
    """
    objective = PlacementObjective(base_layout, power_model, mode, altitude, beta)
    lo, hi = objective.bounds(n_uabs)
    size = settings.population_size

    pop = [derive_rng(seed, 0, i).uniform(lo, hi) for i in range(size)]
    for i, c in enumerate(initial or []):
        if i >= size:
            break
        genes = np.asarray(getattr(c, "genes", c), dtype=float)
        if genes.size != lo.size:
            raise ValueError("initial chromosome has the wrong number of genes")
        pop[i] = np.clip(genes, lo, hi)
    fit = _evaluate_all(objective, pop, n_jobs)
    evaluations = size
    trace = [float(fit.max())]
    best_i = int(np.argmax(fit))
    best_genes, best_fit = pop[best_i].copy(), float(fit[best_i])

    for g in range(1, settings.generations + 1):
        order = np.argsort(-fit, kind="stable")
        elites = [pop[k] for k in order[:settings.elitism]]
        elite_fit = [fit[k] for k in order[:settings.elitism]]
        children = []
        for i in range(settings.elitism, size):
            rng = derive_rng(seed, g, i)
            p1 = pop[roulette_index(fit, rng)]
            p2 = pop[roulette_index(fit, rng)]
            child = crossover(p1, p2, settings.crossover_prob, rng)
            child = mutate(child, settings.mutation_prob, rng, (lo, hi))
            children.append(np.clip(child, lo, hi))
        child_fit = _evaluate_all(objective, children, n_jobs)
        evaluations += len(children)
        pop = elites + children
        fit = np.concatenate([np.asarray(elite_fit, dtype=float), child_fit])
        gen_best = int(np.argmax(fit))
        trace.append(float(fit[gen_best]))
        if fit[gen_best] > best_fit:
            best_genes, best_fit = pop[gen_best].copy(), float(fit[gen_best])
        logger.debug("generation %d best 5pSE %.6g", g, trace[-1])

    best = Chromosome(best_genes, best_fit)
    return GaResult(best=best, best_fitness=best_fit, trace=np.array(trace), initial_best=trace[0],
                    evaluations=evaluations, best_evaluation=objective.evaluate(best))


@dataclass(frozen=True)
class IcicGrid:
    """Candidate values per ICIC parameter (τ, ρ, ρ' in dB, α linear)."""

    tau_db: tuple = (0.0, 3.0, 6.0, 9.0, 12.0, 15.0)
    alpha: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    rho_db: tuple = (20.0, 25.0, 30.0, 35.0, 40.0)
    rho_prime_db: tuple = (-20.0, -15.0, -10.0)

    def __post_init__(self):
        for name, rng in (("tau_db", TAU_DB_RANGE), ("alpha", ALPHA_RANGE),
                          ("rho_db", RHO_DB_RANGE), ("rho_prime_db", RHO_PRIME_DB_RANGE)):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"grid axis {name!r} is empty")
            if any(not rng[0] <= v <= rng[1] for v in vals):
                raise ValueError(f"grid axis {name!r} leaves the range {rng}")
            object.__setattr__(self, name, vals)

    @classmethod
    def default(cls, mode=IcicMode.FEICIC) -> "IcicGrid":
        return cls().for_mode(mode)

    def for_mode(self, mode) -> "IcicGrid":
        fixed = IcicMode(mode).fixed_alpha
        if fixed is None:
            return self
        return IcicGrid(self.tau_db, (fixed,), self.rho_db, self.rho_prime_db)

    def check_mode(self, mode) -> None:
        fixed = IcicMode(mode).fixed_alpha
        if fixed is not None and self.alpha != (fixed,):
            raise ValueError(f"mode {IcicMode(mode).value!r} requires alpha grid ({fixed},), got {self.alpha}")

    def points(self):
        """Grid points in scan order: τ outermost, then α, ρ, ρ'."""
        return itertools.product(self.tau_db, self.alpha, self.rho_db, self.rho_prime_db)

    def __len__(self) -> int:
        return len(self.tau_db) * len(self.alpha) * len(self.rho_db) * len(self.rho_prime_db)


TABLE_COLUMNS = ("tau_db", "alpha", "rho_db", "rho_prime_db", "se_5pct")


@dataclass
class GridSearchResult:
    best_icic: IcicConfig
    best_score: float
    table: np.ndarray  # rows of TABLE_COLUMNS, scan order
    best_row: int = 0

    def best_per_tau(self) -> dict[float, int]:
        """Row index of the best (α, ρ, ρ') for every swept τ, first wins on ties."""
        out: dict[float, int] = {}
        for i, row in enumerate(self.table):
            tau = float(row[0])
            if tau not in out or row[4] > self.table[out[tau], 4]:
                out[tau] = i
        return out


def grid_search_icic(hex_layout: NetworkLayout, grid: IcicGrid, power_model: PowerModel, mode,
                     beta: float = 0.5) -> GridSearchResult:
    """Exhaustive scan of ``grid`` on a layout with fixed UABS positions."""
    mode = IcicMode(mode)
    grid.check_mode(mode)
    hex_layout.validate()
    macro = macro_field(hex_layout, power_model)
    aerial = uabs_field(hex_layout.ue, hex_layout.uabs, power_model)
    sir_by_alpha = {a: sir_arrays(macro, aerial, a, power_model.sir_cap) for a in grid.alpha}

    rows = []
    best_i, best_score, best_icic = -1, -np.inf, None
    for i, (tau, alpha, rho, rho_p) in enumerate(grid.points()):
        icic = IcicConfig.from_db(mode, tau, alpha, rho, rho_p, beta)
        score = evaluate_sir(sir_by_alpha[alpha], icic, hex_layout.n_mbs, hex_layout.n_uabs).se_5pct
        rows.append((tau, alpha, rho, rho_p, score))
        if score > best_score:
            best_i, best_score, best_icic = i, score, icic
    return GridSearchResult(best_icic, float(best_score), np.array(rows, dtype=float), best_i)
