"""Genetic-algorithm search over motion twists.

Chromosomes are raw 6-vector twists.  Each generation: errors are scored
with the dense photometric objective, fitness follows exp(-8 E / E_min),
parents come from roulette-wheel selection on the cumulative fitness
distribution, offspring are built by per-gene intermediate crossover,
and a random share of the pool is perturbed by bound-scaled Gaussian
mutation.  Replacement is elitist: survivors are the best N of the
merged pool, so the best error never worsens.

The search runs coarse-to-fine over an image pyramid; each finer level
re-centers a halved search box on the estimate carried down from the
level above.

All randomness flows through one numpy Generator.  Per level the draw
order is fixed: population init; then per iteration the crossover pairs
(two parent picks then six crossover weights, pair by pair), the
mutation membership draw, and six Gaussian steps per mutant.  Identical
config and seed therefore reproduce identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateOverlap, ZeroFitnessSum
from .warp import FramePyramid, photometric_error

# Fitness floor: a zero best error would otherwise divide by zero.  With
# both numerator and denominator floored the best particle still maps to
# exp(-8) exactly.
_ERROR_FLOOR = 1e-12
_FITNESS_SHARPNESS = 8.0


def _default_lower():
    return np.full(6, -0.15)


def _default_upper():
    return np.full(6, 0.15)


@dataclass
class GaConfig:
    """Search parameters.

    lower_bounds/upper_bounds are per-gene offsets around the current
    center estimate, in meters and radians, at the coarsest level; each
    finer level halves them.  mutation_fraction is the share of the pool
    mutated per iteration, mutation_rate scales the Gaussian step by the
    bound width, crossover_fraction sets the offspring count.  A level
    stops early once the best error improves by less than
    stagnation_epsilon over stagnation_window iterations.
    """

    population_size: int = 200
    max_iterations: int = 60
    lower_bounds: np.ndarray = field(default_factory=_default_lower)
    upper_bounds: np.ndarray = field(default_factory=_default_upper)
    mutation_fraction: float = 0.30
    mutation_rate: float = 0.10
    crossover_fraction: float = 0.70
    stagnation_window: int = 10
    stagnation_epsilon: float = 1e-7
    pyramid_levels: int = 4
    rng_seed: int = 0
    # Mutation order within an iteration is not pinned down by the method
    # description; by default mutants are drawn from the pool after the
    # crossover offspring have been merged in.  False draws them from the
    # same parent pool as crossover and merges everything in one step.
    mutate_after_replacement: bool = True

    def __post_init__(self):
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=np.float64)
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=np.float64)

    def validate(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.lower_bounds.shape != (6,) or self.upper_bounds.shape != (6,):
            raise ValueError("bounds must be 6-vectors")
        if np.any(self.upper_bounds < self.lower_bounds):
            raise ValueError("upper_bounds must dominate lower_bounds")
        for name in ("mutation_fraction", "mutation_rate", "crossover_fraction"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")
        if self.stagnation_epsilon < 0:
            raise ValueError("stagnation_epsilon must be >= 0")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")


class Particle(NamedTuple):
    xi: np.ndarray
    error: float


@dataclass(eq=False)
class Population:
    """genes is (N, 6); errors is (N,) with NaN marking "not scored yet"."""

    genes: np.ndarray
    errors: np.ndarray

    def __len__(self):
        return self.genes.shape[0]

    def best(self) -> Particle:
        i = int(np.nanargmin(self.errors))
        return Particle(self.genes[i].copy(), float(self.errors[i]))


@dataclass
class EstimationReport:
    best_xi: np.ndarray
    best_error: float
    # Pyramid level index per processed level, coarsest first, aligned
    # with iterations_used and error_trace.
    levels: list[int]
    iterations_used: list[int]
    # error_trace[k][0] is the best error of level k's initial population;
    # entry i is the best after iteration i.
    error_trace: list[list[float]]


def init_population(cfg: GaConfig, center, rng: np.random.Generator) -> Population:
    """Uniform population in [center + lower, center + upper], per gene.

    Particle 0 is forced to exactly `center` so the incoming estimate is
    always in the race.  Errors start unscored.
    """
    cfg.validate()
    center = np.asarray(center, dtype=np.float64)
    lo = center + cfg.lower_bounds
    hi = center + cfg.upper_bounds
    genes = rng.uniform(lo, hi, size=(cfg.population_size, 6))
    genes[0] = center
    return Population(genes, np.full(cfg.population_size, np.nan))


def fitness(errors) -> np.ndarray:
    """Map errors to exp(-8 E / E_min); the minimum always maps to exp(-8)."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("errors must be non-empty")
    if np.any(np.isnan(errors)) or np.any(errors < 0):
        raise ValueError("errors must be evaluated and non-negative")
    e_min = max(float(np.min(errors)), _ERROR_FLOOR)
    ratio = np.maximum(errors, _ERROR_FLOOR) / e_min
    return np.exp(-_FITNESS_SHARPNESS * ratio)


def selection_probabilities(fitness_values) -> np.ndarray:
    """Cumulative selection distribution; last entry is exactly 1."""
    f = np.asarray(fitness_values, dtype=np.float64)
    total = float(f.sum())
    if not total > 0.0:
        raise ZeroFitnessSum(f"fitness sum is {total}")
    cum = np.cumsum(f / total)
    cum[-1] = 1.0
    return cum


def roulette_select(cumulative, rng: np.random.Generator) -> int:
    """Index of the first entry whose cumulative value exceeds one uniform draw."""
    u = rng.random()
    return int(np.searchsorted(cumulative, u, side="right"))


def crossover(p1, p2, cfg: GaConfig, rng: np.random.Generator):
    """Per-gene intermediate crossover; offspring are clamped to the bounds.

    One weight vector alpha ~ U[0,1]^6 serves both children: the second
    child uses the complementary blend.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    alpha = rng.uniform(size=6)
    o1 = alpha * p1 + (1.0 - alpha) * p2
    o2 = alpha * p2 + (1.0 - alpha) * p1
    lo, hi = cfg.lower_bounds, cfg.upper_bounds
    return np.clip(o1, lo, hi), np.clip(o2, lo, hi)


def mutate(xi, cfg: GaConfig, rng: np.random.Generator) -> np.ndarray:
    """Gaussian step scaled per gene by mutation_rate * bound width, clamped."""
    xi = np.asarray(xi, dtype=np.float64)
    delta = cfg.mutation_rate * (cfg.upper_bounds - cfg.lower_bounds)
    out = xi + delta * rng.standard_normal(6)
    return np.clip(out, cfg.lower_bounds, cfg.upper_bounds)


def replace(old: Population, offspring: Population, n: int) -> Population:
    """Elitist survivor selection: best n of the merged pool.

    Ties keep members of `old` ahead of offspring, then insertion order;
    the sort is stable so concatenation order encodes exactly that.
    """
    genes = np.concatenate([old.genes, offspring.genes])
    errors = np.concatenate([old.errors, offspring.errors])
    if np.any(np.isnan(errors)):
        raise ValueError("replace requires fully evaluated populations")
    if n < 1 or n > genes.shape[0]:
        raise ValueError(f"cannot keep {n} of {genes.shape[0]} particles")
    order = np.argsort(errors, kind="stable")[:n]
    return Population(genes[order].copy(), errors[order].copy())


def _evaluate(genes: np.ndarray, objective: Callable[[np.ndarray], float]) -> np.ndarray:
    return np.array([objective(g) for g in genes])


def _optimize_level(
    objective: Callable[[np.ndarray], float],
    cfg: GaConfig,
    center: np.ndarray,
    rng: np.random.Generator,
) -> tuple[Population, int, list[float]]:
    """Run the GA at one level; cfg bounds are already the level's offsets.

    Returns the final population (sorted best-first), the number of
    iterations executed, and the best-error trace.
    """
    n = cfg.population_size
    pop = init_population(cfg, center, rng)
    # Op contracts clamp against absolute bounds, so build a config whose
    # bounds are the level's box in absolute twist coordinates.
    abs_cfg = dc_replace(
        cfg,
        lower_bounds=center + cfg.lower_bounds,
        upper_bounds=center + cfg.upper_bounds,
    )
    pop.errors = _evaluate(pop.genes, objective)
    if not np.isfinite(pop.errors[0]):
        raise DegenerateOverlap(
            "center twist leaves too little frame overlap at this level"
        )
    order = np.argsort(pop.errors, kind="stable")
    pop = Population(pop.genes[order], pop.errors[order])
    trace = [float(pop.errors[0])]
    iterations = 0
    n_pairs = int(round(cfg.crossover_fraction * n / 2.0))
    n_mut = int(round(cfg.mutation_fraction * n))
    for iteration in range(1, cfg.max_iterations + 1):
        iterations = iteration
        cum = selection_probabilities(fitness(pop.errors))
        children = np.empty((2 * n_pairs, 6))
        for p in range(n_pairs):
            i = roulette_select(cum, rng)
            j = roulette_select(cum, rng)
            children[2 * p], children[2 * p + 1] = crossover(
                pop.genes[i], pop.genes[j], abs_cfg, rng
            )
        if cfg.mutate_after_replacement:
            if n_pairs:
                child_pop = Population(children, _evaluate(children, objective))
                pop = replace(pop, child_pop, n)
            if n_mut:
                picks = rng.choice(n, size=n_mut, replace=False)
                mutants = np.stack([mutate(pop.genes[k], abs_cfg, rng) for k in picks])
                mut_pop = Population(mutants, _evaluate(mutants, objective))
                pop = replace(pop, mut_pop, n)
        else:
            newcomers = children
            if n_mut:
                picks = rng.choice(n, size=n_mut, replace=False)
                mutants = np.stack([mutate(pop.genes[k], abs_cfg, rng) for k in picks])
                newcomers = np.concatenate([children, mutants])
            if newcomers.shape[0]:
                new_pop = Population(newcomers, _evaluate(newcomers, objective))
                pop = replace(pop, new_pop, n)
        trace.append(float(pop.errors[0]))
        if iteration >= cfg.stagnation_window:
            if trace[-1 - cfg.stagnation_window] - trace[-1] < cfg.stagnation_epsilon:
                break
    return pop, iterations, trace


def estimate_motion(
    ref_pyramid: FramePyramid,
    tgt_pyramid: FramePyramid,
    cfg: GaConfig,
    init=None,
    rng: np.random.Generator | None = None,
) -> EstimationReport:
    """Coarse-to-fine GA estimate of the motion from ref to tgt.

    Levels run coarsest first; each level searches a box around the
    running estimate whose half-width doubles per level of coarseness
    (full cfg bounds at the coarsest level).  The finest-level result is
    only accepted if it beats the initial twist, so the returned error
    never exceeds the initial twist's full-resolution error.
    """
    cfg.validate()
    if len(ref_pyramid) < cfg.pyramid_levels or len(tgt_pyramid) < cfg.pyramid_levels:
        raise ValueError(
            f"pyramids provide {len(ref_pyramid)}/{len(tgt_pyramid)} levels,"
            f" config wants {cfg.pyramid_levels}"
        )
    init = np.zeros(6) if init is None else np.asarray(init, dtype=np.float64).copy()
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    def objective_at(level: int) -> Callable[[np.ndarray], float]:
        ref = ref_pyramid.levels[level]
        tgt = tgt_pyramid.levels[level]

        def objective(xi: np.ndarray) -> float:
            try:
                return photometric_error(xi, ref, tgt).mean_squared_error
            except DegenerateOverlap:
                return np.inf

        return objective

    center = init.copy()
    levels: list[int] = []
    iterations_used: list[int] = []
    error_trace: list[list[float]] = []
    best_xi = center
    best_error = np.inf
    coarsest = cfg.pyramid_levels - 1
    for level in range(coarsest, -1, -1):
        scale = 2.0 ** (level - coarsest)
        level_cfg = dc_replace(
            cfg,
            lower_bounds=scale * cfg.lower_bounds,
            upper_bounds=scale * cfg.upper_bounds,
        )
        pop, iterations, trace = _optimize_level(
            objective_at(level), level_cfg, center, rng
        )
        levels.append(level)
        iterations_used.append(iterations)
        error_trace.append(trace)
        center = pop.genes[0].copy()
        best_xi = center
        best_error = float(pop.errors[0])

    init_error = objective_at(0)(init)
    if init_error < best_error:
        best_xi = init
        best_error = float(init_error)
    return EstimationReport(best_xi, best_error, levels, iterations_used, error_trace)
