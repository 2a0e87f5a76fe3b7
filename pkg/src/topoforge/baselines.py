"""Benchmark competitors: a real-coded evolutionary algorithm and trust-region runs without rescaling."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classifier import CandidateRecord, ClassifierSpec, classify
from .errors import InfeasiblePopulation
from .geometry import Bounds, DesignVector, GenerationRanges, make_bounds, scale_design
from .scaling import ScalingModel
from .simbackend import Backend, Fidelity, FrequencyGrid, evaluate
from .troptim import BandObjective, BiStageResult, bi_stage_optimize, objective_u

log = logging.getLogger("topoforge.ea")


@dataclass(frozen=True)
class EAConfig:
    population_size: int | None = None  # None -> 2 * dimension
    max_iterations: int = 250
    p_mutation: float = 0.5
    p_crossover: float = 0.2
    tournament_size: int = 2
    elitism: int = 2
    stagnation_window: int = 100
    mutation_scale: float = 0.05  # stdev as a fraction of the bound span
    blend_alpha: float = 0.5
    mating_distance: float = 0.01  # min normalized inf-distance between partners; 0 disables
    feed_resamples: int = 20
    max_sims: int | None = None

    def __post_init__(self):
        if self.population_size is not None and self.population_size < 2:
            raise ValueError("population must hold at least two individuals")
        for p in (self.p_mutation, self.p_crossover):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.tournament_size < 1 or self.elitism < 0:
            raise ValueError("invalid tournament size or elitism count")


@dataclass
class EAResult:
    x_best: np.ndarray
    U_best: float
    best_history: list[float] = field(default_factory=list)
    generations: int = 0
    n_evaluations: int = 0
    reason: str = ""


def global_bounds(L: int, c0: float = 30.0, ranges: GenerationRanges = GenerationRanges()) -> Bounds:
    """Box covering the whole generation space, with scale between c0/2 and 2*c0."""
    lb = np.r_[0.5 * c0, ranges.rho_f[0], ranges.phi_f[0], np.full(L, ranges.rho[0]), np.full(L, ranges.phi[0])]
    ub = np.r_[2.0 * c0, ranges.rho_f[1], ranges.phi_f[1], np.full(L, ranges.rho[1]), np.full(L, ranges.phi[1])]
    return Bounds(lb, ub)


def _tournament(rng, fitness: np.ndarray, k: int) -> int:
    idx = rng.integers(0, fitness.size, k)
    return int(idx[np.argmin(fitness[idx])])


def _blend(rng, a: np.ndarray, b: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    d = hi - lo
    return rng.uniform(lo - alpha * d, hi + alpha * d), rng.uniform(lo - alpha * d, hi + alpha * d)


def evolve(
    fitness_fn: Callable[[list[np.ndarray]], np.ndarray],
    population: Sequence[np.ndarray],
    bounds: Bounds,
    config: EAConfig = EAConfig(),
    rng: np.random.Generator | None = None,
    repair: Callable[[np.ndarray, np.random.Generator], np.ndarray | None] | None = None,
    initial_fitness: np.ndarray | None = None,
    sims_used: Callable[[], int] | None = None,
) -> EAResult:
    """Generic real-coded GA minimizing ``fitness_fn`` (called with a batch of arrays).

    ``repair`` returns a feasible array or None; offspring that cannot be
    repaired are redrawn. ``initial_fitness`` skips evaluating generation 0.
    """
    rng = rng if rng is not None else np.random.default_rng()
    pop = np.array([np.asarray(p, dtype=float) for p in population])
    n_pop, D = pop.shape
    span = np.where(bounds.span > 0, bounds.span, 1.0)
    n_eval = 0
    if initial_fitness is None:
        fit = np.asarray(fitness_fn(list(pop)), dtype=float)
        n_eval += n_pop
    else:
        fit = np.asarray(initial_fitness, dtype=float).copy()
    best_i = int(np.argmin(fit))
    res = EAResult(pop[best_i].copy(), float(fit[best_i]), [float(fit[best_i])])
    last_improvement = 0
    n_elite = min(config.elitism, n_pop)
    p_gene = config.p_mutation / D

    def variation():
        i = _tournament(rng, fit, config.tournament_size)
        j = _tournament(rng, fit, config.tournament_size)
        for _ in range(10):  # mating restriction
            if config.mating_distance <= 0 or np.max(np.abs(pop[i] - pop[j]) / span) >= config.mating_distance:
                break
            j = _tournament(rng, fit, config.tournament_size)
        if rng.random() < config.p_crossover:
            kids = _blend(rng, pop[i], pop[j], config.blend_alpha)
        else:
            kids = (pop[i].copy(), pop[j].copy())
        out = []
        for kid in kids:
            m = rng.random(D) < p_gene
            kid = kid + m * rng.normal(0.0, config.mutation_scale * span)
            kid = np.clip(kid, bounds.lb, bounds.ub)
            if repair is not None:
                kid = repair(kid, rng)
            out.append(kid)
        return out

    reason = "max_iterations"
    for gen in range(1, config.max_iterations + 1):
        n_kids = n_pop - n_elite
        if config.max_sims is not None and sims_used is not None and sims_used() + n_kids > config.max_sims:
            reason = "budget"
            break
        kids: list[np.ndarray] = []
        attempts = 0
        while len(kids) < n_kids:
            attempts += 1
            if attempts > 20 * n_kids:
                raise InfeasiblePopulation(f"repair failed for generation {gen}")
            for kid in variation():
                if kid is not None and len(kids) < n_kids:
                    kids.append(kid)
        kid_fit = np.asarray(fitness_fn(kids), dtype=float) if kids else np.empty(0)
        n_eval += len(kids)
        elite = np.argsort(fit, kind="stable")[:n_elite]
        pop = np.vstack([pop[elite]] + ([np.array(kids)] if kids else []))
        fit = np.r_[fit[elite], kid_fit]
        gi = int(np.argmin(fit))
        if fit[gi] < res.U_best:
            res.x_best, res.U_best = pop[gi].copy(), float(fit[gi])
            last_improvement = gen
        res.best_history.append(res.U_best)
        res.generations = gen
        log.info("generation %d best U=%.5g evaluations=%d", gen, res.U_best, n_eval)
        if res.U_best == 0.0:
            reason = "satisfied"
            break
        if gen - last_improvement >= config.stagnation_window:
            reason = "stagnation"
            break
    res.n_evaluations = n_eval
    res.reason = reason
    return res


def antenna_repair(backend: Backend, bounds: Bounds, tries: int = 20):
    """Clip into the box, then redraw the feed until its clearance rule holds."""

    def repair(a: np.ndarray, rng: np.random.Generator) -> np.ndarray | None:
        a = np.clip(a, bounds.lb, bounds.ub)
        if backend.feasible(DesignVector.from_array(a)):
            return a
        for _ in range(tries):
            a = a.copy()
            a[1] = rng.uniform(bounds.lb[1], min(bounds.ub[1], float(np.max(a[3:3 + (a.size - 3) // 2]))))
            a[2] = rng.uniform(bounds.lb[2], bounds.ub[2])
            if backend.feasible(DesignVector.from_array(a)):
                return a
        return None

    return repair


def ea_optimize(
    backend: Backend,
    seed_population: Sequence[CandidateRecord],
    obj: BandObjective,
    config: EAConfig = EAConfig(),
    scaling: bool = False,
    model: ScalingModel | None = None,
    grid: FrequencyGrid = FrequencyGrid(),
    rng: np.random.Generator | None = None,
    bounds: Bounds | None = None,
    workers: int = 1,
) -> tuple[DesignVector, EAResult]:
    """EA on the coarse model from stored candidates.

    Without scaling the stored coarse curves serve as generation 0 at no cost.
    With scaling every member is first moved to its classifier-optimal size and re-simulated.
    """
    if not seed_population:
        raise InfeasiblePopulation("empty initial population")
    rng = rng if rng is not None else np.random.default_rng()
    L = seed_population[0].design.L
    c0 = model.c0 if model is not None else 30.0
    bounds = bounds if bounds is not None else global_bounds(L, c0)
    snap = backend.counter.snapshot()

    def sims_used():
        c, f = backend.counter.since(snap)
        return c + f

    def fitness(batch):
        def one(a):
            return objective_u(evaluate(backend, DesignVector.from_array(a), grid, Fidelity.COARSE), obj)

        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                return np.array(list(ex.map(one, batch)))
        return np.array([one(a) for a in batch])

    repair = antenna_repair(backend, bounds, config.feed_resamples)
    if scaling:
        if model is None:
            raise ValueError("scaling requires a fitted scaling model")
        spec = ClassifierSpec(obj.f_L, obj.f_H)
        pop = []
        for rec in seed_population:
            v = classify(rec, model, spec, (bounds.lb[0], bounds.ub[0]))
            pop.append(np.clip(scale_design(rec.design, v.c_star).to_array(), bounds.lb, bounds.ub))
        init_fit = None
    else:
        pop = [np.clip(rec.design.to_array(), bounds.lb, bounds.ub) for rec in seed_population]
        init_fit = np.array([objective_u(rec.coarse_curve, obj) for rec in seed_population])
    pop = [p if backend.feasible(DesignVector.from_array(p)) else repair(p, rng) for p in pop]
    if any(p is None for p in pop):
        raise InfeasiblePopulation("initial population could not be made feasible")
    if init_fit is not None and config.population_size is not None:
        init_fit = init_fit[: config.population_size]
    if config.population_size is not None:
        pop = pop[: config.population_size]
    res = evolve(fitness, pop, bounds, config, rng, repair, init_fit, sims_used)
    return DesignVector.from_array(res.x_best), res


def tr_noscale(
    backend: Backend,
    x_q: DesignVector,
    obj: BandObjective,
    c0: float = 30.0,
    grid: FrequencyGrid = FrequencyGrid(),
    coarse_budget: int | None = None,
    fine_budget: int | None = None,
    workers: int = 1,
) -> BiStageResult:
    """The bi-stage optimizer started from the candidate at the reference size, without classification."""
    x = scale_design(x_q, c0)
    bounds = make_bounds(x)
    x, _ = bounds.clip(x)
    return bi_stage_optimize(backend, x, bounds, obj, grid, coarse_budget=coarse_budget, fine_budget=fine_budget,
                             workers=workers)


def sphere_population(rng: np.random.Generator, n: int, D: int, lo: float = -1.0, hi: float = 1.0) -> list[np.ndarray]:
    return [rng.uniform(lo, hi, D) for _ in range(n)]


__all__ = [
    "EAConfig", "EAResult", "antenna_repair", "ea_optimize", "evolve", "global_bounds", "sphere_population",
    "tr_noscale",
]
