"""Adaptive-penalty genetic optimizer for request offloading, plus baselines.

Three modes share one engine:

* ``sla-aware`` - the full adaptive-penalty fitness chain: the normalized
  objective and the normalized violation measures are blended, weighted by
  the feasible fraction of the current generation, so constraint pressure
  grows as feasible solutions appear.
* ``qos-ga``   - same engine with the penalty disabled (objective only).
* ``random``   - a single uniformly random assignment, evaluated once.

Every stochastic draw (initialization, roulette spins, cutoff points,
mutation sites) consumes one ordered stream from a counter-based Philox
generator, so a run is reproducible regardless of how evaluations are
parallelized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .domain import DomainError, Scenario, validate_scenario
from .evaluation import AssignmentEvaluator, EvaluationReport
from .objective import ViolationVector, is_feasible

#: Absolute tolerance for the known-optimum early stop.
OPTIMUM_TOL = 1e-9


class Mode(str, Enum):
    SLA_AWARE = "sla-aware"
    QOS_ONLY = "qos-ga"
    RANDOM = "random"


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide RNG: one seedable counter-based Philox stream."""
    return np.random.Generator(np.random.Philox(seed))


def default_population_size(n_requests: int) -> int:
    """Tuned population size: twice the request count."""
    return 2 * n_requests


@dataclass(frozen=True)
class GaParams:
    population_size: int
    crossover_rate: float = 0.95
    mutation_rate: float = 0.01
    max_generations: int = 1000
    rng_seed: int = 0
    mode: Mode = Mode.SLA_AWARE
    known_optimum: Optional[float] = None  # feasible total time to stop at

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (0 < self.crossover_rate <= 1):
            raise ValueError("crossover_rate must be in (0, 1]")
        if not (0 <= self.mutation_rate < 1):
            raise ValueError("mutation_rate must be in [0, 1)")
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 2")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")


@dataclass(frozen=True)
class PopulationConstants:
    """Normalization denominators of one generation's fitness chain."""

    obj_min: float
    obj_max: float
    viol_max: tuple[float, float, float, float, float]
    n_f: int
    gamma: float


@dataclass(frozen=True)
class PopulationEval:
    """Per-solution fitness chain values for one generation."""

    raw: tuple[float, ...]          # objective totals
    fnorm: tuple[float, ...]        # min-max normalized objective
    pnorm: tuple[float, ...]        # mean of max-normalized violation terms
    fbar: tuple[float, ...]         # adaptive penalized score (lower is better)
    fitness: tuple[float, ...]      # 1 / (fbar + 1), in (0, 1]
    prob: tuple[float, ...]
    cumm: tuple[float, ...]
    feasible: tuple[bool, ...]
    n_f: int
    gamma: float
    constants: PopulationConstants


def _norm_objective(x: float, lo: float, hi: float) -> float:
    if hi > lo:
        return (x - lo) / (hi - lo)
    # Degenerate generation (everyone equal): members map to 0; offspring
    # scored in this frame keep the formula's sign so improvements still
    # rank ahead of their parents.
    if x == lo:
        return 0.0
    return 1.0 if x > lo else -1.0


def _norm_violation(x: float, mx: float) -> float:
    if x == 0:
        return 0.0
    return x / mx if mx > 0 else 1.0


def penalized_from_components(objective_total: float, components,
                              constants: PopulationConstants,
                              mode: Mode) -> tuple[float, float, float]:
    """(fnorm, pnorm, fbar) from a raw objective and the five violation
    measures, under a given generation's normalization constants."""
    fnorm = _norm_objective(objective_total, constants.obj_min, constants.obj_max)
    pnorm = sum(_norm_violation(float(x), mx)
                for x, mx in zip(components, constants.viol_max)) / 5.0
    if mode is Mode.QOS_ONLY:
        fbar = fnorm
    elif constants.n_f == 0:
        fbar = pnorm
    elif pnorm == 0:
        fbar = fnorm
    else:
        g = constants.gamma
        fbar = math.sqrt(fnorm * fnorm + pnorm * pnorm) \
            + (1.0 - g) * pnorm + g * fnorm
    return fnorm, pnorm, fbar


def score_with_constants(objective_total: float, violation: ViolationVector,
                         constants: PopulationConstants,
                         mode: Mode) -> tuple[float, float, float]:
    """(fnorm, pnorm, fbar) of one solution under a generation's constants.

    Used both for population members and for scoring offspring within
    their parents' generation.
    """
    return penalized_from_components(objective_total, violation.components(),
                                     constants, mode)


def fitness_chain(objectives: Sequence[float],
                  violation_vectors: Sequence[ViolationVector],
                  mode: Mode = Mode.SLA_AWARE) -> PopulationEval:
    """Full fitness chain of one generation."""
    if len(objectives) != len(violation_vectors) or not objectives:
        raise ValueError("objectives and violations must be non-empty and aligned")
    feasible = tuple(is_feasible(v) for v in violation_vectors)
    n_f = sum(feasible)
    gamma = n_f / len(objectives)
    comps = [v.components() for v in violation_vectors]
    constants = PopulationConstants(
        obj_min=min(objectives), obj_max=max(objectives),
        viol_max=tuple(max(c[k] for c in comps) for k in range(5)),
        n_f=n_f, gamma=gamma)

    fnorm, pnorm, fbar = [], [], []
    for obj, v in zip(objectives, violation_vectors):
        fn, pn, fb = score_with_constants(obj, v, constants, mode)
        fnorm.append(fn)
        pnorm.append(pn)
        fbar.append(fb)
    fitness = [1.0 / (fb + 1.0) for fb in fbar]
    total = sum(fitness)
    if total <= 0:
        raise RuntimeError("zero fitness mass")  # unreachable: fitness > 0
    prob = [f / total for f in fitness]
    cumm, acc = [], 0.0
    for p in prob:
        acc += p
        cumm.append(acc)
    return PopulationEval(
        raw=tuple(objectives), fnorm=tuple(fnorm), pnorm=tuple(pnorm),
        fbar=tuple(fbar), fitness=tuple(fitness), prob=tuple(prob),
        cumm=tuple(cumm), feasible=feasible, n_f=n_f, gamma=gamma,
        constants=constants)


def roulette_draw(cumm: Sequence[float], rng: np.random.Generator,
                  count: int) -> list[int]:
    """Inverse-CDF sampling on the cumulative fitness probabilities."""
    edges = np.asarray(cumm)
    us = rng.random(count)
    idx = np.searchsorted(edges, us, side="left")
    return [int(i) for i in np.minimum(idx, len(cumm) - 1)]


def select_parents(pe: PopulationEval, params: GaParams,
                   rng: np.random.Generator) -> list[tuple[int, int]]:
    """Pairs of population slots chosen by roulette wheel selection.

    floor(crossover_rate * population_size) individuals are drawn with
    replacement and paired consecutively; an odd draw count is rounded
    down to even.
    """
    n = int(params.crossover_rate * params.population_size)
    n -= n % 2
    if n <= 0:
        return []
    draws = roulette_draw(pe.cumm, rng, n)
    return [(draws[k], draws[k + 1]) for k in range(0, n, 2)]


def crossover_pair(a: tuple[int, ...], b: tuple[int, ...],
                   cut: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Single-point crossover: swap the gene suffixes after ``cut``."""
    if not (1 <= cut < len(a)):
        raise ValueError(f"cut must be in [1, {len(a) - 1}]")
    return a[:cut] + b[cut:], b[:cut] + a[cut:]


def family_survivors(candidates: Sequence[tuple[int, ...]],
                     penalized: Sequence[float]) -> tuple[int, int]:
    """Indices of the two fittest among (parent_a, parent_b, child_a,
    child_b), by penalized score. Ties keep the earlier candidate, so a
    crossover of identical parents replaces them with themselves."""
    order = sorted(range(len(candidates)), key=lambda i: (penalized[i], i))
    return order[0], order[1]


def mutation_count(n_requests: int, population_size: int,
                   mutation_rate: float) -> int:
    """Number of genes to mutate across the population (round half up).

    A positive mutation rate always mutates at least one gene: letting the
    count quantize to zero on small instances would silently disable the
    diversification that mutation exists to provide.
    """
    if mutation_rate <= 0:
        return 0
    return max(1, int(math.floor(
        n_requests * population_size * mutation_rate + 0.5)))


def mutate(population: list[tuple[int, ...]], params: GaParams,
           alphabet: Sequence[int],
           rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Reassign distinct gene positions across the whole population.

    Positions are drawn uniformly without replacement; each chosen gene is
    forced onto a different value from its alphabet, so exactly that many
    genes differ from the pre-image.
    """
    if not population or len(alphabet) < 2:
        return list(population)
    n_genes = len(population[0])
    total = len(population) * n_genes
    n_mut = min(mutation_count(n_genes, len(population), params.mutation_rate),
                total)
    if n_mut == 0:
        return list(population)
    positions = np.sort(rng.choice(total, size=n_mut, replace=False))
    pop = [list(g) for g in population]
    n_alternatives = len(alphabet) - 1
    for pos in positions:
        q, i = divmod(int(pos), n_genes)
        old = pop[q][i]
        alternatives = [a for a in alphabet if a != old]
        pop[q][i] = alternatives[int(rng.integers(0, n_alternatives))]
    return [tuple(g) for g in pop]


def init_population(scenario: Scenario, params: GaParams,
                    rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Uniform random assignments over {home edge} + clouds per gene."""
    alphabet = scenario.gene_alphabet
    draws = rng.integers(0, len(alphabet),
                         size=(params.population_size, len(scenario.requests)))
    return [tuple(alphabet[int(j)] for j in row) for row in draws]


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_F: float
    mean_F: float
    n_f: int
    best_feasible_time_s: Optional[float]
    best_so_far_fbar: float


@dataclass(frozen=True)
class GaTrace:
    rows: tuple[GenerationStats, ...]
    best: EvaluationReport
    generations_run: int
    params: GaParams


def trace_to_csv(trace: GaTrace, provenance: Optional[dict] = None) -> str:
    """Line-per-generation CSV, with ``# key=value`` provenance on top."""
    lines = [f"# {k}={v}" for k, v in (provenance or {}).items()]
    lines.append("generation,best_F,mean_F,n_f,best_feasible_time_s")
    for row in trace.rows:
        feas = "" if row.best_feasible_time_s is None else repr(row.best_feasible_time_s)
        lines.append(f"{row.generation},{row.best_F!r},{row.mean_F!r},"
                     f"{row.n_f},{feas}")
    return "\n".join(lines) + "\n"


def _order_key(report: EvaluationReport) -> tuple[float, float, float]:
    """Absolute (generation-independent) solution ordering for best-so-far
    bookkeeping: feasible first, by total time; infeasible by violation
    mass, then total time."""
    if report.feasible:
        return (0.0, report.total_time_s, 0.0)
    return (1.0, sum(report.violations.components()), report.total_time_s)


def run(scenario: Scenario, params: GaParams, on_uncovered: str = "raise",
        cpu_mem_rule: str = "aggregate") -> GaTrace:
    """Run one optimizer mode to termination.

    Terminates at ``max_generations``, or as soon as the best solution seen
    is feasible with a total time within ``OPTIMUM_TOL`` of
    ``params.known_optimum`` (when supplied). The best-so-far solution is
    tracked outside the population, so mutation can never lose it.
    """
    check = validate_scenario(scenario)
    if not check.ok:
        raise DomainError("invalid scenario: " + "; ".join(check.errors))
    evaluator = AssignmentEvaluator(scenario, on_uncovered=on_uncovered,
                                    cpu_mem_rule=cpu_mem_rule)
    rng = make_rng(params.rng_seed)
    alphabet = scenario.gene_alphabet
    n_genes = len(scenario.requests)

    if params.mode is Mode.RANDOM:
        draws = rng.integers(0, len(alphabet), size=n_genes)
        report = evaluator.evaluate(tuple(alphabet[int(j)] for j in draws))
        pe = fitness_chain([report.total_time_s], [report.violations],
                           Mode.SLA_AWARE)
        row = GenerationStats(
            generation=1, best_F=pe.fitness[0], mean_F=pe.fitness[0],
            n_f=pe.n_f,
            best_feasible_time_s=report.total_time_s if report.feasible else None,
            best_so_far_fbar=pe.fbar[0])
        return GaTrace(rows=(row,), best=report, generations_run=1,
                       params=params)

    population = init_population(scenario, params, rng)
    rows: list[GenerationStats] = []
    best_report: Optional[EvaluationReport] = None
    best_key = None
    fbar_so_far = math.inf

    def consider(report: EvaluationReport):
        nonlocal best_report, best_key
        key = _order_key(report)
        if best_key is None or key < best_key:
            best_key, best_report = key, report

    generations_run = 0
    for gen in range(1, params.max_generations + 1):
        generations_run = gen
        reports = [evaluator.evaluate(g) for g in population]
        pe = fitness_chain([r.total_time_s for r in reports],
                           [r.violations for r in reports], params.mode)
        for report in reports:
            consider(report)
        fbar_so_far = min(fbar_so_far, min(pe.fbar))
        feasible_times = [r.total_time_s
                          for r, ok in zip(reports, pe.feasible) if ok]
        rows.append(GenerationStats(
            generation=gen,
            best_F=max(pe.fitness),
            mean_F=sum(pe.fitness) / len(pe.fitness),
            n_f=pe.n_f,
            best_feasible_time_s=min(feasible_times) if feasible_times else None,
            best_so_far_fbar=fbar_so_far))

        if (params.known_optimum is not None and best_report is not None
                and best_report.feasible
                and best_report.total_time_s <= params.known_optimum + OPTIMUM_TOL):
            break
        if gen == params.max_generations:
            break

        pairs = select_parents(pe, params, rng)
        if n_genes >= 2:
            for qa, qb in pairs:
                pa, pb = population[qa], population[qb]
                cut = int(rng.integers(1, n_genes))
                ca, cb = crossover_pair(pa, pb, cut)
                scored = []
                for genes in (pa, pb, ca, cb):
                    rep = evaluator.evaluate(genes)
                    consider(rep)
                    _, _, fb = score_with_constants(
                        rep.total_time_s, rep.violations, pe.constants,
                        params.mode)
                    scored.append(fb)
                candidates = (pa, pb, ca, cb)
                first, second = family_survivors(candidates, scored)
                population[qa] = candidates[first]
                if qb != qa:
                    population[qb] = candidates[second]
        population = mutate(population, params, alphabet, rng)

    assert best_report is not None
    return GaTrace(rows=tuple(rows), best=best_report,
                   generations_run=generations_run, params=params)
