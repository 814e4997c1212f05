"""Search harnesses over one-number and codon-list genotypes.

All searchers emit a Trace: the best-so-far fitness recorded at every
single evaluation, so different algorithms are comparable at equal
evaluation budgets.  Budgets are exact: a run performs precisely
``budget`` evaluations, and for generational algorithms the budget is
``population * generations`` with the initial random population counting
as the first generation (elite copies are counted like any other
placement, reusing their cached fitness).

Algorithms
----------
``fpge-dfs`` / ``fpge-bfs``
    Generational GA on one-number genotypes: tournament selection,
    blend crossover (uniform on the closed interval between the two
    parents; never the midpoint-only variant, which collapses diversity),
    wrap-around perturbation mutation applied to every child, elitism,
    invalid decodes kept in the population at Worst fitness.
``de-dfs`` / ``de-bfs``
    Differential evolution, DE/rand/1: candidate = r1 + F * (r2 - r3)
    computed exactly on numerators (F as an exact rational, floor
    division) with modular wrap into [0, 1]; greedy replacement when the
    candidate is no worse than the target; replacement is immediate.
``rand-dfs`` / ``rand-bfs``
    Uniform random sampling of genotypes.
``int-ge``
    Baseline integer GE on fixed-length codon lists: leftmost (DFS-order)
    expansion, ``codon mod k`` production choice, one codon consumed per
    expansion (also for single-production rules), no wrapping; one-point
    crossover and per-codon reset mutation.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .decoder import (
    CODONS_EXHAUSTED,
    DEPTH_EXCEEDED,
    NODES_EXCEEDED,
    DecodeLimits,
    DecodeOutcome,
    DerivationTree,
    bfs_decode,
    dfs_decode,
    render,
    _check_limits,
)
from .evaluator import Dataset, FitnessEvaluator, WORST
from .grammar import Grammar, Symbol
from .precision import (
    UnitFraction,
    pow10,
    random_delta,
    random_in_range,
    random_unit,
)
from .rng import Xoshiro256StarStar

ALGORITHMS = (
    "fpge-dfs",
    "fpge-bfs",
    "de-dfs",
    "de-bfs",
    "rand-dfs",
    "rand-bfs",
    "int-ge",
)

_GENERATIONAL = ("fpge-dfs", "fpge-bfs", "int-ge")


@dataclass(frozen=True)
class SearchConfig:
    """Everything a run needs besides the grammar, dataset and seed."""

    algorithm: str
    population: int = 500
    budget: int = 25000
    mutation_half_width: str = "0.05"
    crossover_probability: float = 0.75
    tournament_size: int = 2
    elitism: int = 1
    de_weight: str = "0.5"
    codon_length: int = 200
    codon_mutation_rate: float = 0.01
    codon_max: int = 1 << 16
    max_depth: int = 15
    max_nodes: int = 2000
    seed: int = 0
    precision: int = 150
    metric: str = "rmse"

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.algorithm in _GENERATIONAL:
            if self.budget % self.population != 0:
                raise ValueError(
                    f"budget {self.budget} is not a whole number of generations "
                    f"of population {self.population}"
                )
            if not 0 <= self.elitism < self.population:
                raise ValueError("elitism must satisfy 0 <= elitism < population")
            if self.tournament_size < 1:
                raise ValueError("tournament size must be >= 1")
        if self.algorithm.startswith("de-") and self.population < 4:
            raise ValueError("differential evolution needs a population of at least 4")
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise ValueError("crossover probability must lie in [0, 1]")
        if not 0.0 <= self.codon_mutation_rate <= 1.0:
            raise ValueError("codon mutation rate must lie in [0, 1]")
        if self.codon_length < 1 or self.codon_max < 2:
            raise ValueError("codon genome shape is degenerate")
        # these raise on malformed literals
        UnitFraction.from_decimal(self.mutation_half_width, self.precision)
        Fraction(self.de_weight)
        DecodeLimits(self.max_depth, self.max_nodes)

    @property
    def order(self) -> str:
        return "bfs" if self.algorithm.endswith("-bfs") else "dfs"

    @property
    def generations(self) -> int:
        return self.budget // self.population

    def limits(self) -> DecodeLimits:
        return DecodeLimits(self.max_depth, self.max_nodes)

    def half_width(self) -> UnitFraction:
        return UnitFraction.from_decimal(self.mutation_half_width, self.precision)

    def config_hash(self) -> str:
        payload = ";".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class Individual:
    genotype: object
    phenotype: str | None
    fitness: float


@dataclass
class Trace:
    """Best-so-far fitness at every evaluation of one run."""

    best: list[float]
    seed: int
    config_hash: str
    algorithm: str


@dataclass
class AggregatedTrace:
    """Per-evaluation mean and population std across runs."""

    mean: list[float]
    std: list[float]
    runs: int
    config_hash: str
    algorithm: str


@dataclass
class ExperimentResult:
    aggregated: AggregatedTrace
    traces: list[Trace]


class _Recorder:
    """Enforces the exact evaluation budget and the best-so-far trace."""

    __slots__ = ("best", "budget", "_current")

    def __init__(self, budget: int) -> None:
        self.best: list[float] = []
        self.budget = budget
        self._current = WORST

    def record(self, fitness_value: float) -> None:
        if self.full():
            raise RuntimeError("evaluation budget exceeded")
        if fitness_value < self._current:
            self._current = fitness_value
        self.best.append(self._current)

    def full(self) -> bool:
        return len(self.best) >= self.budget


def mutate(value: UnitFraction, half_width: UnitFraction, rng: Xoshiro256StarStar) -> UnitFraction:
    """Wrap-around perturbation, uniform over [-half_width, +half_width)."""
    return value.perturb(random_delta(rng, half_width))


def crossover(a: UnitFraction, b: UnitFraction, rng: Xoshiro256StarStar) -> UnitFraction:
    """Blend crossover: uniform draw on the closed interval [min, max]."""
    lo, hi = (a, b) if a <= b else (b, a)
    return random_in_range(rng, lo, hi)


class _UnitEvaluator:
    """Decode + fitness pipeline for one-number genotypes."""

    def __init__(self, cfg: SearchConfig, grammar: Grammar, dataset: Dataset) -> None:
        self.decode = bfs_decode if cfg.order == "bfs" else dfs_decode
        self.grammar = grammar
        self.limits = cfg.limits()
        self.fitness = FitnessEvaluator(dataset, cfg.metric)
        _check_limits(grammar, self.limits)

    def __call__(self, genotype: UnitFraction) -> Individual:
        outcome = self.decode(genotype, self.grammar, self.limits)
        phenotype = render(outcome.tree) if outcome.is_valid else None
        return Individual(genotype, phenotype, self.fitness(phenotype))


def _tournament(
    population: list[Individual], size: int, rng: Xoshiro256StarStar
) -> Individual:
    # ties go to the earliest drawn candidate
    winner = population[rng.randbelow(len(population))]
    for _ in range(size - 1):
        challenger = population[rng.randbelow(len(population))]
        if challenger.fitness < winner.fitness:
            winner = challenger
    return winner


def _elites(population: list[Individual], count: int) -> list[Individual]:
    order = sorted(range(len(population)), key=lambda i: (population[i].fitness, i))
    return [population[i] for i in order[:count]]


def fpge_evolve(
    cfg: SearchConfig, grammar: Grammar, dataset: Dataset, rng: Xoshiro256StarStar
) -> Trace:
    """Generational GA on one-number genotypes."""
    evaluate = _UnitEvaluator(cfg, grammar, dataset)
    recorder = _Recorder(cfg.budget)
    half_width = cfg.half_width()

    population: list[Individual] = []
    for _ in range(cfg.population):
        ind = evaluate(random_unit(rng, cfg.precision))
        recorder.record(ind.fitness)
        population.append(ind)

    for _ in range(cfg.generations - 1):
        next_population = _elites(population, cfg.elitism)
        for elite in next_population:
            recorder.record(elite.fitness)
        while len(next_population) < cfg.population:
            if rng.bernoulli(cfg.crossover_probability):
                p1 = _tournament(population, cfg.tournament_size, rng)
                p2 = _tournament(population, cfg.tournament_size, rng)
                child = crossover(p1.genotype, p2.genotype, rng)
            else:
                child = _tournament(population, cfg.tournament_size, rng).genotype
            child = mutate(child, half_width, rng)
            ind = evaluate(child)
            recorder.record(ind.fitness)
            next_population.append(ind)
        population = next_population

    assert len(recorder.best) == cfg.budget
    return Trace(recorder.best, cfg.seed, cfg.config_hash(), cfg.algorithm)


def de_optimize(
    cfg: SearchConfig, grammar: Grammar, dataset: Dataset, rng: Xoshiro256StarStar
) -> Trace:
    """DE/rand/1 with exact fixed-point arithmetic and greedy replacement."""
    evaluate = _UnitEvaluator(cfg, grammar, dataset)
    recorder = _Recorder(cfg.budget)
    weight = Fraction(cfg.de_weight)
    scale = pow10(cfg.precision)

    population: list[Individual] = []
    for _ in range(cfg.population):
        if recorder.full():
            break
        ind = evaluate(random_unit(rng, cfg.precision))
        recorder.record(ind.fitness)
        population.append(ind)

    target = 0
    while not recorder.full():
        indices = [target]
        while len(indices) < 4:
            r = rng.randbelow(len(population))
            if r not in indices:
                indices.append(r)
        _, r1, r2, r3 = indices
        n1 = population[r1].genotype.numerator
        n2 = population[r2].genotype.numerator
        n3 = population[r3].genotype.numerator
        step = (weight.numerator * (n2 - n3)) // weight.denominator
        candidate = evaluate(UnitFraction((n1 + step) % scale, cfg.precision))
        recorder.record(candidate.fitness)
        if candidate.fitness <= population[target].fitness:
            population[target] = candidate
        target = (target + 1) % len(population)

    return Trace(recorder.best, cfg.seed, cfg.config_hash(), cfg.algorithm)


def random_search(
    cfg: SearchConfig, grammar: Grammar, dataset: Dataset, rng: Xoshiro256StarStar
) -> Trace:
    """Uniform independent sampling; the floor every searcher must beat."""
    evaluate = _UnitEvaluator(cfg, grammar, dataset)
    recorder = _Recorder(cfg.budget)
    while not recorder.full():
        recorder.record(evaluate(random_unit(rng, cfg.precision)).fitness)
    return Trace(recorder.best, cfg.seed, cfg.config_hash(), cfg.algorithm)


def intge_decode(
    codons: Sequence[int],
    grammar: Grammar,
    limits: DecodeLimits = DecodeLimits(),
    trace: list[int] | None = None,
) -> DecodeOutcome:
    """Classic integer-GE mapping: leftmost expansion, ``codon mod k``.

    Every expansion consumes one codon, including single-production rules;
    running out of codons before the tree completes is invalid (there is
    no wrapping).  Depth and node limits match the one-number decoders.
    """
    _check_limits(grammar, limits)
    root = DerivationTree(Symbol.nonterminal(grammar.head.name))
    stack: list[tuple[DerivationTree, int]] = [(root, 1)]
    position = 0
    node_total = 1
    while stack:
        node, depth = stack.pop()
        if depth >= limits.max_depth:
            return DecodeOutcome.invalid(DEPTH_EXCEEDED)
        if position >= len(codons):
            return DecodeOutcome.invalid(CODONS_EXHAUSTED)
        rule = grammar.rule(node.symbol.text)
        index = codons[position] % len(rule.productions)
        position += 1
        if trace is not None:
            trace.append(index)
        production = rule.productions[index]
        node.production_index = index
        node.children = tuple(DerivationTree(sym) for sym in production.symbols)
        node_total += len(node.children)
        if node_total > limits.max_nodes:
            return DecodeOutcome.invalid(NODES_EXCEEDED)
        for child in reversed(node.children):
            if not child.symbol.is_terminal:
                stack.append((child, depth + 1))
    # codon mapping has no residual concept
    return DecodeOutcome(root, None, None)


def _random_codons(cfg: SearchConfig, rng: Xoshiro256StarStar) -> tuple[int, ...]:
    return tuple(rng.randbelow(cfg.codon_max) for _ in range(cfg.codon_length))


def _mutate_codons(
    codons: tuple[int, ...], cfg: SearchConfig, rng: Xoshiro256StarStar
) -> tuple[int, ...]:
    return tuple(
        rng.randbelow(cfg.codon_max) if rng.bernoulli(cfg.codon_mutation_rate) else c
        for c in codons
    )


def _crossover_codons(
    a: tuple[int, ...], b: tuple[int, ...], rng: Xoshiro256StarStar
) -> tuple[int, ...]:
    # one-point: the cut keeps at least one codon from each parent
    cut = 1 + rng.randbelow(len(a) - 1)
    return a[:cut] + b[cut:]


def intge_evolve(
    cfg: SearchConfig, grammar: Grammar, dataset: Dataset, rng: Xoshiro256StarStar
) -> Trace:
    """The fpge generational loop with codon-list genotypes and operators."""
    limits = cfg.limits()
    fitness_fn = FitnessEvaluator(dataset, cfg.metric)
    recorder = _Recorder(cfg.budget)

    def evaluate(codons: tuple[int, ...]) -> Individual:
        outcome = intge_decode(codons, grammar, limits)
        phenotype = render(outcome.tree) if outcome.is_valid else None
        return Individual(codons, phenotype, fitness_fn(phenotype))

    population: list[Individual] = []
    for _ in range(cfg.population):
        ind = evaluate(_random_codons(cfg, rng))
        recorder.record(ind.fitness)
        population.append(ind)

    for _ in range(cfg.generations - 1):
        next_population = _elites(population, cfg.elitism)
        for elite in next_population:
            recorder.record(elite.fitness)
        while len(next_population) < cfg.population:
            if rng.bernoulli(cfg.crossover_probability):
                p1 = _tournament(population, cfg.tournament_size, rng)
                p2 = _tournament(population, cfg.tournament_size, rng)
                child = _crossover_codons(p1.genotype, p2.genotype, rng)
            else:
                child = _tournament(population, cfg.tournament_size, rng).genotype
            child = _mutate_codons(child, cfg, rng)
            ind = evaluate(child)
            recorder.record(ind.fitness)
            next_population.append(ind)
        population = next_population

    assert len(recorder.best) == cfg.budget
    return Trace(recorder.best, cfg.seed, cfg.config_hash(), cfg.algorithm)


_DISPATCH: dict[str, Callable[..., Trace]] = {
    "fpge-dfs": fpge_evolve,
    "fpge-bfs": fpge_evolve,
    "de-dfs": de_optimize,
    "de-bfs": de_optimize,
    "rand-dfs": random_search,
    "rand-bfs": random_search,
    "int-ge": intge_evolve,
}


def run_single(cfg: SearchConfig, grammar: Grammar, dataset: Dataset, seed: int) -> Trace:
    """Run one seeded instance of the configured algorithm."""
    rng = Xoshiro256StarStar(seed)
    trace = _DISPATCH[cfg.algorithm](cfg, grammar, dataset, rng)
    trace.seed = seed
    return trace


def _run_indexed(args: tuple[SearchConfig, Grammar, Dataset, int]) -> Trace:
    cfg, grammar, dataset, seed = args
    return run_single(cfg, grammar, dataset, seed)


def aggregate(traces: list[Trace]) -> AggregatedTrace:
    """Per-evaluation mean and population std (ddof=0).

    Positions where some run is still at Worst report mean = std = inf.
    """
    matrix = np.asarray([t.best for t in traces], dtype=np.float64)
    finite = np.all(np.isfinite(matrix), axis=0)
    with np.errstate(all="ignore"):
        mean = np.where(finite, np.mean(matrix, axis=0), np.inf)
        std = np.where(finite, np.std(matrix, axis=0, ddof=0), np.inf)
    first = traces[0]
    return AggregatedTrace(
        mean.tolist(), std.tolist(), len(traces), first.config_hash, first.algorithm
    )


def run_experiment(
    cfg: SearchConfig,
    grammar: Grammar,
    dataset: Dataset,
    runs: int,
    threads: int = 1,
) -> ExperimentResult:
    """Repeat a run ``runs`` times, seeding run ``i`` with ``seed + i``.

    Runs are independent; with ``threads > 1`` they execute in worker
    processes and results are merged in run order, so the output does not
    depend on the degree of parallelism.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    jobs = [(cfg, grammar, dataset, cfg.seed + i) for i in range(runs)]
    if threads > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=min(threads, runs)) as pool:
            traces = list(pool.map(_run_indexed, jobs))
    else:
        traces = [_run_indexed(job) for job in jobs]
    return ExperimentResult(aggregate(traces), traces)
