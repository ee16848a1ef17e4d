"""Steady-state GA with gated mutation and a drifting target.

One child is born per step: two parents are drawn by linear-bias rank
selection, recombined at a pair boundary, optionally mutated, and the child
replaces the least fit member. Every ``era_length`` children the target
flips a fixed number of bits and the whole population is re-scored.

The heavy lifting happens in :mod:`evolvability.kernels`; this module owns
configuration, state, and the run protocol that feeds metric sinks.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from evolvability import kernels
from evolvability.genome import (
    Genome,
    fitness_table,
    parse_bits,
    random_genome,
    random_target,
)
from evolvability.metrics import (
    MetricsCollector,
    MetricSink,
    PopulationSnapshot,
    RunResult,
    snapshot,
)
from evolvability.rng import RandomStream, ScriptedStream

_NO_TRACE = np.zeros((0, kernels.TRACE_WIDTH), dtype=np.int64)


class ConfigError(ValueError):
    """A SimConfig value is out of range or unknown."""


class ObserverError(RuntimeError):
    """A metric sink raised while the engine was notifying it."""


@dataclass(frozen=True)
class SimConfig:
    """Every model parameter plus the RNG seed. Defaults give the reference run."""

    population_size: int = 2000
    pair_count: int = 50
    total_children: int = 5_000_000
    era_length: int = 8000
    target_mutation_fraction: float = 0.10
    selection_bias: float = 2.0
    child_mutation_probability: float = 0.5
    evolvability_bit_rate: float = 0.0001
    phenome_bit_rate: float = 0.01
    fitness_exponent: int = 10
    snapshot_interval: int = 500
    bucket_size: int = 100_000
    rng_seed: int = 0
    gate_reads_premutation: bool = False

    def __post_init__(self):
        for name in ("population_size", "pair_count", "era_length", "fitness_exponent",
                     "snapshot_interval", "bucket_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.total_children < 0:
            raise ConfigError("total_children must be >= 0")
        for name in ("target_mutation_fraction", "child_mutation_probability",
                     "evolvability_bit_rate", "phenome_bit_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if not 1.0 < self.selection_bias <= 2.0:
            raise ConfigError(f"selection_bias must lie in (1, 2], got {self.selection_bias}")
        if self.bucket_size % self.snapshot_interval:
            raise ConfigError("bucket_size must be a multiple of snapshot_interval")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")

    @property
    def target_flips(self) -> int:
        """Bits flipped per era: the fraction of the target, rounded half up."""
        return int(math.floor(self.target_mutation_fraction * self.pair_count + 0.5))

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)


CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(SimConfig))


@dataclass(frozen=True)
class Individual:
    genome: Genome
    fitness: float
    birth: int = 0


class Population:
    """Fixed-size population kept sorted best first.

    Storage is slot based (see :mod:`evolvability.kernels`); ``members`` gives
    the rank-ordered view.
    """

    def __init__(self, genomes: np.ndarray, fit: np.ndarray, birth: np.ndarray,
                 order: np.ndarray):
        self.genomes = genomes
        self.fit = fit
        self.birth = birth
        self.order = order

    @classmethod
    def from_individuals(cls, individuals: Sequence[Individual]) -> Population:
        """Build a population and sort it (fitness descending, then birth)."""
        if not individuals:
            raise ValueError("a population needs at least one member")
        genomes = np.stack([ind.genome.bits for ind in individuals]).astype(np.uint8)
        fit = np.array([ind.fitness for ind in individuals], dtype=np.float64)
        birth = np.array([ind.birth for ind in individuals], dtype=np.int64)
        if len(set(birth.tolist())) != len(birth):
            raise ValueError("birth ids must be unique")
        order = np.array(sorted(range(len(individuals)), key=lambda s: (-fit[s], birth[s])),
                         dtype=np.int64)
        return cls(genomes, fit, birth, order)

    def __len__(self) -> int:
        return self.order.shape[0]

    @property
    def size(self) -> int:
        return self.order.shape[0]

    @property
    def pair_count(self) -> int:
        return self.genomes.shape[1] // 2

    def fitnesses(self) -> np.ndarray:
        """Cached fitness in rank order."""
        return self.fit[self.order]

    def individual(self, rank: int) -> Individual:
        s = self.order[rank]
        return Individual(Genome(self.genomes[s]), float(self.fit[s]), int(self.birth[s]))

    @property
    def members(self) -> list[Individual]:
        return [self.individual(r) for r in range(self.size)]

    def best(self) -> Individual:
        return self.individual(0)

    def digest(self) -> str:
        """Hash of the genomes in rank order."""
        import hashlib

        return hashlib.sha256(self.genomes[self.order].tobytes()).hexdigest()

    def copy(self) -> Population:
        return Population(self.genomes.copy(), self.fit.copy(), self.birth.copy(),
                          self.order.copy())


def insert_child(pop: Population, child: Individual) -> Population:
    """Evict the worst member and insert ``child`` at its sorted rank, in place.

    The child always enters, even when it is now the worst. It ranks after
    every member at least as fit.
    """
    if child.genome.bits.shape[0] != pop.genomes.shape[1]:
        raise ValueError("child genome length does not match the population")
    kernels.replace_worst(pop.genomes, pop.fit, pop.birth, pop.order,
                          np.ascontiguousarray(child.genome.bits), float(child.fitness),
                          int(child.birth))
    return pop


def select_parent_rank(n: int, bias: float, u: float) -> int:
    """Rank chosen by linear-bias selection for the uniform draw ``u``.

    ``u = 0`` picks the fittest (rank 0); ``u -> 1`` the least fit. With bias
    ``b`` the chance of landing below rank ``k`` is ``b*x - (b-1)*x**2`` where
    ``x = k / n``.
    """
    if not 1.0 < bias <= 2.0:
        raise ConfigError(f"selection bias must lie in (1, 2], got {bias}")
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    if n < 1:
        raise ValueError("population size must be >= 1")
    return int(kernels.select_rank(n, bias, u))


def crossover(mother: Genome, father: Genome, rng: RandomStream) -> Genome:
    """Single-point crossover at a boundary between pairs.

    The point is uniform over the ``P - 1`` interior boundaries; one fair bit
    picks whether the mother or the father supplies the left part.
    """
    if len(mother) != len(father):
        raise ValueError(f"parent lengths differ: {len(mother)} != {len(father)}")
    child = np.empty(len(mother), dtype=np.uint8)
    kernels.crossover_into(child, mother.bits, father.bits, rng.state, rng.script)
    rng.check()
    return Genome(child)


def mutate(child: Genome, cfg: SimConfig, rng: RandomStream) -> Genome:
    """Apply gated mutation to ``child`` with probability ``child_mutation_probability``.

    Evolvability bits flip first; a phenome bit can only flip while its pair's
    evolvability bit is 1 (read after that first pass unless
    ``gate_reads_premutation`` is set).
    """
    out = child.bits.copy()
    gates = np.empty(child.pair_count, dtype=np.uint8)
    tn = np.zeros(1, dtype=np.int64)
    kernels.mutate_into(out, cfg.child_mutation_probability, cfg.evolvability_bit_rate,
                        cfg.phenome_bit_rate, cfg.gate_reads_premutation, gates,
                        rng.state, rng.script, _NO_TRACE, tn)
    rng.check()
    return Genome(out)


@dataclass
class SimState:
    """Mutable state of one run. ``trace`` collects kernel events when enabled."""

    population: Population
    target: np.ndarray
    rng: RandomStream
    children_born: int = 0
    next_id: int = 0
    trace: np.ndarray = field(default_factory=lambda: _NO_TRACE)
    trace_len: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))

    def __post_init__(self):
        pairs = self.population.pair_count
        self._child = np.empty(2 * pairs, dtype=np.uint8)
        self._gates = np.empty(pairs, dtype=np.uint8)

    def enable_trace(self, capacity: int = 100_000) -> None:
        self.trace = np.zeros((capacity, kernels.TRACE_WIDTH), dtype=np.int64)
        self.trace_len = np.zeros(1, dtype=np.int64)

    def events(self) -> np.ndarray:
        n = int(self.trace_len[0])
        if n > self.trace.shape[0]:
            raise RuntimeError(f"trace overflow: {n} events, capacity {self.trace.shape[0]}")
        return self.trace[:n].copy()


def era_of(state: SimState, cfg: SimConfig) -> int:
    return state.children_born // cfg.era_length


def initial_state(cfg: SimConfig, rng: Optional[RandomStream] = None,
                  genomes: Optional[Iterable[Genome]] = None,
                  target=None) -> SimState:
    """Random (or given) population scored against a random (or given) target.

    Draw order: every genome in turn, then the target.
    """
    if rng is None:
        rng = RandomStream(cfg.rng_seed)
    if genomes is None:
        genomes = [random_genome(cfg.pair_count, rng) for _ in range(cfg.population_size)]
    else:
        genomes = list(genomes)
    if len(genomes) != cfg.population_size:
        raise ConfigError(f"expected {cfg.population_size} genomes, got {len(genomes)}")
    if target is None:
        target = random_target(cfg.pair_count, rng)
    target = np.array(target, dtype=np.uint8)
    if target.shape != (cfg.pair_count,):
        raise ConfigError("target length must equal pair_count")
    rng.check()
    arr = np.stack([g.bits for g in genomes]).astype(np.uint8)
    if arr.shape[1] != 2 * cfg.pair_count:
        raise ConfigError("genome length must be 2 * pair_count")
    n = cfg.population_size
    pop = Population(arr, np.zeros(n), np.arange(n, dtype=np.int64), np.arange(n, dtype=np.int64))
    kernels.reevaluate(pop.genomes, pop.fit, pop.birth, pop.order, target,
                       _table(cfg))
    return SimState(pop, target, rng, children_born=0, next_id=n)


def _table(cfg: SimConfig) -> np.ndarray:
    return np.array(fitness_table(cfg.pair_count, cfg.fitness_exponent))


def advance(state: SimState, cfg: SimConfig, n_steps: int, table=None) -> SimState:
    """Run ``n_steps`` births without any era or metric bookkeeping."""
    if table is None:
        table = _table(cfg)
    pop = state.population
    state.next_id = int(kernels.run_steps(
        pop.genomes, pop.fit, pop.birth, pop.order, state.target, table,
        float(cfg.selection_bias), float(cfg.child_mutation_probability),
        float(cfg.evolvability_bit_rate), float(cfg.phenome_bit_rate),
        bool(cfg.gate_reads_premutation), state.rng.state, state.rng.script,
        int(n_steps), state.next_id, state._child, state._gates, state.trace, state.trace_len))
    state.children_born += n_steps
    state.rng.check()
    return state


def step(state: SimState, cfg: SimConfig) -> SimState:
    """Produce one child and insert it. Era changes are left to the caller."""
    return advance(state, cfg, 1)


def advance_era(state: SimState, cfg: SimConfig, table=None) -> SimState:
    """Flip ``cfg.target_flips`` distinct target bits and re-score everyone."""
    k = cfg.target_flips
    if k == 0:
        return state
    if table is None:
        table = _table(cfg)
    if state.trace.shape[0]:
        kernels.emit(state.trace, state.trace_len, kernels.EVENT_ERA,
                     era_of(state, cfg) - 1, 0, 0, 0)
    kernels.flip_target(state.target, k, state.rng.state, state.rng.script,
                        state.trace, state.trace_len)
    state.rng.check()
    pop = state.population
    kernels.reevaluate(pop.genomes, pop.fit, pop.birth, pop.order, state.target, table)
    return state


_EVENT_FORMATS = {
    kernels.EVENT_SELECT: lambda a, b, c, d: f"select,role={('mother', 'father')[a]},rank={b},id={c}",
    kernels.EVENT_CROSS: lambda a, b, c, d: f"crossover,point={a},orientation={b}",
    kernels.EVENT_MUTATE: lambda a, b, c, d: f"mutate,applied={a}",
    kernels.EVENT_FLIP: lambda a, b, c, d: f"flip,position={a}",
    kernels.EVENT_INSERT: lambda a, b, c, d: f"insert,id={a},matches={b},rank={c},evicted={d}",
    kernels.EVENT_ERA: lambda a, b, c, d: f"era,index={a}",
    kernels.EVENT_TARGET_FLIP: lambda a, b, c, d: f"target_flip,position={a}",
}


def format_events(events: np.ndarray) -> list[str]:
    """Render kernel trace rows as ``event_kind,field=value,...`` lines."""
    return [_EVENT_FORMATS[int(row[0])](*(int(v) for v in row[1:])) for row in events]


def scripted_transcript(cfg: SimConfig, genomes: Sequence[str], target: str,
                        words=None, seed: Optional[int] = None) -> list[str]:
    """Run ``cfg`` from the given population with tracing on; return the event log.

    Randomness is replayed from ``words`` (a test seam, see
    :class:`evolvability.rng.ScriptedStream`) or drawn from ``seed``.
    """
    rng = ScriptedStream(words) if words is not None else RandomStream(seed)
    cfg = cfg.replace(population_size=len(genomes))
    state = initial_state(cfg, rng=rng, genomes=[Genome(g) for g in genomes],
                          target=parse_bits(target))
    eras = cfg.total_children // cfg.era_length
    state.enable_trace(cfg.total_children * (5 + 2 * cfg.pair_count)
                       + eras * (1 + cfg.pair_count) + 16)
    run(cfg, state=state)
    return format_events(state.events())


def mean_fitness(pop: Population) -> float:
    return math.fsum(pop.fit) / pop.size


def _notify(sinks, method, *args):
    for sink in sinks:
        try:
            getattr(sink, method)(*args)
        except Exception as exc:
            raise ObserverError(f"metric sink {sink!r} failed in {method}: {exc}") from exc


def run(cfg: SimConfig, observers: Sequence[MetricSink] = (),
        state: Optional[SimState] = None) -> RunResult:
    """Run ``cfg.total_children`` births and collect every metric stream.

    Per child ``c`` (1-based): a snapshot when ``c`` is a multiple of
    ``snapshot_interval``; then, when ``c`` is a multiple of ``era_length``,
    the era's end statistics. Unless ``c`` is the last child, the target then
    changes and the next era's start statistics are recorded.
    """
    collector = MetricsCollector(cfg)
    sinks = [collector, *observers]
    if state is None:
        state = initial_state(cfg)
    table = _table(cfg)
    pop = state.population

    first = snapshot(pop, state.children_born)
    _notify(sinks, "on_start", first)
    _notify(sinks, "on_era_start", era_of(state, cfg), state.children_born, mean_fitness(pop))

    end = state.children_born + cfg.total_children
    snap_every = cfg.snapshot_interval
    era_len = cfg.era_length
    while state.children_born < end:
        c = state.children_born
        nxt = min(end, (c // snap_every + 1) * snap_every, (c // era_len + 1) * era_len)
        advance(state, cfg, nxt - c, table)
        c = state.children_born
        if c % snap_every == 0:
            _notify(sinks, "on_snapshot", snapshot(pop, c))
        if c % era_len == 0:
            era = c // era_len - 1
            _notify(sinks, "on_era_end", era, c, mean_fitness(pop))
            if c < end:
                advance_era(state, cfg, table)
                _notify(sinks, "on_era_start", era + 1, c, mean_fitness(pop))
    _notify(sinks, "on_finish", state)
    return collector.result(state)


__all__ = [
    "CONFIG_FIELDS", "ConfigError", "Individual", "ObserverError", "Population",
    "PopulationSnapshot", "SimConfig", "SimState", "advance", "advance_era", "crossover",
    "era_of", "format_events", "initial_state", "insert_child", "mean_fitness", "mutate", "run",
    "scripted_transcript", "select_parent_rank", "step",
]
