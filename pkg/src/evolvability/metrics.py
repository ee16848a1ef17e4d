"""Population statistics, era records, bucketed trends and straight-line fits.

Metric values stream to sinks while a run is in progress; ``MetricsCollector``
is the sink the engine always installs, and its ``RunResult`` is what
callers get back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from evolvability import kernels

if TYPE_CHECKING:
    from evolvability.engine import Population, SimConfig, SimState


@dataclass(frozen=True)
class PopulationSnapshot:
    children_born: int
    mean_evolvability: float
    mean_fitness: float


@dataclass(frozen=True)
class EraRecord:
    """Mean population fitness at the start and the end of one era."""

    era_index: int
    start_children: int
    end_children: int
    start_fitness: float
    end_fitness: float

    @property
    def improvement(self) -> float:
        return self.end_fitness - self.start_fitness


@dataclass(frozen=True)
class TrendSeries:
    name: str
    bucket_size: int
    points: tuple[tuple[int, float], ...]
    fit: Optional[tuple[float, float]]  # (slope, intercept); None with < 2 points

    @property
    def slope(self) -> float:
        if self.fit is None:
            raise ValueError(f"series {self.name!r} has too few points for a fit")
        return self.fit[0]

    def value_at(self, bucket_end: int) -> float:
        for x, y in self.points:
            if x == bucket_end:
                return y
        raise KeyError(bucket_end)


def snapshot(pop: Population, children_born: int) -> PopulationSnapshot:
    """Population means of evolvability and fitness. Reads only."""
    n = pop.size
    ones = int(kernels.evolvability_ones(pop.genomes))
    return PopulationSnapshot(
        children_born=int(children_born),
        mean_evolvability=ones / (n * pop.pair_count),
        mean_fitness=math.fsum(pop.fit) / n,
    )


def bucket_series(samples: Iterable[tuple[int, float]], bucket_size: int) -> list[tuple[int, float]]:
    """Average samples per bucket of ``bucket_size`` children.

    Bucket ``k >= 1`` holds samples with ``children_born`` in
    ``((k-1)*bucket_size, k*bucket_size]`` and is reported at its right end.
    Samples at or before child 0 belong to no bucket; empty buckets are
    skipped.
    """
    if bucket_size <= 0:
        raise ValueError("bucket_size must be positive")
    groups: dict[int, list[float]] = {}
    for c, v in samples:
        if c <= 0:
            continue
        groups.setdefault(-(-c // bucket_size), []).append(v)
    return [(k * bucket_size, math.fsum(vs) / len(vs)) for k, vs in sorted(groups.items())]


def linear_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares line through ``points``. Returns ``(slope, intercept)``."""
    if len(points) < 2:
        raise ValueError("a line fit needs at least two points")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        raise ValueError("degenerate fit: all x values are equal")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


def improvement_series(eras: Iterable[EraRecord]) -> list[tuple[int, float]]:
    return [(e.end_children, e.improvement) for e in eras]


def _trend(name: str, samples, bucket_size: int) -> TrendSeries:
    points = bucket_series(samples, bucket_size)
    fit = linear_fit(points) if len({x for x, _ in points}) >= 2 else None
    return TrendSeries(name, bucket_size, tuple(points), fit)


TREND_NAMES = ("evolvability", "fitness", "start_fitness", "end_fitness", "improvement")


def compute_trends(snapshots: Sequence[PopulationSnapshot], eras: Sequence[EraRecord],
                   bucket_size: int) -> dict[str, TrendSeries]:
    """Bucketed means and fits for every tracked series.

    Snapshot series bucket by snapshot child count, era series by the child
    count at the era's end.
    """
    series = {
        "evolvability": [(s.children_born, s.mean_evolvability) for s in snapshots],
        "fitness": [(s.children_born, s.mean_fitness) for s in snapshots],
        "start_fitness": [(e.end_children, e.start_fitness) for e in eras],
        "end_fitness": [(e.end_children, e.end_fitness) for e in eras],
        "improvement": improvement_series(eras),
    }
    return {name: _trend(name, series[name], bucket_size) for name in TREND_NAMES}


class MetricSink:
    """Receives metric events from a running engine. Methods default to no-ops.

    Sinks are called synchronously from the engine loop and must not drive
    the engine themselves.
    """

    def on_start(self, initial: PopulationSnapshot) -> None:
        pass

    def on_snapshot(self, snap: PopulationSnapshot) -> None:
        pass

    def on_era_start(self, era_index: int, children_born: int, mean_fitness: float) -> None:
        pass

    def on_era_end(self, era_index: int, children_born: int, mean_fitness: float) -> None:
        pass

    def on_finish(self, state: SimState) -> None:
        pass


@dataclass(frozen=True)
class FinalSummary:
    children_born: int
    mean_evolvability: float
    mean_fitness: float
    best_fitness: float
    best_genome: str
    target: str


@dataclass
class RunResult:
    config: SimConfig
    initial: PopulationSnapshot
    snapshots: list[PopulationSnapshot]
    eras: list[EraRecord]
    final: FinalSummary
    trends: dict[str, TrendSeries] = field(default_factory=dict)

    def trend(self, name: str) -> TrendSeries:
        return self.trends[name]


class MetricsCollector(MetricSink):
    """Keeps every metric event of one run in memory."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.initial: Optional[PopulationSnapshot] = None
        self.snapshots: list[PopulationSnapshot] = []
        self.eras: list[EraRecord] = []
        self._open: Optional[tuple[int, int, float]] = None

    def on_start(self, initial):
        self.initial = initial

    def on_snapshot(self, snap):
        self.snapshots.append(snap)

    def on_era_start(self, era_index, children_born, mean_fitness):
        self._open = (era_index, children_born, mean_fitness)

    def on_era_end(self, era_index, children_born, mean_fitness):
        if self._open is None or self._open[0] != era_index:
            raise RuntimeError(f"era {era_index} ended without a matching start")
        _, start_children, start_fitness = self._open
        self.eras.append(EraRecord(era_index, start_children, children_born,
                                   start_fitness, mean_fitness))
        self._open = None

    def result(self, state: SimState) -> RunResult:
        from evolvability.genome import format_bits

        pop = state.population
        last = snapshot(pop, state.children_born)
        best = pop.best()
        final = FinalSummary(
            children_born=state.children_born,
            mean_evolvability=last.mean_evolvability,
            mean_fitness=last.mean_fitness,
            best_fitness=best.fitness,
            best_genome=str(best.genome),
            target=format_bits(state.target),
        )
        trends = compute_trends(self.snapshots, self.eras, self.cfg.bucket_size)
        return RunResult(self.cfg, self.initial, list(self.snapshots), list(self.eras),
                         final, trends)
