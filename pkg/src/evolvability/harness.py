"""Experiments, sweeps and result files.

An experiment is a base config, a parameter grid and a list of seeds; its run
set is the grid's cross product times the seeds. Each run writes its own
directory::

    config.txt      key = value, one SimConfig field per line
    snapshots.csv   children,mean_evolvability,mean_fitness
    eras.csv        era,end_children,start_fitness,end_fitness,improvement
    trends.csv      series,bucket_end_children,bucket_mean
    fits.csv        series,slope,intercept

and the experiment directory gets a ``manifest.csv`` listing every run.
Trend and fit files are always derived from the two CSVs by
:func:`analyze_run_dir`, so re-running the analysis reproduces them byte for
byte.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from evolvability.engine import CONFIG_FIELDS, ConfigError, SimConfig, run
from evolvability.metrics import (
    EraRecord,
    MetricSink,
    PopulationSnapshot,
    RunResult,
    compute_trends,
)

log = logging.getLogger(__name__)

SNAPSHOT_HEADER = ("children", "mean_evolvability", "mean_fitness")
ERA_HEADER = ("era", "end_children", "start_fitness", "end_fitness", "improvement")
TREND_HEADER = ("series", "bucket_end_children", "bucket_mean")
FIT_HEADER = ("series", "slope", "intercept")
MANIFEST_HEADER = ("run", "grid_index", "seed_index", "seed", "config_hash", "status",
                   "config", "snapshots", "eras", "trends", "fits")

_GOLDEN = 0x9E3779B97F4A7C15


def fmt(x: float) -> str:
    """Ten significant digits, the precision of every CSV value."""
    return format(x, ".10g")


# -- configs -----------------------------------------------------------------

def paper_defaults() -> SimConfig:
    return SimConfig()


def config_text(cfg: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()[:16]


def _coerce(name: str, raw: str):
    default = getattr(SimConfig(), name)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1")
        if isinstance(default, int):
            return int(raw.replace("_", ""))
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config(text: str, base: Optional[SimConfig] = None) -> SimConfig:
    """Read ``key = value`` lines over ``base`` (the defaults when omitted).

    Blank lines and ``#`` comments are allowed; unknown or repeated keys are not.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw)
    return dataclasses.replace(base or SimConfig(), **values)


def load_config(path: Union[str, Path]) -> SimConfig:
    return parse_config(Path(path).read_text())


# -- experiments -------------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    name: str
    base: SimConfig
    grid: tuple[tuple[str, tuple], ...] = ()
    seeds: tuple[int, ...] = (1,)

    def __post_init__(self):
        for param, values in self.grid:
            if param not in CONFIG_FIELDS or param == "rng_seed":
                raise ConfigError(f"grid parameter {param!r} is not a sweepable SimConfig field")
            if not values:
                raise ConfigError(f"grid parameter {param!r} has no values")
        if not self.seeds:
            raise ConfigError("an experiment needs at least one seed")

    def grid_points(self) -> list[dict]:
        if not self.grid:
            return [{}]
        names = [p for p, _ in self.grid]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.grid))]

    def runs(self) -> list[tuple[int, int, SimConfig]]:
        """``(grid_index, seed_index, config)`` for every run, in result order."""
        out = []
        for g, point in enumerate(self.grid_points()):
            for j, seed in enumerate(self.seeds):
                cfg = dataclasses.replace(self.base, **point, rng_seed=run_seed(seed, g))
                out.append((g, j, cfg))
        return out


def run_seed(seed: int, grid_index: int) -> int:
    """Seed of a run: the listed seed advanced by ``grid_index`` golden-ratio steps.

    Grid point 0 uses the listed seed unchanged, and appending grid points
    never changes the seeds of existing ones.
    """
    return (seed + grid_index * _GOLDEN) % 2**64


def era_sweep(seeds: Sequence[int] = (1, 2, 3), base: Optional[SimConfig] = None) -> Experiment:
    return Experiment("era", base or paper_defaults(),
                      (("era_length", (1000, 2000, 4000, 8000, 16000, 32000, 80000)),),
                      tuple(seeds))


def rate_sweep(seeds: Sequence[int] = (1, 2, 3), base: Optional[SimConfig] = None) -> Experiment:
    return Experiment("rates", base or paper_defaults(),
                      (("evolvability_bit_rate", (0.0001, 0.001, 0.01)),
                       ("phenome_bit_rate", (0.01, 0.1))),
                      tuple(seeds))


def reproduction(seeds: Sequence[int] = (1, 2, 3), children: Optional[int] = None) -> Experiment:
    base = paper_defaults()
    if children is not None:
        base = base.replace(total_children=children)
    return Experiment("reproduce", base, (), tuple(seeds))


SWEEPS = {"era": era_sweep, "rates": rate_sweep}


@dataclass(frozen=True)
class RunFailure:
    config: SimConfig
    error: str


# -- files -------------------------------------------------------------------

class CsvSink(MetricSink):
    """Streams snapshot and era rows to CSV files as the run produces them."""

    def __init__(self, directory: Union[str, Path]):
        directory = Path(directory)
        self._snap_file = open(directory / "snapshots.csv", "w", newline="")
        self._era_file = open(directory / "eras.csv", "w", newline="")
        self._snaps = csv.writer(self._snap_file, lineterminator="\n")
        self._eras = csv.writer(self._era_file, lineterminator="\n")
        self._snaps.writerow(SNAPSHOT_HEADER)
        self._eras.writerow(ERA_HEADER)
        self._start: Optional[float] = None

    def _snapshot_row(self, s: PopulationSnapshot):
        self._snaps.writerow((s.children_born, fmt(s.mean_evolvability), fmt(s.mean_fitness)))

    on_start = _snapshot_row
    on_snapshot = _snapshot_row

    def on_era_start(self, era_index, children_born, mean_fitness):
        self._start = mean_fitness

    def on_era_end(self, era_index, children_born, mean_fitness):
        rec = EraRecord(era_index, 0, children_born, self._start, mean_fitness)
        self._eras.writerow((era_index, children_born, fmt(rec.start_fitness),
                             fmt(rec.end_fitness), fmt(rec.improvement)))

    def on_finish(self, state):
        self.close()

    def close(self):
        self._snap_file.close()
        self._era_file.close()


def read_snapshots(path: Union[str, Path]) -> list[PopulationSnapshot]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != SNAPSHOT_HEADER:
        raise ValueError(f"{path}: not a snapshot file")
    return [PopulationSnapshot(int(c), float(e), float(m)) for c, e, m in rows[1:]]


def read_eras(path: Union[str, Path]) -> list[tuple[int, int, float, float, float]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != ERA_HEADER:
        raise ValueError(f"{path}: not an era file")
    return [(int(a), int(b), float(c), float(d), float(e)) for a, b, c, d, e in rows[1:]]


def analyze_run_dir(directory: Union[str, Path]) -> None:
    """Rebuild ``trends.csv`` and ``fits.csv`` from a run's snapshot and era files."""
    directory = Path(directory)
    cfg_path = directory / "config.txt"
    bucket = load_config(cfg_path).bucket_size if cfg_path.exists() else SimConfig().bucket_size
    snaps = read_snapshots(directory / "snapshots.csv")
    rows = read_eras(directory / "eras.csv")
    # improvement comes from its own column, not from the rounded start/end values
    eras = [_StoredEra(era, end, start, stop, imp) for era, end, start, stop, imp in rows]
    trends = compute_trends(snaps, eras, bucket)
    with open(directory / "trends.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TREND_HEADER)
        for name, series in trends.items():
            for x, y in series.points:
                w.writerow((name, x, fmt(y)))
    with open(directory / "fits.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(FIT_HEADER)
        for name, series in trends.items():
            if series.fit is not None:
                w.writerow((name, fmt(series.fit[0]), fmt(series.fit[1])))


@dataclass(frozen=True)
class _StoredEra:
    era_index: int
    end_children: int
    start_fitness: float
    end_fitness: float
    improvement: float


def execute(cfg: SimConfig, directory: Optional[Union[str, Path]] = None) -> RunResult:
    """One run, optionally persisted to ``directory`` (created if needed)."""
    if directory is None:
        return run(cfg)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.txt").write_text(config_text(cfg))
    sink = CsvSink(directory)
    try:
        result = run(cfg, [sink])
    finally:
        sink.close()
    analyze_run_dir(directory)
    return result


def _run_name(g: int, j: int) -> str:
    return f"run_{g:03d}_{j:03d}"


def _execute_indexed(args):
    g, j, cfg, directory = args
    try:
        return execute(cfg, directory)
    except Exception as exc:  # reported per run; the batch carries on
        return RunFailure(cfg, f"{type(exc).__name__}: {exc}")


def run_experiment(e: Experiment, parallelism: int = 1,
                   out_dir: Optional[Union[str, Path]] = None) -> list:
    """Execute every run of ``e``; results come back in ``e.runs()`` order.

    A run that raises yields a :class:`RunFailure` in its slot; the others
    still complete.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    out = Path(out_dir) if out_dir is not None else None
    jobs = [(g, j, cfg, out / _run_name(g, j) if out is not None else None)
            for g, j, cfg in e.runs()]
    if parallelism == 1 or len(jobs) == 1:
        results = [_execute_indexed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_execute_indexed, jobs))
    for (g, j, cfg, _), res in zip(jobs, results):
        if isinstance(res, RunFailure):
            log.error("run %s failed (%s): %s", _run_name(g, j), config_hash(cfg), res.error)
    if out is not None:
        write_manifest(e, jobs, results, out)
    return results


def write_manifest(e: Experiment, jobs, results, out: Path) -> None:
    with open(out / "manifest.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for (g, j, cfg, _), res in zip(jobs, results):
            name = _run_name(g, j)
            status = "failed" if isinstance(res, RunFailure) else "ok"
            w.writerow((name, g, j, cfg.rng_seed, config_hash(cfg), status,
                        *(f"{name}/{leaf}" for leaf in
                          ("config.txt", "snapshots.csv", "eras.csv", "trends.csv", "fits.csv"))))


# -- reporting ---------------------------------------------------------------

def summarize(result: RunResult) -> dict:
    """Headline numbers of one run."""
    evo = result.trend("evolvability")
    row = {
        "seed": result.config.rng_seed,
        "children": result.final.children_born,
        "first_bucket_evolvability": evo.points[0][1] if evo.points else float("nan"),
        "final_bucket_evolvability": evo.points[-1][1] if evo.points else float("nan"),
        "final_mean_evolvability": result.final.mean_evolvability,
    }
    for name in ("evolvability", "start_fitness", "end_fitness", "improvement"):
        t = result.trend(name)
        row[f"{name}_slope"] = t.fit[0] if t.fit is not None else float("nan")
    return row


def report(results: Sequence) -> str:
    ok = [r for r in results if isinstance(r, RunResult)]
    rows = [summarize(r) for r in ok]
    if not rows:
        return "no successful runs\n"
    keys = list(rows[0])
    lines = [",".join(keys)]
    lines += [",".join(str(r[k]) if k in ("seed", "children") else fmt(r[k]) for k in keys)
              for r in rows]
    lines.append(",".join(["median", str(rows[0]["children"])]
                          + [fmt(statistics.median(r[k] for r in rows)) for k in keys[2:]]))
    return "\n".join(lines) + "\n"


def default_parallelism() -> int:
    return max(1, min(os.cpu_count() or 1, 8))
