"""Command line entry point.

    evolvability run --config FILE --seed S --out DIR
    evolvability reproduce --seeds 1,2,3 --out DIR [--children M]
    evolvability sweep --name {era,rates} --out DIR [--seeds ...] [--children M]
    evolvability analyze --in DIR

Exit status: 0 on success, 1 on a usage error, 2 when a run fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from evolvability import harness
from evolvability.engine import ConfigError

EXIT_USAGE = 1
EXIT_RUN_FAILED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list: {text!r}") from None
    if not seeds or any(not 0 <= s < 2**64 for s in seeds):
        raise argparse.ArgumentTypeError(f"bad seed list: {text!r}")
    return seeds


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evolvability", description="Evolvability model simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="one run of a config file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", type=_nonneg)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("reproduce", help="default configuration over several seeds")
    p.add_argument("--seeds", type=_seeds, default=(1, 2, 3))
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--children", type=_nonneg)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("sweep", help="a canned parameter sweep")
    p.add_argument("--name", required=True, choices=sorted(harness.SWEEPS))
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seeds", type=_seeds, default=(1, 2, 3))
    p.add_argument("--children", type=_nonneg)
    p.add_argument("--jobs", type=int, default=harness.default_parallelism())

    p = sub.add_parser("analyze", help="rebuild trend and fit files from stored CSVs")
    p.add_argument("--in", dest="indir", required=True, type=Path)
    return parser


def _require_dir(path: Path) -> None:
    if not path.is_dir():
        raise UsageError(f"output directory does not exist: {path}")


def _finish(results, out: Path) -> int:
    text = harness.report(results)
    (out / "report.csv").write_text(text)
    sys.stdout.write(text)
    failed = [r for r in results if isinstance(r, harness.RunFailure)]
    for r in failed:
        print(f"run failed (seed {r.config.rng_seed}): {r.error}", file=sys.stderr)
    return EXIT_RUN_FAILED if failed else 0


def _cmd_run(args) -> int:
    _require_dir(args.out)
    try:
        cfg = harness.load_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
    if args.seed is not None:
        cfg = cfg.replace(rng_seed=args.seed)
    try:
        result = harness.execute(cfg, args.out)
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    return _finish([result], args.out)


def _cmd_reproduce(args) -> int:
    _require_dir(args.out)
    exp = harness.reproduction(args.seeds, args.children)
    return _finish(harness.run_experiment(exp, max(1, args.jobs), args.out), args.out)


def _cmd_sweep(args) -> int:
    _require_dir(args.out)
    base = harness.paper_defaults()
    if args.children is not None:
        base = base.replace(total_children=args.children)
    exp = harness.SWEEPS[args.name](args.seeds, base)
    return _finish(harness.run_experiment(exp, max(1, args.jobs), args.out), args.out)


def _cmd_analyze(args) -> int:
    root = args.indir
    if not root.is_dir():
        raise UsageError(f"input directory does not exist: {root}")
    dirs = [root] if (root / "snapshots.csv").exists() else sorted(
        d for d in root.iterdir() if (d / "snapshots.csv").exists())
    if not dirs:
        raise UsageError(f"no run outputs under {root}")
    for d in dirs:
        harness.analyze_run_dir(d)
    return 0


COMMANDS = {"run": _cmd_run, "reproduce": _cmd_reproduce, "sweep": _cmd_sweep,
            "analyze": _cmd_analyze}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"evolvability: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
