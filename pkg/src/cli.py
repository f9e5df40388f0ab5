"""Command-line surface: ``minimize``, ``generate``, ``bench`` and ``stats``.

Results go to stdout, headers and diagnostics to stderr. Exit codes:
0 success, 1 usage or configuration error, 2 formula parse error,
3 timeout, 4 external solver failure.
"""
import argparse
import logging
import os
import random
import sys
from pathlib import Path

from pydantic import ValidationError

from .bench import CsvSink, ListSink, aggregate, format_stats, read_records, run_plan, time_distribution, verify_records
from .config import Config
from .enumeration import instance_space, sample_uniform
from .errors import (BoolMinError, ExternalSolverError, FormulaSyntaxError, MissingOuterModelError,
                     SolverTimeout)
from .formula import Connective, parse, size
from .interfaces import ReportInterface, TextCLI
from .models import Algorithm, BenchPlan, MinimizeConfig, QbfMode, RunStatus
from .pipeline import MinimizationPipeline

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_TIMEOUT = 3
EXIT_SOLVER = 4


class UsageError(BoolMinError):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_output_connectives(text: str) -> tuple[list[Connective], bool]:
    """``"not,and,or"`` -> ([AND, OR], True); Not is a flag, not a connective."""
    conns, allow_not = [], False
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        if part in ("not", "!"):
            allow_not = True
        else:
            conns.append(Connective.from_name(part))
    return conns, allow_not


def _minimize_config(args) -> MinimizeConfig:
    options = {
        "allow_false_leaf": not args.no_false_leaf,
        "timeout": args.timeout,
        "seed": args.seed,
        "verify_models": args.verify_models,
    }
    if args.output_connectives is not None:
        conns, allow_not = parse_output_connectives(args.output_connectives)
        options.update(output_connectives=conns, allow_not=allow_not)
    if args.sat_solver:
        options["sat_solver"] = args.sat_solver
    if args.qbf_solver:
        options["qbf_solver"] = args.qbf_solver
    return MinimizeConfig(**options)


def cmd_minimize(args, io: ReportInterface) -> int:
    if args.file and args.formula:
        raise UsageError("Give the formula either as an argument or with --file, not both")
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8").strip()
    elif args.formula:
        text = args.formula
    else:
        raise UsageError("No formula given")
    if args.mode and args.algo != "qbf":
        raise UsageError(f"--mode applies to --algo qbf only, not '{args.algo}'")

    phi = parse(text)
    algorithm = Algorithm.parse(args.algo, QbfMode(args.mode) if args.mode else QbfMode.FAST)
    cfg = _minimize_config(args)
    result = MinimizationPipeline(cfg).run(phi, algorithm)
    if result.status is RunStatus.TIMEOUT:
        io.diagnostic(f"timeout after {result.elapsed:.3f}s ({algorithm.value}, seed {cfg.seed})", error=True)
        return EXIT_TIMEOUT
    io.output(str(result.output))
    io.output(f"size: {result.output_size}")
    stats = (f"algo: {algorithm.value} seed: {cfg.seed} input_size: {size(phi)} "
             f"candidates_tested: {result.candidates_tested} solver_calls: {result.solver_calls} "
             f"time_ms: {result.elapsed * 1000:.3f}")
    if result.depth is not None:
        stats += f" depth: {result.depth}"
    io.output(stats)
    return EXIT_OK


def cmd_generate(args, io: ReportInterface) -> int:
    conns, _ = parse_output_connectives(args.connectives)
    space = instance_space(args.size, args.vars, conns, allow_not=not args.no_not,
                           allow_false=args.with_false)
    rng = random.Random(args.seed)
    io.diagnostic(f"# generate size={args.size} count={args.count} seed={args.seed} "
                  f"vars={','.join(space.variables)}")
    for _ in range(args.count):
        io.output(str(sample_uniform(space, args.size, rng)))
    return EXIT_OK


def cmd_bench(args, io: ReportInterface) -> int:
    mode = QbfMode(args.mode) if args.mode else QbfMode.FAST
    plan = BenchPlan(
        sizes=args.sizes,
        count=args.count,
        seed=args.seed,
        algorithms=[Algorithm.parse(a, mode) for a in args.algos.split(",") if a.strip()],
        timeout=args.timeout,
        num_vars=args.vars,
        minimize=_minimize_config(args),
        jobs=args.jobs,
    )
    io.diagnostic(f"# bench seed={plan.seed} sizes={','.join(map(str, plan.sizes))} count={plan.count} "
                  f"algos={','.join(a.value for a in plan.algorithms)} timeout={plan.timeout}")
    collected = ListSink()
    summary = run_plan(plan, collected)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as f:
            sink = CsvSink(f)
            for record in collected.records:
                sink.write(record)
    else:
        sink = CsvSink(sys.stdout)
        for record in collected.records:
            sink.write(record)
    io.diagnostic(f"# {summary.records} records, {summary.timeouts} timeouts")
    if args.verify:
        problems = verify_records(collected.records, plan.minimize)
        for problem in problems:
            io.diagnostic(problem, error=True)
        if problems:
            return EXIT_USAGE
        io.diagnostic("# all ok records verified")
    return EXIT_OK


def cmd_stats(args, io: ReportInterface) -> int:
    with open(args.csv, newline="", encoding="utf-8") as f:
        records = read_records(f)
    if args.distribution:
        size_text, _, algo_text = args.distribution.partition(":")
        try:
            size_value = int(size_text)
        except ValueError:
            raise UsageError(f"--distribution expects SIZE:ALGO, got '{args.distribution}'") from None
        for t in time_distribution(records, size_value, Algorithm.parse(algo_text)):
            io.output("timeout" if t == float("inf") else f"{t:.3f}")
        return EXIT_OK
    group_by = [g.strip() for g in args.group_by.split(",") if g.strip()]
    io.output(format_stats(aggregate(records, group_by), group_by, args.emit))
    return EXIT_OK


def _add_solver_options(p: argparse.ArgumentParser, seed: int = 0,
                        seed_help: str = "Seed for the embedded SAT solver") -> None:
    p.add_argument("--no-false-leaf", action="store_true", help="Exclude the constant false from outputs")
    p.add_argument("--output-connectives", default=None,
                   help="Output connectives, e.g. not,and,or,implies (omit 'not' to forbid negation)")
    p.add_argument("--sat-solver", default=None, help="internal | pysat[:name] | external:PATH")
    p.add_argument("--qbf-solver", default=None, help="internal | external:PATH")
    p.add_argument("--seed", type=int, default=seed, help=seed_help)
    p.add_argument("--verify-models", action="store_true",
                   help="Re-check every QBF outer model against all universal assignments")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")

    parser = _ArgumentParser(prog="boolmin", description="Size-minimal equivalents of propositional formulae")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minimize", parents=[common], help="Minimize one formula")
    p.add_argument("formula", nargs="?", help="Formula, e.g. '(p & q) | (p & r)'")
    p.add_argument("--file", help="Read the formula from a file")
    p.add_argument("--algo", choices=["brute", "sat", "qbf", "qbf-fast", "qbf-exact"], default="qbf")
    p.add_argument("--mode", choices=["fast", "exact"], default=None)
    p.add_argument("--timeout", type=float, default=Config.DEFAULT_TIMEOUT, help="Seconds")
    _add_solver_options(p)
    p.set_defaults(handler=cmd_minimize)

    p = sub.add_parser("generate", parents=[common], help="Sample random formulae uniformly")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--vars", type=int, default=None, help="Variable count (default round(sqrt(size)))")
    p.add_argument("--no-not", action="store_true")
    p.add_argument("--with-false", action="store_true")
    p.add_argument("--connectives", default="and,or")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("bench", parents=[common], help="Run the benchmark protocol")
    p.add_argument("--sizes", default="1..20", help="Range or list, e.g. 1..20 or 3,5,8")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--algos", default="brute,sat,qbf")
    p.add_argument("--mode", choices=["fast", "exact"], default=None)
    p.add_argument("--timeout", type=float, default=Config.DEFAULT_TIMEOUT)
    p.add_argument("--vars", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV file (default stdout)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--verify", action="store_true", help="Re-check every ok record after the run")
    _add_solver_options(p, seed=42, seed_help="Global seed of the instance set and the SAT solver")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("stats", parents=[common], help="Aggregate a bench CSV")
    p.add_argument("csv")
    p.add_argument("--group-by", default="size,algo")
    p.add_argument("--emit", choices=["csv", "table"], default="csv")
    p.add_argument("--distribution", default=None, metavar="SIZE:ALGO",
                   help="Print the time distribution of one size and algorithm")
    p.set_defaults(handler=cmd_stats)
    return parser


def configure_logging(verbosity: int) -> None:
    level = {0: Config.LOG_LEVEL.upper(), 1: "INFO"}.get(verbosity, "DEBUG")
    logging.basicConfig(stream=sys.stderr, level=level, force=True,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    io = TextCLI()
    try:
        return args.handler(args, io)
    except FormulaSyntaxError as e:
        io.diagnostic(f"parse error: {e}", error=True)
        return EXIT_PARSE
    except SolverTimeout as e:
        io.diagnostic(f"timeout: {e}", error=True)
        return EXIT_TIMEOUT
    except (ExternalSolverError, MissingOuterModelError) as e:
        io.diagnostic(f"solver error: {e}", error=True)
        return EXIT_SOLVER
    except (BoolMinError, ValidationError, ValueError, OSError) as e:
        io.diagnostic(f"error: {e}", error=True)
        return EXIT_USAGE
