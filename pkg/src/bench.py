"""Benchmark harness: random instances, timed minimizer runs, CSV records and statistics."""
from __future__ import annotations

import csv
import hashlib
import logging
import math
import random
import statistics
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence, TextIO

from pydantic import ValidationError

from .enumeration import instance_space, sample_uniform
from .errors import BenchFormatError, FormulaSyntaxError
from .formula import Formula, equivalent_tt, parse, size
from .minimize import in_output_space
from .models import CSV_FIELDS, Algorithm, BenchPlan, BenchRecord, MinimizeConfig, RunStatus, StatsRow
from .pipeline import MinimizationPipeline

logger = logging.getLogger(__name__)

# algorithms whose output size is globally minimal
EXACT_ALGORITHMS = (Algorithm.BRUTE, Algorithm.SAT, Algorithm.QBF_EXACT)


class RecordSink(Protocol):
    def write(self, record: BenchRecord) -> None: ...


class CsvSink:
    def __init__(self, stream: TextIO):
        self._writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS, lineterminator="\n")
        self._writer.writeheader()

    def write(self, record: BenchRecord) -> None:
        self._writer.writerow(record.to_row())


class ListSink:
    def __init__(self):
        self.records: list[BenchRecord] = []

    def write(self, record: BenchRecord) -> None:
        self.records.append(record)


@dataclass
class BenchSummary:
    records: int
    timeouts: int
    instances: int


def instance_seed(seed: int, size: int, index: int) -> int:
    """64-bit seed of one instance; depends only on (seed, size, index)."""
    digest = hashlib.blake2b(f"{seed}:{size}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def instance_formula(plan: BenchPlan, size: int, index: int) -> Formula:
    rng = random.Random(instance_seed(plan.seed, size, index))
    space = instance_space(size, plan.num_vars, plan.input_connectives, allow_not=plan.input_not)
    return sample_uniform(space, size, rng)


def run_instance(plan: BenchPlan, size: int, index: int) -> list[BenchRecord]:
    phi = instance_formula(plan, size, index)
    pipeline = MinimizationPipeline(plan.minimize.model_copy(update={"timeout": plan.timeout}))
    records = []
    for algo in plan.algorithms:
        result = pipeline.run(phi, algo)
        records.append(BenchRecord(
            seed=plan.seed,
            size=size,
            instance=index,
            algo=algo,
            status=result.status,
            time_ms=result.elapsed * 1000.0,
            input_formula=str(phi),
            output_formula=None if result.output is None else str(result.output),
            output_size=result.output_size,
            solver_calls=result.solver_calls,
            candidates_tested=result.candidates_tested,
        ))
    return records


def _run_task(args: tuple[BenchPlan, int, int]) -> list[BenchRecord]:
    return run_instance(*args)


def run_plan(plan: BenchPlan, sink: RecordSink) -> BenchSummary:
    tasks = [(plan, s, i) for s in plan.sizes for i in range(plan.count)]
    logger.info("Running %d instances x %d algorithms on %d worker(s)",
                len(tasks), len(plan.algorithms), plan.jobs)
    records: list[BenchRecord] = []
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            for batch in pool.map(_run_task, tasks):
                records.extend(batch)
    else:
        for done, task in enumerate(tasks, 1):
            records.extend(_run_task(task))
            if done % 10 == 0:
                logger.info("%d/%d instances done", done, len(tasks))

    records.sort(key=BenchRecord.sort_key)
    for record in records:
        sink.write(record)
    timeouts = sum(r.status is RunStatus.TIMEOUT for r in records)
    return BenchSummary(records=len(records), timeouts=timeouts, instances=len(tasks))


# --- Reading and checking ----------------------------------------------------

def read_records(stream: TextIO) -> list[BenchRecord]:
    reader = csv.DictReader(stream)
    if reader.fieldnames != CSV_FIELDS:
        raise BenchFormatError(f"Unexpected CSV header {reader.fieldnames}; expected {CSV_FIELDS}")
    records = []
    for row in reader:
        try:
            records.append(BenchRecord.model_validate(row))
        except ValidationError as e:
            raise BenchFormatError(f"Malformed record on line {reader.line_num}: {e}") from None
    return records


def verify_records(records: Iterable[BenchRecord], cfg: MinimizeConfig | None = None) -> list[str]:
    """Problems found in ok records: non-equivalent or larger outputs, exact size disagreements.

    With ``cfg``, outputs for inputs outside its output space may be larger.
    """
    problems = []
    exact_sizes: dict[tuple[int, int], dict[Algorithm, int]] = defaultdict(dict)
    for r in records:
        if r.status is not RunStatus.OK:
            continue
        where = f"size {r.size} instance {r.instance} {r.algo.value}"
        try:
            phi, psi = parse(r.input_formula), parse(r.output_formula)
        except FormulaSyntaxError as e:
            problems.append(f"{where}: {e}")
            continue
        if not equivalent_tt(phi, psi):
            problems.append(f"{where}: output {psi} is not equivalent to {phi}")
        if size(psi) != r.output_size:
            problems.append(f"{where}: output_size {r.output_size} but the output has size {size(psi)}")
        if size(psi) > size(phi) and (cfg is None or in_output_space(phi, cfg)):
            problems.append(f"{where}: output is larger than the input")
        if r.algo in EXACT_ALGORITHMS:
            exact_sizes[(r.size, r.instance)][r.algo] = r.output_size
    for (s, i), by_algo in sorted(exact_sizes.items()):
        if len(set(by_algo.values())) > 1:
            sizes = ", ".join(f"{a.value}={n}" for a, n in by_algo.items())
            problems.append(f"size {s} instance {i}: exact algorithms disagree ({sizes})")
    return problems


# --- Statistics --------------------------------------------------------------

GROUP_FIELDS = ("size", "algo", "output_size", "status")


def _group_value(record: BenchRecord, name: str) -> str:
    value = getattr(record, name)
    if value is None:
        return ""
    return value.value if isinstance(value, (Algorithm, RunStatus)) else str(value)


def _sort_part(value: str):
    return (0, int(value), "") if value.lstrip("-").isdigit() else (1, 0, value)


def aggregate(records: Iterable[BenchRecord], group_by: Sequence[str] = ("size", "algo"),
              groups: Iterable[Sequence[str]] = ()) -> list[StatsRow]:
    """One stats row per group; timeouts count in n and n_timeout but not in the time or size stats.

    ``groups`` lists keys that must appear even when no record falls in them.
    """
    for name in group_by:
        if name not in GROUP_FIELDS:
            raise ValueError(f"Cannot group by '{name}' (choose from {', '.join(GROUP_FIELDS)})")
    buckets: dict[tuple[str, ...], list[BenchRecord]] = {tuple(map(str, g)): [] for g in groups}
    for r in records:
        buckets.setdefault(tuple(_group_value(r, name) for name in group_by), []).append(r)

    rows = []
    for key in sorted(buckets, key=lambda k: tuple(_sort_part(v) for v in k)):
        members = buckets[key]
        ok = [r for r in members if r.status is RunStatus.OK]
        times = [r.time_ms for r in ok]
        sizes = [r.output_size for r in ok]
        rows.append(StatsRow(
            group=dict(zip(group_by, key)),
            n=len(members),
            n_timeout=len(members) - len(ok),
            mean_ms=statistics.fmean(times) if times else None,
            median_ms=statistics.median_low(times) if times else None,
            mean_output_size=statistics.fmean(sizes) if sizes else None,
            output_size_histogram=dict(sorted(Counter(sizes).items())),
        ))
    return rows


def time_distribution(records: Iterable[BenchRecord], size: int, algorithm: Algorithm) -> list[float]:
    """Per-instance times in decreasing order; timeouts are ``inf`` at the head."""
    times = [math.inf if r.status is RunStatus.TIMEOUT else r.time_ms
             for r in records if r.size == size and r.algo is algorithm]
    return sorted(times, reverse=True)


STATS_FIELDS = ["n", "n_timeout", "mean_ms", "median_ms", "mean_output_size", "output_size_histogram"]


def _stats_cells(row: StatsRow) -> list[str]:
    def num(v):
        return "" if v is None else f"{v:.3f}"
    histogram = ";".join(f"{k}:{v}" for k, v in row.output_size_histogram.items())
    return [str(row.n), str(row.n_timeout), num(row.mean_ms), num(row.median_ms),
            num(row.mean_output_size), histogram]


def format_stats(rows: Sequence[StatsRow], group_by: Sequence[str], emit: str = "csv") -> str:
    header = [*group_by, *STATS_FIELDS]
    table = [[row.group[name] for name in group_by] + _stats_cells(row) for row in rows]
    if emit == "csv":
        lines = [",".join(header)] + [",".join(cells) for cells in table]
        return "\n".join(lines)
    if emit != "table":
        raise ValueError(f"Unknown stats format '{emit}'")
    widths = [max(len(h), *(len(cells[j]) for cells in table)) if table else len(h)
              for j, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(cells, widths)) for cells in table]
    return "\n".join(lines)
