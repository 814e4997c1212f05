"""Fitness-landscape scanning over the unit interval.

A scan walks ``n`` evenly spaced genotype values across [0, 1], decodes
each one, and records fitness and tree size.  The first value is a small
random offset strictly inside (0, step) so repeated scans with different
seeds sample different lattices but identical seeds reproduce the scan
bit for bit.  Spacing is exact on numerators: ``step = 10**precision // n``
units, which equals 1/n whenever ``n`` divides ``10**precision``.

Scans serialise to CSV with full-precision genotype values and embedded
metadata lines, and can be zoomed: the default zoom extracts the window
of records around an index from the existing scan; a fresh finer re-scan
of the same value interval is available separately.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .decoder import DecodeLimits, bfs_decode, dfs_decode, node_count, render
from .evaluator import Dataset, FitnessEvaluator, WORST
from .grammar import Grammar
from .precision import UnitFraction, pow10
from .rng import Xoshiro256StarStar

ORDERS = ("dfs", "bfs")


class LandscapeError(ValueError):
    pass


@dataclass(frozen=True)
class ScanRecord:
    val: UnitFraction
    fitness: float
    nodes: int
    valid: bool
    invalid_reason: str | None


@dataclass(frozen=True)
class ScanMetadata:
    grammar_digest: str
    order: str
    samples: int
    offset: str
    seed: int
    dataset_id: str
    max_depth: int
    max_nodes: int
    precision: int
    metric: str
    extra: tuple[tuple[str, str], ...] = ()


@dataclass
class Scan:
    records: list[ScanRecord]
    metadata: ScanMetadata


def _scan_record(
    val: UnitFraction,
    grammar: Grammar,
    order: str,
    limits: DecodeLimits,
    fitness_fn: FitnessEvaluator,
) -> ScanRecord:
    decode = bfs_decode if order == "bfs" else dfs_decode
    outcome = decode(val, grammar, limits)
    if not outcome.is_valid:
        return ScanRecord(val, WORST, 0, False, outcome.reason)
    tree = outcome.tree
    return ScanRecord(val, fitness_fn(render(tree)), node_count(tree), True, None)


def _scan_chunk(args) -> list[ScanRecord]:
    offset, step, precision, start, count, grammar, order, limits, dataset, metric = args
    fitness_fn = FitnessEvaluator(dataset, metric)
    out = []
    for j in range(start, start + count):
        val = UnitFraction(offset + j * step, precision)
        out.append(_scan_record(val, grammar, order, limits, fitness_fn))
    return out


def scan(
    grammar: Grammar,
    order: str,
    dataset: Dataset,
    n: int,
    limits: DecodeLimits,
    rng: Xoshiro256StarStar,
    *,
    precision: int = 150,
    seed: int = 0,
    dataset_id: str = "",
    metric: str = "rmse",
    threads: int = 1,
) -> Scan:
    """Decode and evaluate ``n`` lattice points with a random offset.

    ``seed`` and ``dataset_id`` are echoed into metadata only; the draws
    come from ``rng``.  With ``threads > 1`` the lattice is split into
    contiguous chunks evaluated in worker processes and merged in index
    order, so results are identical to the single-threaded scan.
    """
    if order not in ORDERS:
        raise ValueError(f"unknown decode order {order!r}")
    if n < 1:
        raise ValueError("need at least one sample")
    scale = pow10(precision)
    step = scale // n
    if step < 2:
        raise ValueError(f"{n} samples cannot fit a precision-{precision} lattice")
    offset = 1 + rng.randbelow(step - 1)

    meta = ScanMetadata(
        grammar_digest=grammar.digest(),
        order=order,
        samples=n,
        offset=UnitFraction(offset, precision).decimal(trim=False),
        seed=seed,
        dataset_id=dataset_id,
        max_depth=limits.max_depth,
        max_nodes=limits.max_nodes,
        precision=precision,
        metric=metric,
    )

    if threads > 1 and n >= 4 * threads:
        bounds = [(n * w) // threads for w in range(threads + 1)]
        jobs = [
            (offset, step, precision, lo, hi - lo, grammar, order, limits, dataset, metric)
            for lo, hi in zip(bounds, bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_scan_chunk, jobs))
        records = [rec for chunk in chunks for rec in chunk]
    else:
        records = _scan_chunk(
            (offset, step, precision, 0, n, grammar, order, limits, dataset, metric)
        )
    return Scan(records, meta)


def best(scan_result: Scan) -> tuple[int, ScanRecord]:
    """Index and record of the lowest fitness among valid decodes.

    Ties go to the smallest genotype value, which is the earliest record
    since scans are ordered by value.
    """
    best_index = -1
    best_fitness = None
    for i, rec in enumerate(scan_result.records):
        if rec.valid and (best_fitness is None or rec.fitness < best_fitness):
            best_index = i
            best_fitness = rec.fitness
    if best_index < 0:
        raise LandscapeError("scan has no valid records")
    return best_index, scan_result.records[best_index]


def zoom(scan_result: Scan, center_index: int, count: int = 250) -> Scan:
    """Window of ``count`` contiguous records containing ``center_index``.

    The window is centred where possible and shifted at the boundaries;
    scans shorter than ``count`` are returned whole.
    """
    records = scan_result.records
    if not 0 <= center_index < len(records):
        raise LandscapeError(f"center index {center_index} outside the scan")
    if count < 1:
        raise LandscapeError("window must hold at least one record")
    start = min(max(center_index - count // 2, 0), max(len(records) - count, 0))
    window = records[start:start + count]
    meta = replace(
        scan_result.metadata,
        extra=scan_result.metadata.extra
        + (("zoom_center", str(center_index)), ("zoom_start", str(start))),
    )
    return Scan(list(window), meta)


def rescan_window(
    grammar: Grammar,
    order: str,
    dataset: Dataset,
    lo: UnitFraction,
    hi: UnitFraction,
    count: int,
    limits: DecodeLimits,
    *,
    metric: str = "rmse",
) -> Scan:
    """Finer re-scan: ``count`` fresh lattice points across [lo, hi].

    Endpoints are included; the interval must be wide enough for strictly
    increasing values.  No randomness is involved.
    """
    if count < 2:
        raise LandscapeError("re-scan needs at least two samples")
    if lo.precision != hi.precision:
        raise LandscapeError("mixed precisions")
    span = hi.numerator - lo.numerator
    if span < count - 1:
        raise LandscapeError("interval too narrow for the requested sample count")
    fitness_fn = FitnessEvaluator(dataset, metric)
    records = []
    for j in range(count):
        num = lo.numerator + (j * span) // (count - 1)
        val = UnitFraction(num, lo.precision)
        records.append(_scan_record(val, grammar, order, limits, fitness_fn))
    meta = ScanMetadata(
        grammar_digest=grammar.digest(),
        order=order,
        samples=count,
        offset=lo.decimal(trim=False),
        seed=0,
        dataset_id="",
        max_depth=limits.max_depth,
        max_nodes=limits.max_nodes,
        precision=lo.precision,
        metric=metric,
        extra=(("rescan_hi", hi.decimal(trim=False)),),
    )
    return Scan(records, meta)


def _format_fitness(value: float) -> str:
    return "inf" if value == WORST else repr(value)


_CSV_HEADER = "val,fitness,nodes,valid,invalid_reason"


def export_csv(scan_result: Scan, path: str | Path) -> None:
    """Write records with full-precision values plus metadata comments."""
    meta = scan_result.metadata
    lines = ["# fpge-scan v1"]
    pairs = [
        ("grammar_digest", meta.grammar_digest),
        ("order", meta.order),
        ("samples", str(meta.samples)),
        ("offset", meta.offset),
        ("seed", str(meta.seed)),
        ("dataset_id", meta.dataset_id),
        ("max_depth", str(meta.max_depth)),
        ("max_nodes", str(meta.max_nodes)),
        ("precision", str(meta.precision)),
        ("metric", meta.metric),
    ] + list(meta.extra)
    lines.extend(f"# {key} = {value}" for key, value in pairs)
    lines.append(_CSV_HEADER)
    for rec in scan_result.records:
        lines.append(
            ",".join(
                (
                    rec.val.decimal(trim=False),
                    _format_fitness(rec.fitness),
                    str(rec.nodes),
                    "true" if rec.valid else "false",
                    rec.invalid_reason or "",
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_scan_csv(path: str | Path) -> Scan:
    """Parse a scan written by :func:`export_csv`."""
    path = Path(path)
    meta_pairs: dict[str, str] = {}
    extra: list[tuple[str, str]] = []
    records: list[ScanRecord] = []
    known = {
        "grammar_digest",
        "order",
        "samples",
        "offset",
        "seed",
        "dataset_id",
        "max_depth",
        "max_nodes",
        "precision",
        "metric",
    }
    saw_header = False
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                value = value.strip()
                if key in known:
                    meta_pairs[key] = value
                else:
                    extra.append((key, value))
            continue
        if not saw_header:
            if line != _CSV_HEADER:
                raise LandscapeError(f"{path}: line {lineno}: unexpected header {line!r}")
            saw_header = True
            continue
        cells = line.split(",")
        if len(cells) != 5:
            raise LandscapeError(f"{path}: line {lineno}: expected 5 cells")
        precision = int(meta_pairs.get("precision", "150"))
        val = UnitFraction.from_decimal(cells[0], precision)
        fitness_value = WORST if cells[1] == "inf" else float(cells[1])
        records.append(
            ScanRecord(
                val,
                fitness_value,
                int(cells[2]),
                cells[3] == "true",
                cells[4] or None,
            )
        )
    if not saw_header:
        raise LandscapeError(f"{path}: not a scan file")
    missing = known - meta_pairs.keys()
    if missing:
        raise LandscapeError(f"{path}: missing metadata: {sorted(missing)}")
    meta = ScanMetadata(
        grammar_digest=meta_pairs["grammar_digest"],
        order=meta_pairs["order"],
        samples=int(meta_pairs["samples"]),
        offset=meta_pairs["offset"],
        seed=int(meta_pairs["seed"]),
        dataset_id=meta_pairs["dataset_id"],
        max_depth=int(meta_pairs["max_depth"]),
        max_nodes=int(meta_pairs["max_nodes"]),
        precision=int(meta_pairs["precision"]),
        metric=meta_pairs["metric"],
        extra=tuple(extra),
    )
    return Scan(records, meta)
