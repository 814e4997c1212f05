"""Command-line interface.

Subcommands: ``decode``, ``scan``, ``search``, ``plot``, ``dataset gen``,
``grammar check`` and ``reproduce``.  Every subcommand accepts ``--seed``,
``--precision``, ``--threads`` and ``--config FILE`` (a ``key = value``
file whose keys match the long flag names with underscores; flags given
on the command line win, unknown keys are rejected).

Exit codes: 0 on success, 1 for usage errors (bad flags, bad config
keys, inconsistent search settings), 2 for data and grammar errors
(missing or malformed files).

Grammar arguments are file paths, or ``@name`` to use a grammar shipped
with the package (``@g0``, ``@arithmetic2``, ``@arithmetic3``,
``@arithmetic5`` and their ``_factored`` variants).

Output CSVs embed the effective configuration and seed as ``# key =
value`` comment lines; re-running the same invocation reproduces the
file byte for byte.  Thread count changes execution only, never output.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from importlib import resources
from pathlib import Path

from .decoder import DecodeLimits, bfs_decode, dfs_decode, node_count, render
from .evaluator import (
    BENCHMARKS,
    Dataset,
    DatasetError,
    ExprSyntaxError,
    METRICS,
    generate_dataset,
    load_csv,
    save_csv,
)
from .grammar import Grammar, GrammarError, load_packaged_grammar, parse_bnf
from .landscape import (
    LandscapeError,
    ORDERS,
    best,
    export_csv,
    read_scan_csv,
    scan,
    zoom,
)
from .plotting import render_svg
from .precision import DEFAULT_PRECISION, UnitFraction
from .rng import Xoshiro256StarStar, derive_seed
from .search import ALGORITHMS, ExperimentResult, SearchConfig, run_experiment

_DATASET_STREAM_TAG = 0x0D5E7


class UsageError(Exception):
    pass


class ProtocolError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument(
        "--precision",
        type=int,
        default=DEFAULT_PRECISION,
        help="decimal digits carried by genotype values",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes (affects speed only, never results)",
    )
    parser.add_argument("--config", default=None, help="key = value defaults file")


def _add_limit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-depth", type=int, default=15, help="derivation depth cap")
    parser.add_argument("--max-nodes", type=int, default=2000, help="derivation size cap")


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", default=None, help="dataset CSV (header, target last)")
    parser.add_argument(
        "--benchmark", default=None, choices=BENCHMARKS, help="generate a synthetic dataset"
    )
    parser.add_argument(
        "--rows", type=int, default=200, help="rows for --benchmark datasets"
    )


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="fpge", description="floating-point grammatical evolution")
    sub = parser.add_subparsers(dest="command")
    leaves: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("decode", help="transcribe one genotype value")
    p.add_argument("--grammar", default=None)
    p.add_argument("--val", default=None, help="genotype value, e.g. 0.06208")
    p.add_argument("--order", choices=ORDERS, default="dfs")
    _add_limit_flags(p)
    _add_common(p)
    leaves["decode"] = p

    p = sub.add_parser("scan", help="landscape scan across [0, 1]")
    p.add_argument("--grammar", default=None)
    p.add_argument("--order", choices=ORDERS, default="dfs")
    p.add_argument("--samples", type=int, default=25000)
    p.add_argument("--metric", choices=METRICS, default="rmse")
    p.add_argument("--out", default=None)
    _add_dataset_flags(p)
    _add_limit_flags(p)
    _add_common(p)
    leaves["scan"] = p

    p = sub.add_parser("search", help="run a search algorithm")
    p.add_argument("--algo", choices=ALGORITHMS, default=None)
    p.add_argument("--grammar", default=None)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--evals", type=int, default=25000, help="evaluation budget per run")
    p.add_argument("--pop", type=int, default=500)
    p.add_argument("--metric", choices=METRICS, default="rmse")
    p.add_argument("--half-width", default="0.05", help="mutation half-width")
    p.add_argument("--crossover-prob", type=float, default=0.75)
    p.add_argument("--tournament", type=int, default=2)
    p.add_argument("--elitism", type=int, default=1)
    p.add_argument("--de-weight", default="0.5")
    p.add_argument("--codons", type=int, default=200, help="int-ge genome length")
    p.add_argument("--codon-mutation", type=float, default=0.01)
    p.add_argument("--out", default=None)
    _add_dataset_flags(p)
    _add_limit_flags(p)
    _add_common(p)
    leaves["search"] = p

    p = sub.add_parser("plot", help="render a scan CSV as SVG")
    p.add_argument("--scan", default=None, help="scan CSV produced by fpge scan")
    p.add_argument("--out", default=None)
    p.add_argument("--zoom-best", type=int, default=None, metavar="N",
                   help="window of N records around the best sample")
    p.add_argument("--title", default=None)
    p.add_argument("--max-fitness", type=float, default=None, help="cap the fitness axis")
    _add_common(p)
    leaves["plot"] = p

    p = sub.add_parser("grammar", help="grammar utilities")
    gsub = p.add_subparsers(dest="grammar_cmd")
    pc = gsub.add_parser("check", help="validate a grammar file")
    pc.add_argument("grammar_file")
    _add_common(pc)
    leaves["grammar:check"] = pc

    p = sub.add_parser("dataset", help="dataset utilities")
    dsub = p.add_subparsers(dest="dataset_cmd")
    pg = dsub.add_parser("gen", help="write a synthetic benchmark dataset")
    pg.add_argument("--benchmark", choices=BENCHMARKS, default=None)
    pg.add_argument("--n", type=int, default=200)
    pg.add_argument("--out", default=None)
    _add_common(pg)
    leaves["dataset:gen"] = pg

    p = sub.add_parser("reproduce", help="run every line of a protocol file")
    p.add_argument("protocol", help="protocol file path, or a shipped name like 'desk'")
    p.add_argument("--out-dir", default=".", help="directory artifacts are written into")
    _add_common(p)
    leaves["reproduce"] = p

    return parser, leaves


def _leaf_key(args: argparse.Namespace) -> str:
    if args.command == "grammar":
        if not getattr(args, "grammar_cmd", None):
            raise UsageError("grammar requires a subcommand (check)")
        return f"grammar:{args.grammar_cmd}"
    if args.command == "dataset":
        if not getattr(args, "dataset_cmd", None):
            raise UsageError("dataset requires a subcommand (gen)")
        return f"dataset:{args.dataset_cmd}"
    return args.command


def _load_config_file(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def _apply_config(leaf: argparse.ArgumentParser, overrides: dict[str, str]) -> None:
    actions = {
        a.dest: a
        for a in leaf._actions
        if a.option_strings and a.dest not in ("help", "config")
    }
    defaults = {}
    for key, raw in overrides.items():
        action = actions.get(key)
        if action is None:
            allowed = ", ".join(sorted(actions))
            raise UsageError(f"unknown config key {key!r} (allowed: {allowed})")
        try:
            if isinstance(action, argparse._StoreTrueAction):
                value: object = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
        except ValueError:
            raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(
                f"config key {key!r}: {value!r} not one of {tuple(action.choices)}"
            )
        defaults[key] = value
    leaf.set_defaults(**defaults)


def _dispatch(argv: list[str]) -> None:
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        raise UsageError("a subcommand is required (see fpge --help)")
    key = _leaf_key(args)
    if getattr(args, "config", None):
        overrides = _load_config_file(args.config)
        _apply_config(leaves[key], overrides)
        args = parser.parse_args(argv)
    handler = _HANDLERS[key]
    handler(args)


def _require(args: argparse.Namespace, attr: str, flag: str) -> object:
    value = getattr(args, attr, None)
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


def _load_grammar(ref: str) -> Grammar:
    if ref.startswith("@"):
        return load_packaged_grammar(ref[1:])
    path = Path(ref)
    if not path.is_file():
        raise GrammarError(f"grammar file not found: {ref}")
    return parse_bnf(path.read_text())


def _parse_val(text: str, precision: int) -> UnitFraction:
    try:
        return UnitFraction.from_decimal(text, precision)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _limits(args: argparse.Namespace, grammar: Grammar) -> DecodeLimits:
    try:
        limits = DecodeLimits(args.max_depth, args.max_nodes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    need = grammar.min_completion_depth(grammar.head.name)
    if limits.max_depth < need:
        raise UsageError(
            f"--max-depth {limits.max_depth} is below the grammar's minimum "
            f"completion depth {need}"
        )
    return limits


def _resolve_dataset(args: argparse.Namespace) -> tuple[Dataset, str]:
    if args.data and args.benchmark:
        raise UsageError("--data and --benchmark are mutually exclusive")
    if args.data:
        return load_csv(args.data), args.data
    if args.benchmark:
        rng = Xoshiro256StarStar(derive_seed(args.seed, _DATASET_STREAM_TAG))
        dataset = generate_dataset(args.benchmark, args.rows, rng)
        return dataset, f"{args.benchmark}:rows={args.rows}:seed={args.seed}"
    raise UsageError("either --data or --benchmark is required")


def cmd_decode(args: argparse.Namespace) -> None:
    grammar = _load_grammar(str(_require(args, "grammar", "--grammar")))
    val = _parse_val(str(_require(args, "val", "--val")), args.precision)
    limits = _limits(args, grammar)
    decode = bfs_decode if args.order == "bfs" else dfs_decode
    trace: list[int] = []
    outcome = decode(val, grammar, limits, trace)
    if outcome.is_valid:
        print(render(outcome.tree))
        print("valid: true")
        print(f"nodes: {node_count(outcome.tree)}")
        print(f"residual: {outcome.final_residual.decimal()}")
    else:
        print("(invalid)")
        print("valid: false")
        print(f"reason: {outcome.reason}")
    print("splits: " + " ".join(map(str, trace)))


def cmd_grammar_check(args: argparse.Namespace) -> None:
    grammar = _load_grammar(args.grammar_file)
    productions = sum(len(r.productions) for r in grammar.rules)
    print(
        f"ok: {len(grammar.rules)} rules, {productions} productions, "
        f"head <{grammar.head.name}>, digest {grammar.digest()}"
    )


def cmd_dataset_gen(args: argparse.Namespace) -> None:
    benchmark = str(_require(args, "benchmark", "--benchmark"))
    out = str(_require(args, "out", "--out"))
    rng = Xoshiro256StarStar(args.seed)
    dataset = generate_dataset(benchmark, args.n, rng)
    save_csv(dataset, out)
    print(f"wrote {out}: {dataset.n_rows} rows, {len(dataset.variable_names)} variables")


def cmd_scan(args: argparse.Namespace) -> None:
    grammar = _load_grammar(str(_require(args, "grammar", "--grammar")))
    out = str(_require(args, "out", "--out"))
    dataset, dataset_id = _resolve_dataset(args)
    limits = _limits(args, grammar)
    rng = Xoshiro256StarStar(args.seed)
    result = scan(
        grammar,
        args.order,
        dataset,
        args.samples,
        limits,
        rng,
        precision=args.precision,
        seed=args.seed,
        dataset_id=dataset_id,
        metric=args.metric,
        threads=args.threads,
    )
    export_csv(result, out)
    best_index, best_rec = best(result)
    print(
        f"wrote {out}: {args.samples} samples, best fitness "
        f"{best_rec.fitness:.6g} at index {best_index}"
    )


def _format_fitness(value: float) -> str:
    import math

    return "inf" if math.isinf(value) else repr(value)


def _write_trace_csv(
    result: ExperimentResult, path: str, metadata: list[tuple[str, str]]
) -> None:
    agg = result.aggregated
    lines = ["# fpge-trace v1"]
    lines.extend(f"# {k} = {v}" for k, v in metadata)
    lines.append(
        "eval,mean_best,std_best,"
        + ",".join(f"run{i}" for i in range(len(result.traces)))
    )
    for j in range(len(agg.mean)):
        cells = [str(j + 1), _format_fitness(agg.mean[j]), _format_fitness(agg.std[j])]
        cells.extend(_format_fitness(t.best[j]) for t in result.traces)
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_search(args: argparse.Namespace) -> None:
    algorithm = str(_require(args, "algo", "--algo"))
    grammar_ref = str(_require(args, "grammar", "--grammar"))
    out = str(_require(args, "out", "--out"))
    grammar = _load_grammar(grammar_ref)
    dataset, dataset_id = _resolve_dataset(args)
    try:
        cfg = SearchConfig(
            algorithm=algorithm,
            population=args.pop,
            budget=args.evals,
            mutation_half_width=args.half_width,
            crossover_probability=args.crossover_prob,
            tournament_size=args.tournament,
            elitism=args.elitism,
            de_weight=args.de_weight,
            codon_length=args.codons,
            codon_mutation_rate=args.codon_mutation,
            max_depth=args.max_depth,
            max_nodes=args.max_nodes,
            seed=args.seed,
            precision=args.precision,
            metric=args.metric,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    need = grammar.min_completion_depth(grammar.head.name)
    if cfg.max_depth < need:
        raise UsageError(
            f"--max-depth {cfg.max_depth} is below the grammar's minimum "
            f"completion depth {need}"
        )
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    result = run_experiment(cfg, grammar, dataset, args.runs, threads=args.threads)
    metadata = [
        ("algorithm", cfg.algorithm),
        ("runs", str(args.runs)),
        ("grammar", grammar_ref),
        ("grammar_digest", grammar.digest()),
        ("dataset_id", dataset_id),
        ("config_hash", cfg.config_hash()),
        ("population", str(cfg.population)),
        ("budget", str(cfg.budget)),
        ("mutation_half_width", cfg.mutation_half_width),
        ("crossover_probability", str(cfg.crossover_probability)),
        ("tournament_size", str(cfg.tournament_size)),
        ("elitism", str(cfg.elitism)),
        ("de_weight", cfg.de_weight),
        ("codon_length", str(cfg.codon_length)),
        ("codon_mutation_rate", str(cfg.codon_mutation_rate)),
        ("max_depth", str(cfg.max_depth)),
        ("max_nodes", str(cfg.max_nodes)),
        ("seed", str(cfg.seed)),
        ("precision", str(cfg.precision)),
        ("metric", cfg.metric),
    ]
    _write_trace_csv(result, out, metadata)
    final = result.aggregated.mean[-1]
    print(f"wrote {out}: {args.runs} run(s) x {cfg.budget} evals, final mean best {final:.6g}")


def cmd_plot(args: argparse.Namespace) -> None:
    scan_path = str(_require(args, "scan", "--scan"))
    out = str(_require(args, "out", "--out"))
    if not Path(scan_path).is_file():
        raise LandscapeError(f"scan file not found: {scan_path}")
    result = read_scan_csv(scan_path)
    if args.zoom_best is not None:
        if args.zoom_best < 1:
            raise UsageError("--zoom-best must be >= 1")
        index, _ = best(result)
        result = zoom(result, index, args.zoom_best)
    render_svg(result, out, title=args.title, max_fitness=args.max_fitness)
    print(f"wrote {out}")


def _resolve_protocol(ref: str) -> str:
    candidate = resources.files("fpge").joinpath("protocols", f"{ref}.txt")
    try:
        return candidate.read_text()
    except FileNotFoundError:
        pass
    path = Path(ref)
    if not path.is_file():
        raise ProtocolError(f"protocol not found: {ref}")
    return path.read_text()


def cmd_reproduce(args: argparse.Namespace) -> None:
    text = _resolve_protocol(args.protocol)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    commands: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            commands.append((lineno, stripped))
    previous = Path.cwd()
    os.chdir(out_dir)
    try:
        for lineno, command in commands:
            argv = shlex.split(command)
            if argv and argv[0] == "reproduce":
                raise UsageError(f"protocol line {lineno}: nested reproduce")
            print(f"[reproduce] {command}")
            try:
                _dispatch(argv)
            except UsageError as exc:
                raise UsageError(f"protocol line {lineno}: {exc}") from None
            except (ValueError, OSError) as exc:
                raise ProtocolError(f"protocol line {lineno}: {exc}") from None
    finally:
        os.chdir(previous)


_HANDLERS = {
    "decode": cmd_decode,
    "scan": cmd_scan,
    "search": cmd_search,
    "plot": cmd_plot,
    "grammar:check": cmd_grammar_check,
    "dataset:gen": cmd_dataset_gen,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        _dispatch(list(argv))
    except UsageError as exc:
        print(f"fpge: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0
    except (
        GrammarError,
        DatasetError,
        LandscapeError,
        ProtocolError,
        ExprSyntaxError,
        ValueError,
        OSError,
    ) as exc:
        print(f"fpge: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
