"""Floating-point grammatical evolution.

A program is encoded as a single number in [0, 1], carried as an exact
decimal fixed-point value so every experiment replays bit for bit.
Decoding repeatedly splits the value by the number of grammar choices at
the current nonterminal, in depth-first or breadth-first order, until
only terminals remain.  On top of that sit landscape scans over the
whole interval and a small search harness (genetic operators on the
value, differential evolution, random search, and a classic
integer-codon baseline) for symbolic regression.
"""

from .decoder import (
    CODONS_EXHAUSTED,
    DEPTH_EXCEEDED,
    NODES_EXCEEDED,
    DecodeLimits,
    DecodeOutcome,
    DerivationTree,
    bfs_decode,
    dfs_decode,
    node_count,
    render,
)
from .evaluator import (
    BENCHMARKS,
    BinOp,
    Call,
    Dataset,
    DatasetError,
    EvalError,
    Expr,
    ExprSyntaxError,
    FitnessEvaluator,
    METRICS,
    Neg,
    Num,
    Var,
    WORST,
    eval_expr,
    expr_variables,
    fitness,
    generate_dataset,
    generating_phenotype,
    is_worst,
    load_csv,
    parse_expr,
    save_csv,
)
from .grammar import (
    Grammar,
    GrammarError,
    Production,
    Rule,
    Symbol,
    factor_rule,
    load_packaged_grammar,
    packaged_grammar_names,
    parse_bnf,
    reference_grammar_text,
    serialize_bnf,
)
from .landscape import (
    LandscapeError,
    ORDERS,
    Scan,
    ScanMetadata,
    ScanRecord,
    best,
    export_csv,
    read_scan_csv,
    rescan_window,
    scan,
    zoom,
)
from .plotting import render_svg
from .precision import (
    DEFAULT_PRECISION,
    SplitResult,
    UnitFraction,
    random_delta,
    random_in_range,
    random_unit,
    split_numerator,
)
from .rng import SplitMix64, Xoshiro256StarStar, derive_seed
from .search import (
    ALGORITHMS,
    AggregatedTrace,
    ExperimentResult,
    Individual,
    SearchConfig,
    Trace,
    aggregate,
    crossover,
    de_optimize,
    fpge_evolve,
    intge_decode,
    intge_evolve,
    mutate,
    random_search,
    run_experiment,
    run_single,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AggregatedTrace",
    "BENCHMARKS",
    "BinOp",
    "CODONS_EXHAUSTED",
    "Call",
    "DEFAULT_PRECISION",
    "DEPTH_EXCEEDED",
    "Dataset",
    "DatasetError",
    "DecodeLimits",
    "DecodeOutcome",
    "DerivationTree",
    "EvalError",
    "ExperimentResult",
    "Expr",
    "ExprSyntaxError",
    "FitnessEvaluator",
    "Grammar",
    "GrammarError",
    "Individual",
    "LandscapeError",
    "METRICS",
    "NODES_EXCEEDED",
    "Neg",
    "Num",
    "ORDERS",
    "Production",
    "Rule",
    "Scan",
    "ScanMetadata",
    "ScanRecord",
    "SearchConfig",
    "SplitMix64",
    "SplitResult",
    "Symbol",
    "Trace",
    "UnitFraction",
    "Var",
    "WORST",
    "Xoshiro256StarStar",
    "aggregate",
    "best",
    "bfs_decode",
    "crossover",
    "de_optimize",
    "derive_seed",
    "dfs_decode",
    "eval_expr",
    "export_csv",
    "expr_variables",
    "factor_rule",
    "fitness",
    "fpge_evolve",
    "generate_dataset",
    "generating_phenotype",
    "intge_decode",
    "intge_evolve",
    "is_worst",
    "load_csv",
    "load_packaged_grammar",
    "mutate",
    "node_count",
    "packaged_grammar_names",
    "parse_bnf",
    "parse_expr",
    "random_delta",
    "random_in_range",
    "random_search",
    "random_unit",
    "read_scan_csv",
    "render",
    "render_svg",
    "reference_grammar_text",
    "rescan_window",
    "run_experiment",
    "run_single",
    "save_csv",
    "scan",
    "serialize_bnf",
    "split_numerator",
    "zoom",
]
