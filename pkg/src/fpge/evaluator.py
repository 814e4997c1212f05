"""Expression phenotypes, protected evaluation, and regression fitness.

Phenotypes are strings in a small expression language: binary ``+ - *``
with protected division (``pdiv`` or infix ``/``), unary negation, the
functions ``sin cos exp plog psqrt``, variables, decimal literals, and
parentheses.  Precedence is unary > multiplicative > additive, all
left-associative.

Protected semantics follow common symbolic-regression practice:
``pdiv(a, b)`` is 1.0 whenever ``|b| <= 1e-9``, ``plog(x)`` is
``log(|x|)`` with ``plog(0) = 0``, and ``psqrt(x)`` is ``sqrt(|x|)``.
Evaluation is IEEE float64; overflow propagates as infinity.

Fitness is root-mean-square error by default (mean absolute error is
available), with a single Worst value for anything that fails: parse
errors, unresolved variables, or any non-finite prediction.  Worst sorts
after every finite fitness.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Union

import numpy as np

if TYPE_CHECKING:
    from .rng import Xoshiro256StarStar

WORST = math.inf

METRICS = ("rmse", "mae")


def is_worst(value: float) -> bool:
    return math.isinf(value)


class ExprSyntaxError(ValueError):
    """Phenotype text is not a well-formed expression."""


class EvalError(ValueError):
    """Well-formed expression cannot be evaluated (unknown variable)."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-' or '*'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Neg, BinOp, Call]

_FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "plog": 1, "psqrt": 1, "pdiv": 2}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ExprSyntaxError(f"unexpected character {rest[0]!r} at position {pos}")
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text, at = self.take()
        if kind != "op" or text != value:
            raise ExprSyntaxError(f"expected {value!r} at position {at}, got {text!r}")

    def expression(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text == "*":
                self.take()
                node = BinOp("*", node, self.unary())
            elif kind == "op" and text == "/":
                self.take()
                node = Call("pdiv", (node, self.unary()))
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.atom()

    def atom(self) -> Expr:
        kind, text, at = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            peek_kind, peek_text, _ = self.peek()
            if peek_kind == "op" and peek_text == "(":
                arity = _FUNCTIONS.get(text)
                if arity is None:
                    raise ExprSyntaxError(f"unknown function {text!r} at position {at}")
                self.take()
                args = [self.expression()]
                while True:
                    k, t, _ = self.peek()
                    if k == "op" and t == ",":
                        self.take()
                        args.append(self.expression())
                    else:
                        break
                self.expect(")")
                if len(args) != arity:
                    raise ExprSyntaxError(
                        f"{text} takes {arity} argument(s), got {len(args)}"
                    )
                return Call(text, tuple(args))
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expression()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected token {text!r} at position {at}")


def parse_expr(text: str) -> Expr:
    """Parse phenotype text; raises ExprSyntaxError on malformed input."""
    parser = _Parser(text)
    node = parser.expression()
    kind, trailing, at = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input {trailing!r} at position {at}")
    return node


def expr_variables(expr: Expr) -> set[str]:
    out: set[str] = set()
    stack: list[Expr] = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, BinOp):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Call):
            stack.extend(node.args)
    return out


def _pdiv(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ok = np.abs(b) > 1e-9
    return np.where(ok, a / np.where(ok, b, 1.0), 1.0)


def _plog(x):
    x = np.asarray(x, dtype=np.float64)
    nonzero = x != 0.0
    return np.where(nonzero, np.log(np.abs(np.where(nonzero, x, 1.0))), 0.0)


def _eval(node: Expr, columns: dict[str, np.ndarray]):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return columns[node.name]
        except KeyError:
            raise EvalError(f"unresolved variable {node.name!r}") from None
    if isinstance(node, Neg):
        return -np.asarray(_eval(node.operand, columns), dtype=np.float64)
    if isinstance(node, BinOp):
        left = _eval(node.left, columns)
        right = _eval(node.right, columns)
        if node.op == "+":
            return np.add(left, right, dtype=np.float64)
        if node.op == "-":
            return np.subtract(left, right, dtype=np.float64)
        return np.multiply(left, right, dtype=np.float64)
    args = [_eval(a, columns) for a in node.args]
    if node.func == "pdiv":
        return _pdiv(args[0], args[1])
    if node.func == "plog":
        return _plog(args[0])
    if node.func == "psqrt":
        return np.sqrt(np.abs(np.asarray(args[0], dtype=np.float64)))
    if node.func == "sin":
        return np.sin(np.asarray(args[0], dtype=np.float64))
    if node.func == "cos":
        return np.cos(np.asarray(args[0], dtype=np.float64))
    return np.exp(np.asarray(args[0], dtype=np.float64))


def eval_batch(expr: Expr, columns: dict[str, np.ndarray], n_rows: int) -> np.ndarray:
    """Evaluate over column arrays; returns one float64 per row."""
    with np.errstate(all="ignore"):
        out = _eval(expr, columns)
    arr = np.asarray(out, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n_rows, float(arr))
    return arr


def eval_expr(expr: Expr, row: tuple[float, ...], names: tuple[str, ...]) -> float:
    """Evaluate a single row; raises EvalError for names not bound."""
    if len(row) != len(names):
        raise ValueError("row width does not match variable names")
    columns = {name: np.asarray([value], dtype=np.float64) for name, value in zip(names, row)}
    return float(eval_batch(expr, columns, 1)[0])


@dataclass(frozen=True)
class Dataset:
    """A regression table: named input columns plus one target column."""

    variable_names: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    targets: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("dataset needs at least one row")
        if len(self.targets) != len(self.rows):
            raise ValueError("row/target count mismatch")
        width = len(self.variable_names)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} values, expected {width}")
        for i, t in enumerate(self.targets):
            if not math.isfinite(t):
                raise ValueError(f"non-finite target in row {i}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)


class DatasetError(ValueError):
    """Raised for malformed dataset files."""


def load_csv(path: str | Path) -> Dataset:
    """Read a dataset: header names the variables, last column is target."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].strip():
        raise DatasetError(f"{path}: empty dataset file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2:
        raise DatasetError(f"{path}: need at least one variable column plus a target")
    names = tuple(header[:-1])
    rows: list[tuple[float, ...]] = []
    targets: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise DatasetError(
                f"{path}: line {lineno}: {len(cells)} cells, expected {len(header)}"
            )
        try:
            values = [float(c) for c in cells]
        except ValueError as exc:
            raise DatasetError(f"{path}: line {lineno}: {exc}") from None
        rows.append(tuple(values[:-1]))
        targets.append(values[-1])
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    try:
        return Dataset(names, tuple(rows), tuple(targets))
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def save_csv(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset; numeric text round-trips bit for bit."""
    lines = [",".join(dataset.variable_names + ("target",))]
    for row, target in zip(dataset.rows, dataset.targets):
        lines.append(",".join(repr(v) for v in row + (target,)))
    Path(path).write_text("\n".join(lines) + "\n")


class FitnessEvaluator:
    """Reusable fitness function over one dataset.

    Results are memoised by phenotype string; evaluation never draws
    randomness, so sharing an evaluator across a run is safe.
    """

    def __init__(self, dataset: Dataset, metric: str = "rmse") -> None:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
        self.metric = metric
        self.dataset = dataset
        table = np.asarray(dataset.rows, dtype=np.float64)
        self._columns = {
            name: np.ascontiguousarray(table[:, i])
            for i, name in enumerate(dataset.variable_names)
        }
        self._targets = np.asarray(dataset.targets, dtype=np.float64)
        self._n = dataset.n_rows
        self._memo: dict[str, float] = {}

    def __call__(self, phenotype: str | None) -> float:
        if phenotype is None:
            return WORST
        cached = self._memo.get(phenotype)
        if cached is None:
            cached = self._compute(phenotype)
            self._memo[phenotype] = cached
        return cached

    def _compute(self, phenotype: str) -> float:
        try:
            expr = parse_expr(phenotype)
        except ExprSyntaxError:
            return WORST
        try:
            predictions = eval_batch(expr, self._columns, self._n)
        except EvalError:
            return WORST
        if not np.all(np.isfinite(predictions)):
            return WORST
        residual = predictions - self._targets
        with np.errstate(all="ignore"):
            if self.metric == "rmse":
                value = math.sqrt(float(np.mean(residual * residual)))
            else:
                value = float(np.mean(np.abs(residual)))
        return value if math.isfinite(value) else WORST


def fitness(phenotype: str | None, dataset: Dataset, metric: str = "rmse") -> float:
    """One-shot fitness; build a FitnessEvaluator for repeated calls."""
    return FitnessEvaluator(dataset, metric)(phenotype)


BENCHMARKS = ("keijzer6", "paige1", "vlad4")

# Reference expressions, written in the phenotype language.  Evaluating
# them on a generated dataset reproduces its targets.
_GENERATING_PHENOTYPES = {
    "keijzer6": "30*x0*x2/((x0-10)*x1*x1)",
    "paige1": "1/(1+pdiv(1,x0*x0*x0*x0))+1/(1+pdiv(1,x1*x1*x1*x1))",
    "vlad4": (
        "10/(5+(x0-3)*(x0-3)+(x1-3)*(x1-3)+(x2-3)*(x2-3)"
        "+(x3-3)*(x3-3)+(x4-3)*(x4-3))"
    ),
}


def generating_phenotype(benchmark: str) -> str:
    _check_benchmark(benchmark)
    return _GENERATING_PHENOTYPES[benchmark]


def _check_benchmark(benchmark: str) -> None:
    if benchmark not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {benchmark!r}; choose from {BENCHMARKS}")


def _uniform(rng: "Xoshiro256StarStar", lo: float, hi: float) -> float:
    return lo + rng.next_float() * (hi - lo)


def _keijzer6_row(rng: "Xoshiro256StarStar") -> tuple[float, ...]:
    x0 = _uniform(rng, -1.0, 1.0)
    x1 = _uniform(rng, -1.0, 1.0)
    while abs(x1) < 0.05:
        x1 = _uniform(rng, -1.0, 1.0)
    x2 = _uniform(rng, -1.0, 1.0)
    return (x0, x1, x2)


def _keijzer6_target(row: tuple[float, ...]) -> float:
    x0, x1, x2 = row
    return 30.0 * x0 * x2 / ((x0 - 10.0) * x1 * x1)


def _paige1_row(rng: "Xoshiro256StarStar") -> tuple[float, ...]:
    values = []
    for _ in range(2):
        v = _uniform(rng, -5.0, 5.0)
        while abs(v) < 0.01:
            v = _uniform(rng, -5.0, 5.0)
        values.append(v)
    return tuple(values)


def _paige1_target(row: tuple[float, ...]) -> float:
    x0, x1 = row
    return 1.0 / (1.0 + 1.0 / (x0 * x0 * x0 * x0)) + 1.0 / (1.0 + 1.0 / (x1 * x1 * x1 * x1))


def _vlad4_row(rng: "Xoshiro256StarStar") -> tuple[float, ...]:
    return tuple(_uniform(rng, 0.05, 6.05) for _ in range(5))


def _vlad4_target(row: tuple[float, ...]) -> float:
    denom = 5.0
    for x in row:
        denom = denom + (x - 3.0) * (x - 3.0)
    return 10.0 / denom


_BENCHMARK_FUNCS = {
    "keijzer6": (3, _keijzer6_row, _keijzer6_target),
    "paige1": (2, _paige1_row, _paige1_target),
    "vlad4": (5, _vlad4_row, _vlad4_target),
}


def generate_dataset(benchmark: str, n: int, rng: "Xoshiro256StarStar") -> Dataset:
    """Sample a synthetic benchmark table with ``n`` rows.

    Variables are named ``x0..``; inputs are drawn uniformly per row in
    declaration order, redrawing any value that falls in an excluded band
    (Keijzer-6 keeps ``|x1| >= 0.05``; Paige-1 keeps ``|xi| >= 0.01``).
    """
    _check_benchmark(benchmark)
    if n < 1:
        raise ValueError("need at least one row")
    n_vars, draw_row, target = _BENCHMARK_FUNCS[benchmark]
    names = tuple(f"x{i}" for i in range(n_vars))
    rows = tuple(draw_row(rng) for _ in range(n))
    targets = tuple(target(row) for row in rows)
    return Dataset(names, rows, targets)
