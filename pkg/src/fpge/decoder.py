"""Genotype-to-tree transcription.

A single value in [0, 1] is transcribed into a derivation tree by
repeatedly splitting it across the production count of the nonterminal
being expanded: the integer part of ``value * k`` picks the production,
the fractional part becomes the value used for the next expansion.  One
residual stream is consumed in expansion order:

* depth-first: each nonterminal is expanded as soon as it is created,
  left to right, depth before breadth (pre-order);
* breadth-first: pending nonterminals wait in a FIFO queue and consume
  the stream in dequeue (level) order.

Both orders read the same digit stream but route it to different parts of
the tree, so they are different genotype-phenotype mappings.

Expansion aborts with an invalid outcome the moment a node would be
placed beyond ``max_depth`` (the root is at depth 1; a node at the depth
limit may not receive children) or the total node count would exceed
``max_nodes``.  The depth check happens when a nonterminal at the limit
is about to be expanded, before any split is consumed; the node check
happens right after a production's children are materialised.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .grammar import Grammar, Symbol
from .precision import UnitFraction, split_numerator

DEPTH_EXCEEDED = "depth-exceeded"
NODES_EXCEEDED = "nodes-exceeded"
CODONS_EXHAUSTED = "codons-exhausted"


class DerivationTree:
    """One node of a derivation tree.

    Terminal leaves have ``production_index`` None and no children; an
    expanded nonterminal records which production was chosen.
    """

    __slots__ = ("symbol", "production_index", "children")

    def __init__(self, symbol: Symbol) -> None:
        self.symbol = symbol
        self.production_index: int | None = None
        self.children: tuple["DerivationTree", ...] = ()

    def __repr__(self) -> str:
        if self.symbol.is_terminal:
            return f"Leaf({self.symbol.text!r})"
        return f"Node(<{self.symbol.text}>, p={self.production_index}, {len(self.children)} children)"


@dataclass(frozen=True)
class DecodeLimits:
    """Caps on tree growth; decoding past either cap is invalid."""

    max_depth: int = 15
    max_nodes: int = 2000

    def __post_init__(self) -> None:
        if self.max_depth < 1 or self.max_nodes < 1:
            raise ValueError("decode limits must be >= 1")


@dataclass
class DecodeOutcome:
    """Either a complete tree plus the leftover residual, or a reason."""

    tree: DerivationTree | None
    final_residual: UnitFraction | None
    reason: str | None

    @property
    def is_valid(self) -> bool:
        return self.reason is None

    @classmethod
    def valid(cls, tree: DerivationTree, residual: UnitFraction) -> "DecodeOutcome":
        return cls(tree, residual, None)

    @classmethod
    def invalid(cls, reason: str) -> "DecodeOutcome":
        return cls(None, None, reason)


_DEFAULT_LIMITS = DecodeLimits()


def _check_limits(grammar: Grammar, limits: DecodeLimits) -> None:
    need = grammar.min_completion_depth(grammar.head.name)
    if limits.max_depth < need:
        raise ValueError(
            f"max_depth {limits.max_depth} below the grammar's minimum "
            f"completion depth {need}; every decode would be invalid"
        )


def dfs_decode(
    val: UnitFraction,
    grammar: Grammar,
    limits: DecodeLimits = _DEFAULT_LIMITS,
    trace: list[int] | None = None,
) -> DecodeOutcome:
    """Transcribe depth-first (pre-order); residuals flow through subtrees.

    ``trace``, if given, collects the chosen production indices in
    consumption order, including those consumed before an invalid abort.
    """
    return _decode(val, grammar, limits, trace, breadth_first=False)


def bfs_decode(
    val: UnitFraction,
    grammar: Grammar,
    limits: DecodeLimits = _DEFAULT_LIMITS,
    trace: list[int] | None = None,
) -> DecodeOutcome:
    """Transcribe breadth-first; the residual stream feeds level order."""
    return _decode(val, grammar, limits, trace, breadth_first=True)


def _decode(
    val: UnitFraction,
    grammar: Grammar,
    limits: DecodeLimits,
    trace: list[int] | None,
    breadth_first: bool,
) -> DecodeOutcome:
    _check_limits(grammar, limits)
    precision = val.precision
    scale = val.scale
    current = val.numerator

    root = DerivationTree(Symbol.nonterminal(grammar.head.name))
    pending: deque[tuple[DerivationTree, int]] = deque()
    pending.append((root, 1))
    node_total = 1

    while pending:
        node, depth = pending.popleft() if breadth_first else pending.pop()
        if depth >= limits.max_depth:
            return DecodeOutcome.invalid(DEPTH_EXCEEDED)
        rule = grammar.rule(node.symbol.text)
        index, current = split_numerator(current, len(rule.productions), scale)
        if trace is not None:
            trace.append(index)
        production = rule.productions[index]
        node.production_index = index
        node.children = tuple(DerivationTree(sym) for sym in production.symbols)
        node_total += len(node.children)
        if node_total > limits.max_nodes:
            return DecodeOutcome.invalid(NODES_EXCEEDED)
        nonterminals = [c for c in node.children if not c.symbol.is_terminal]
        if breadth_first:
            pending.extend((c, depth + 1) for c in nonterminals)
        else:
            pending.extend((c, depth + 1) for c in reversed(nonterminals))

    return DecodeOutcome.valid(root, UnitFraction(current, precision))


def render(tree: DerivationTree) -> str:
    """Concatenate terminal leaf texts left to right."""
    out: list[str] = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.symbol.is_terminal:
            out.append(node.symbol.text)
        else:
            if node.production_index is None:
                raise ValueError(
                    f"incomplete tree: unexpanded nonterminal <{node.symbol.text}>"
                )
            stack.extend(reversed(node.children))
    return "".join(out)


def node_count(tree: DerivationTree) -> int:
    """Total number of nodes, terminals included."""
    total = 0
    stack = [tree]
    while stack:
        node = stack.pop()
        total += 1
        stack.extend(node.children)
    return total
