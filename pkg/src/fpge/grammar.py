"""BNF grammars driving genotype transcription.

Production order is semantic: the transcription index chosen from a
genotype picks productions by position, so reordering a grammar's
productions changes the mapping.  Grammars are immutable after
construction and safe to share across worker processes.

File format
-----------
One rule per ``<name> ::= alternatives`` line; continuation lines (no
``::=``) append to the previous rule and are joined with a single space.
Alternatives are separated by unescaped ``|``; ``\\|`` and ``\\\\`` are the
only escapes.  ``<name>`` substrings are nonterminal references (names may
not contain ``<``, ``>`` or newlines); the maximal runs of text between
them form one terminal symbol each, with whitespace trimmed only at
production boundaries.  Lines whose first non-blank character is ``#`` are
comments.  The first rule is the start symbol.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from importlib import resources

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"

_NAME_RE = re.compile(r"<([^<>\n]+)>\Z")
_NT_RE = re.compile(r"<([^<>\n]+)>")


class GrammarError(ValueError):
    """Raised for unparseable or structurally invalid grammars."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Symbol:
    kind: str
    text: str

    def __post_init__(self) -> None:
        if self.kind not in (TERMINAL, NONTERMINAL):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if not self.text:
            raise ValueError("empty symbol text")
        if self.kind == NONTERMINAL and re.search(r"[<>\n]", self.text):
            raise ValueError(f"invalid nonterminal name {self.text!r}")

    @staticmethod
    def terminal(text: str) -> "Symbol":
        return Symbol(TERMINAL, text)

    @staticmethod
    def nonterminal(name: str) -> "Symbol":
        return Symbol(NONTERMINAL, name)

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL


@dataclass(frozen=True)
class Production:
    symbols: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("empty production")

    @property
    def has_nonterminal(self) -> bool:
        return any(not s.is_terminal for s in self.symbols)


@dataclass(frozen=True)
class Rule:
    name: str
    productions: tuple[Production, ...]

    def __post_init__(self) -> None:
        if not self.productions:
            raise ValueError(f"rule <{self.name}> has no productions")


class Grammar:
    """A validated ordered rule set; the first rule is the start symbol.

    Construction checks that rule names are unique, every referenced
    nonterminal is defined, and every rule is productive (some finite
    derivation terminates).  Minimum completion depths are computed once
    by fixed-point iteration and cached.
    """

    __slots__ = ("rules", "_by_name", "_min_depths")

    def __init__(self, rules: tuple[Rule, ...]) -> None:
        if not rules:
            raise GrammarError("grammar has no rules")
        by_name: dict[str, Rule] = {}
        for rule in rules:
            if rule.name in by_name:
                raise GrammarError(f"duplicate rule <{rule.name}>")
            by_name[rule.name] = rule
        for rule in rules:
            for prod in rule.productions:
                for sym in prod.symbols:
                    if not sym.is_terminal and sym.text not in by_name:
                        raise GrammarError(
                            f"undefined nonterminal <{sym.text}> referenced from <{rule.name}>"
                        )
        self.rules = tuple(rules)
        self._by_name = by_name
        self._min_depths = _min_completion_depths(rules, by_name)
        dead = sorted(n for n, d in self._min_depths.items() if math.isinf(d))
        if dead:
            names = ", ".join(f"<{n}>" for n in dead)
            raise GrammarError(f"non-productive rule(s): {names}")

    @property
    def head(self) -> Rule:
        return self.rules[0]

    def rule(self, name: str) -> Rule:
        try:
            return self._by_name[name]
        except KeyError:
            raise GrammarError(f"no rule named <{name}>") from None

    def min_completion_depth(self, name: str) -> int:
        self.rule(name)
        return int(self._min_depths[name])

    def digest(self) -> str:
        """Stable identifier: SHA-256 of the canonical serialization."""
        return hashlib.sha256(serialize_bnf(self).encode()).hexdigest()[:16]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grammar):
            return NotImplemented
        return self.rules == other.rules

    def __hash__(self) -> int:
        return hash(self.rules)

    def __repr__(self) -> str:
        return f"Grammar({len(self.rules)} rules, head=<{self.head.name}>)"


def _min_completion_depths(
    rules: tuple[Rule, ...], by_name: dict[str, Rule]
) -> dict[str, float]:
    # Depth counts nodes on the longest root-to-leaf path of the shallowest
    # complete derivation: a rule expanding directly to terminals has depth 2.
    depths: dict[str, float] = {r.name: math.inf for r in rules}
    changed = True
    while changed:
        changed = False
        for rule in rules:
            best = depths[rule.name]
            for prod in rule.productions:
                worst_child = 1.0
                for sym in prod.symbols:
                    d = 1.0 if sym.is_terminal else depths[sym.text]
                    worst_child = max(worst_child, d)
                best = min(best, 1.0 + worst_child)
            if best < depths[rule.name]:
                depths[rule.name] = best
                changed = True
    return depths


def min_completion_depth(grammar: Grammar, rule_name: str) -> int:
    """Depth (in nodes, root = 1) of the shallowest complete derivation."""
    return grammar.min_completion_depth(rule_name)


def _split_alternatives(rhs: str, line: int) -> list[str]:
    """Split on unescaped ``|``; escape pairs are kept intact for later."""
    parts: list[str] = []
    buf: list[str] = []
    i = 0
    while i < len(rhs):
        c = rhs[i]
        if c == "\\":
            if i + 1 >= len(rhs) or rhs[i + 1] not in "\\|":
                raise GrammarError(
                    f"bad escape {rhs[i:i + 2]!r}; only \\| and \\\\ are recognised", line
                )
            buf.append(rhs[i:i + 2])
            i += 2
        elif c == "|":
            parts.append("".join(buf))
            buf = []
            i += 1
        else:
            buf.append(c)
            i += 1
    parts.append("".join(buf))
    return parts


def _parse_production(text: str, line: int) -> Production:
    text = text.strip()
    if not text:
        raise GrammarError("empty production", line)
    symbols: list[Symbol] = []
    buf: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\":
            buf.append(text[i + 1])
            i += 2
        elif c == "<":
            m = _NT_RE.match(text, i)
            if m is not None:
                if buf:
                    symbols.append(Symbol.terminal("".join(buf)))
                    buf = []
                symbols.append(Symbol.nonterminal(m.group(1)))
                i = m.end()
            else:
                # unmatched '<' stays literal terminal text
                buf.append(c)
                i += 1
        else:
            buf.append(c)
            i += 1
    if buf:
        symbols.append(Symbol.terminal("".join(buf)))
    return Production(tuple(symbols))


def parse_bnf(text: str) -> Grammar:
    """Parse BNF text into a validated grammar."""
    pending: list[tuple[str, list[str], int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "::=" in stripped:
            left, _, rhs = stripped.partition("::=")
            m = _NAME_RE.match(left.strip())
            if m is None:
                raise GrammarError(
                    f"rule name must have the form <name>, got {left.strip()!r}", lineno
                )
            pending.append((m.group(1), [rhs], lineno))
        else:
            if not pending:
                raise GrammarError("continuation line before any rule", lineno)
            pending[-1][1].append(stripped)
    rules = []
    for name, chunks, lineno in pending:
        rhs = " ".join(chunk.strip() for chunk in chunks)
        alternatives = _split_alternatives(rhs, lineno)
        productions = tuple(_parse_production(a, lineno) for a in alternatives)
        rules.append(Rule(name, productions))
    return Grammar(tuple(rules))


def _serialize_symbol(sym: Symbol) -> str:
    if sym.is_terminal:
        return sym.text.replace("\\", "\\\\").replace("|", "\\|")
    return f"<{sym.text}>"


def serialize_bnf(grammar: Grammar) -> str:
    """Canonical one-line-per-rule form; reparsing reproduces the grammar."""
    lines = []
    for rule in grammar.rules:
        alts = " | ".join(
            "".join(_serialize_symbol(s) for s in p.symbols) for p in rule.productions
        )
        lines.append(f"<{rule.name}> ::= {alts}")
    return "\n".join(lines) + "\n"


def factor_rule(grammar: Grammar, rule_name: str, new_name: str) -> Grammar:
    """Split a rule's recursive alternatives out into a fresh rule.

    The named rule keeps its terminal-only productions and gains one new
    production ``[<new_name>]`` placed first; the new rule receives, in
    original order, every production that contained a nonterminal.  The
    generated language is unchanged, but terminal alternatives occupy a
    larger fraction of the rewritten rule, which shortens the average
    derivation.
    """
    rule = grammar.rule(rule_name)
    if new_name in {r.name for r in grammar.rules}:
        raise GrammarError(f"rule <{new_name}> already exists")
    try:
        Symbol.nonterminal(new_name)
    except ValueError as exc:
        raise GrammarError(str(exc)) from None
    recursive = tuple(p for p in rule.productions if p.has_nonterminal)
    plain = tuple(p for p in rule.productions if not p.has_nonterminal)
    if not recursive or not plain:
        raise GrammarError(
            f"<{rule_name}> needs at least one production with a nonterminal "
            "and one without to be factored"
        )
    head = Rule(rule_name, (Production((Symbol.nonterminal(new_name),)),) + plain)
    rebuilt: list[Rule] = []
    for r in grammar.rules:
        if r.name == rule_name:
            rebuilt.append(head)
            rebuilt.append(Rule(new_name, recursive))
        else:
            rebuilt.append(r)
    return Grammar(tuple(rebuilt))


_DIGITS = tuple(str(d) for d in range(10))


def reference_grammar_text(n_vars: int, factored: bool = False) -> str:
    """Arithmetic expression grammar over ``x0..x{n_vars-1}``.

    Recursive alternatives come first in the start rule, followed by the
    variable and single-digit constant terminals, so low genotype values
    favour structure and high values favour leaves.  The factored variant
    wraps the recursive alternatives into a ``<r>`` rule via
    :func:`factor_rule`.
    """
    if n_vars < 1:
        raise ValueError("need at least one variable")
    variables = tuple(f"x{i}" for i in range(n_vars))
    head = " | ".join(
        ("<e><op><e>", "(<e><op><e>)", "pdiv(<e>,<e>)") + variables + _DIGITS
    )
    text = f"<e> ::= {head}\n<op> ::= + | - | *\n"
    if not factored:
        return text
    return serialize_bnf(factor_rule(parse_bnf(text), "e", "r"))


def packaged_grammar_names() -> list[str]:
    root = resources.files("fpge").joinpath("grammars")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".bnf"))


def load_packaged_grammar(name: str) -> Grammar:
    """Load one of the grammars shipped with the package by bare name."""
    path = resources.files("fpge").joinpath("grammars", f"{name}.bnf")
    try:
        text = path.read_text()
    except FileNotFoundError:
        known = ", ".join(packaged_grammar_names())
        raise GrammarError(f"no packaged grammar {name!r} (known: {known})") from None
    return parse_bnf(text)
