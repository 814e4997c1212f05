"""Grammar parsing, validation, serialization and factoring tests."""

import pickle

import pytest

from fpge import (
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
from conftest import G0_TEXT


def symbol_shapes(production):
    return [("T" if s.is_terminal else "NT", s.text) for s in production.symbols]


def test_parse_g0_structure(g0):
    assert len(g0.rules) == 1
    rule = g0.head
    assert rule.name == "e"
    assert len(rule.productions) == 5
    assert symbol_shapes(rule.productions[0]) == [("NT", "e"), ("T", "+"), ("NT", "e")]
    assert symbol_shapes(rule.productions[1]) == [("NT", "e"), ("T", "*"), ("NT", "e")]
    assert [symbol_shapes(p) for p in rule.productions[2:]] == [
        [("T", "x")],
        [("T", "y")],
        [("T", "1")],
    ]


def test_parse_comments_blanks_and_continuations():
    text = """
# leading comment
<s> ::= <a>-<a>
   # indented comment
<a> ::= x
      | y
      | z0
"""
    g = parse_bnf(text)
    assert [r.name for r in g.rules] == ["s", "a"]
    assert len(g.rule("a").productions) == 3
    assert g.head.name == "s"


def test_continuation_joined_with_single_space():
    g = parse_bnf("<s> ::= a\nb\n")
    # 'a' and continuation 'b' fuse into the single terminal 'a b'
    assert symbol_shapes(g.head.productions[0]) == [("T", "a b")]


def test_maximal_terminal_runs():
    g = parse_bnf("<e> ::= pdiv(<e>,<e>) | 7\n")
    assert symbol_shapes(g.head.productions[0]) == [
        ("T", "pdiv("),
        ("NT", "e"),
        ("T", ","),
        ("NT", "e"),
        ("T", ")"),
    ]


def test_interior_whitespace_preserved():
    g = parse_bnf("<e> ::= <e> + <e> | x\n")
    assert symbol_shapes(g.head.productions[0]) == [("NT", "e"), ("T", " + "), ("NT", "e")]


def test_escapes():
    g = parse_bnf(r"<e> ::= a\|b | c\\d | x")
    prods = g.head.productions
    assert symbol_shapes(prods[0]) == [("T", "a|b")]
    assert symbol_shapes(prods[1]) == [("T", "c\\d")]
    assert len(prods) == 3


def test_bad_escape_rejected():
    with pytest.raises(GrammarError, match="escape"):
        parse_bnf(r"<e> ::= a\zb")


def test_unmatched_angle_bracket_is_literal():
    g = parse_bnf("<e> ::= a<b | x\n")
    assert symbol_shapes(g.head.productions[0]) == [("T", "a<b")]


@pytest.mark.parametrize(
    "text,pattern",
    [
        ("e ::= x", "rule name"),
        ("<a<b> ::= x", "rule name"),
        ("<e> ::= x\n<e> ::= y", "duplicate"),
        ("<e> ::= <nope>", "undefined nonterminal"),
        ("<e> ::= <e>x", "non-productive"),
        ("<e> ::= x |", "empty production"),
        ("continuation first", "continuation"),
        ("", "no rules"),
        ("# only a comment\n", "no rules"),
    ],
)
def test_parse_errors(text, pattern):
    with pytest.raises(GrammarError, match=pattern):
        parse_bnf(text)


def test_error_carries_line_number():
    with pytest.raises(GrammarError, match="line 3"):
        parse_bnf("# c\n<e> ::= x\n<f> ::= y |\n")


def test_mutually_unproductive_rules_detected():
    with pytest.raises(GrammarError, match="non-productive"):
        parse_bnf("<a> ::= <b>\n<b> ::= <a>\n")


def test_min_completion_depth(g0):
    assert g0.min_completion_depth("e") == 2
    g = parse_bnf("<s> ::= <a><b>\n<a> ::= x\n<b> ::= <a>y\n")
    assert g.min_completion_depth("a") == 2
    assert g.min_completion_depth("b") == 3
    assert g.min_completion_depth("s") == 4
    with pytest.raises(GrammarError):
        g.min_completion_depth("nope")


def test_serialize_parse_round_trip(g0):
    text = serialize_bnf(g0)
    assert text == "<e> ::= <e>+<e> | <e>*<e> | x | y | 1\n"
    assert parse_bnf(text) == g0
    # canonical form is a fixed point of serialize . parse
    assert serialize_bnf(parse_bnf(text)) == text


def test_serialize_escapes_round_trip():
    g = parse_bnf(r"<e> ::= a\|b\\c | x")
    assert parse_bnf(serialize_bnf(g)) == g


def test_digest_stable_and_sensitive(g0):
    d = g0.digest()
    assert len(d) == 16 and int(d, 16) >= 0
    assert parse_bnf(G0_TEXT).digest() == d
    reordered = parse_bnf("<e> ::= <e>*<e> | <e>+<e> | x | y | 1\n")
    assert reordered.digest() != d


def test_equality_and_hash(g0):
    assert parse_bnf(G0_TEXT) == g0
    assert hash(parse_bnf(G0_TEXT)) == hash(g0)
    assert g0 != parse_bnf("<e> ::= x | y\n")
    assert g0 != "not a grammar"


def test_grammar_picklable(g0):
    clone = pickle.loads(pickle.dumps(g0))
    assert clone == g0
    assert clone.min_completion_depth("e") == 2


def test_rule_and_symbol_validation():
    with pytest.raises(ValueError):
        Symbol("weird", "x")
    with pytest.raises(ValueError):
        Symbol.terminal("")
    with pytest.raises(ValueError):
        Symbol.nonterminal("a<b")
    with pytest.raises(ValueError):
        Production(())
    with pytest.raises(ValueError):
        Rule("e", ())


def enumerate_language(grammar, max_len):
    """All terminal strings of length <= max_len, by exhaustive expansion."""
    out = set()
    seen = set()
    start = (Symbol.nonterminal(grammar.head.name),)
    stack = [start]
    while stack:
        form = stack.pop()
        if form in seen:
            continue
        seen.add(form)
        # cheap lower bound: each symbol yields at least one character
        low = sum(len(s.text) if s.is_terminal else 1 for s in form)
        if low > max_len:
            continue
        i = next((j for j, s in enumerate(form) if not s.is_terminal), None)
        if i is None:
            text = "".join(s.text for s in form)
            if len(text) <= max_len:
                out.add(text)
            continue
        for production in grammar.rule(form[i].text).productions:
            stack.append(form[:i] + production.symbols + form[i + 1:])
    return out


def test_factor_rule_structure(g0):
    g = factor_rule(g0, "e", "r")
    assert [r.name for r in g.rules] == ["e", "r"]
    e = g.rule("e")
    assert symbol_shapes(e.productions[0]) == [("NT", "r")]
    assert [symbol_shapes(p) for p in e.productions[1:]] == [
        [("T", "x")],
        [("T", "y")],
        [("T", "1")],
    ]
    r = g.rule("r")
    assert symbol_shapes(r.productions[0]) == [("NT", "e"), ("T", "+"), ("NT", "e")]
    assert symbol_shapes(r.productions[1]) == [("NT", "e"), ("T", "*"), ("NT", "e")]


def test_factor_rule_inserts_new_rule_right_after():
    g = parse_bnf("<s> ::= <a>!\n<a> ::= <a>+<a> | x\n<b> ::= y\n")
    factored = factor_rule(g, "a", "a2")
    assert [r.name for r in factored.rules] == ["s", "a", "a2", "b"]


def test_factor_rule_preserves_language(g0):
    factored = factor_rule(g0, "e", "r")
    for max_len in (1, 3, 5):
        assert enumerate_language(g0, max_len) == enumerate_language(factored, max_len)


def test_factor_rule_errors(g0):
    with pytest.raises(GrammarError, match="no rule"):
        factor_rule(g0, "nope", "r")
    with pytest.raises(GrammarError, match="already exists"):
        factor_rule(g0, "e", "e")
    only_terminals = parse_bnf("<e> ::= x | y\n")
    with pytest.raises(GrammarError, match="factored"):
        factor_rule(only_terminals, "e", "r")
    only_recursive = parse_bnf("<e> ::= <a><a>\n<a> ::= x\n")
    with pytest.raises(GrammarError, match="factored"):
        factor_rule(only_recursive, "e", "r")
    with pytest.raises(GrammarError):
        factor_rule(g0, "e", "bad<name")


def test_reference_grammar_text():
    text = reference_grammar_text(2)
    assert text == (
        "<e> ::= <e><op><e> | (<e><op><e>) | pdiv(<e>,<e>) | x0 | x1"
        " | 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9\n"
        "<op> ::= + | - | *\n"
    )
    g = parse_bnf(text)
    assert len(g.head.productions) == 15
    assert g.min_completion_depth("e") == 2
    with pytest.raises(ValueError):
        reference_grammar_text(0)


def test_reference_grammar_factored_matches_factor_rule():
    for n in (2, 3, 5):
        direct = parse_bnf(reference_grammar_text(n, factored=True))
        rebuilt = factor_rule(parse_bnf(reference_grammar_text(n)), "e", "r")
        assert direct == rebuilt


def test_packaged_grammars_load_and_match_generator():
    names = packaged_grammar_names()
    assert set(names) >= {
        "g0",
        "arithmetic2",
        "arithmetic2_factored",
        "arithmetic3",
        "arithmetic3_factored",
        "arithmetic5",
        "arithmetic5_factored",
    }
    for n in (2, 3, 5):
        assert load_packaged_grammar(f"arithmetic{n}") == parse_bnf(
            reference_grammar_text(n)
        )
        assert load_packaged_grammar(f"arithmetic{n}_factored") == parse_bnf(
            reference_grammar_text(n, factored=True)
        )
    with pytest.raises(GrammarError, match="no packaged grammar"):
        load_packaged_grammar("missing")
