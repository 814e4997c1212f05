"""Transcription tests: worked examples, limits, and oracle agreement.

The expected phenotypes for 0.06208 on the toy grammar were derived by
hand: splitting by 5 yields the index/residual chain (0, .3104),
(1, .552), (2, .76), (3, .8), (4, 0), which depth-first routing spells
as x*y+1 and breadth-first routing as y*1+x.
"""

from fractions import Fraction

import pytest

from fpge import (
    CODONS_EXHAUSTED,
    DEPTH_EXCEEDED,
    DecodeLimits,
    DecodeOutcome,
    DerivationTree,
    NODES_EXCEEDED,
    Symbol,
    UnitFraction,
    Xoshiro256StarStar,
    bfs_decode,
    dfs_decode,
    load_packaged_grammar,
    node_count,
    parse_bnf,
    random_unit,
    render,
)
import rational_oracle as oracle


def uf(text, precision=150):
    return UnitFraction.from_decimal(text, precision)


def test_reason_constants():
    assert DEPTH_EXCEEDED == "depth-exceeded"
    assert NODES_EXCEEDED == "nodes-exceeded"
    assert CODONS_EXHAUSTED == "codons-exhausted"


def test_dfs_worked_example(g0):
    trace = []
    out = dfs_decode(uf("0.06208"), g0, trace=trace)
    assert out.is_valid
    assert render(out.tree) == "x*y+1"
    assert node_count(out.tree) == 10
    assert trace == [0, 1, 2, 3, 4]
    assert out.final_residual == UnitFraction.zero()


def test_bfs_worked_example(g0):
    trace = []
    out = bfs_decode(uf("0.06208"), g0, trace=trace)
    assert out.is_valid
    assert render(out.tree) == "y*1+x"
    assert node_count(out.tree) == 10
    assert trace == [0, 1, 2, 3, 4]
    assert out.final_residual == UnitFraction.zero()


def test_value_zero_hits_limits(g0):
    dfs = dfs_decode(UnitFraction.zero(), g0)
    assert not dfs.is_valid and dfs.reason == DEPTH_EXCEEDED
    assert dfs.tree is None and dfs.final_residual is None
    bfs = bfs_decode(UnitFraction.zero(), g0)
    assert not bfs.is_valid and bfs.reason == NODES_EXCEEDED


def test_value_one_picks_last_production(g0):
    for decode in (dfs_decode, bfs_decode):
        out = decode(UnitFraction.one(), g0)
        assert out.is_valid
        assert render(out.tree) == "1"
        assert out.final_residual == UnitFraction.one()


def test_node_at_depth_limit_may_not_expand():
    g = parse_bnf("<s> ::= <a> | z\n<a> ::= x\n")
    # value 0 picks <a>, whose node lands exactly on the depth limit
    out = dfs_decode(uf("0"), g, DecodeLimits(max_depth=2, max_nodes=100))
    assert out.reason == DEPTH_EXCEEDED
    out = dfs_decode(uf("0"), g, DecodeLimits(max_depth=3, max_nodes=100))
    assert out.is_valid and render(out.tree) == "x"
    # value 0.75 picks the terminal production and fits in depth 2
    out = dfs_decode(uf("0.75"), g, DecodeLimits(max_depth=2, max_nodes=100))
    assert out.is_valid and render(out.tree) == "z"


def test_node_budget_boundary(g0):
    # node totals after each of the five expansions: 4, 7, 8, 9, 10
    val = uf("0.06208")
    ok = dfs_decode(val, g0, DecodeLimits(max_depth=15, max_nodes=10))
    assert ok.is_valid
    cut = dfs_decode(val, g0, DecodeLimits(max_depth=15, max_nodes=9))
    assert cut.reason == NODES_EXCEEDED
    trace = []
    cut = dfs_decode(val, g0, DecodeLimits(max_depth=15, max_nodes=7), trace=trace)
    assert cut.reason == NODES_EXCEEDED
    # the split that crossed the budget is still on the trace
    assert trace == [0, 1, 2]


def test_depth_abort_consumes_no_split(g0):
    trace = []
    out = dfs_decode(uf("0"), g0, DecodeLimits(max_depth=3, max_nodes=100), trace=trace)
    assert out.reason == DEPTH_EXCEEDED
    # root at depth 1 and its child at depth 2 split; the node at depth 3 does not
    assert trace == [0, 0]


def test_max_depth_below_grammar_minimum_raises(g0):
    with pytest.raises(ValueError, match="minimum"):
        dfs_decode(uf("0.5"), g0, DecodeLimits(max_depth=1, max_nodes=100))
    g = parse_bnf("<s> ::= <a>!\n<a> ::= x\n")
    with pytest.raises(ValueError, match="minimum"):
        bfs_decode(uf("0.5"), g, DecodeLimits(max_depth=2, max_nodes=100))


def test_limits_validation():
    with pytest.raises(ValueError):
        DecodeLimits(max_depth=0)
    with pytest.raises(ValueError):
        DecodeLimits(max_nodes=0)


def test_outcome_helpers():
    ok = DecodeOutcome.valid(DerivationTree(Symbol.terminal("x")), UnitFraction.zero())
    assert ok.is_valid and ok.reason is None
    bad = DecodeOutcome.invalid(DEPTH_EXCEEDED)
    assert not bad.is_valid and bad.tree is None


def test_render_rejects_unexpanded_nonterminal():
    node = DerivationTree(Symbol.nonterminal("e"))
    with pytest.raises(ValueError, match="unexpanded"):
        render(node)


def test_node_count_leaf():
    assert node_count(DerivationTree(Symbol.terminal("x"))) == 1


def test_residual_matches_manual_split_chain(g0):
    out = dfs_decode(uf("0.3"), g0)
    assert out.is_valid
    v = uf("0.3")
    indices = []
    # replay the expected split chain mechanically until all terminals
    trace = []
    dfs_decode(uf("0.3"), g0, trace=trace)
    for _ in trace:
        step = v.split(5)
        indices.append(step.index)
        v = step.residual
    assert indices == trace
    assert out.final_residual == v


MULTI_RULE = """
<s> ::= <e>=<e> | go(<e>)
<e> ::= <e><op><e> | <d> | (<e>)
<op> ::= + | - | ** | ,
<d> ::= x | y | 0 | 1 | 2
"""


@pytest.mark.parametrize("grammar_text", [None, MULTI_RULE])
@pytest.mark.parametrize("order", ["dfs", "bfs"])
@pytest.mark.parametrize("precision", [8, 40, 150])
def test_oracle_agreement_random(order, precision, grammar_text, g0):
    grammar = g0 if grammar_text is None else parse_bnf(grammar_text)
    head, rules = oracle.plain_rules(grammar)
    decode = dfs_decode if order == "dfs" else bfs_decode
    limits = DecodeLimits(max_depth=9, max_nodes=60)
    rng = Xoshiro256StarStar(precision * 2 + (order == "bfs"))
    for _ in range(300):
        val = random_unit(rng, precision)
        trace = []
        got = decode(val, grammar, limits, trace)
        exp_pheno, exp_trace, exp_reason, exp_residual = oracle.decode(
            head, rules, Fraction(val.numerator, val.scale), order,
            max_depth=9, max_nodes=60,
        )
        assert trace == exp_trace
        assert got.reason == exp_reason
        if exp_reason is None:
            assert render(got.tree) == exp_pheno
            assert Fraction(got.final_residual.numerator, got.final_residual.scale) == exp_residual
        else:
            assert got.tree is None


def test_oracle_agreement_packaged_grammars():
    rng = Xoshiro256StarStar(424242)
    for name in ("arithmetic3", "arithmetic3_factored"):
        grammar = load_packaged_grammar(name)
        head, rules = oracle.plain_rules(grammar)
        for order, decode in (("dfs", dfs_decode), ("bfs", bfs_decode)):
            for _ in range(150):
                val = random_unit(rng)
                trace = []
                got = decode(val, grammar, trace=trace)
                exp_pheno, exp_trace, exp_reason, _ = oracle.decode(
                    head, rules, Fraction(val.numerator, val.scale), order
                )
                assert (trace, got.reason) == (exp_trace, exp_reason)
                if exp_reason is None:
                    assert render(got.tree) == exp_pheno


def test_orders_route_same_stream_differently():
    grammar = load_packaged_grammar("arithmetic3")
    rng = Xoshiro256StarStar(77)
    diverged = 0
    for _ in range(200):
        val = random_unit(rng)
        a = dfs_decode(val, grammar)
        b = bfs_decode(val, grammar)
        if a.is_valid and b.is_valid and render(a.tree) != render(b.tree):
            diverged += 1
    assert diverged > 0


def test_long_shared_prefix_decodes_identically():
    # Digits far beyond those the transcription consumes cannot change the
    # outcome unless an intermediate product sits within 10**-50 of an index
    # boundary, which seeded random values do not.
    grammar = load_packaged_grammar("arithmetic3")
    rng = Xoshiro256StarStar(909)
    checked = 0
    for _ in range(200):
        val = random_unit(rng)
        trace = []
        out = dfs_decode(val, grammar, trace=trace)
        if len(trace) > 40:  # keeps consumed digits well under the kept prefix
            continue
        tail = rng.randbelow(10**50)
        kept = (val.numerator // 10**50) * 10**50
        variant = UnitFraction(kept + tail, 150)
        trace2 = []
        out2 = dfs_decode(variant, grammar, trace=trace2)
        assert trace2 == trace
        assert out2.reason == out.reason
        if out.is_valid:
            assert render(out2.tree) == render(out.tree)
        checked += 1
    assert checked > 100
