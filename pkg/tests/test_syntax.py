import random

import pytest
from hypothesis import given, settings

from ambients.congruence import normalize
from ambients.syntax import (
    NIL, Abs, Amb, Bound, Capability, CapKind, Mode, Msg, Nil, Par, ParseError,
    Prefix, ProcessError, Repl, Var, classify, count_messages, count_prefixes,
    depth_degree, free_names, free_vars, fresh_name, parse_process, print_process,
    replace_name, seq_degree, substitute_name,
)
from ambients.semantics import reduce_once

from helpers import gen_reducible, processes, random_congruent, reduction_edges


def P(text, **kw):
    return parse_process(text, **kw)


# parsing and printing ------------------------------------------------------

def test_parse_nil():
    assert P("0") == NIL


def test_parse_intro_process():
    p = P("!a[in c.0] | open a.b[0]")
    expected = Par(Repl(Amb("a", Prefix(Capability(CapKind.IN, "c"), NIL))),
                   Prefix(Capability(CapKind.OPEN, "a"), Amb("b", NIL)))
    assert p == expected


def test_bare_capability_needs_sugar():
    assert P("in n") == P("in n.0")
    with pytest.raises(ParseError):
        P("in n", sugar=False)


@pytest.mark.parametrize("bad", ["", "a[", "in .0", "(x", "0 |", "a[0]]", "<n>.0"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        P(bad)


def test_sync_continuation_only_in_sync_mode():
    p = P("<n>.a[0]", mode=Mode.SYNC)
    assert p == Msg("n", Amb("a", NIL))
    with pytest.raises(ParseError):
        P("<n>.a[0]")


def test_print_examples():
    assert print_process(NIL) == "0"
    assert print_process(Par(Msg("n"), Abs(NIL))) == "<n> | (x)0"


def test_precedence_of_bar_and_prefix():
    assert P("in a.0 | b[0]") == Par(Prefix(Capability(CapKind.IN, "a"), NIL), Amb("b", NIL))
    assert P("!a[0] | b[0]") == Par(Repl(Amb("a", NIL)), Amb("b", NIL))


def test_binders_are_alpha_invariant():
    assert P("(x)x[0]") == P("(y)y[0]")
    assert P("(x)(y)<x>") != P("(x)(y)<y>")


@settings(max_examples=300, deadline=None)
@given(processes(finite=False, maifs=False))
def test_round_trip(p):
    assert P(print_process(p)) == p


@settings(max_examples=100, deadline=None)
@given(processes(mode=Mode.SYNC))
def test_round_trip_sync(p):
    assert P(print_process(p), mode=Mode.SYNC) == p


# names and substitution ----------------------------------------------------

def _fn_oracle(p, acc=None):
    acc = set() if acc is None else acc
    for attr in ("name", "payload"):
        v = getattr(p, attr, None)
        if isinstance(v, str):
            acc.add(v)
    cap = getattr(p, "cap", None)
    if cap is not None and isinstance(cap.target, str):
        acc.add(cap.target)
    for attr in ("left", "right", "body", "continuation"):
        c = getattr(p, attr, None)
        if c is not None:
            _fn_oracle(c, acc)
    return acc


def test_free_names_examples():
    assert free_names(P("open n.0")) == {"n"}
    assert free_names(P("(x)<x>")) == set()
    assert free_names(P("n[<m>] | open n.0")) == {"n", "m"}


@settings(max_examples=200, deadline=None)
@given(processes(finite=False, maifs=False))
def test_free_names_match_structural_oracle(p):
    assert free_names(p) == _fn_oracle(p)


def test_free_vars_examples():
    assert free_vars(P("(x)<x>")) == set()
    assert free_vars(P("<x>", variables=["x"])) == {Var("x")}
    assert free_vars(P("(x)(<x> | <y>)", variables=["y"])) == {Var("y")}


def test_substitution_examples():
    x = Var("x")
    closed = P("(x)<x>")
    assert substitute_name(closed, x, "n") == closed
    assert substitute_name(P("<x>", variables=["x"]), x, "n") == P("<n>")
    assert substitute_name(P("in x.<x>", variables=["x"]), x, "n") == P("in n.<n>")


def test_substitution_removes_the_variable():
    x, y = Var("x"), Var("y")
    p = P("x[<y>] | in x.(z)<z>", variables=["x", "y"])
    q = substitute_name(p, x, "n")
    assert free_vars(q) == free_vars(p) - {x}
    assert free_names(q) <= free_names(p) | {"n"}


def test_replace_name():
    assert replace_name(P("m[0]"), "m", "n") == P("n[0]")
    p = P("a[in b.0]")
    assert replace_name(p, "m", "n") is p
    assert replace_name(P("m[in m.<m>] | open m.0"), "m", "n") == P("n[in n.<n>] | open n.0")


def test_fresh_name():
    assert fresh_name(["m0", "m1"]) == "m2"
    assert fresh_name([], base="k", seed=3) == "k3"


# degrees and counts --------------------------------------------------------

def test_sd_examples():
    assert seq_degree(NIL) == 0
    assert seq_degree(P("<n>")) == 1
    assert seq_degree(P("(x)((x)0 | <x>)")) == 1
    assert seq_degree(P("in a.out b.0 | <n>")) == 2
    assert seq_degree(P("a[open b.0]")) == 1


def test_sd_rejects_open_terms():
    with pytest.raises(ProcessError):
        seq_degree(P("<x>", variables=["x"]))


def test_dd_examples():
    assert depth_degree(P("in n.a[0]")) == 0
    assert depth_degree(P("n[m[0]]")) == 2
    assert depth_degree(P("!a[0] | b[c[0]]")) == 2
    assert depth_degree(P("(x)a[0] | <n>")) == 0


def test_counts():
    assert count_prefixes(P("in n.(x)0")) == 2
    assert count_messages(P("<n> | <m>")) == 2


def test_classify_examples():
    c = classify(P("!a[0]"))
    assert not c.is_finite and c.is_maifs
    assert not classify(P("in n.!a[0]")).is_maifs
    assert classify(P("!0")).is_finite
    assert classify(P("a[0] | 0")).is_single
    assert not classify(P("a[0] | b[0]")).is_single
    assert not classify(P("<x>", variables=["x"])).is_closed


@settings(max_examples=200, deadline=None)
@given(processes(finite=False))
def test_degrees_invariant_under_axiom_rewrites(p):
    q = random_congruent(p, random.Random(0), 10)
    assert seq_degree(p) == seq_degree(q)
    assert depth_degree(p) == depth_degree(q)


def test_sd_and_counts_decrease_along_reduction():
    for p, q in reduction_edges(11, 400):
        assert seq_degree(q) <= seq_degree(p)
        assert count_prefixes(q) <= count_prefixes(p)
        assert count_messages(q) <= count_messages(p)


def _longest_path(p, memo):
    if p in memo:
        return memo[p]
    succ = reduce_once(p)
    memo[p] = 0 if not succ else 1 + max(_longest_path(q, memo) for q in succ)
    return memo[p]


def test_reduction_paths_bounded_by_guards_and_messages():
    memo = {}
    rng = random.Random(12)
    for _ in range(200):
        p = normalize(gen_reducible(rng, redexes=3))
        assert _longest_path(p, memo) <= count_prefixes(p) + count_messages(p)
