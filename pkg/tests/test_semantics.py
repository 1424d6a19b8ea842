import random

import pytest
from hypothesis import given, settings

from ambients.congruence import normalize
from ambients.semantics import (
    FALSE, TRUE, Cap, Fuel, MsgIn, MsgOut, Verdict, barbs, det_step,
    labelled_transitions, reduce_once, reduce_once_with_rules, reduce_star,
    stutter_closure, trace, unknown, weak_transition,
)
from ambients.syntax import Capability, CapKind, Mode, ProcessError, parse_process

from helpers import gen_reducible, processes, random_congruent, reduction_edges


def P(text, **kw):
    return parse_process(text, **kw)


def cap(kind, n):
    return Capability(CapKind(kind), n)


# one-step reduction --------------------------------------------------------------

def test_red_open():
    assert reduce_once(P("open n.0 | n[<m>]")) == {P("<m>")}


def test_red_in():
    assert reduce_once(P("n[in m.0] | m[0]")) == {P("m[n[0]]")}


def test_red_out():
    assert reduce_once(P("m[n[out m.0]]")) == {normalize(P("n[0] | m[0]"))}


def test_red_com():
    assert reduce_once(P("<n> | (x)x[0]")) == {P("n[0]")}


def test_red_com_sync_releases_continuation():
    p = P("<n>.a[0] | (x)x[0]", mode=Mode.SYNC)
    assert reduce_once(p) == {normalize(P("a[0] | n[0]"))}


def test_rule_names():
    rules = {r for r, _ in reduce_once_with_rules(P("open n.0 | n[0] | <a> | (x)0"))}
    assert rules == {"Red-Open", "Red-Com"}


def test_reduction_under_ambient_but_not_under_prefix():
    assert reduce_once(P("a[open n.0 | n[0]]")) == {P("a[0]")}
    assert reduce_once(P("in a.(open n.0 | n[0])")) == set()


def test_reduce_rejects_open_term():
    with pytest.raises(ProcessError):
        reduce_once(P("<x>", variables=["x"]))


def test_reduce_star_examples():
    assert reduce_star(P("0")) == ({P("0")}, True)
    states, complete = reduce_star(P("open a.b[0] | !a[in c.0]"))
    assert complete
    assert normalize(P("in c.0 | !a[in c.0] | b[0]")) in states


def test_intro_process_has_exactly_one_reduct():
    assert reduce_once(P("!a[in c.0] | open a.b[0]")) == {normalize(P("in c.0 | !a[in c.0] | b[0]"))}


def test_reduce_star_reports_incompleteness():
    states, complete = reduce_star(P("!a[0] | !open a.a[a[0]]"), Fuel(50, 64))
    assert not complete


@settings(max_examples=200, deadline=None)
@given(processes(depth=4))
def test_reduction_respects_congruence(p):
    q = random_congruent(p, random.Random(3), 8)
    assert reduce_once(p) == reduce_once(q)


def test_reduction_respects_congruence_on_reducible_terms():
    rng = random.Random(4)
    for _ in range(200):
        p = gen_reducible(rng)
        assert reduce_once(p) == reduce_once(random_congruent(p, rng, 8))


# labelled transitions ------------------------------------------------------------

def test_labelled_transitions_examples():
    assert labelled_transitions(P("in n.0 | <m>")) == {
        (Cap(cap("in", "n")), P("<m>")), (MsgOut("m"), P("in n.0"))}
    assert labelled_transitions(P("0")) == set()
    assert labelled_transitions(P("(x)<x>"), probes=["n"]) == {(MsgIn("n"), P("<n>"))}


def test_replicated_component_offers_a_copy():
    got = labelled_transitions(P("!in a.0"))
    assert got == {(Cap(cap("in", "a")), P("!in a.0"))}


def test_weak_transition_examples():
    assert weak_transition(P("in n.0"), Cap(cap("in", "n"))) == ({P("0")}, True)
    assert weak_transition(P("open a.0 | a[in b.0]"), Cap(cap("in", "b"))) == ({P("0")}, True)
    assert weak_transition(P("in n.0"), Cap(cap("in", "n")), Fuel(0, 0)) == (frozenset(), False)


def test_weak_transition_contains_strong_ones():
    for p, _ in reduction_edges(5, 150):
        for label, q in labelled_transitions(p):
            if isinstance(label, MsgIn):
                continue
            states, complete = weak_transition(p, label)
            assert q in states


# stuttering ----------------------------------------------------------------------

LOOP_P = "!open n.in n.out n.in n.out n.n[0] | n[0]"
LOOP_Q = "!open n.in n.out n.in n.out n.n[0] | in n.out n.n[0]"


def test_stuttering_loop():
    p, q = normalize(P(LOOP_P)), normalize(P(LOOP_Q))
    out_n = cap("out", "n")
    forward, c1 = stutter_closure(p, out_n)
    back, c2 = stutter_closure(q, out_n)
    assert c1 and c2
    assert q in forward and p in back


def test_stutter_closure_is_reflexive():
    assert stutter_closure(P("0"), cap("in", "n")) == ({P("0")}, True)
    for p, _ in reduction_edges(6, 50):
        assert normalize(p) in stutter_closure(p, cap("out", "a"))[0]


# barbs and deterministic steps ---------------------------------------------------

def test_barbs_examples():
    assert barbs(P("n[0]")) == ({"n"}, True)
    assert barbs(P("open m.0 | m[n[0]]")) == ({"m", "n"}, True)
    assert barbs(P("in n.0")) == (set(), True)


def test_det_step():
    assert det_step(P("<n> | (x)0")) == P("0")
    assert det_step(P("open a.0 | open b.0 | a[c[0]] | b[d[0]]")) is None
    assert det_step(P("0")) is None


def test_trace_records():
    recs = trace(P("open a.b[0] | a[in c.0]"), 5)
    assert [r.rule for r in recs] == ["Start", "Red-Open"]
    line = recs[1].as_text()
    assert line.startswith("Red-Open\t")
    assert trace(P("<n> | (x)0"), 0)[-1].rule == "Start"


# verdicts ------------------------------------------------------------------------

def test_verdict_text_round_trip():
    for v in (TRUE, FALSE, unknown("state budget exhausted")):
        assert Verdict.parse(str(v)) == v
    assert str(~TRUE) == "false"
    assert (~unknown("x")).is_unknown
