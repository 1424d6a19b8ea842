"""Reduction, labelled transitions, stuttering, barbs and deterministic steps.

Every engine works on normal forms (see ``congruence.normalize``): a state
is its canonical representative, so the structural rule is built in and
visited sets deduplicate up to ≡.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple, Union

from .congruence import build, components, normalize
from .syntax import (
    Abs, Amb, Capability, CapKind, Msg, Prefix, Process, ProcessError,
    free_names, fresh_name, instantiate, is_closed, print_process,
)


# --------------------------------------------------------------------------
# Fuel and verdicts

@dataclass(frozen=True)
class Fuel:
    max_states: int = 100_000
    max_depth: int = 64

    def __post_init__(self):
        if self.max_states < 0 or self.max_depth < 0:
            raise ValueError("fuel bounds must be non-negative")


DEFAULT_FUEL = Fuel()


@dataclass(frozen=True)
class Verdict:
    """Three-valued answer: ``value`` is True, False or None (unknown)."""
    value: Optional[bool]
    reason: str = ""

    @property
    def is_true(self):
        return self.value is True

    @property
    def is_false(self):
        return self.value is False

    @property
    def is_unknown(self):
        return self.value is None

    def __str__(self):
        if self.value is None:
            return f"unknown:{self.reason}"
        return "true" if self.value else "false"

    def __invert__(self):
        if self.value is None:
            return self
        return FALSE if self.value else TRUE

    @staticmethod
    def parse(text: str) -> "Verdict":
        if text == "true":
            return TRUE
        if text == "false":
            return FALSE
        if text.startswith("unknown:"):
            return Verdict(None, text[len("unknown:"):])
        raise ValueError(f"not a verdict: {text!r}")


TRUE = Verdict(True)
FALSE = Verdict(False)


def unknown(reason: str) -> Verdict:
    return Verdict(None, reason)


def verdict(b: bool) -> Verdict:
    return TRUE if b else FALSE


def all_of(vs: Iterable) -> Verdict:
    """Kleene conjunction; accepts verdicts or zero-argument callables (lazy)."""
    pending = None
    for v in vs:
        if callable(v):
            v = v()
        if v.value is False:
            return v
        if v.value is None and pending is None:
            pending = v
    return pending or TRUE


def any_of(vs: Iterable) -> Verdict:
    """Kleene disjunction, lazily short-circuiting on True."""
    pending = None
    for v in vs:
        if callable(v):
            v = v()
        if v.value is True:
            return v
        if v.value is None and pending is None:
            pending = v
    return pending or FALSE


# --------------------------------------------------------------------------
# Labels

@dataclass(frozen=True)
class Cap:
    cap: Capability

    def __str__(self):
        return str(self.cap)


@dataclass(frozen=True)
class MsgOut:
    name: str

    def __str__(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class MsgIn:
    name: str

    def __str__(self):
        return f"?{self.name}"


@dataclass(frozen=True)
class Tau:
    def __str__(self):
        return "tau"


TransitionLabel = Union[Cap, MsgOut, MsgIn, Tau]


def _require_closed(p):
    if not is_closed(p):
        raise ProcessError(f"term is not closed: {print_process(p)}")


# --------------------------------------------------------------------------
# One-step reduction

def _rest(comps, *taken):
    """Components left after consuming ``taken`` (replicated ones stay)."""
    drop = {i for i in taken if not comps[i][0]}
    return [c for i, c in enumerate(comps) if i not in drop]


def _partners(comps, i):
    """Indices usable as a second participant next to ``i``."""
    for j, (rep, _) in enumerate(comps):
        if j != i or rep:
            yield j


_REDUCTS: dict = {}
_REDUCTS_LIMIT = 400_000


def _reducts(p: Process) -> Tuple[Tuple[str, Process], ...]:
    """``(rule, reduct)`` pairs of a normalized term, deduplicated by reduct."""
    r = _REDUCTS.get(p)
    if r is not None:
        return r
    found = {}
    for rule, q in _raw_reducts(p):
        q = normalize(q)
        if q not in found:
            found[q] = rule
    r = tuple(sorted(((rule, q) for q, rule in found.items()),
                     key=lambda t: t[1]))
    if len(_REDUCTS) >= _REDUCTS_LIMIT:
        _REDUCTS.clear()
    _REDUCTS[p] = r
    return r


def _raw_reducts(p):
    comps = components(p)
    for i, (rep_i, s) in enumerate(comps):
        t = type(s)
        if t is Prefix and s.cap.kind is CapKind.OPEN and isinstance(s.cap.target, str):
            n = s.cap.target
            for j, (_, a) in enumerate(comps):
                if type(a) is Amb and a.name == n:
                    yield "Red-Open", build(_rest(comps, i, j) + [(False, s.body), (False, a.body)])
        elif t is Msg and isinstance(s.payload, str):
            for j, (_, a) in enumerate(comps):
                if type(a) is Abs:
                    parts = _rest(comps, i, j) + [(False, instantiate(a.body, s.payload))]
                    if s.continuation is not None:
                        parts.append((False, s.continuation))
                    yield "Red-Com", build(parts)
        elif t is Amb:
            n = s.name
            inner = components(s.body)
            # Red-In: n[in m.P1 | P2] | m[Q]  ->  m[n[P1 | P2] | Q]
            for k, (_, c) in enumerate(inner):
                if type(c) is Prefix and c.cap.kind is CapKind.IN:
                    m = c.cap.target
                    for j in _partners(comps, i):
                        a = comps[j][1]
                        if type(a) is Amb and a.name == m:
                            moved = Amb(n, build(_rest(inner, k) + [(False, c.body)]))
                            target = Amb(m, build([(False, moved)] + components(a.body)))
                            yield "Red-In", build(_rest(comps, i, j) + [(False, target)])
            # Red-Out: n[ k[out n.P1 | P2] | Q ]  ->  k[P1 | P2] | n[Q]
            for k, (_, c) in enumerate(inner):
                if type(c) is Amb:
                    cin = components(c.body)
                    for l, (_, d) in enumerate(cin):
                        if (type(d) is Prefix and d.cap.kind is CapKind.OUT
                                and d.cap.target == n):
                            leaving = Amb(c.name, build(_rest(cin, l) + [(False, d.body)]))
                            staying = Amb(n, build(_rest(inner, k)))
                            yield "Red-Out", build(_rest(comps, i) + [(False, leaving), (False, staying)])
            # Red-Amb
            for rule, b in _reducts(s.body):
                yield rule, build(_rest(comps, i) + [(False, Amb(n, b))])


def reduce_once(p: Process) -> frozenset:
    """All one-step reducts of a closed process, as normal forms."""
    _require_closed(p)
    return frozenset(q for _, q in _reducts(normalize(p)))


def reduce_once_with_rules(p: Process) -> List[Tuple[str, Process]]:
    """One-step reducts paired with the name of the rule at the redex."""
    _require_closed(p)
    return list(_reducts(normalize(p)))


def _successors(p):
    return [q for _, q in _reducts(p)]


def reduce_star(p: Process, fuel: Fuel = DEFAULT_FUEL) -> Tuple[frozenset, bool]:
    """Breadth-first ⇒-closure; ``complete`` is False when fuel ran out."""
    _require_closed(p)
    return _closure(normalize(p), _successors, fuel)


def _closure(start, succ, fuel):
    if fuel.max_states <= 0:
        return frozenset(), False
    seen = {start}
    frontier = [start]
    depth = 0
    while frontier:
        if depth >= fuel.max_depth:
            for s in frontier:
                if any(q not in seen for q in succ(s)):
                    return frozenset(seen), False
            return frozenset(seen), True
        nxt = []
        for s in frontier:
            for q in succ(s):
                if q not in seen:
                    if len(seen) >= fuel.max_states:
                        return frozenset(seen), False
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
        depth += 1
    return frozenset(seen), True


# --------------------------------------------------------------------------
# Labelled transitions

def labelled_transitions(p: Process, probes: Optional[Iterable[str]] = None) -> frozenset:
    """``(label, target)`` pairs for capability, output and input transitions.

    Input transitions are instantiated with ``probes`` (default: the free
    names of ``p`` plus one fresh name).
    """
    _require_closed(p)
    p = normalize(p)
    if probes is None:
        fn = free_names(p)
        probes = sorted(fn) + [fresh_name(fn)]
    probes = list(probes)
    return frozenset(_transitions(p, None, probes))


def _transitions(p, want, probes):
    comps = components(p)
    for i, (_, s) in enumerate(comps):
        t = type(s)
        if t is Prefix and isinstance(s.cap.target, str):
            lab = Cap(s.cap)
            if want is None or want == lab:
                yield lab, build(_rest(comps, i) + [(False, s.body)])
        elif t is Msg and isinstance(s.payload, str):
            lab = MsgOut(s.payload)
            if want is None or want == lab:
                parts = _rest(comps, i)
                if s.continuation is not None:
                    parts.append((False, s.continuation))
                yield lab, build(parts)
        elif t is Abs:
            names = probes if want is None else ([want.name] if isinstance(want, MsgIn) else [])
            for n in names:
                yield MsgIn(n), build(_rest(comps, i) + [(False, instantiate(s.body, n))])


def _step(p, label):
    if isinstance(label, Tau):
        return _successors(p)
    probes = [label.name] if isinstance(label, MsgIn) else []
    return [q for _, q in _transitions(p, label, probes)]


def weak_transition(p: Process, label: TransitionLabel,
                    fuel: Fuel = DEFAULT_FUEL) -> Tuple[frozenset, bool]:
    """States reachable by ⇒ μ ⇒ (for ``Tau`` simply ⇒)."""
    _require_closed(p)
    return _weak(normalize(p), label, fuel)


def _weak(p, label, fuel):
    before, complete = _closure(p, _successors, fuel)
    if isinstance(label, Tau):
        return before, complete
    out = set()
    for s in sorted(before):
        for q in _step(s, label):
            if q in out:
                continue
            after, c = _closure(q, _successors, fuel)
            complete = complete and c
            out |= after
            if len(out) > fuel.max_states:
                return frozenset(out), False
    return frozenset(out), complete


def stutter_pair(cap: Capability) -> Optional[Tuple[Capability, Capability]]:
    """(M1, M2) with Rcap = Stat(M1, M2); None for ``open`` (plain ⇒)."""
    n = cap.target
    if cap.kind is CapKind.IN:
        return Capability(CapKind.OUT, n), Capability(CapKind.IN, n)
    if cap.kind is CapKind.OUT:
        return Capability(CapKind.IN, n), Capability(CapKind.OUT, n)
    return None


def stutter_closure(p: Process, cap: Capability,
                    fuel: Fuel = DEFAULT_FUEL) -> Tuple[frozenset, bool]:
    """States related to ``p`` by Rcap: chains of ⇒M1 ⇒M2 steps, reflexively."""
    _require_closed(p)
    if not isinstance(cap.target, str):
        raise ProcessError("stuttering needs a name target")
    return _stutter(normalize(p), cap, fuel)


_STUTTER: dict = {}


def _stutter(p, cap, fuel):
    key = (p, cap, fuel)
    r = _STUTTER.get(key)
    if r is not None:
        return r
    pair = stutter_pair(cap)
    if pair is None:
        r = _closure(p, _successors, fuel)
    else:
        m1, m2 = Cap(pair[0]), Cap(pair[1])
        flags = [True]

        def succ(s):
            mids, c1 = _weak(s, m1, fuel)
            res = set()
            for mid in sorted(mids):
                ends, c2 = _weak(mid, m2, fuel)
                flags[0] = flags[0] and c2
                res |= ends
            flags[0] = flags[0] and c1
            return sorted(res)
        states, complete = _closure(p, succ, fuel)
        r = (states, complete and flags[0])
    if len(_STUTTER) > 100_000:
        _STUTTER.clear()
    _STUTTER[key] = r
    return r


# --------------------------------------------------------------------------
# Barbs, deterministic steps, traces

def top_ambients(p: Process) -> frozenset:
    return frozenset(s.name for _, s in components(p)
                     if type(s) is Amb and isinstance(s.name, str))


def barbs(p: Process, fuel: Fuel = DEFAULT_FUEL) -> Tuple[frozenset, bool]:
    states, complete = reduce_star(p, fuel)
    names = set()
    for s in states:
        names |= top_ambients(s)
    return frozenset(names), complete


def det_step(p: Process) -> Optional[Process]:
    """The unique Q with p ⇝ Q, if any.

    Every reduct other than Q must be blocked (have no reduct) or be ≡ Q.
    """
    _require_closed(p)
    reducts = _successors(normalize(p))
    if not reducts:
        return None
    live = [q for q in reducts if _successors(q)]
    if len(live) == 1:
        return live[0]
    if not live and len(reducts) == 1:
        return reducts[0]
    return None


@dataclass(frozen=True)
class TraceRecord:
    rule: str
    process: str

    def as_text(self) -> str:
        return f"{self.rule}\t{self.process}"


def trace(p: Process, max_steps: int = 64) -> List[TraceRecord]:
    """A reduction path choosing the first reduct (in canonical order) each time."""
    _require_closed(p)
    cur = normalize(p)
    out_ = [TraceRecord("Start", print_process(cur))]
    for _ in range(max_steps):
        rs = _reducts(cur)
        if not rs:
            break
        rule, cur = rs[0]
        out_.append(TraceRecord(rule, print_process(cur)))
    return out_
