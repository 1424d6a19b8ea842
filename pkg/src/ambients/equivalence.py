"""Intensional bisimilarity, its approximants, logical equivalence on the
syntactic fragment, and barbed bisimilarity.

``bisim`` follows the inductive characterization: a pair of processes is
decomposed into components, components are matched one against another,
and single components are compared head by head (ambient, capability with
stuttering, message, abstraction with a fresh name).  Both sides are put in
eta normal form first, which makes the recursion well founded: every
recursive call lowers the summed sequentiality degree or the summed size.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .congruence import (
    build, components, eta_congruent, eta_normal_form, normalize,
    struct_congruent,
)
from .semantics import (
    DEFAULT_FUEL, FALSE, TRUE, Fuel, Verdict, _closure, _stutter, _successors,
    all_of, top_ambients, unknown, verdict,
)
from .syntax import (
    Abs, Amb, Mode, Msg, Prefix, Process, ProcessError, check_mode, classify,
    count_messages, count_prefixes, depth_degree, free_names, fresh_name,
    instantiate, is_closed, order_key, print_process, seq_degree, size,
)


@dataclass(frozen=True)
class BisimConfig:
    fuel: Fuel = DEFAULT_FUEL
    mode: Mode = Mode.ASYNC
    fresh_seed: int = 0


class BisimCache:
    """Verdicts keyed on unordered pairs of normal forms.

    Definite verdicts are kept for any fuel; unknown ones only for the fuel
    that produced them.
    """

    def __init__(self):
        self._data: Dict[tuple, Verdict] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(p, q):
        return (p, q) if order_key(p) <= order_key(q) else (q, p)

    def get(self, p, q, fuel):
        k = self._key(p, q)
        with self._lock:
            v = self._data.get(k)
            if v is None:
                v = self._data.get(k + (fuel,))
        return v

    def put(self, p, q, fuel, v):
        k = self._key(p, q)
        with self._lock:
            if v.is_unknown:
                self._data[k + (fuel,)] = v
            else:
                self._data[k] = v

    def __len__(self):
        return len(self._data)


_SHARED_CACHES: Dict[BisimConfig, BisimCache] = {}


def _check_inputs(p, q, mode):
    for t in (p, q):
        if not is_closed(t):
            raise ProcessError(f"term is not closed: {print_process(t)}")
        check_mode(t, mode)


def _exists(cands, complete, test, reason) -> Verdict:
    """∃x ∈ cands. test(x), unknown when nothing was found in an incomplete set."""
    pending = None
    for x in cands:
        v = test(x)
        if v.is_true:
            return v
        if v.is_unknown and pending is None:
            pending = v
    if pending is not None:
        return pending
    return FALSE if complete else unknown(reason)


def _ordered(states, first):
    rest = sorted(s for s in states if s != first)
    return ([first] if first in states else []) + rest


class BisimChecker:
    def __init__(self, cfg: BisimConfig = BisimConfig(), cache: Optional[BisimCache] = None,
                 explain: Optional[List[str]] = None):
        self.cfg = cfg
        if cache is None:
            # an explanation needs the full derivation, not a cached answer
            cache = BisimCache() if explain is not None else _SHARED_CACHES.setdefault(cfg, BisimCache())
        self.cache = cache
        self.explain = explain
        self.depth = 0

    # -- helpers
    def prep(self, p):
        p = normalize(p)
        if self.cfg.mode is Mode.ASYNC:
            p = eta_normal_form(p)
        return p

    def note(self, text):
        if self.explain is not None:
            self.explain.append("  " * self.depth + text)

    # -- processes
    def proc(self, p: Process, q: Process) -> Verdict:
        p, q = self.prep(p), self.prep(q)
        if p == q:
            return TRUE
        cached = self.cache.get(p, q, self.cfg.fuel)
        if cached is not None:
            self.note(f"cached {cached}: {p}  ~  {q}")
            return cached
        self.depth += 1
        try:
            v = self._proc(p, q)
        finally:
            self.depth -= 1
        self.cache.put(p, q, self.cfg.fuel, v)
        self.note(f"{v}: {p}  ~  {q}")
        return v

    def _proc(self, p, q):
        if seq_degree(p) != seq_degree(q):
            self.note("sequentiality degrees differ")
            return FALSE
        if depth_degree(p) != depth_degree(q):
            self.note("depth degrees differ")
            return FALSE
        pc, qc = components(p), components(q)
        if not pc or not qc:
            self.note("clause 1 (nil)")
            return verdict(not pc and not qc)
        if len(pc) == 1 and len(qc) == 1 and not pc[0][0] and not qc[0][0]:
            return self.single(pc[0][1], qc[0][1])
        self.note("clauses 3/4 (parallel and replicated components)")
        return self.match(pc, qc)

    def match(self, pc, qc) -> Verdict:
        S = [s for r, s in pc if not r]
        R = [s for r, s in pc if r]
        T = [s for r, s in qc if not r]
        U = [s for r, s in qc if r]
        memo = {}

        def rel(a, b):
            k = (a, b)
            if k not in memo:
                memo[k] = self.single(a, b)
            return memo[k].value

        def holds(ok: Callable[[Optional[bool]], bool]) -> bool:
            edge = lambda a, b: ok(rel(a, b))
            for r in R:
                if not any(edge(r, u) for u in U):
                    return False
            for u in U:
                if not any(edge(r, u) for r in R):
                    return False
            need_s = [i for i, s in enumerate(S) if not any(edge(s, u) for u in U)]
            need_t = [j for j, t in enumerate(T) if not any(edge(r, t) for r in R)]
            adj = {i: [j for j, t in enumerate(T) if edge(S[i], t)] for i in range(len(S))}
            if not _covers(need_s, adj, len(T)):
                return False
            radj = {j: [i for i in range(len(S)) if j in adj[i]] for j in range(len(T))}
            return _covers(need_t, radj, len(S))

        # cheap necessary condition: plain counts without replication
        if not R and not U and len(S) != len(T):
            return FALSE
        if holds(lambda v: v is True):
            return TRUE
        if not holds(lambda v: v is not False):
            return FALSE
        return unknown("component matching undecided within fuel")

    # -- single components
    def single(self, s, t) -> Verdict:
        ts, tt = type(s), type(t)
        if ts is not tt:
            return FALSE
        if ts is Amb:
            if s.name != t.name:
                return FALSE
            self.note(f"clause 2 (ambient {s.name})")
            return self.proc(s.body, t.body)
        if ts is Prefix:
            if s.cap != t.cap:
                return FALSE
            self.note(f"clause 5 ({s.cap})")
            return self.clause_cap(s, t)
        if ts is Msg:
            if s.payload != t.payload:
                return FALSE
            if s.continuation is None and t.continuation is None:
                return TRUE
            self.note(f"clause 6 (synchronous <{s.payload}>)")
            return self.clause_sync_msg(s, t)
        self.note("clause 7 (abstraction)")
        return self.clause_abs(s, t)

    def clause_cap(self, s, t):
        fuel = self.cfg.fuel
        pc, qc = normalize(s.body), normalize(t.body)
        A, ca = _stutter(pc, s.cap, fuel)
        B, cb = _stutter(qc, s.cap, fuel)
        return all_of([
            lambda: _exists(_ordered(A, pc), ca, lambda x: self.proc(x, qc), "stuttering closure"),
            lambda: _exists(_ordered(B, qc), cb, lambda y: self.proc(pc, y), "stuttering closure"),
        ])

    def clause_sync_msg(self, s, t):
        fuel = self.cfg.fuel
        pc, qc = normalize(s.continuation), normalize(t.continuation)
        A, ca = _closure(pc, _successors, fuel)
        B, cb = _closure(qc, _successors, fuel)
        return all_of([
            lambda: _exists(_ordered(B, qc), cb, lambda y: self.proc(pc, y), "reduction closure"),
            lambda: _exists(_ordered(A, pc), ca, lambda x: self.proc(x, qc), "reduction closure"),
        ])

    def clause_abs(self, s, t):
        fuel = self.cfg.fuel
        m = fresh_name(free_names(s) | free_names(t), seed=self.cfg.fresh_seed)
        ps = normalize(instantiate(s.body, m))
        qs = normalize(instantiate(t.body, m))
        if self.cfg.mode is Mode.ASYNC:
            start_q = build([(False, t), (False, Msg(m))])
            start_p = build([(False, s), (False, Msg(m))])
        else:
            start_q, start_p = qs, ps
        B, cb = _closure(start_q, _successors, fuel)
        A, ca = _closure(start_p, _successors, fuel)
        return all_of([
            lambda: _exists(_ordered(B, qs), cb, lambda y: self.proc(ps, y), "input closure"),
            lambda: _exists(_ordered(A, ps), ca, lambda x: self.proc(x, qs), "input closure"),
        ])


def _covers(required, adj, n_right) -> bool:
    """Is there a matching saturating every left vertex in ``required``?"""
    match_right = [-1] * n_right

    def augment(i, seen):
        for j in adj.get(i, ()):
            if j in seen:
                continue
            seen.add(j)
            if match_right[j] == -1 or augment(match_right[j], seen):
                match_right[j] = i
                return True
        return False

    return all(augment(i, set()) for i in required)


def bisim(p: Process, q: Process, cfg: BisimConfig = BisimConfig(),
          cache: Optional[BisimCache] = None, explain: Optional[List[str]] = None) -> Verdict:
    """Intensional bisimilarity (exact on finite processes, fueled otherwise)."""
    _check_inputs(p, q, cfg.mode)
    return BisimChecker(cfg, cache, explain).proc(p, q)


# --------------------------------------------------------------------------
# Approximants

class _Approximants:
    def __init__(self, mode: Mode):
        self.mode = mode
        self.memo = {}
        self.fuel = Fuel(max_states=1_000_000, max_depth=10_000)

    def splits(self, p):
        comps = [s for _, s in components(p)]
        distinct = sorted(set(comps))
        counts = [comps.count(s) for s in distinct]
        out = []
        for choice in itertools.product(*[range(c + 1) for c in counts]):
            left, right = [], []
            for s, k, c in zip(distinct, choice, counts):
                left += [(False, s)] * k
                right += [(False, s)] * (c - k)
            out.append((build(left), build(right)))
        return out

    def closure(self, p):
        states, complete = _closure(normalize(p), _successors, self.fuel)
        if not complete:
            raise ProcessError("closure of a finite process did not terminate")
        return sorted(states)

    def rel(self, p, q, i) -> bool:
        if i == 0:
            return True
        key = (p, q, i)
        r = self.memo.get(key)
        if r is None:
            r = self.half(p, q, i) and self.half(q, p, i)
            self.memo[key] = r
        return r

    def half(self, p, q, i) -> bool:
        qsplits = self.splits(q)
        for p1, p2 in self.splits(p):
            if not any(self.rel(p1, q1, i - 1) and self.rel(p2, q2, i - 1)
                       for q1, q2 in qsplits):
                return False
        pc, qc = components(p), components(q)
        if len(pc) != 1:
            return True
        s = pc[0][1]
        t = qc[0][1] if len(qc) == 1 else None
        if type(s) is Prefix:
            if t is None or type(t) is not Prefix or t.cap != s.cap:
                return False
            stut, complete = _stutter(normalize(t.body), s.cap, self.fuel)
            return any(self.rel(s.body, y, i - 1) for y in sorted(stut))
        if type(s) is Msg:
            if t is None or type(t) is not Msg or t.payload != s.payload:
                return False
            if s.continuation is None:
                return t.continuation is None
            return any(self.rel(s.continuation, y, i - 1) for y in self.closure(t.continuation))
        if type(s) is Amb:
            if t is None or type(t) is not Amb or t.name != s.name:
                return False
            return self.rel(s.body, t.body, i - 1)
        if t is None or type(t) is not Abs:
            return False
        fn = free_names(p) | free_names(q)
        for n in sorted(fn) + [fresh_name(fn)]:
            ps = normalize(instantiate(s.body, n))
            if self.mode is Mode.ASYNC:
                start = build([(False, t), (False, Msg(n))])
            else:
                start = instantiate(t.body, n)
            if not any(self.rel(ps, y, i - 1) for y in self.closure(start)):
                return False
        return True


def _finite_closed(p, q, mode):
    _check_inputs(p, q, mode)
    for t in (p, q):
        if not classify(t).is_finite:
            raise ProcessError(f"term is not finite: {print_process(t)}")


def approximant(p: Process, q: Process, i: int, mode: Mode = Mode.ASYNC) -> bool:
    """P ≃_i Q (symmetric reading of the approximant clauses)."""
    _finite_closed(p, q, mode)
    return _Approximants(mode).rel(normalize(p), normalize(q), i)


def stabilization_bound(p: Process, q: Process) -> int:
    return 2 * (size(p) + size(q)) + 4


def approximant_limit(p: Process, q: Process, mode: Mode = Mode.ASYNC) -> bool:
    """The approximant at a level past which the chain has stabilized."""
    _finite_closed(p, q, mode)
    return _Approximants(mode).rel(normalize(p), normalize(q), stabilization_bound(p, q))


# --------------------------------------------------------------------------
# Logical equivalence and barbed bisimilarity

def logical_equiv(p: Process, q: Process, cfg: BisimConfig = BisimConfig()) -> Verdict:
    _check_inputs(p, q, cfg.mode)
    if classify(p).is_maifs and classify(q).is_maifs:
        if cfg.mode is Mode.ASYNC:
            return verdict(eta_congruent(p, q))
        return verdict(struct_congruent(p, q))
    return bisim(p, q, cfg)


def barbed_bisim(p: Process, q: Process, fuel: Fuel = DEFAULT_FUEL) -> Verdict:
    """Largest barbed bisimulation on the joint reachability graph."""
    for t in (p, q):
        if not is_closed(t):
            raise ProcessError(f"term is not closed: {print_process(t)}")
    p, q = normalize(p), normalize(q)
    sp, cp = _closure(p, _successors, fuel)
    sq, cq = _closure(q, _successors, fuel)
    if not (cp and cq):
        return unknown("reachable state space exceeds fuel")
    reach = {}
    for space in (sp, sq):
        for s in space:
            if s not in reach:
                reach[s] = _closure(s, _successors, Fuel(len(space) + 1, 10 ** 9))[0]
    wbarb = {s: frozenset().union(*(top_ambients(x) for x in reach[s])) for s in reach}
    rel = {(a, b) for a in sp for b in sq if wbarb[a] == wbarb[b]}
    changed = True
    while changed:
        changed = False
        for a, b in list(rel):
            ok = all(any((a2, b2) in rel for b2 in reach[b]) for a2 in reach[a]) and \
                all(any((a2, b2) in rel for a2 in reach[a]) for b2 in reach[b])
            if not ok:
                rel.discard((a, b))
                changed = True
    return verdict((p, q) in rel)


@dataclass(frozen=True)
class MeasureReport:
    sd: Tuple[int, int]
    dd: Tuple[int, int]
    op: Optional[Tuple[int, int]]
    opmess: Optional[Tuple[int, int]]

    @property
    def equal(self) -> Dict[str, bool]:
        out = {"sd": self.sd[0] == self.sd[1], "dd": self.dd[0] == self.dd[1]}
        if self.op is not None:
            out["OP"] = self.op[0] == self.op[1]
            out["OPmess"] = self.opmess[0] == self.opmess[1]
        return out

    @property
    def all_equal(self) -> bool:
        return all(self.equal.values())


def measure_report(p: Process, q: Process) -> MeasureReport:
    """Degrees and prefix/message counts of two closed processes.

    OP and OPmess are reported only when both terms are finite; they are
    taken on eta normal forms.
    """
    for t in (p, q):
        if not is_closed(t):
            raise ProcessError(f"term is not closed: {print_process(t)}")
    ep, eq = eta_normal_form(p), eta_normal_form(q)
    finite = classify(p).is_finite and classify(q).is_finite
    return MeasureReport(
        sd=(seq_degree(p), seq_degree(q)),
        dd=(depth_degree(p), depth_degree(q)),
        op=(count_prefixes(ep), count_prefixes(eq)) if finite else None,
        opmess=(count_messages(ep), count_messages(eq)) if finite else None,
    )
