"""Structural congruence via canonical forms, the eta rewrite system and
frozen subterms.

A normalized process is a right-nested parallel composition of *single*
components (prefix, ambient, message or abstraction heads), some of them
under a replication, sorted by ``order_key``.  Replicated components form a
set and absorb equal plain copies.  Two terms are congruent exactly when
their normal forms are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Tuple

from .syntax import (
    NIL, Abs, Amb, Bound, Msg, Nil, Par, Prefix, Process, Repl,
    free_names, instantiate, mentions_bound, order_key, shift_bound,
)

__all__ = [
    "CanonicalProcess", "normalize", "canonicalize", "components", "build",
    "struct_congruent", "eta_step", "eta_normal_form", "eta_congruent",
    "frozen_subterms", "is_eta_redex",
]


# --------------------------------------------------------------------------
# Normal forms

def normalize(p: Process) -> Process:
    """The canonical representative of the ≡-class of ``p``."""
    r = p._nf
    if r is not None:
        return r
    plain: List[Process] = []
    reps: set = set()
    _collect(p, False, plain, reps)
    plain = [s for s in plain if s not in reps]
    items = [(order_key(s), 0, s) for s in plain]
    items += [(order_key(s), 1, s) for s in reps]
    items.sort(key=lambda t: (t[0], t[1]))
    r = _assemble([(bool(flag), s) for _, flag, s in items])
    r._nf = r
    p._nf = r
    return r


def _collect(p, rep, plain, reps):
    t = type(p)
    if t is Nil:
        return
    if t is Par:
        _collect(p.left, rep, plain, reps)
        _collect(p.right, rep, plain, reps)
        return
    if t is Repl:
        _collect(p.body, True, plain, reps)
        return
    s = _single(p)
    if rep:
        reps.add(s)
    else:
        plain.append(s)


def _single(p):
    """Normalize the inside of a single-headed term."""
    if p._nf is p:
        return p
    t = type(p)
    if t is Msg:
        if p.continuation is None:
            s = p
        else:
            c = normalize(p.continuation)
            s = p if c is p.continuation else Msg(p.payload, c)
    else:
        b = normalize(p.body)
        if b is p.body:
            s = p
        elif t is Prefix:
            s = Prefix(p.cap, b)
        elif t is Amb:
            s = Amb(p.name, b)
        else:
            s = Abs(b, p.hint)
    s._nf = s
    return s


def _assemble(comps):
    if not comps:
        return NIL
    out = None
    for rep, s in reversed(comps):
        c = Repl(s) if rep else s
        if rep:
            c._nf = None
        out = c if out is None else Par(c, out)
    return out


def components(p: Process) -> List[Tuple[bool, Process]]:
    """``(replicated, single)`` components of the normal form of ``p``."""
    q = normalize(p)
    res = []
    while type(q) is Par:
        res.append(_comp(q.left))
        q = q.right
    if type(q) is not Nil:
        res.append(_comp(q))
    return res


def _comp(c):
    if type(c) is Repl:
        return (True, c.body)
    return (False, c)


def build(comps: Iterable[Tuple[bool, Process]]) -> Process:
    """Normalized parallel composition of ``(replicated, process)`` parts."""
    parts = []
    for rep, s in comps:
        parts.append(Repl(s) if rep else s)
    if not parts:
        return NIL
    out = parts[-1]
    for c in reversed(parts[:-1]):
        out = Par(c, out)
    return normalize(out)


@dataclass(frozen=True)
class CanonicalProcess:
    """Normal form of a process; equality decides ≡."""
    process: Process

    @property
    def components(self) -> Tuple[Tuple[bool, Process], ...]:
        return tuple(components(self.process))

    def __str__(self):
        return str(self.process)


def canonicalize(p: Process) -> CanonicalProcess:
    return CanonicalProcess(normalize(p))


def struct_congruent(p: Process, q: Process) -> bool:
    return normalize(p) == normalize(q)


# --------------------------------------------------------------------------
# Eta

def is_eta_redex(p: Process) -> bool:
    """``p`` is ``(x)((x)P | <x>)`` up to ≡ (normalized input expected)."""
    if type(p) is not Abs:
        return False
    comps = components(p.body)
    if len(comps) != 2 or comps[0][0] or comps[1][0]:
        return False
    inner = msg = None
    for _, s in comps:
        if type(s) is Abs:
            inner = s
        elif type(s) is Msg and s.continuation is None and s.payload == Bound(0):
            msg = s
    if inner is None or msg is None:
        return False
    # the outer binder must not be visible inside the inner abstraction
    return not mentions_bound(inner.body, 1)


def _contract(p: Abs) -> Process:
    inner = next(s for _, s in components(p.body) if type(s) is Abs)
    # drop the unused index 1 of the inner body
    body = _drop_index(inner.body, 1)
    return normalize(Abs(body, p.hint))


def _drop_index(p, k):
    """Remove the (unused) bound index ``k`` by shifting larger ones down."""
    return shift_bound(p, k + 1, -1)


def eta_step(p: Process, head_only: bool = False) -> set:
    """All one-step eta reducts of ``p``, as normal forms."""
    p = normalize(p)
    return {normalize(r) for r in _eta_rewrites(p, head_only)}


def _eta_rewrites(p, head_only):
    t = type(p)
    if t is Nil:
        return
    if t is Par or t is Repl:
        comps = components(p)
        for i, (rep, s) in enumerate(comps):
            for s2 in _eta_rewrites(s, head_only):
                yield build(comps[:i] + [(rep, s2)] + comps[i + 1:])
        return
    if t is Amb:
        for b in _eta_rewrites(p.body, head_only):
            yield Amb(p.name, b)
        return
    if head_only and t in (Prefix, Msg):
        return
    if t is Prefix:
        for b in _eta_rewrites(p.body, head_only):
            yield Prefix(p.cap, b)
        return
    if t is Msg:
        if p.continuation is not None:
            for c in _eta_rewrites(p.continuation, head_only):
                yield Msg(p.payload, c)
        return
    if is_eta_redex(p):
        yield _contract(p)
    if not head_only:
        for b in _eta_rewrites(p.body, head_only):
            yield Abs(b, p.hint)


@lru_cache(maxsize=200_000)
def _eta_nf_full(p: Process) -> Process:
    t = type(p)
    if t is Nil:
        return p
    if t is Par or t is Repl:
        return build((rep, _eta_nf_full(s)) for rep, s in components(p))
    if t is Amb:
        return normalize(Amb(p.name, _eta_nf_full(p.body)))
    if t is Prefix:
        return normalize(Prefix(p.cap, _eta_nf_full(p.body)))
    if t is Msg:
        if p.continuation is None:
            return p
        return normalize(Msg(p.payload, _eta_nf_full(p.continuation)))
    q = normalize(Abs(_eta_nf_full(p.body), p.hint))
    if is_eta_redex(q):
        q = _contract(q)
    return q


@lru_cache(maxsize=200_000)
def _eta_nf_head(p: Process) -> Process:
    t = type(p)
    if t is Par or t is Repl:
        return build((rep, _eta_nf_head(s)) for rep, s in components(p))
    if t is Amb:
        return normalize(Amb(p.name, _eta_nf_head(p.body)))
    if t is Abs:
        while type(p) is Abs and is_eta_redex(p):
            p = _contract(p)
        return p
    return p


def eta_normal_form(p: Process, head_only: bool = False) -> Process:
    """Eta normal form (full, or head-only), returned normalized."""
    p = normalize(p)
    return _eta_nf_head(p) if head_only else _eta_nf_full(p)


def eta_congruent(p: Process, q: Process) -> bool:
    return eta_normal_form(p) == eta_normal_form(q)


# --------------------------------------------------------------------------
# Frozen subterms

def frozen_subterms(p: Process, names: Iterable[str]) -> frozenset:
    """fr_N(p) as a set of normal forms.

    Ambients are transparent: fr_N(n[P]) = fr_N(P).
    """
    return _fr(normalize(p), frozenset(names))


@lru_cache(maxsize=100_000)
def _fr(p: Process, names: frozenset) -> frozenset:
    t = type(p)
    if t is Nil:
        return frozenset()
    if t is Par or t is Repl:
        acc = set()
        for _, s in components(p):
            acc |= _fr(s, names)
        return frozenset(acc)
    if t is Amb:
        return _fr(p.body, names)
    if t is Prefix:
        return frozenset({p.body}) | _fr(p.body, names)
    if t is Msg:
        if p.continuation is None:
            return frozenset()
        return frozenset({p.continuation}) | _fr(p.continuation, names)
    acc = set()
    for n in sorted(names):
        inst = normalize(instantiate(p.body, n))
        acc.add(inst)
        acc |= _fr(inst, names)
    return frozenset(acc)
