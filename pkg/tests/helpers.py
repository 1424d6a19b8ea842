"""Random and exhaustive term generators plus rewrite oracles for the tests.

Everything here is built from the raw constructors, never from the
normalizer, so the congruence checks below compare against an
independent source of ≡-equal terms.
"""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Callable, List, Optional, Sequence

from hypothesis import strategies as st

from ambients.logic import (
    AmbF, At, CapBox, CapDiamond, ForallName, FreeName, Guarantee, InBox,
    InDiamond, MsgF, Not, Or, ParF, ReplCap, Sometime, TOP, VOID, And, Exists,
)
from ambients.syntax import (
    NIL, Abs, Amb, Bound, Capability, CapKind, Mode, Msg, Nil, Par, Prefix,
    Process, Repl, Var, abstract, shift_bound,
)

NAMES = ("a", "b", "n")
KINDS = (CapKind.IN, CapKind.OUT, CapKind.OPEN)


# ---------------------------------------------------------------------------
# random processes

def gen_process(rng: random.Random, depth: int = 3, *, names: Sequence[str] = NAMES,
                finite: bool = True, maifs: bool = True, mode: Mode = Mode.ASYNC,
                abstractions: bool = True, _scope=(), _guarded=False) -> Process:
    """A random closed process.

    ``finite`` forbids replication; ``maifs`` keeps replication out of
    guard bodies.
    """
    def eta():
        pool = list(names) + list(_scope)
        return rng.choice(pool)

    def sub(d, guarded=_guarded, scope=_scope):
        return gen_process(rng, d, names=names, finite=finite, maifs=maifs, mode=mode,
                           abstractions=abstractions, _scope=scope, _guarded=guarded)

    if depth <= 0:
        k = rng.randrange(4)
        if k == 0:
            return NIL
        if k == 1:
            return Msg(eta(), NIL if mode is Mode.SYNC else None)
        if k == 2:
            return Amb(eta(), NIL)
        return Prefix(Capability(rng.choice(KINDS), eta()), NIL)

    ops = ["nil", "par", "par", "prefix", "prefix", "amb", "amb", "msg"]
    if abstractions:
        ops += ["abs", "abs"]
    if not finite and not (maifs and _guarded):
        ops.append("repl")
    op = rng.choice(ops)
    if op == "nil":
        return NIL
    if op == "par":
        return Par(sub(depth - 1), sub(depth - 1))
    if op == "repl":
        return Repl(sub(depth - 1))
    if op == "prefix":
        return Prefix(Capability(rng.choice(KINDS), eta()), sub(depth - 1, guarded=True))
    if op == "amb":
        return Amb(eta(), sub(depth - 1))
    if op == "msg":
        cont = sub(depth - 1, guarded=True) if mode is Mode.SYNC else None
        return Msg(eta(), cont)
    v = Var(f"x{len(_scope)}")
    return abstract(sub(depth - 1, guarded=True, scope=_scope + (v,)), v)


def random_processes(seed: int, count: int, max_depth: int = 3, **kw) -> List[Process]:
    rng = random.Random(seed)
    return [gen_process(rng, rng.randint(1, max_depth), **kw) for _ in range(count)]


def processes(**kw):
    """Hypothesis strategy: a seed expanded by ``gen_process``."""
    depth = kw.pop("depth", 3)
    return st.integers(0, 2 ** 32 - 1).map(lambda s: gen_process(random.Random(s), depth, **kw))


# ---------------------------------------------------------------------------
# tree positions

def _children(p: Process):
    t = type(p)
    if t is Par:
        return [p.left, p.right]
    if t in (Repl, Prefix, Amb, Abs):
        return [p.body]
    if t is Msg and p.continuation is not None:
        return [p.continuation]
    return []


def _rebuild(p: Process, kids):
    t = type(p)
    if t is Par:
        return Par(kids[0], kids[1])
    if t is Repl:
        return Repl(kids[0])
    if t is Prefix:
        return Prefix(p.cap, kids[0])
    if t is Amb:
        return Amb(p.name, kids[0])
    if t is Abs:
        return Abs(kids[0], p.hint)
    if t is Msg:
        return Msg(p.payload, kids[0])
    return p


def node_count(p: Process) -> int:
    return 1 + sum(node_count(c) for c in _children(p))


def replace_at(p: Process, index: int, f: Callable[[Process], Process]) -> Process:
    """Apply ``f`` to the ``index``-th node in preorder."""
    def go(q, i):
        if i == 0:
            return f(q), -1
        i -= 1
        kids = _children(q)
        out = []
        for k in kids:
            if i >= 0:
                k, i = go(k, i)
            out.append(k)
        return (_rebuild(q, out) if kids else q), i
    return go(p, index)[0]


def subterms(p: Process) -> List[Process]:
    out = [p]
    for c in _children(p):
        out.extend(subterms(c))
    return out


# ---------------------------------------------------------------------------
# structural congruence by axiom application

def axiom_rewrites(p: Process) -> List[Process]:
    """Every single application at the root of a ≡ axiom, in either direction."""
    out = [Par(p, NIL), Par(NIL, p)]
    t = type(p)
    if t is Par:
        l, r = p.left, p.right
        out.append(Par(r, l))
        if type(r) is Nil:
            out.append(l)
        if type(l) is Nil:
            out.append(r)
        if type(l) is Par:
            out.append(Par(l.left, Par(l.right, r)))
        if type(r) is Par:
            out.append(Par(Par(l, r.left), r.right))
        if type(l) is Repl and l.body == r:
            out.append(l)
        if type(l) is Repl and type(r) is Repl:
            out.append(Repl(Par(l.body, r.body)))
    if t is Repl:
        b = p.body
        out.append(Par(p, b))
        out.append(Repl(p))
        if type(b) is Nil:
            out.append(NIL)
        if type(b) is Par:
            out.append(Par(Repl(b.left), Repl(b.right)))
        if type(b) is Repl:
            out.append(b)
    if t is Nil:
        out.append(Repl(NIL))
    return out


def random_axiom_step(p: Process, rng: random.Random) -> Process:
    idx = rng.randrange(node_count(p))
    return replace_at(p, idx, lambda q: rng.choice(axiom_rewrites(q)))


def random_congruent(p: Process, rng: random.Random, steps: int = 10) -> Process:
    for _ in range(steps):
        p = random_axiom_step(p, rng)
        # keep the term from growing without bound
        if node_count(p) > 60:
            break
    return p


def axiom_search(p: Process, q: Process, max_terms: int = 20_000, max_nodes: int = 14) -> bool:
    """Breadth-first search for an axiom-rewrite proof of p ≡ q."""
    seen = {p}
    frontier = [p]
    while frontier:
        nxt = []
        for s in frontier:
            if s == q:
                return True
            for i, sub in enumerate(subterms(s)):
                for r in axiom_rewrites(sub):
                    t = replace_at(s, i, lambda _, r=r: r)
                    if t not in seen and node_count(t) <= max_nodes:
                        seen.add(t)
                        nxt.append(t)
                        if len(seen) > max_terms:
                            return q in seen
        frontier = nxt
    return False


# ---------------------------------------------------------------------------
# eta expansion and mutation

def eta_expand(a: Abs) -> Abs:
    """(x)P  ->  (x)((x)P | <x>)."""
    inner = Abs(shift_bound(a.body, 1, 1), a.hint)
    return Abs(Par(inner, Msg(Bound(0))), a.hint)


def random_eta_expansion(p: Process, rng: random.Random) -> Process:
    spots = [i for i, s in enumerate(subterms(p)) if type(s) is Abs]
    if not spots:
        return p
    return replace_at(p, rng.choice(spots), eta_expand)


def bisimilar_variant(p: Process, rng: random.Random, mode: Mode = Mode.ASYNC,
                      steps: int = 4) -> Process:
    """A term bisimilar to ``p`` by construction (≡ steps and eta expansions)."""
    q = p
    for _ in range(steps):
        if mode is Mode.ASYNC and rng.random() < 0.4:
            q = random_eta_expansion(q, rng)
        else:
            q = random_axiom_step(q, rng)
    return q


def mutate(p: Process, rng: random.Random, names: Sequence[str] = NAMES) -> Process:
    """Change one node: a name, a capability kind, or drop/add a component."""
    def f(q):
        t = type(q)
        if t is Prefix and isinstance(q.cap.target, str):
            kind = rng.choice([k for k in KINDS if k is not q.cap.kind])
            return Prefix(Capability(kind, q.cap.target), q.body)
        if t is Amb and isinstance(q.name, str):
            return Amb(rng.choice([n for n in names if n != q.name]), q.body)
        if t is Msg and isinstance(q.payload, str):
            return Msg(rng.choice([n for n in names if n != q.payload]), q.continuation)
        if t is Par:
            return q.left
        if t is Nil:
            return Amb(rng.choice(names), NIL)
        return Par(q, Amb(rng.choice(names), NIL))
    return replace_at(p, rng.randrange(node_count(p)), f)


# ---------------------------------------------------------------------------
# exhaustive enumeration of small terms

@lru_cache(maxsize=None)
def _enum(nodes: int, depth: int, names: tuple, repl: bool) -> tuple:
    if nodes <= 0:
        return ()
    etas = list(names) + [Bound(i) for i in range(depth)]
    out = []
    if nodes == 1:
        out.append(NIL)
        out.extend(Msg(e) for e in etas)
        return tuple(out)
    for body in _enum(nodes - 1, depth, names, repl):
        out.extend(Amb(e, body) for e in etas)
        out.extend(Prefix(Capability(k, e), body) for k in KINDS for e in etas)
        if repl:
            out.append(Repl(body))
    out.extend(Abs(b) for b in _enum(nodes - 1, depth + 1, names, repl))
    for k in range(1, nodes - 1):
        for l in _enum(k, depth, names, repl):
            for r in _enum(nodes - 1 - k, depth, names, repl):
                out.append(Par(l, r))
    return tuple(out)


def small_terms(max_nodes: int, names=("n",), repl: bool = False) -> List[Process]:
    """All closed terms with at most ``max_nodes`` nodes."""
    out = []
    for k in range(1, max_nodes + 1):
        out.extend(_enum(k, 0, tuple(names), repl))
    return out


# ---------------------------------------------------------------------------
# formulas

def gen_formula(rng: random.Random, depth: int = 3, names: Sequence[str] = NAMES,
                _vars=()) -> "Formula":
    def eta():
        return rng.choice(list(names) + list(_vars))

    def sub(d=depth - 1, vs=_vars):
        return gen_formula(rng, d, names, vs)

    if depth <= 0:
        return rng.choice([TOP, VOID, MsgF(eta()), FreeName(eta()), AmbF(eta(), TOP)])
    op = rng.randrange(16)
    if op == 0:
        return Not(sub())
    if op == 1:
        return Or(sub(), sub())
    if op == 2:
        return And(sub(), sub())
    if op == 3:
        return ParF(sub(), sub())
    if op == 4:
        return AmbF(eta(), sub())
    if op == 5:
        return Sometime(sub())
    if op == 6:
        return At(sub(), eta())
    if op == 7:
        return CapDiamond(Capability(rng.choice(KINDS), eta()), sub())
    if op == 8:
        return CapBox(Capability(rng.choice(KINDS), eta()), sub())
    if op == 9:
        return InDiamond(eta(), sub())
    if op == 10:
        return InBox(eta(), sub())
    if op in (11, 12):
        x = f"v{len(_vars)}"
        body = sub(vs=_vars + (Var(x),))
        return ForallName(x, body) if op == 11 else Exists(x, body)
    if op == 13:
        left = rng.choice([VOID, MsgF(eta()), AmbF(rng.choice(list(names)), VOID)])
        return Guarantee(left, sub())
    if op == 14:
        return ReplCap(Capability(rng.choice(KINDS), eta()), sub())
    return rng.choice([TOP, VOID, MsgF(eta()), FreeName(eta())])


def formulas(depth: int = 3, names: Sequence[str] = NAMES):
    return st.integers(0, 2 ** 32 - 1).map(lambda s: gen_formula(random.Random(s), depth, names))


# ---------------------------------------------------------------------------
# contexts

def gen_context(rng: random.Random, names: Sequence[str] = NAMES) -> Callable[[Process], Process]:
    """A random one-hole context built from the process constructors."""
    n = rng.choice(names)
    kind = rng.choice(KINDS)
    other = gen_process(rng, 1, names=names)
    shapes = [
        lambda h: h,
        lambda h: Par(h, other),
        lambda h: Amb(n, h),
        lambda h: Prefix(Capability(kind, n), h),
        lambda h: Amb(n, Par(h, other)),
    ]
    inner, outer = rng.choice(shapes), rng.choice(shapes)
    return lambda h: outer(inner(h))


# ---------------------------------------------------------------------------
# terms with many redexes

def _planted_redex(rng: random.Random, names: Sequence[str], **kw) -> Process:
    n, m = rng.sample(list(names), 2)

    def g():
        return gen_process(rng, rng.randint(0, 2), names=names, **kw)

    k = rng.randrange(4)
    if k == 0:
        return Par(Prefix(Capability(CapKind.OPEN, n), g()), Amb(n, g()))
    if k == 1:
        return Par(Amb(n, Par(Prefix(Capability(CapKind.IN, m), g()), g())), Amb(m, g()))
    if k == 2:
        return Amb(m, Par(Amb(n, Par(Prefix(Capability(CapKind.OUT, m), g()), g())), g()))
    v = Var("x0")
    body = gen_process(rng, rng.randint(0, 2), names=names, _scope=(v,), _guarded=True, **kw)
    return Par(Msg(n), abstract(body, v))


def gen_reducible(rng: random.Random, names: Sequence[str] = NAMES, redexes: int = 2,
                  **kw) -> Process:
    """A random finite process with a few planted redexes, some inside ambients."""
    p = gen_process(rng, 1, names=names, **kw)
    for _ in range(redexes):
        r = _planted_redex(rng, names, **kw)
        if rng.random() < 0.3:
            r = Amb(rng.choice(list(names)), r)
        p = Par(p, r)
    return p


def reduction_edges(seed: int, count: int, **kw):
    """At least ``count`` one-step reduction edges (p, q) from generated terms."""
    from ambients.semantics import reduce_once
    rng = random.Random(seed)
    edges = []
    while len(edges) < count:
        p = gen_reducible(rng, **kw)
        frontier = [p]
        for _ in range(3):
            nxt = []
            for s in frontier:
                for q in sorted(reduce_once(s)):
                    edges.append((s, q))
                    nxt.append(q)
            frontier = nxt[:4]
    return edges[:count]
