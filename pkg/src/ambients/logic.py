"""Ambient Logic formulas, satisfaction and distinguishing formulas.

Besides the core connectives, the capability, input and replication
modalities are primitive connectives here; their satisfaction clauses are
the characterizations those modalities are known to have.  Logical
variables are ``Var`` values; names are plain strings.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Tuple, Union

from .congruence import build, components, eta_normal_form, normalize
from .equivalence import _Approximants, _finite_closed, stabilization_bound
from .semantics import (
    DEFAULT_FUEL, FALSE, TRUE, Fuel, Verdict, _closure, _stutter, _successors,
    all_of, any_of, unknown, verdict,
)
from .syntax import (
    NIL, Abs, Amb, Capability, CapKind, Mode, Msg, ParseError, Prefix, Process,
    ProcessError, Var, _sd, depth_degree, free_names, fresh_name, instantiate,
    is_closed, print_process,
)

Eta = Union[str, Var]


class Formula:
    """Base class of formulas."""

    def __str__(self):
        return print_formula(self)

    def __repr__(self):
        return f"<{type(self).__name__} {print_formula(self)}>"


@dataclass(frozen=True, repr=False)
class Truth(Formula):
    pass


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class ForallName(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, repr=False)
class Sometime(Formula):
    arg: Formula


@dataclass(frozen=True, repr=False)
class Void(Formula):
    pass


@dataclass(frozen=True, repr=False)
class AmbF(Formula):
    name: Eta
    arg: Formula


@dataclass(frozen=True, repr=False)
class ParF(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class At(Formula):
    arg: Formula
    name: Eta


@dataclass(frozen=True, repr=False)
class Guarantee(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, repr=False)
class CapDiamond(Formula):
    cap: Capability
    arg: Formula


@dataclass(frozen=True, repr=False)
class CapBox(Formula):
    cap: Capability
    arg: Formula


@dataclass(frozen=True, repr=False)
class MsgF(Formula):
    """``<n>``; in synchronous mode ``<n>.A`` also constrains the continuation."""
    name: Eta
    then: Optional[Formula] = None


@dataclass(frozen=True, repr=False)
class InDiamond(Formula):
    name: Eta
    arg: Formula


@dataclass(frozen=True, repr=False)
class InBox(Formula):
    name: Eta
    arg: Formula


@dataclass(frozen=True, repr=False)
class ReplCap(Formula):
    cap: Capability
    arg: Formula


@dataclass(frozen=True, repr=False)
class ReplMsg(Formula):
    name: Eta


@dataclass(frozen=True, repr=False)
class ReplInput(Formula):
    arg: Formula


@dataclass(frozen=True, repr=False)
class ReplAmb(Formula):
    name: Eta
    arg: Formula


@dataclass(frozen=True, repr=False)
class FreeName(Formula):
    name: Eta


TOP = Truth()
VOID = Void()


def And(a: Formula, b: Formula) -> Formula:
    return Not(Or(Not(a), Not(b)))


def Exists(x: str, body: Formula) -> Formula:
    return Not(ForallName(x, Not(body)))


def conj(fs: Iterable[Formula]) -> Formula:
    """Conjunction of distinct formulas in a deterministic order (⊤ when empty)."""
    fs = sorted(set(fs), key=print_formula)
    if not fs:
        return TOP
    return reduce(And, fs)


# --------------------------------------------------------------------------
# Structure

def _fields(f):
    return {k: getattr(f, k) for k in f.__dataclass_fields__}


def subst_formula(f: Formula, x: str, n: str) -> Formula:
    """Replace the free logical variable ``x`` by the name ``n``."""
    v = Var(x)

    def eta(e):
        return n if e == v else e

    def go(g):
        if isinstance(g, ForallName):
            return g if g.var == x else ForallName(g.var, go(g.body))
        kw = {}
        for k, val in _fields(g).items():
            if isinstance(val, Formula):
                val = go(val)
            elif isinstance(val, Capability):
                val = Capability(val.kind, eta(val.target))
            elif isinstance(val, (str, Var)):
                val = eta(val)
            kw[k] = val
        return type(g)(**kw)
    return go(f)


def _etas(f, bound=frozenset()):
    if isinstance(f, ForallName):
        yield from _etas(f.body, bound | {f.var})
        return
    for val in _fields(f).values():
        if isinstance(val, Formula):
            yield from _etas(val, bound)
        elif isinstance(val, Capability):
            yield val.target, bound
        elif isinstance(val, (str, Var)):
            yield val, bound


def formula_names(f: Formula) -> frozenset:
    return frozenset(e for e, _ in _etas(f) if isinstance(e, str))


def formula_free_vars(f: Formula) -> frozenset:
    return frozenset(e.id for e, b in _etas(f) if isinstance(e, Var) and e.id not in b)


def formula_size(f: Formula) -> int:
    return 1 + sum(formula_size(v) for v in _fields(f).values() if isinstance(v, Formula))


def _count_par(f: Formula) -> int:
    own = 1 if isinstance(f, ParF) else 0
    return own + sum(_count_par(v) for v in _fields(f).values() if isinstance(v, Formula))


# --------------------------------------------------------------------------
# Printing

_GUAR, _OR, _AND, _PAR, _AT, _UNARY, _ATOM = 1, 2, 3, 4, 5, 6, 7


def _eta_str(e):
    return e.id if isinstance(e, Var) else e


def _as_and(f):
    if (isinstance(f, Not) and isinstance(f.arg, Or)
            and isinstance(f.arg.left, Not) and isinstance(f.arg.right, Not)):
        return f.arg.left.arg, f.arg.right.arg
    return None


def _as_exists(f):
    if isinstance(f, Not) and isinstance(f.arg, ForallName) and isinstance(f.arg.body, Not):
        return f.arg.var, f.arg.body.arg
    return None


def print_formula(f: Formula) -> str:
    return _pf(f)[0]


def _wrap(f, need):
    s, lvl = _pf(f)
    return s if lvl >= need else f"({s})"


def _pf(f) -> Tuple[str, int]:
    if isinstance(f, Truth):
        return "T", _ATOM
    if isinstance(f, Void):
        return "0", _ATOM
    pair = _as_and(f)
    if pair is not None:
        return f"{_wrap(pair[0], _AND)} /\\ {_wrap(pair[1], _AND + 1)}", _AND
    ex = _as_exists(f)
    if ex is not None:
        return f"exists {ex[0]}. {_pf(ex[1])[0]}", 0
    if isinstance(f, Not):
        return "~" + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, Or):
        return f"{_wrap(f.left, _OR)} \\/ {_wrap(f.right, _OR + 1)}", _OR
    if isinstance(f, Guarantee):
        return f"{_wrap(f.left, _GUAR + 1)} |> {_wrap(f.right, _GUAR)}", _GUAR
    if isinstance(f, ParF):
        return f"{_wrap(f.left, _PAR)} | {_wrap(f.right, _PAR + 1)}", _PAR
    if isinstance(f, ForallName):
        return f"forall {f.var}. {_pf(f.body)[0]}", 0
    if isinstance(f, Sometime):
        return "<>" + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, AmbF):
        return f"{_eta_str(f.name)}[{_pf(f.arg)[0]}]", _ATOM
    if isinstance(f, At):
        return f"{_wrap(f.arg, _AT)} @ {_eta_str(f.name)}", _AT
    if isinstance(f, CapDiamond):
        return f"<{f.cap.kind.value} {_eta_str(f.cap.target)}>." + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, CapBox):
        return f"[{f.cap.kind.value} {_eta_str(f.cap.target)}]." + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, MsgF):
        if f.then is None:
            return f"<{_eta_str(f.name)}>", _ATOM
        return f"<{_eta_str(f.name)}>." + _wrap(f.then, _UNARY), _UNARY
    if isinstance(f, InDiamond):
        return f"<?{_eta_str(f.name)}>." + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, InBox):
        return f"[?{_eta_str(f.name)}]." + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, ReplCap):
        return f"!<{f.cap.kind.value} {_eta_str(f.cap.target)}>." + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, ReplMsg):
        return f"!<{_eta_str(f.name)}>", _ATOM
    if isinstance(f, ReplInput):
        return "!<?>." + _wrap(f.arg, _UNARY), _UNARY
    if isinstance(f, ReplAmb):
        return f"!{_eta_str(f.name)}[{_pf(f.arg)[0]}]", _ATOM
    if isinstance(f, FreeName):
        return f"@free {_eta_str(f.name)}", _ATOM
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# Parsing

class FormulaParseError(ParseError):
    pass


_FTOKEN = re.compile(
    r"\s*(?:(?P<sym>\\/|/\\|\|>|<>|@free\b|[~.\[\]|@<>?!()])|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<num>0))")
_FKEYWORDS = {"T", "forall", "exists", "in", "out", "open"}


class _FormulaParser:
    def __init__(self, text):
        self.text = text
        self.toks = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _FTOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise FormulaParseError(f"unexpected character {text[pos]!r}", pos)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0
        self.scope = []

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, val, k=0):
        t = self.peek(k)
        return t[0] in ("sym", "id", "num") and t[1] == val

    def error(self, msg):
        raise FormulaParseError(msg, self.peek()[2])

    def expect(self, val):
        if not self.at(val):
            self.error(f"expected {val!r}, found {self.peek()[1] or 'end of input'!r}")
        self.i += 1

    def ident(self):
        t = self.peek()
        if t[0] != "id" or t[1] in _FKEYWORDS:
            self.error(f"expected identifier, found {t[1] or 'end of input'!r}")
        self.i += 1
        return t[1]

    def eta(self):
        x = self.ident()
        return Var(x) if x in self.scope else sys.intern(x)

    def cap(self):
        t = self.peek()
        kind = CapKind(t[1])
        self.i += 1
        return Capability(kind, self.eta())

    def is_cap_kw(self, k=0):
        t = self.peek(k)
        return t[0] == "id" and t[1] in ("in", "out", "open")

    def parse(self):
        f = self.guar()
        if self.peek()[0] != "eof":
            self.error(f"unexpected {self.peek()[1]!r}")
        return f

    def guar(self):
        left = self.or_()
        if self.at("|>"):
            self.i += 1
            return Guarantee(left, self.guar())
        return left

    def or_(self):
        f = self.and_()
        while self.at("\\/"):
            self.i += 1
            f = Or(f, self.and_())
        return f

    def and_(self):
        f = self.par()
        while self.at("/\\"):
            self.i += 1
            f = And(f, self.par())
        return f

    def par(self):
        f = self.at_()
        while self.at("|"):
            self.i += 1
            f = ParF(f, self.at_())
        return f

    def at_(self):
        f = self.unary()
        while self.at("@"):
            self.i += 1
            f = At(f, self.eta())
        return f

    def binder(self, kind):
        self.i += 1
        x = self.ident()
        self.expect(".")
        self.scope.append(x)
        body = self.guar()
        self.scope.pop()
        return ForallName(x, body) if kind == "forall" else Exists(x, body)

    def unary(self):
        t = self.peek()
        kind, val, _ = t
        if kind == "id" and val in ("forall", "exists"):
            return self.binder(val)
        if self.at("~"):
            self.i += 1
            return Not(self.unary())
        if self.at("<>"):
            self.i += 1
            return Sometime(self.unary())
        if self.at("@free"):
            self.i += 1
            return FreeName(self.eta())
        if self.at("!"):
            return self.replicated()
        if self.at("<"):
            self.i += 1
            if self.is_cap_kw():
                c = self.cap()
                self.expect(">")
                self.expect(".")
                return CapDiamond(c, self.unary())
            if self.at("?"):
                self.i += 1
                n = self.eta()
                self.expect(">")
                self.expect(".")
                return InDiamond(n, self.unary())
            n = self.eta()
            self.expect(">")
            if self.at("."):
                self.i += 1
                return MsgF(n, self.unary())
            return MsgF(n)
        if self.at("["):
            self.i += 1
            if self.at("?"):
                self.i += 1
                n = self.eta()
                self.expect("]")
                self.expect(".")
                return InBox(n, self.unary())
            if not self.is_cap_kw():
                self.error("expected a capability or '?' after '['")
            c = self.cap()
            self.expect("]")
            self.expect(".")
            return CapBox(c, self.unary())
        if self.at("("):
            self.i += 1
            f = self.guar()
            self.expect(")")
            return f
        if self.at("T"):
            self.i += 1
            return TOP
        if kind == "num":
            self.i += 1
            return VOID
        if kind == "id":
            n = self.eta()
            self.expect("[")
            f = self.guar()
            self.expect("]")
            return AmbF(n, f)
        self.error(f"unexpected {val or 'end of input'!r}")

    def replicated(self):
        self.i += 1
        if self.at("<"):
            self.i += 1
            if self.is_cap_kw():
                c = self.cap()
                self.expect(">")
                self.expect(".")
                return ReplCap(c, self.unary())
            if self.at("?"):
                self.i += 1
                self.expect(">")
                self.expect(".")
                return ReplInput(self.unary())
            n = self.eta()
            self.expect(">")
            return ReplMsg(n)
        n = self.eta()
        self.expect("[")
        f = self.guar()
        self.expect("]")
        return ReplAmb(n, f)


def parse_formula(text: str) -> Formula:
    return _FormulaParser(text).parse()


# --------------------------------------------------------------------------
# Satisfaction

class SelectivityError(ValueError):
    """A replicated modality was applied to a formula that is not selective."""


@dataclass(frozen=True)
class GuaranteePolicy:
    witnesses: Tuple[Process, ...] = ()
    enumeration_bound: int = 64

    def __post_init__(self):
        object.__setattr__(self, "witnesses", tuple(self.witnesses))
        for w in self.witnesses:
            if not is_closed(w):
                raise ProcessError(f"guarantee witness is not closed: {print_process(w)}")


DEFAULT_POLICY = GuaranteePolicy(witnesses=())


class _Checker:
    def __init__(self, fuel: Fuel, policy: GuaranteePolicy, mode: Mode):
        self.fuel = fuel
        self.policy = policy
        self.mode = mode
        self.memo = {}

    def sat(self, p: Process, f: Formula) -> Verdict:
        p = normalize(p)
        key = (p, f)
        r = self.memo.get(key)
        if r is None:
            r = self._sat(p, f)
            self.memo[key] = r
        return r

    def single(self, p, kind):
        comps = components(p)
        if len(comps) == 1 and not comps[0][0] and type(comps[0][1]) is kind:
            return comps[0][1]
        return None

    def _sat(self, p, f) -> Verdict:
        fuel = self.fuel
        if isinstance(f, Truth):
            return TRUE
        if isinstance(f, Not):
            return ~self.sat(p, f.arg)
        if isinstance(f, Or):
            return any_of([lambda: self.sat(p, f.left), lambda: self.sat(p, f.right)])
        if isinstance(f, ForallName):
            avoid = free_names(p) | formula_names(f)
            names = sorted(avoid) + [fresh_name(avoid)]
            return all_of(lambda n=n: self.sat(p, subst_formula(f.body, f.var, n)) for n in names)
        if isinstance(f, Sometime):
            states, complete = _closure(p, _successors, fuel)
            return self.exists(sorted(states), complete, lambda s: self.sat(s, f.arg))
        if isinstance(f, Void):
            return verdict(not components(p))
        if isinstance(f, AmbF):
            s = self.single(p, Amb)
            if s is None or s.name != f.name:
                return FALSE
            return self.sat(s.body, f.arg)
        if isinstance(f, ParF):
            bound = 1 + _count_par(f)
            return any_of(lambda a=a, b=b: all_of([lambda: self.sat(a, f.left),
                                                   lambda: self.sat(b, f.right)])
                          for a, b in splits(p, bound))
        if isinstance(f, At):
            return self.sat(Amb(f.name, p), f.arg)
        if isinstance(f, Guarantee):
            return self.guarantee(p, f)
        if isinstance(f, (CapDiamond, CapBox)):
            s = self.single(p, Prefix)
            if s is None or s.cap != f.cap:
                return FALSE
            states, complete = _stutter(normalize(s.body), f.cap, fuel)
            return self.quantify(isinstance(f, CapDiamond), sorted(states), complete,
                                 lambda x: self.sat(x, f.arg))
        if isinstance(f, MsgF):
            s = self.single(p, Msg)
            if s is None or s.payload != f.name:
                return FALSE
            if s.continuation is None:
                return verdict(f.then is None)
            if f.then is None:
                return TRUE
            states, complete = _closure(normalize(s.continuation), _successors, fuel)
            return self.exists(sorted(states), complete, lambda x: self.sat(x, f.then))
        if isinstance(f, (InDiamond, InBox)):
            s = self.single(p, Abs)
            if s is None:
                return FALSE
            if self.mode is Mode.ASYNC:
                start = build([(False, s), (False, Msg(f.name))])
            else:
                start = normalize(instantiate(s.body, f.name))
            states, complete = _closure(start, _successors, fuel)
            return self.quantify(isinstance(f, InDiamond), sorted(states), complete,
                                 lambda x: self.sat(x, f.arg))
        if isinstance(f, ReplMsg):
            comps = components(p)
            return verdict(comps == [(True, Msg(f.name))])
        if isinstance(f, ReplCap):
            return self.replicated(p, f.arg, lambda s: type(s) is Prefix and s.cap == f.cap,
                                   lambda s: _sd(s), "sequentially")
        if isinstance(f, ReplInput):
            return self.replicated(p, f.arg, lambda s: type(s) is Abs,
                                   lambda s: _sd(s), "sequentially")
        if isinstance(f, ReplAmb):
            return self.repl_amb(p, f)
        if isinstance(f, FreeName):
            return verdict(f.name in free_names(p))
        raise TypeError(f"not a formula: {f!r}")

    @staticmethod
    def exists(cands, complete, test):
        v = any_of(lambda x=x: test(x) for x in cands)
        if v.is_false and not complete:
            return unknown("reachable states exceed fuel")
        return v

    @staticmethod
    def quantify(existential, cands, complete, test):
        if existential:
            return _Checker.exists(cands, complete, test)
        v = all_of(lambda x=x: test(x) for x in cands)
        if v.is_true and not complete:
            return unknown("reachable states exceed fuel")
        return v

    def replicated(self, p, arg, shape_ok, degree, what):
        comps = components(p)
        if not any(rep for rep, _ in comps):
            return FALSE
        models = []
        result = TRUE
        for _, s in comps:
            v = self.sat(s, arg)
            if v.is_true:
                if not shape_ok(s):
                    raise SelectivityError(
                        f"model {print_process(s)} of {print_formula(arg)} has the wrong head")
                models.append(s)
            result = all_of([result, v])
        self.check_selective(models, arg, degree, what)
        return result

    def repl_amb(self, p, f):
        comps = components(p)
        if not any(rep for rep, _ in comps):
            return FALSE
        models = []
        result = TRUE
        for _, s in comps:
            if type(s) is not Amb or s.name != f.name:
                return FALSE
            v = self.sat(s.body, f.arg)
            if v.is_true:
                models.append(s.body)
            result = all_of([result, v])
        self.check_selective(models, f.arg, depth_degree, "depth")
        return result

    @staticmethod
    def check_selective(models, arg, degree, what):
        if not models:
            return
        d0 = degree(models[0])
        for m in models[1:]:
            if degree(m) != d0:
                raise SelectivityError(
                    f"{print_formula(arg)} is not {what} selective: "
                    f"{print_process(models[0])} and {print_process(m)} differ")

    def guarantee(self, p, f):
        for r in self.policy.witnesses:
            if self.sat(r, f.left).is_true and self.sat(build([(False, p), (False, r)]), f.right).is_false:
                return FALSE
        models = _models(f.left, self.policy.enumeration_bound, self.mode)
        if models is None:
            return unknown("guarantee over an unbounded model set")
        return all_of(lambda r=r: self.sat(build([(False, p), (False, r)]), f.right) for r in models)


def _models(f, bound, mode):
    """All models of ``f`` up to ≡, when ``f`` has a small finite model set."""
    if isinstance(f, Void):
        return [NIL]
    if isinstance(f, MsgF) and f.then is None and isinstance(f.name, str) and mode is Mode.ASYNC:
        return [Msg(f.name)]
    if isinstance(f, AmbF) and isinstance(f.name, str):
        inner = _models(f.arg, bound, mode)
        return None if inner is None else [normalize(Amb(f.name, r)) for r in inner]
    if isinstance(f, ParF):
        a = _models(f.left, bound, mode)
        b = _models(f.right, bound, mode)
        if a is None or b is None or len(a) * len(b) > bound:
            return None
        return sorted({build([(False, x), (False, y)]) for x in a for y in b})
    return None


def splits(p: Process, copy_bound: int = 2):
    """Decompositions p ≡ A | B, with at most ``copy_bound`` plain copies
    taken from each replicated component on the side that does not keep it."""
    import itertools
    comps = components(p)
    plain = [s for r, s in comps if not r]
    reps = [s for r, s in comps if r]
    distinct = sorted(set(plain))
    counts = [plain.count(s) for s in distinct]
    rep_opts = []
    for s in reps:
        opts = [([(True, s)], [(True, s)])]
        for k in range(copy_bound + 1):
            opts.append(([(True, s)], [(False, s)] * k))
            opts.append(([(False, s)] * k, [(True, s)]))
        rep_opts.append(opts)
    seen = set()
    out_ = []
    for choice in itertools.product(*[range(c + 1) for c in counts]):
        left, right = [], []
        for s, k, c in zip(distinct, choice, counts):
            left += [(False, s)] * k
            right += [(False, s)] * (c - k)
        for rchoice in itertools.product(*rep_opts):
            l2, r2 = list(left), list(right)
            for a, b in rchoice:
                l2 += a
                r2 += b
            pair = (build(l2), build(r2))
            if pair not in seen:
                seen.add(pair)
                out_.append(pair)
    return out_


def satisfies(p: Process, f: Formula, fuel: Fuel = DEFAULT_FUEL,
              policy: GuaranteePolicy = DEFAULT_POLICY, mode: Mode = Mode.ASYNC) -> Verdict:
    if not is_closed(p):
        raise ProcessError(f"term is not closed: {print_process(p)}")
    if formula_free_vars(f):
        raise ValueError(f"formula has free variables: {sorted(formula_free_vars(f))}")
    return _Checker(fuel, policy, mode).sat(p, f)


# --------------------------------------------------------------------------
# Distinguishing formulas

class _Distinguisher:
    def __init__(self, mode):
        self.mode = mode
        self.ap = _Approximants(mode)

    def dist(self, p, q, i) -> Formula:
        # the chain is decreasing, so the first failing level gives the shallowest witness
        i = next(j for j in range(1, i + 1) if not self.ap.rel(p, q, j))
        pc, qc = components(p), components(q)
        if not pc and qc:
            return VOID
        if pc and not qc:
            return Not(VOID)
        if not self.ap.half(p, q, i):
            return self.forward(p, q, i)
        return Not(self.forward(q, p, i))

    def forward(self, p, q, i) -> Formula:
        """A formula for p and not q, given that the p-to-q half of ≃_i fails."""
        ap = self.ap
        pc, qc = components(p), components(q)
        if len(pc) == 1:
            f = self.head(pc[0][1], qc[0][1] if len(qc) == 1 else None, i)
            if f is not None:
                return f
        qsplits = ap.splits(q)
        best = None
        for p1, p2 in ap.splits(p):
            if any(ap.rel(p1, q1, i - 1) and ap.rel(p2, q2, i - 1) for q1, q2 in qsplits):
                continue
            b1 = conj(self.dist(p1, q1, i - 1) for q1, _ in qsplits if not ap.rel(p1, q1, i - 1))
            b2 = conj(self.dist(p2, q2, i - 1) for _, q2 in qsplits if not ap.rel(p2, q2, i - 1))
            f = ParF(b1, b2)
            if best is None or formula_size(f) < formula_size(best):
                best = f
        if best is None:
            raise AssertionError("no failing clause found")
        return best

    def head(self, s, t, i) -> Optional[Formula]:
        ap = self.ap
        if type(s) is Prefix:
            if t is None or type(t) is not Prefix or t.cap != s.cap:
                return CapDiamond(s.cap, TOP)
            stut, _ = _stutter(normalize(t.body), s.cap, ap.fuel)
            if any(ap.rel(s.body, y, i - 1) for y in stut):
                return None
            return CapDiamond(s.cap, conj(self.dist(s.body, y, i - 1) for y in sorted(stut)))
        if type(s) is Msg:
            if t is None or type(t) is not Msg or t.payload != s.payload:
                return MsgF(s.payload)
            if s.continuation is None:
                return None
            ys = ap.closure(t.continuation)
            if any(ap.rel(s.continuation, y, i - 1) for y in ys):
                return None
            return MsgF(s.payload, conj(self.dist(normalize(s.continuation), y, i - 1) for y in ys))
        if type(s) is Amb:
            if t is None or type(t) is not Amb or t.name != s.name:
                return AmbF(s.name, TOP)
            if ap.rel(s.body, t.body, i - 1):
                return None
            return AmbF(s.name, self.dist(s.body, t.body, i - 1))
        fn = free_names(s) | (free_names(t) if t is not None else frozenset())
        names = sorted(fn) + [fresh_name(fn)]
        if t is None or type(t) is not Abs:
            return InDiamond(names[0], TOP)
        for n in names:
            ps = normalize(instantiate(s.body, n))
            if self.mode is Mode.ASYNC:
                start = build([(False, t), (False, Msg(n))])
            else:
                start = instantiate(t.body, n)
            ys = ap.closure(start)
            if not any(ap.rel(ps, y, i - 1) for y in ys):
                return InDiamond(n, conj(self.dist(ps, y, i - 1) for y in ys))
        return None


def distinguish(p: Process, q: Process, mode: Mode = Mode.ASYNC) -> Optional[Formula]:
    """A formula satisfied by ``p`` and not by ``q``; None when they are bisimilar."""
    _finite_closed(p, q, mode)
    p, q = normalize(p), normalize(q)
    d = _Distinguisher(mode)
    n = stabilization_bound(p, q)
    if d.ap.rel(p, q, n):
        return None
    return d.dist(p, q, n)


# --------------------------------------------------------------------------
# Degree formulas

def _degree_formula(p, degree, with_guards, mode, counter):
    if degree(p) == 0:
        return TOP
    comps = components(p)
    if len(comps) > 1 or comps[0][0]:
        best = max(comps, key=lambda c: degree(c[1]))[1]
        return ParF(_degree_formula(best, degree, with_guards, mode, counter), TOP)
    s = comps[0][1]
    rec = lambda q: _degree_formula(normalize(q), degree, with_guards, mode, counter)
    if type(s) is Amb:
        return AmbF(s.name, rec(s.body))
    if type(s) is Prefix:
        return CapDiamond(s.cap, rec(s.body))
    if type(s) is Msg:
        return MsgF(s.payload) if s.continuation is None else MsgF(s.payload, rec(s.continuation))
    x = f"x{counter[0]}"
    counter[0] += 1
    return Exists(x, InDiamond(Var(x), rec(instantiate(s.body, Var(x)))))


def _prep_degree_input(p, mode):
    if not is_closed(p):
        raise ProcessError(f"term is not closed: {print_process(p)}")
    p = normalize(p)
    return eta_normal_form(p) if mode is Mode.ASYNC else p


def sd_formula(p: Process, mode: Mode = Mode.ASYNC) -> Formula:
    """A formula satisfied by ``p`` whose models all have sequentiality degree ≥ sd(p)."""
    p = _prep_degree_input(p, mode)
    return _degree_formula(p, _sd, True, mode, [0])


def dd_formula(p: Process, mode: Mode = Mode.ASYNC) -> Formula:
    """A formula satisfied by ``p`` whose models all have depth degree ≥ dd(p)."""
    p = _prep_degree_input(p, mode)
    return _degree_formula(p, depth_degree, False, mode, [0])
