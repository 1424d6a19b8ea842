"""Process terms of the ambient calculus, with parsing, printing,
substitution and the syntactic measures.

Bound variables are stored as de Bruijn indices (``Bound``), so two terms
that differ only in the spelling of binders are the same Python value.
Names are plain ``str``; free variables are ``Var``.  Abstractions keep the
source spelling of their binder as a printing hint that takes no part in
equality.
"""

from __future__ import annotations

import enum
import re
import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union


class Mode(enum.Enum):
    ASYNC = "async"
    SYNC = "sync"


class CapKind(enum.Enum):
    IN = "in"
    OUT = "out"
    OPEN = "open"


@dataclass(frozen=True, slots=True)
class Var:
    """A free variable."""
    id: str

    def __str__(self):
        return self.id


@dataclass(frozen=True, slots=True)
class Bound:
    """A variable bound by the abstraction ``index`` levels up."""
    index: int


# A name is a plain string.
Name = str
NameOrVar = Union[str, Var, Bound]


@dataclass(frozen=True, slots=True)
class Capability:
    kind: CapKind
    target: NameOrVar

    def __str__(self):
        return f"{self.kind.value} {_eta_text(self.target)}"


def _eta_text(eta):
    if isinstance(eta, str):
        return eta
    if isinstance(eta, Var):
        return eta.id
    return f"#{eta.index}"


def _eta_key(eta):
    if isinstance(eta, str):
        return (0, eta)
    if isinstance(eta, Bound):
        return (1, eta.index)
    return (2, eta.id)


class ProcessError(ValueError):
    """Raised for ill-formed inputs to process operations (open terms, mode clashes)."""


# --------------------------------------------------------------------------
# Terms

class Process:
    """Base class of process terms.

    Nodes are immutable.  Each node caches its hash, its deterministic sort
    key and (once computed) its structural normal form.
    """
    __slots__ = ("_hash", "_key", "_nf")

    def _fields(self):
        raise NotImplementedError

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __lt__(self, other):
        return order_key(self) < order_key(other)

    def __repr__(self):
        return f"<{type(self).__name__} {print_process(self)}>"

    def __str__(self):
        return print_process(self)

    def __or__(self, other):
        return Par(self, other)


class Nil(Process):
    __slots__ = ()

    def __init__(self):
        self._hash = hash(("Nil",))
        self._key = None
        self._nf = None

    def _fields(self):
        return ()


class Par(Process):
    __slots__ = ("left", "right")

    def __init__(self, left: Process, right: Process):
        self.left = left
        self.right = right
        self._hash = hash(("Par", left._hash, right._hash))
        self._key = None
        self._nf = None

    def _fields(self):
        return (self.left, self.right)


class Repl(Process):
    __slots__ = ("body",)

    def __init__(self, body: Process):
        self.body = body
        self._hash = hash(("Repl", body._hash))
        self._key = None
        self._nf = None

    def _fields(self):
        return (self.body,)


class Prefix(Process):
    __slots__ = ("cap", "body")

    def __init__(self, cap: Capability, body: Process):
        self.cap = cap
        self.body = body
        self._hash = hash(("Prefix", cap, body._hash))
        self._key = None
        self._nf = None

    def _fields(self):
        return (self.cap, self.body)


class Amb(Process):
    __slots__ = ("name", "body")

    def __init__(self, name: NameOrVar, body: Process):
        self.name = name
        self.body = body
        self._hash = hash(("Amb", name, body._hash))
        self._key = None
        self._nf = None

    def _fields(self):
        return (self.name, self.body)


class Msg(Process):
    """``<payload>`` (asynchronous) or ``<payload>.continuation`` (synchronous)."""
    __slots__ = ("payload", "continuation")

    def __init__(self, payload: NameOrVar, continuation: Optional[Process] = None):
        self.payload = payload
        self.continuation = continuation
        self._hash = hash(("Msg", payload,
                           None if continuation is None else continuation._hash))
        self._key = None
        self._nf = None

    def _fields(self):
        return (self.payload, self.continuation)


class Abs(Process):
    """``(x)body``; occurrences of the binder in ``body`` are ``Bound(0)``."""
    __slots__ = ("body", "hint")

    def __init__(self, body: Process, hint: str = "x"):
        self.body = body
        self.hint = hint
        self._hash = hash(("Abs", body._hash))
        self._key = None
        self._nf = None

    def _fields(self):
        return (self.body,)


NIL = Nil()


def order_key(p: Process):
    """Deterministic total-order key on terms (independent of ``hash``)."""
    k = p._key
    if k is not None:
        return k
    t = type(p)
    if t is Nil:
        k = (0,)
    elif t is Prefix:
        k = (1, p.cap.kind.value, _eta_key(p.cap.target), order_key(p.body))
    elif t is Amb:
        k = (2, _eta_key(p.name), order_key(p.body))
    elif t is Msg:
        k = (3, _eta_key(p.payload),
             () if p.continuation is None else order_key(p.continuation))
    elif t is Abs:
        k = (4, order_key(p.body))
    elif t is Repl:
        k = (5, order_key(p.body))
    else:
        k = (6, order_key(p.left), order_key(p.right))
    p._key = k
    return k


# --------------------------------------------------------------------------
# Convenience constructors

def par(*ps: Process) -> Process:
    """Right-nested parallel composition; ``par()`` is ``0``."""
    ps = [p for p in ps if p is not None]
    if not ps:
        return NIL
    out = ps[-1]
    for p in reversed(ps[:-1]):
        out = Par(p, out)
    return out


def in_(n, body=NIL):
    return Prefix(Capability(CapKind.IN, n), body)


def out(n, body=NIL):
    return Prefix(Capability(CapKind.OUT, n), body)


def open_(n, body=NIL):
    return Prefix(Capability(CapKind.OPEN, n), body)


def amb(n, *body):
    return Amb(n, par(*body))


def repl(p):
    return Repl(p)


def seq(caps: Iterable[Capability], body: Process = NIL) -> Process:
    """``cap1.cap2. ... .body``."""
    caps = list(caps)
    for c in reversed(caps):
        body = Prefix(c, body)
    return body


# --------------------------------------------------------------------------
# Variables, names, substitution

def _map_eta(p: Process, f, depth: int = 0) -> Process:
    """Rebuild ``p`` applying ``f(eta, depth)`` to every name/variable slot."""
    t = type(p)
    if t is Nil:
        return p
    if t is Par:
        l = _map_eta(p.left, f, depth)
        r = _map_eta(p.right, f, depth)
        return p if (l is p.left and r is p.right) else Par(l, r)
    if t is Repl:
        b = _map_eta(p.body, f, depth)
        return p if b is p.body else Repl(b)
    if t is Prefix:
        tgt = f(p.cap.target, depth)
        b = _map_eta(p.body, f, depth)
        if b is p.body and tgt == p.cap.target:
            return p
        return Prefix(Capability(p.cap.kind, tgt), b)
    if t is Amb:
        n = f(p.name, depth)
        b = _map_eta(p.body, f, depth)
        return p if (b is p.body and n == p.name) else Amb(n, b)
    if t is Msg:
        n = f(p.payload, depth)
        c = None if p.continuation is None else _map_eta(p.continuation, f, depth)
        if n == p.payload and c is p.continuation:
            return p
        return Msg(n, c)
    b = _map_eta(p.body, f, depth + 1)
    return p if b is p.body else Abs(b, p.hint)


def _etas(p: Process, depth: int = 0):
    """Yield ``(eta, depth)`` for every name/variable slot."""
    stack = [(p, depth)]
    while stack:
        q, d = stack.pop()
        t = type(q)
        if t is Nil:
            continue
        if t is Par:
            stack.append((q.left, d))
            stack.append((q.right, d))
        elif t is Repl:
            stack.append((q.body, d))
        elif t is Prefix:
            yield q.cap.target, d
            stack.append((q.body, d))
        elif t is Amb:
            yield q.name, d
            stack.append((q.body, d))
        elif t is Msg:
            yield q.payload, d
            if q.continuation is not None:
                stack.append((q.continuation, d))
        else:
            stack.append((q.body, d + 1))


_FN_CACHE: dict = {}


def free_names(p: Process) -> frozenset:
    """Names occurring in ``p`` (names are never bound)."""
    r = _FN_CACHE.get(p)
    if r is None:
        r = frozenset(e for e, _ in _etas(p) if isinstance(e, str))
        if len(_FN_CACHE) > 200_000:
            _FN_CACHE.clear()
        _FN_CACHE[p] = r
    return r


def free_vars(p: Process) -> frozenset:
    """Free variables of ``p``.

    Dangling de Bruijn indices (which only arise when a body is inspected
    without its binder) are reported as ``Bound`` values with the index
    counted from the root of ``p``.
    """
    out_ = set()
    for e, d in _etas(p):
        if isinstance(e, Var):
            out_.add(e)
        elif isinstance(e, Bound) and e.index >= d:
            out_.add(Bound(e.index - d))
    return frozenset(out_)


def is_closed(p: Process) -> bool:
    return not free_vars(p)


def substitute_name(p: Process, x: Var, n: Name) -> Process:
    """``p{n/x}`` for a free variable ``x``."""
    def f(eta, depth):
        return n if eta == x else eta
    return _map_eta(p, f)


def replace_name(p: Process, m: Name, n: Name) -> Process:
    """Replace every occurrence of the name ``m`` by ``n``."""
    if m not in free_names(p):
        return p

    def f(eta, depth):
        return n if eta == m else eta
    return _map_eta(p, f)


def rename_names(p: Process, mapping: dict) -> Process:
    """Apply a name-to-name mapping simultaneously."""
    def f(eta, depth):
        return mapping.get(eta, eta) if isinstance(eta, str) else eta
    return _map_eta(p, f)


_OPEN_CACHE: dict = {}


def instantiate(body: Process, value: NameOrVar) -> Process:
    """Open an abstraction body: replace the outermost bound index by ``value``."""
    key = (body, value)
    r = _OPEN_CACHE.get(key)
    if r is not None:
        return r

    def f(eta, depth):
        if isinstance(eta, Bound):
            if eta.index == depth:
                return value
            if eta.index > depth:
                return Bound(eta.index - 1)
        return eta
    r = _map_eta(body, f)
    if len(_OPEN_CACHE) > 200_000:
        _OPEN_CACHE.clear()
    _OPEN_CACHE[key] = r
    return r


def abstract(body: Process, x: Var, hint: Optional[str] = None) -> Abs:
    """Build ``(x)body`` by binding the free variable ``x``."""
    def f(eta, depth):
        if eta == x:
            return Bound(depth)
        if isinstance(eta, Bound) and eta.index >= depth:
            return Bound(eta.index + 1)
        return eta
    return Abs(_map_eta(body, f), hint or x.id)


def shift_bound(p: Process, cutoff: int, delta: int) -> Process:
    """Add ``delta`` to every bound index that points at or beyond ``cutoff``."""
    def f(eta, depth):
        if isinstance(eta, Bound) and eta.index >= cutoff + depth:
            return Bound(eta.index + delta)
        return eta
    return _map_eta(p, f)


def mentions_bound(p: Process, index: int) -> bool:
    """Does ``p`` refer to the binder ``index`` levels above its root?"""
    for e, d in _etas(p):
        if isinstance(e, Bound) and e.index == index + d:
            return True
    return False


def message_mode(p: Process) -> Optional[Mode]:
    """The communication mode implied by the messages of ``p`` (None if it has none).

    Raises ``ProcessError`` when both message shapes occur.
    """
    found = set()
    stack = [p]
    while stack:
        q = stack.pop()
        t = type(q)
        if t is Par:
            stack.append(q.left)
            stack.append(q.right)
        elif t in (Repl, Prefix, Amb, Abs):
            stack.append(q.body)
        elif t is Msg:
            if q.continuation is None:
                found.add(Mode.ASYNC)
            else:
                found.add(Mode.SYNC)
                stack.append(q.continuation)
    if len(found) > 1:
        raise ProcessError("term mixes synchronous and asynchronous messages")
    return next(iter(found)) if found else None


def check_mode(p: Process, mode: Mode) -> None:
    m = message_mode(p)
    if m is not None and m is not mode:
        raise ProcessError(f"term uses {m.value} messages but mode is {mode.value}")


def require_closed(p: Process) -> None:
    if not is_closed(p):
        raise ProcessError(f"term is not closed: {print_process(p)}")


def fresh_name(avoid: Iterable[str], base: str = "m", seed: int = 0) -> str:
    """First of ``base<seed>``, ``base<seed+1>``, ... not in ``avoid``."""
    avoid = set(avoid)
    i = seed
    while f"{base}{i}" in avoid:
        i += 1
    return sys.intern(f"{base}{i}")


# --------------------------------------------------------------------------
# Measures

def size(p: Process) -> int:
    """Number of constructor nodes."""
    t = type(p)
    if t is Nil:
        return 1
    if t is Par:
        return 1 + size(p.left) + size(p.right)
    if t is Msg:
        return 1 + (0 if p.continuation is None else size(p.continuation))
    return 1 + size(p.body)


def seq_degree(p: Process) -> int:
    """Sequentiality degree of a closed process."""
    require_closed(p)
    return _sd(p)


@lru_cache(maxsize=200_000)
def _sd(p: Process) -> int:
    from .congruence import eta_normal_form
    t = type(p)
    if t is Nil:
        return 0
    if t is Par:
        return max(_sd(p.left), _sd(p.right))
    if t in (Repl, Amb):
        return _sd(p.body)
    if t is Prefix:
        return 1 + _sd(p.body)
    if t is Msg:
        return 1 if p.continuation is None else 1 + _sd(p.continuation)
    e = eta_normal_form(p)
    while type(e) is Par:        # a normalized single never is; defensive
        e = e.left
    if type(e) is not Abs:
        return _sd(e)
    return 1 + _sd(e.body)


@lru_cache(maxsize=200_000)
def depth_degree(p: Process) -> int:
    """Maximal ambient nesting outside guards."""
    t = type(p)
    if t is Par:
        return max(depth_degree(p.left), depth_degree(p.right))
    if t is Repl:
        return depth_degree(p.body)
    if t is Amb:
        return 1 + depth_degree(p.body)
    return 0


def count_prefixes(p: Process) -> int:
    """OP: number of capability prefixes and abstractions."""
    t = type(p)
    if t is Nil:
        return 0
    if t is Par:
        return count_prefixes(p.left) + count_prefixes(p.right)
    if t is Msg:
        return 0 if p.continuation is None else count_prefixes(p.continuation)
    own = 1 if t in (Prefix, Abs) else 0
    return own + count_prefixes(p.body)


def count_messages(p: Process) -> int:
    """OPmess: number of messages."""
    t = type(p)
    if t is Nil:
        return 0
    if t is Par:
        return count_messages(p.left) + count_messages(p.right)
    if t is Msg:
        return 1 + (0 if p.continuation is None else count_messages(p.continuation))
    return count_messages(p.body)


@dataclass(frozen=True)
class Classification:
    is_closed: bool
    is_finite: bool
    is_single: bool
    is_maifs: bool


def _finite(p: Process) -> bool:
    from .congruence import normalize
    return not _has_repl(normalize(p))


def _has_repl(p: Process) -> bool:
    t = type(p)
    if t is Nil:
        return False
    if t is Repl:
        return True
    if t is Par:
        return _has_repl(p.left) or _has_repl(p.right)
    if t is Msg:
        return p.continuation is not None and _has_repl(p.continuation)
    return _has_repl(p.body)


def _maifs(p: Process) -> bool:
    t = type(p)
    if t is Nil:
        return True
    if t is Par:
        return _maifs(p.left) and _maifs(p.right)
    if t in (Repl, Amb):
        return _maifs(p.body)
    if t in (Prefix, Abs):
        return _finite(p.body)
    return p.continuation is None or _finite(p.continuation)


def classify(p: Process) -> Classification:
    from .congruence import normalize
    n = normalize(p)
    return Classification(
        is_closed=is_closed(p),
        is_finite=not _has_repl(n),
        is_single=type(n) in (Prefix, Amb, Msg, Abs),
        is_maifs=_maifs(p),
    )


# --------------------------------------------------------------------------
# Printing

_KEYWORDS = {"in", "out", "open"}


def print_process(p: Process) -> str:
    return _Printer(p).run()


class _Printer:
    def __init__(self, p):
        self.p = p
        taken = set(free_names(p)) | {v.id for v in free_vars(p) if isinstance(v, Var)}
        self.taken = taken

    def run(self):
        return self.pr(self.p, [])

    def eta(self, e, scope):
        if isinstance(e, Bound):
            if e.index < len(scope):
                return scope[-1 - e.index]
            return f"#{e.index - len(scope)}"
        return _eta_text(e)

    def pr(self, p, scope):
        if type(p) is Par:
            parts = []
            q = p
            while type(q) is Par:
                parts.append(self.tight(q.left, scope))
                q = q.right
            parts.append(self.tight(q, scope))
            return " | ".join(parts)
        return self.tight(p, scope)

    def tight(self, p, scope):
        t = type(p)
        if t is Nil:
            return "0"
        if t is Par:
            return "(" + self.pr(p, scope) + ")"
        if t is Repl:
            return "!" + self.tight(p.body, scope)
        if t is Prefix:
            return (f"{p.cap.kind.value} {self.eta(p.cap.target, scope)}."
                    + self.tight(p.body, scope))
        if t is Amb:
            return f"{self.eta(p.name, scope)}[{self.pr(p.body, scope)}]"
        if t is Msg:
            s = f"<{self.eta(p.payload, scope)}>"
            if p.continuation is not None:
                s += "." + self.tight(p.continuation, scope)
            return s
        name = self.binder_name(p.hint, scope)
        return f"({name})" + self.tight(p.body, scope + [name])

    def binder_name(self, hint, scope):
        base = hint if hint and hint not in _KEYWORDS else "x"
        name = base
        i = 1
        while name in self.taken or name in scope:
            name = f"{base}{i}"
            i += 1
        return name


# --------------------------------------------------------------------------
# Parsing

class ParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        super().__init__(f"{message} at position {pos}")
        self.message = message
        self.pos = pos
        self.text = text


_TOKEN = re.compile(r"\s*(?:(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<num>[0-9]+)|(?P<sym>[|!.\[\]<>()]))")


def tokenize(text: str):
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("eof", "", n))
    return toks


class _ProcessParser:
    def __init__(self, text, mode, sugar, variables):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.mode = mode
        self.sugar = sugar
        self.variables = set(variables or ())
        self.scope = []

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], self.text)

    def expect(self, sym):
        tok = self.peek()
        if tok[0] != "sym" or tok[1] != sym:
            self.error(f"expected {sym!r}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def ident(self):
        tok = self.peek()
        if tok[0] != "id":
            self.error(f"expected identifier, found {tok[1] or 'end of input'!r}")
        if tok[1] in _KEYWORDS:
            self.error(f"keyword {tok[1]!r} cannot be used as an identifier")
        self.i += 1
        return tok[1]

    def resolve(self, ident):
        for k, name in enumerate(reversed(self.scope)):
            if name == ident:
                return Bound(k)
        if ident in self.variables:
            return Var(ident)
        return sys.intern(ident)

    def parse(self):
        p = self.par()
        tok = self.peek()
        if tok[0] != "eof":
            self.error(f"unexpected {tok[1]!r}")
        return p

    def par(self):
        parts = [self.tight()]
        while self.peek()[0] == "sym" and self.peek()[1] == "|":
            self.i += 1
            parts.append(self.tight())
        return par(*parts)

    def continuation(self, what):
        tok = self.peek()
        if tok[0] == "sym" and tok[1] == ".":
            self.i += 1
            return self.tight()
        if self.sugar:
            return NIL
        self.error(f"missing continuation after {what}")

    def tight(self):
        tok = self.peek()
        kind, val, _ = tok
        if kind == "num":
            if val != "0":
                self.error(f"unexpected number {val!r}")
            self.i += 1
            return NIL
        if kind == "id" and val in _KEYWORDS:
            self.i += 1
            target = self.resolve(self.ident())
            cap = Capability(CapKind(val), target)
            return Prefix(cap, self.continuation(f"{val} {_eta_text(target)}"))
        if kind == "id":
            name = self.resolve(self.ident())
            self.expect("[")
            body = self.par()
            self.expect("]")
            return Amb(name, body)
        if kind == "sym" and val == "!":
            self.i += 1
            return Repl(self.tight())
        if kind == "sym" and val == "<":
            self.i += 1
            payload = self.resolve(self.ident())
            self.expect(">")
            nxt = self.peek()
            has_dot = nxt[0] == "sym" and nxt[1] == "."
            if self.mode is Mode.ASYNC:
                if has_dot:
                    self.error("message continuation in asynchronous mode", nxt)
                return Msg(payload)
            if not has_dot:
                self.error("synchronous message needs a continuation", nxt)
            self.i += 1
            return Msg(payload, self.tight())
        if kind == "sym" and val == "(":
            if self.peek(1)[0] == "id" and self.peek(2)[:2] == ("sym", ")") \
                    and self.peek(1)[1] not in _KEYWORDS:
                self.i += 1
                x = self.ident()
                self.i += 1
                self.scope.append(x)
                body = self.tight()
                self.scope.pop()
                return Abs(body, x)
            self.i += 1
            p = self.par()
            self.expect(")")
            return p
        self.error(f"unexpected {val or 'end of input'!r}")


def parse_process(text: str, mode: Mode = Mode.ASYNC, sugar: bool = True,
                  variables: Iterable[str] = ()) -> Process:
    """Parse a process.

    Identifiers bound by an enclosing abstraction are variables.  Unbound
    identifiers are names, except those listed in ``variables`` which become
    free variables.
    """
    return _ProcessParser(text, mode, sugar, variables).parse()
