"""Turing machines compiled into ambients.

The ribbon is a nesting of ``cell`` ambients, the first letter outermost;
each cell holds its digit as an empty ambient ``ff[0]`` or ``tt[0]``.  The
machine is an ambient ``TM`` sitting inside the cell under the head.  A
step releases a ``head`` that reads the digit, clears and rewrites it, and
re-enters ``TM``, which then moves one cell and opens the next state.

Moves are named by their effect on a configuration ``(left, q, right)``,
where the head is on the last letter of ``left``: ``R`` enters the next
(nested) cell, ``L`` leaves the current one.
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from .congruence import components, normalize
from .semantics import (
    FALSE, TRUE, Fuel, Verdict, _successors, det_step, unknown,
)
from .syntax import (
    NIL, Amb, Process, amb, classify, in_, open_, out, par, print_process, repl,
)

FF, TT = "ff", "tt"
DIGITS = {"f": FF, "t": TT}
LETTERS = {FF: "f", TT: "t"}

RESERVED = frozenset({
    "cell", "wo", "ext", "coin", "newcell", "msg", "ribbon_left", "start",
    "TM", "head", "cl_ack", "wr_ack", "mo", "cleaner", "runclean", "get_out",
    "msgbox", FF, TT,
})

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class Move(enum.Enum):
    LEFT = "L"
    STAY = "S"
    RIGHT = "R"


class EncodingError(ValueError):
    pass


def _check_word(w: str) -> str:
    if any(ch not in DIGITS for ch in w):
        raise EncodingError(f"word must be over 'f' and 't': {w!r}")
    return w


def _digit(d: str) -> str:
    d = DIGITS.get(d, d)
    if d not in (FF, TT):
        raise EncodingError(f"not a digit: {d!r}")
    return d


@dataclass(frozen=True)
class TuringMachine:
    states: frozenset
    start: str
    accept: str
    delta: Mapping[Tuple[str, str], Tuple[str, str, Move]]

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        delta = {}
        for (q, d), (q2, d2, mv) in dict(self.delta).items():
            delta[(q, _digit(d))] = (q2, _digit(d2), Move(mv))
        object.__setattr__(self, "delta", delta)
        for q in self.states:
            if not _IDENT.match(q) or q in ("in", "out", "open"):
                raise EncodingError(f"state name is not an identifier: {q!r}")
            if q in RESERVED:
                raise EncodingError(f"state name clashes with a reserved name: {q!r}")
        if self.start not in self.states or self.accept not in self.states:
            raise EncodingError("start and accept must be states")
        for q in self.states - {self.accept}:
            for d in (FF, TT):
                if (q, d) not in delta:
                    raise EncodingError(f"no transition for ({q}, {d})")
        for (q, d), (q2, _, _) in delta.items():
            if q == self.accept:
                raise EncodingError("the accepting state has no transitions")
            if q not in self.states or q2 not in self.states:
                raise EncodingError(f"transition mentions an unknown state: {q} -> {q2}")

    def __hash__(self):
        return hash((self.states, self.start, self.accept, tuple(sorted(
            (k, (v[0], v[1], v[2].value)) for k, v in self.delta.items()))))


@dataclass(frozen=True)
class TMConfiguration:
    left: str
    state: str
    right: str

    def __str__(self):
        return f"({self.left}, {self.state}, {self.right})"


def tm_step(c: TMConfiguration, m: TuringMachine) -> Optional[TMConfiguration]:
    """One machine step; None when the head would leave the ribbon."""
    if c.state == m.accept:
        raise ValueError("the accepting state does not step")
    if not c.left:
        raise ValueError("the head must be on a cell (left word non-empty)")
    q2, d2, mv = m.delta[(c.state, DIGITS[c.left[-1]])]
    left = c.left[:-1] + LETTERS[d2]
    right = c.right
    if mv is Move.RIGHT:
        if not right:
            return None
        left, right = left + right[0], right[1:]
    elif mv is Move.LEFT:
        if len(left) == 1:
            return None
        left, right = left[:-1], left[-1] + right
    return TMConfiguration(left, q2, right)


def parse_machine(text: str) -> TuringMachine:
    """Line format: ``states:``, ``start:``, ``accept:`` headers, then
    ``q d -> q' d' mv`` lines (``d`` in f/t, ``mv`` in L/S/R); ``#`` comments."""
    header = {}
    delta = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"(states|start|accept)\s*:\s*(.*)\Z", line)
        if m:
            header[m.group(1)] = m.group(2)
            continue
        m = re.match(r"(\S+)\s+([ft])\s*->\s*(\S+)\s+([ft])\s+([LSR])\Z", line)
        if not m:
            raise EncodingError(f"line {lineno}: cannot parse {raw!r}")
        q, d, q2, d2, mv = m.groups()
        if (q, DIGITS[d]) in delta:
            raise EncodingError(f"line {lineno}: duplicate transition for ({q}, {d})")
        delta[(q, DIGITS[d])] = (q2, DIGITS[d2], Move(mv))
    for key in ("states", "start", "accept"):
        if key not in header:
            raise EncodingError(f"missing '{key}:' header")
    states = frozenset(s for s in re.split(r"[\s,]+", header["states"]) if s)
    return TuringMachine(states, header["start"].strip(), header["accept"].strip(), delta)


def format_machine(m: TuringMachine) -> str:
    lines = [f"states: {' '.join(sorted(m.states))}", f"start: {m.start}", f"accept: {m.accept}"]
    for (q, d), (q2, d2, mv) in sorted(m.delta.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        lines.append(f"{q} {LETTERS[d]} -> {q2} {LETTERS[d2]} {mv.value}")
    return "\n".join(lines) + "\n"


def immediate_accept_machine() -> TuringMachine:
    """Accepts at once, leaving the head where it is."""
    return TuringMachine({"q0", "qA"}, "q0", "qA", {
        ("q0", FF): ("qA", FF, Move.STAY),
        ("q0", TT): ("qA", TT, Move.STAY),
    })


def looping_machine() -> TuringMachine:
    """Never accepts: stays in its start state forever."""
    return TuringMachine({"q0", "qA"}, "q0", "qA", {
        ("q0", FF): ("q0", FF, Move.STAY),
        ("q0", TT): ("q0", TT, Move.STAY),
    })


# --------------------------------------------------------------------------
# Ribbons

def cell(d: str, hole: Process = NIL) -> Process:
    return amb("cell", amb(_digit(d)), repl(open_("wo")), hole)


def word(w: str, hole: Process = NIL) -> Process:
    for ch in reversed(_check_word(w)):
        hole = cell(ch, hole)
    return hole


def deadextcode() -> Process:
    return par(repl(open_("coin", open_("newcell", in_("cell", amb("coin"))))),
               repl(amb("newcell", cell(FF, out("ext")))))


def sendstart() -> Process:
    return amb("msg", out("ext"), repl(out("cell")),
               out("ribbon_left", amb("start", in_("TM"))))


def start_message() -> Process:
    """The ``msg`` ambient once it has left the extensor."""
    return amb("msg", repl(out("cell")), out("ribbon_left", amb("start", in_("TM"))))


def _dying() -> Process:
    # msg waits, inert, inside msgbox; guarding it directly would put a
    # replication under a capability
    return par(open_("coin", open_("msgbox")), amb("msgbox", sendstart()))


def extensor_frozen() -> Process:
    return amb("ext", deadextcode(), _dying())


def extensor_alive() -> Process:
    return amb("ext", amb("coin"), deadextcode(), _dying())


def extensor_dead() -> Process:
    return amb("ext", deadextcode())


def deadcleancode() -> Process:
    return par(repl(open_(FF)), repl(open_(TT)), repl(open_("cell")), repl(open_("wo")))


def cleaninst() -> Process:
    return par(open_("cleaner", open_("runclean")), amb("runclean", deadcleancode()))


def frozen_ribb(w: str) -> Process:
    return amb("ribbon_left", cleaninst(), word(w, extensor_frozen()))


def growing_ribb(w: str) -> Process:
    return amb("ribbon_left", cleaninst(), word(w, extensor_alive()))


def work_ribb(w1: str, w2: str, hole: Process = NIL) -> Process:
    return amb("ribbon_left", cleaninst(), word(w1, par(hole, word(w2, extensor_dead()))))


def old_ribb() -> Process:
    return amb("ribbon_left", deadcleancode(), extensor_dead())


# --------------------------------------------------------------------------
# Machine

def clear(d: str, then: Process) -> Process:
    return par(amb("wo", out("head", open_(_digit(d), amb("cl_ack", in_("head"))))),
               open_("cl_ack", then))


def write(d: str, then: Process) -> Process:
    return par(amb("wo", out("head", amb(_digit(d))), amb("wr_ack", in_("head"))),
               open_("wr_ack", then))


def become(then: Process) -> Process:
    return par(amb("mo", out("head", open_("head", then))), in_("mo"))


def domove(mv: Move, then: Process) -> Process:
    mv = Move(mv)
    if mv is Move.RIGHT:
        return in_("cell", then)
    if mv is Move.LEFT:
        return out("cell", then)
    return then


def tcode(d_read: str, q_next: str, d_write: str, mv: Move) -> Process:
    return clear(d_read, write(d_write, become(in_("TM", domove(mv, open_(q_next))))))


def choice(if_ff: Process, if_tt: Process) -> Process:
    return par(amb("coin", in_(FF, out(FF, if_ff))),
               amb("coin", in_(TT, out(TT, if_tt))),
               open_("coin"))


def _tcodes(m: TuringMachine, q: str):
    out_ = []
    for d in (FF, TT):
        q2, d2, mv = m.delta[(q, d)]
        out_.append(tcode(d, q2, d2, mv))
    return out_


def code(m: TuringMachine, q: str) -> Process:
    if q == m.accept:
        return repl(amb(q, amb("get_out")))
    t_ff, t_tt = _tcodes(m, q)
    return par(repl(amb(q, amb("head", out("TM", choice(t_ff, t_tt))))),
               repl(amb("coin", in_(FF, out(FF, t_ff)))),
               repl(amb("coin", in_(TT, out(TT, t_tt)))))


def _enter_cells(k: int, then: Process) -> Process:
    for _ in range(k):
        then = in_("cell", then)
    return then


def getout(m: TuringMachine, length: int) -> Process:
    restart = par(
        amb("cleaner", out("TM", in_("ribbon_left"))),
        amb("coin", out("TM", in_("ribbon_left", _enter_cells(length, in_("ext"))))),
        open_("start", in_("ribbon_left", in_("cell", open_(m.start)))),
    )
    return par(repl(open_("get_out", out("cell", amb("get_out")))),
               repl(open_("get_out", out("ribbon_left", restart))))


def tmsoup(m: TuringMachine, length: int) -> Process:
    return par(*[code(m, q) for q in sorted(m.states)], getout(m, length), repl(open_("mo")))


def tm_start(m: TuringMachine, length: int) -> Process:
    return amb("TM", open_("start", in_("ribbon_left", in_("cell", open_(m.start)))),
               tmsoup(m, length))


def tm_state(m: TuringMachine, q: str, length: int) -> Process:
    if q not in m.states:
        raise EncodingError(f"unknown state {q!r}")
    return amb("TM", open_(q), tmsoup(m, length))


def encode_configuration(w1: str, q: str, w2: str, m: TuringMachine,
                         word_param: str = "") -> Process:
    """``WorkRibb(w1, w2)`` around ``TM(q)``."""
    _check_word(word_param)
    if not w1:
        raise EncodingError("the head must be on a cell (left word non-empty)")
    return work_ribb(w1, w2, tm_state(m, q, len(word_param)))


def loop_terms(m: TuringMachine, w: str) -> Tuple[Process, Process, Process]:
    """``(Q, P0, P1)``: the shared context and the two ribbon states."""
    _check_word(w)
    q = par(repl(frozen_ribb(w)), repl(old_ribb()), repl(open_("msg")),
            repl(out("cell")), tm_start(m, len(w)))
    return q, par(q, growing_ribb(w)), par(q, growing_ribb(w + "f"))


_MACROS = {
    "cell": lambda d, hole=NIL: cell(d, hole),
    "word": lambda w, hole=NIL: word(w, hole),
    "deadextcode": deadextcode,
    "sendstart": sendstart,
    "ExtensorFrozen": extensor_frozen,
    "ExtensorAlive": extensor_alive,
    "ExtensorDead": extensor_dead,
    "cleaninst": cleaninst,
    "deadcleancode": deadcleancode,
    "FrozenRibb": frozen_ribb,
    "GrowingRibb": growing_ribb,
    "WorkRibb": lambda w1, w2, hole=NIL: work_ribb(w1, w2, hole),
    "OldRibb": old_ribb,
    "clear": clear,
    "write": write,
    "become": become,
    "domove": domove,
    "tcode": tcode,
    "choice": choice,
    "code": code,
    "getout": getout,
    "tmsoup": tmsoup,
    "TMStart": tm_start,
    "TM": tm_state,
}


def encode_macro(kind: str, *args, **kwargs) -> Process:
    try:
        f = _MACROS[kind]
    except KeyError:
        raise EncodingError(f"unknown macro {kind!r}; known: {', '.join(sorted(_MACROS))}") from None
    return f(*args, **kwargs)


def macro_kinds() -> List[str]:
    return sorted(_MACROS)


# --------------------------------------------------------------------------
# Checks

@dataclass(frozen=True)
class MacroStepReport:
    name: str
    expected: int
    steps: Optional[int]     # deterministic steps until the target; None if never reached
    deterministic: bool

    @property
    def ok(self) -> bool:
        return self.deterministic and self.steps == self.expected


def _count_det_steps(start: Process, target: Process, limit: int = 64):
    cur = normalize(start)
    target = normalize(target)
    for k in range(1, limit + 1):
        nxt = det_step(cur)
        if nxt is None:
            return None, False
        cur = nxt
        if cur == target:
            return k, True
    return None, True


def verify_macro_steps(d: str, d2: str, w: str, m: Optional[TuringMachine] = None
                       ) -> List[MacroStepReport]:
    """Run the four deterministic macro sequences (choice, clear, write, become)."""
    d, d2 = _digit(d), _digit(d2)
    _check_word(w)
    m = m or immediate_accept_machine()
    other = TT if d == FF else FF
    p_body, q_body = _tcodes(m, m.start)
    if d == TT:
        p_body, q_body = q_body, p_body
    soup = amb("TM", tmsoup(m, len(w)))
    mm = par(amb(d), repl(open_("wo")), word(w, extensor_dead()))
    rest = par(repl(open_("wo")), amb("cell", mm), soup)
    with_d = par(amb(d), rest)
    pending = amb("coin", in_(d2, out(d2, q_body)))
    cont = p_body
    branches = (p_body, q_body) if d == FF else (q_body, p_body)

    cases = [
        ("choice", 3,
         par(amb("head", choice(*branches)), with_d),
         par(amb("head", p_body, amb("coin", in_(other, out(other, q_body)))), with_d)),
        ("clear", 5,
         par(amb("head", clear(d, cont), pending), with_d),
         par(amb("head", cont, pending), rest)),
        ("write", 4,
         par(amb("head", write(d, cont), pending), rest),
         par(amb("head", cont, pending), with_d)),
        ("become", 3,
         par(amb("head", become(cont), pending), with_d),
         par(amb("mo", cont, pending), with_d)),
    ]
    reports = []
    for name, expected, start, target in cases:
        steps, det = _count_det_steps(start, target)
        reports.append(MacroStepReport(name, expected, steps, det))
    return reports


@dataclass
class SearchResult:
    verdict: Verdict
    path: List[Process]
    states: int


def search(start: Process, target: Process, fuel: Fuel) -> SearchResult:
    """Breadth-first search for ``target`` (up to ≡) from ``start``."""
    start, target = normalize(start), normalize(target)
    parent: Dict[Process, Optional[Process]] = {start: None}
    frontier = deque([(start, 0)])
    exhausted_fuel = False
    while frontier:
        s, depth = frontier.popleft()
        if s == target:
            path = []
            while s is not None:
                path.append(s)
                s = parent[s]
            return SearchResult(TRUE, path[::-1], len(parent))
        if depth >= fuel.max_depth:
            exhausted_fuel = True
            continue
        for q in _successors(s):
            if q not in parent:
                if len(parent) >= fuel.max_states:
                    return SearchResult(unknown("state budget exhausted"), [], len(parent))
                parent[q] = s
                frontier.append((q, depth + 1))
    if exhausted_fuel:
        return SearchResult(unknown("depth budget exhausted"), [], len(parent))
    return SearchResult(FALSE, [], len(parent))


LOOP_FUEL = Fuel(max_states=100_000, max_depth=10_000)


@dataclass
class LoopReport:
    verdict: Verdict
    forward: Verdict          # P0 ⇒ P1
    back: SearchResult        # P1 ⇒ P0

    @property
    def trace_length(self) -> Optional[int]:
        return len(self.back.path) - 1 if self.back.path else None


def loop_search(m: TuringMachine, w: str, fuel: Fuel = LOOP_FUEL) -> LoopReport:
    _, p0, p1 = loop_terms(m, w)
    fwd = search(p0, p1, fuel).verdict
    back = search(p1, p0, fuel)
    if fwd.is_false:
        raise AssertionError("P0 does not reach P1")
    return LoopReport(back.verdict, fwd, back)


def loop_check(m: TuringMachine, w: str, fuel: Fuel = LOOP_FUEL) -> Verdict:
    """Whether ``P1 ⇒ P0`` for the loop terms of ``m`` and ``w``."""
    return loop_search(m, w, fuel).verdict


def _is_ribbon(p: Process) -> bool:
    comps = components(p)
    return (len(comps) == 1 and not comps[0][0] and type(comps[0][1]) is Amb
            and comps[0][1].name == "ribbon_left")


@dataclass
class RibbonReport:
    verdict: Verdict
    grows: bool
    emits: bool
    shape_ok: bool
    cleans: Verdict


def ribbon_grow_check(w: str, n: int, fuel: Fuel = Fuel(max_states=20_000, max_depth=200)
                      ) -> RibbonReport:
    """Growth, message emission and cleaning of a growing ribbon.

    The shape invariant is checked on every explored state that lies on a
    path to one of the two targets.
    """
    base = _check_word(w) + "f" * n
    start = normalize(growing_ribb(base))
    targets = {normalize(growing_ribb(base + "f")),
               normalize(work_ribb("", base, start_message()))}
    succ: Dict[Process, tuple] = {}
    order = [start]
    seen = {start}
    found = set()
    depth_of = {start: 0}
    complete = True
    i = 0
    while i < len(order) and found != targets:
        s = order[i]
        i += 1
        if depth_of[s] >= fuel.max_depth:
            complete = False
            continue
        nxt = tuple(_successors(s))
        succ[s] = nxt
        for q in nxt:
            if q not in seen:
                if len(seen) >= fuel.max_states:
                    complete = False
                    break
                seen.add(q)
                depth_of[q] = depth_of[s] + 1
                order.append(q)
                if q in targets:
                    found.add(q)
    # states that can reach a target inside the explored graph
    on_path = set(found)
    changed = True
    while changed:
        changed = False
        for s, nxt in succ.items():
            if s not in on_path and any(q in on_path for q in nxt):
                on_path.add(s)
                changed = True
    shape_ok = all(_is_ribbon(s) for s in on_path)
    grows = normalize(growing_ribb(base + "f")) in found
    emits = normalize(work_ribb("", base, start_message())) in found

    clean_start = par(work_ribb(base, "", NIL), amb("cleaner", in_("ribbon_left")))
    cleans = search(clean_start, old_ribb(), Fuel(fuel.max_states, 10_000)).verdict

    if grows and emits and shape_ok and cleans.is_true:
        v = TRUE
    elif not shape_ok or cleans.is_false or (complete and not (grows and emits)):
        v = FALSE
    else:
        v = unknown("ribbon search exceeded fuel")
    return RibbonReport(v, grows, emits, shape_ok, cleans)


def all_macros(m: TuringMachine, w: str) -> Dict[str, Process]:
    """Every macro of the encoding instantiated for ``m`` and ``w``."""
    q = m.start
    t_ff, t_tt = _tcodes(m, q)
    out_ = {
        "cell(ff)": cell(FF), "cell(tt)": cell(TT), "word": word(w),
        "deadextcode": deadextcode(), "sendstart": sendstart(),
        "ExtensorFrozen": extensor_frozen(), "ExtensorAlive": extensor_alive(),
        "ExtensorDead": extensor_dead(), "cleaninst": cleaninst(),
        "deadcleancode": deadcleancode(), "FrozenRibb": frozen_ribb(w),
        "GrowingRibb": growing_ribb(w), "WorkRibb": work_ribb(w, "", NIL),
        "OldRibb": old_ribb(), "tcode_ff": t_ff, "tcode_tt": t_tt,
        "choice": choice(t_ff, t_tt), "getout": getout(m, len(w)),
        "tmsoup": tmsoup(m, len(w)), "TMStart": tm_start(m, len(w)),
    }
    for s in sorted(m.states):
        out_[f"code({s})"] = code(m, s)
        out_[f"TM({s})"] = tm_state(m, s, len(w))
    for name, p in zip(("Q", "P0", "P1"), loop_terms(m, w)):
        out_[name] = p
    return out_


def simulate_step(c: TMConfiguration, m: TuringMachine, word_param: str = "",
                  limit: int = 64) -> Optional[int]:
    """Deterministic steps from the encoding of ``c`` to that of its successor.

    None when the machine has no successor or the encoding does not reach it
    deterministically within ``limit`` steps.
    """
    nxt = tm_step(c, m)
    if nxt is None:
        return None
    start = encode_configuration(c.left, c.state, c.right, m, word_param)
    target = encode_configuration(nxt.left, nxt.state, nxt.right, m, word_param)
    steps, _ = _count_det_steps(start, target, limit)
    return steps
