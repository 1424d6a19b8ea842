"""Command-line front end.

Processes, formulas and machines are given inline or as ``@path``.
Exit status: 0 on success, 1 on malformed input, and a configurable
status (default 2) when some verdict is unknown.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import turing
from .congruence import eta_congruent, eta_normal_form, normalize, struct_congruent
from .equivalence import (
    BisimConfig, approximant_limit, barbed_bisim, bisim, logical_equiv,
)
from .logic import GuaranteePolicy, SelectivityError, distinguish, parse_formula, print_formula, satisfies
from .semantics import Fuel, Verdict, barbs, reduce_once_with_rules, reduce_star, trace, verdict
from .syntax import Mode, ParseError, ProcessError, classify, parse_process, print_process


class _Out:
    def __init__(self, fmt: str, command: str, stream):
        self.fmt = fmt
        self.command = command
        self.stream = stream

    def emit(self, text: str, **fields):
        if self.fmt == "records":
            rec = {"command": self.command, **fields} if fields else {"command": self.command, "text": text}
            self.stream.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            self.stream.write(text + "\n")


def _read(arg: str) -> str:
    if arg.startswith("@"):
        with open(arg[1:], encoding="utf-8") as fh:
            return fh.read()
    return arg


def _proc(arg: str, mode: Mode):
    return parse_process(_read(arg).strip(), mode=mode)


def _machine(arg: str) -> turing.TuringMachine:
    builtin = {"immediate": turing.immediate_accept_machine, "looping": turing.looping_machine}
    if arg in builtin:
        return builtin[arg]()
    return turing.parse_machine(_read(arg))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ambients", description="Mobile ambients workbench.")
    ap.add_argument("--sync", action="store_true", help="synchronous messages <n>.P")
    ap.add_argument("--max-states", type=int, default=100_000)
    ap.add_argument("--max-depth", type=int, default=64)
    ap.add_argument("--format", choices=("text", "records"), default="text")
    ap.add_argument("--unknown-exit", type=int, default=2, help="exit status for unknown verdicts")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse and classify a process")
    p.add_argument("process")

    p = sub.add_parser("norm", help="canonical form")
    p.add_argument("process")
    p.add_argument("--eta", action="store_true", help="eta normal form")

    p = sub.add_parser("reduce", help="one-step reducts (or all reachable with --star)")
    p.add_argument("process")
    p.add_argument("--star", action="store_true")

    p = sub.add_parser("trace", help="a reduction path, one rule per line")
    p.add_argument("process")
    p.add_argument("--steps", type=int, default=64)

    p = sub.add_parser("barbs", help="names of reachable top-level ambients")
    p.add_argument("process")

    p = sub.add_parser("equiv", help="compare two processes")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--method", choices=("auto", "eta", "bisim", "approx", "barbed"), default="auto")
    p.add_argument("--explain", action="store_true")

    p = sub.add_parser("check", help="model-check P |= A")
    p.add_argument("process", nargs="?")
    p.add_argument("formula", nargs="?")
    p.add_argument("--batch", help="file of 'P |= A' lines")
    p.add_argument("--witness", action="append", default=[], help="guarantee witness process")

    p = sub.add_parser("distinguish", help="a formula satisfied by the first process only")
    p.add_argument("left")
    p.add_argument("right")

    p = sub.add_parser("encode-tm", help="print a term of the machine encoding")
    p.add_argument("machine", help="machine file (@path), or 'immediate' / 'looping'")
    p.add_argument("--word", default="f")
    p.add_argument("--term", choices=("tmstart", "p0", "p1", "q", "config"), default="p0")
    p.add_argument("--config", help="configuration 'left,state,right' for --term config")

    p = sub.add_parser("loop-check", help="search P1 => P0 for a machine and word")
    p.add_argument("machine")
    p.add_argument("--word", default="f")

    p = sub.add_parser("verify-macros", help="deterministic step counts of the macros")
    p.add_argument("--d", default="f")
    p.add_argument("--d2", default="t")
    p.add_argument("--word", default="f")
    p.add_argument("--machine", default="immediate")
    return ap


def main(argv: Optional[List[str]] = None, stdout=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Out(args.format, args.command, stdout or sys.stdout)
    try:
        return _dispatch(args, out)
    except (ParseError, ProcessError, turing.EncodingError, SelectivityError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


def _status(v: Verdict, args) -> int:
    return args.unknown_exit if v.is_unknown else 0


def _dispatch(args, out: _Out) -> int:
    mode = Mode.SYNC if args.sync else Mode.ASYNC
    fuel = Fuel(args.max_states, args.max_depth)
    cmd = args.command

    if cmd == "parse":
        p = _proc(args.process, mode)
        c = classify(p)
        out.emit(f"{print_process(p)}\tclosed={c.is_closed} finite={c.is_finite} "
                 f"single={c.is_single} maifs={c.is_maifs}",
                 process=print_process(p), closed=c.is_closed, finite=c.is_finite,
                 single=c.is_single, maifs=c.is_maifs)
        return 0

    if cmd == "norm":
        p = _proc(args.process, mode)
        q = eta_normal_form(p) if args.eta else normalize(p)
        out.emit(print_process(q), process=print_process(q))
        return 0

    if cmd == "reduce":
        p = _proc(args.process, mode)
        if args.star:
            states, complete = reduce_star(p, fuel)
            for s in sorted(states):
                out.emit(print_process(s), process=print_process(s))
            if not complete:
                out.emit("unknown:fuel exhausted", verdict="unknown:fuel exhausted")
                return args.unknown_exit
            return 0
        for rule, q in reduce_once_with_rules(p):
            out.emit(f"{rule}\t{print_process(q)}", rule=rule, process=print_process(q))
        return 0

    if cmd == "trace":
        p = _proc(args.process, mode)
        for rec in trace(p, args.steps):
            out.emit(rec.as_text(), rule=rec.rule, process=rec.process)
        return 0

    if cmd == "barbs":
        p = _proc(args.process, mode)
        names, complete = barbs(p, fuel)
        out.emit(" ".join(sorted(names)), barbs=sorted(names), complete=complete)
        return 0 if complete else args.unknown_exit

    if cmd == "equiv":
        p, q = _proc(args.left, mode), _proc(args.right, mode)
        cfg = BisimConfig(fuel=fuel, mode=mode)
        notes: Optional[List[str]] = [] if args.explain else None
        if args.method == "auto":
            v = logical_equiv(p, q, cfg) if notes is None else bisim(p, q, cfg, explain=notes)
        elif args.method == "eta":
            v = verdict(eta_congruent(p, q) if mode is Mode.ASYNC else struct_congruent(p, q))
        elif args.method == "bisim":
            v = bisim(p, q, cfg, explain=notes)
        elif args.method == "approx":
            v = verdict(approximant_limit(p, q, mode))
        else:
            v = barbed_bisim(p, q, fuel)
        out.emit(str(v), verdict=str(v))
        for line in notes or ():
            out.emit(line, explain=line)
        return _status(v, args)

    if cmd == "check":
        policy = GuaranteePolicy(witnesses=tuple(_proc(w, mode) for w in args.witness))
        if args.batch:
            pairs = []
            for lineno, raw in enumerate(_read("@" + args.batch).splitlines(), 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "|=" not in line:
                    raise ParseError(f"line {lineno}: expected 'P |= A'", 0, raw)
                ptxt, ftxt = line.split("|=", 1)
                pairs.append((ptxt, ftxt))
        else:
            if args.process is None or args.formula is None:
                raise ParseError("check needs a process and a formula, or --batch", 0)
            pairs = [(_read(args.process), _read(args.formula))]
        status = 0
        for ptxt, ftxt in pairs:
            p = parse_process(ptxt.strip(), mode=mode)
            f = parse_formula(ftxt.strip())
            v = satisfies(p, f, fuel, policy, mode)
            out.emit(str(v), process=print_process(p), formula=print_formula(f), verdict=str(v))
            status = max(status, _status(v, args))
        return status

    if cmd == "distinguish":
        p, q = _proc(args.left, mode), _proc(args.right, mode)
        f = distinguish(p, q, mode)
        text = "none" if f is None else print_formula(f)
        out.emit(text, formula=None if f is None else text)
        return 0

    if cmd == "encode-tm":
        m = _machine(args.machine)
        q_term, p0, p1 = turing.loop_terms(m, args.word)
        if args.term == "config":
            if not args.config:
                raise turing.EncodingError("--term config needs --config left,state,right")
            left, state, right = (x.strip() for x in args.config.split(","))
            term = turing.encode_configuration(left, state, right, m, args.word)
        else:
            term = {"tmstart": turing.tm_start(m, len(args.word)), "p0": p0, "p1": p1,
                    "q": q_term}[args.term]
        out.emit(print_process(term), process=print_process(term))
        return 0

    if cmd == "loop-check":
        m = _machine(args.machine)
        loop_fuel = Fuel(args.max_states, max(args.max_depth, turing.LOOP_FUEL.max_depth))
        rep = turing.loop_search(m, args.word, loop_fuel)
        v = rep.verdict
        if v.is_true:
            out.emit(f"{v}\ttrace length {rep.trace_length}", verdict=str(v),
                     trace_length=rep.trace_length, states=rep.back.states)
        else:
            out.emit(str(v), verdict=str(v), states=rep.back.states)
        return _status(v, args)

    if cmd == "verify-macros":
        m = _machine(args.machine)
        reports = turing.verify_macro_steps(args.d, args.d2, args.word, m)
        for r in reports:
            out.emit(f"{r.name}\texpected {r.expected}\tsteps {r.steps}\t{'ok' if r.ok else 'FAIL'}",
                     macro=r.name, expected=r.expected, steps=r.steps, ok=r.ok)
        return 0 if all(r.ok for r in reports) else 3

    raise AssertionError(cmd)


if __name__ == "__main__":
    sys.exit(main())
