"""Mobile ambients workbench: terms, congruence, reduction, bisimilarity,
ambient logic and a Turing-machine encoding."""

from .syntax import (
    Mode, CapKind, Capability, Var, Bound, Process, Nil, Par, Repl, Prefix,
    Amb, Msg, Abs, NIL, ParseError, ProcessError, parse_process, print_process,
    free_names, free_vars, substitute_name, replace_name, seq_degree,
    depth_degree, count_prefixes, count_messages, classify,
)
from .congruence import (
    CanonicalProcess, canonicalize, normalize, struct_congruent, eta_step,
    eta_normal_form, eta_congruent, frozen_subterms,
)
from .semantics import (
    Fuel, Verdict, TRUE, FALSE, Cap, MsgOut, MsgIn, Tau, reduce_once,
    reduce_star, labelled_transitions, weak_transition, stutter_closure,
    barbs, det_step, trace,
)
from .equivalence import (
    BisimConfig, BisimCache, bisim, approximant, approximant_limit,
    stabilization_bound, logical_equiv, barbed_bisim, measure_report,
)
from .logic import (
    Formula, GuaranteePolicy, SelectivityError, parse_formula, print_formula,
    satisfies, distinguish, sd_formula, dd_formula,
)
from .turing import (
    TuringMachine, TMConfiguration, Move, tm_step, parse_machine,
    encode_macro, encode_configuration, verify_macro_steps, ribbon_grow_check,
    loop_check,
)

__version__ = "0.1.0"
