"""Exact reachability and minimal witnessing subsystems for probabilistic timed automata."""

from .model import Pta, Witness, is_strong_subsystem, is_subsystem, leq_inv, leq_loc, leq_vol, pta_volume
from .parser import load, parse, save, serialize
from .quotient import build_quotient
from .reach import reach_prob, verify_witness

__all__ = [
    "Pta",
    "Witness",
    "build_quotient",
    "is_strong_subsystem",
    "is_subsystem",
    "leq_inv",
    "leq_loc",
    "leq_vol",
    "load",
    "parse",
    "pta_volume",
    "reach_prob",
    "save",
    "serialize",
    "verify_witness",
]
