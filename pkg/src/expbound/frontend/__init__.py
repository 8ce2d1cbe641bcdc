"""Parsing, validation and printing of probabilistic programs."""

from .ast import (Abort, Assert, Assign, BinOp, Call, Command, If, NonDet, Num,
                  ProbIf, Program, Sample, Seq, Skip, Tick, Var, While)
from .dists import Dist, DistError, dist_support
from .parser import (LexError, ParseError, ProgramError, ValidationError,
                     load_program, parse_expr, parse_program)
from .printer import print_command, print_expr, print_program

__all__ = [
    "Abort", "Assert", "Assign", "BinOp", "Call", "Command", "If", "NonDet",
    "Num", "ProbIf", "Program", "Sample", "Seq", "Skip", "Tick", "Var", "While",
    "Dist", "DistError", "dist_support", "LexError", "ParseError",
    "ProgramError", "ValidationError", "load_program", "parse_expr",
    "parse_program", "print_command", "print_expr", "print_program",
]
