"""Compilation of programs to a flat instruction list.

The simulator executes these instructions. Procedures are appended after
``main``; ``call`` pushes a return address and ``ret`` pops it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from ..frontend.ast import (Abort, Assert, Assign, BinOp, Call, If, NonDet,
                            Num, ProbIf, Sample, Seq, Skip, Tick, Var, While)
from . import rng


class RuntimeFault(RuntimeError):
    pass


def _int(v):
    return v.astype(np.int64) if isinstance(v, np.ndarray) else int(v)


def _div(a, b):
    if np.any(np.asarray(b) == 0):
        raise RuntimeFault("division by zero")
    return a // b


def _mod(a, b):
    if np.any(np.asarray(b) == 0):
        raise RuntimeFault("modulo by zero")
    return a % b


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": _div,
    "mod": _mod,
    "==": lambda a, b: _int(a == b),
    "<>": lambda a, b: _int(a != b),
    "<": lambda a, b: _int(a < b),
    ">": lambda a, b: _int(a > b),
    "<=": lambda a, b: _int(a <= b),
    ">=": lambda a, b: _int(a >= b),
    "&": lambda a, b: _int((a != 0) & (b != 0)),
    "|": lambda a, b: _int((a != 0) | (b != 0)),
}


def compile_expr(e):
    """Closure evaluating ``e`` on an environment of ints or int arrays."""
    if isinstance(e, Num):
        v = e.value
        return lambda env: v
    if isinstance(e, Var):
        name = e.name
        return lambda env: env[name]
    if isinstance(e, BinOp):
        f = _OPS[e.op]
        left, right = compile_expr(e.left), compile_expr(e.right)
        return lambda env: f(left(env), right(env))
    raise TypeError(e)


def compile_expr_at(e, pos: dict):
    """Like :func:`compile_expr`, reading variables from a state tuple laid
    out by ``pos`` (name -> index)."""
    if isinstance(e, Num):
        v = e.value
        return lambda s: v
    if isinstance(e, Var):
        i = pos[e.name]
        return lambda s: s[i]
    if isinstance(e, BinOp):
        f = _OPS[e.op]
        left, right = compile_expr_at(e.left, pos), compile_expr_at(e.right, pos)
        return lambda s: f(left(s), right(s))
    raise TypeError(e)


@dataclass
class Instr:
    op: str  # assign sample tick assert jump branch choose nondet call ret halt abort
    var: str = ""
    fn: object = None
    arg: object = None  # tick units, jump target, cut points, sample values
    then: int = -1
    other: int = -1
    sign: int = 1


@dataclass
class Machine:
    code: list
    entry: dict  # proc name -> index
    variables: tuple
    unit: Fraction  # cost of one tick unit

    def __len__(self):
        return len(self.code)


def compile_program(p) -> Machine:
    ticks = [c.amount for c in p.commands() if isinstance(c, Tick)]
    denom = lcm(*[Fraction(t).denominator for t in ticks]) if ticks else 1
    code = []
    fixups = []  # (instr, proc) for calls

    def emit(ins):
        code.append(ins)
        return len(code) - 1

    def gen(c):
        if isinstance(c, Skip):
            return
        if isinstance(c, Abort):
            emit(Instr("abort"))
        elif isinstance(c, Assert):
            emit(Instr("assert", fn=compile_expr(c.cond)))
        elif isinstance(c, Tick):
            units = Fraction(c.amount) * denom
            emit(Instr("tick", arg=int(units)))
        elif isinstance(c, Assign):
            emit(Instr("assign", var=c.var, fn=compile_expr(c.expr)))
        elif isinstance(c, Sample):
            support = c.dist.support()
            values = [v for v, _ in support]
            cuts = rng.thresholds([q for _, q in support])
            emit(Instr("sample", var=c.var, fn=compile_expr(c.expr),
                       arg=(np.array(values, dtype=np.int64), values, cuts),
                       sign=1 if c.op == "+" else -1))
        elif isinstance(c, Seq):
            gen(c.first)
            gen(c.second)
        elif isinstance(c, (ProbIf, NonDet, If)):
            if isinstance(c, ProbIf):
                ins = Instr("choose", arg=rng.thresholds([c.prob, 1 - c.prob]))
                left, right = c.left, c.right
            elif isinstance(c, NonDet):
                ins = Instr("nondet")
                left, right = c.left, c.right
            else:
                ins = Instr("branch", fn=compile_expr(c.cond))
                left, right = c.then, c.orelse
            emit(ins)
            ins.then = len(code)
            gen(left)
            jump = Instr("jump")
            emit(jump)
            ins.other = len(code)
            gen(right)
            jump.arg = len(code)
        elif isinstance(c, While):
            head = len(code)
            ins = Instr("branch", fn=compile_expr(c.cond))
            emit(ins)
            ins.then = len(code)
            gen(c.body)
            emit(Instr("jump", arg=head))
            ins.other = len(code)
        elif isinstance(c, Call):
            ins = Instr("call")
            emit(ins)
            fixups.append((ins, c.proc))
        else:
            raise TypeError(c)

    gen(p.main)
    emit(Instr("halt"))
    entry = {}
    for name, body in p.procs.items():
        entry[name] = len(code)
        gen(body)
        emit(Instr("ret"))
    for ins, name in fixups:
        ins.arg = entry[name]
    return Machine(code, entry, tuple(p.globals), Fraction(1, denom))
