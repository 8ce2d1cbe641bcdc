"""Pretty-printer producing text that parses back to the same AST."""

from __future__ import annotations

from .ast import (Abort, Assert, Assign, BinOp, Call, If, NonDet, Num, ProbIf,
                  Program, Sample, Skip, Tick, Var, While, flatten_seq)
from .dists import format_dist

_PREC = {"|": 1, "&": 2, "==": 3, "<>": 3, "<": 3, ">": 3, "<=": 3, ">=": 3,
         "+": 4, "-": 4, "*": 5, "div": 5, "mod": 5}


def _prec(e) -> int:
    return _PREC[e.op] if isinstance(e, BinOp) else 6


def print_expr(e) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    p = _PREC[e.op]
    left = print_expr(e.left)
    right = print_expr(e.right)
    lp, rp = _prec(e.left), _prec(e.right)
    if lp < p or (p == 3 and lp == 3):
        left = f"({left})"
    if rp <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def _simple(c) -> bool:
    return isinstance(c, (Skip, Abort, Assert, Tick, Assign, Sample, Call))


def _simple_text(c) -> str:
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Abort):
        return "abort"
    if isinstance(c, Assert):
        return f"assert({print_expr(c.cond)})"
    if isinstance(c, Tick):
        return f"tick({c.amount})"
    if isinstance(c, Assign):
        return f"{c.var} = {print_expr(c.expr)}"
    if isinstance(c, Sample):
        if c.expr == Num(0) and c.op == "+":
            return f"{c.var} = {format_dist(c.dist)}"
        base = print_expr(c.expr)
        if _prec(c.expr) < 4:
            base = f"({base})"
        return f"{c.var} = {base} {c.op} {format_dist(c.dist)}"
    if isinstance(c, Call):
        return f"call {c.proc}"
    raise TypeError(c)


def _lines(c, ind: int) -> list:
    pad = "  " * ind
    out = []
    for s in flatten_seq(c):
        if _simple(s):
            out.append(pad + _simple_text(s) + ";")
        elif isinstance(s, ProbIf):
            out.extend(_prob_lines(s, ind))
        elif isinstance(s, NonDet):
            out.append(pad + "if (*) {")
            out.extend(_lines(s.left, ind + 1))
            out.append(pad + "} else {")
            out.extend(_lines(s.right, ind + 1))
            out.append(pad + "}")
        elif isinstance(s, If):
            out.append(pad + f"if ({print_expr(s.cond)}) {{")
            out.extend(_lines(s.then, ind + 1))
            if isinstance(s.orelse, Skip):
                out.append(pad + "}")
            else:
                out.append(pad + "} else {")
                out.extend(_lines(s.orelse, ind + 1))
                out.append(pad + "}")
        elif isinstance(s, While):
            out.append(pad + f"while ({print_expr(s.cond)}) {{")
            out.extend(_lines(s.body, ind + 1))
            out.append(pad + "}")
        else:
            raise TypeError(s)
    return out


def _prob_lines(s, ind):
    pad = "  " * ind
    if _simple(s.left) and _simple(s.right):
        return [pad + f"{_simple_text(s.left)} [{s.prob}] {_simple_text(s.right)};"]
    out = [pad + "{"]
    out.extend(_lines(s.left, ind + 1))
    out.append(pad + f"}} [{s.prob}] {{")
    out.extend(_lines(s.right, ind + 1))
    out.append(pad + "}")
    return out


def print_command(c) -> str:
    if _simple(c):
        return _simple_text(c) + ";"
    return "\n".join(_lines(c, 0))


def print_program(p: Program) -> str:
    out = []
    if p.globals:
        out.append("var " + ", ".join(p.globals) + ";")
    for name, body in p.procs.items():
        out.append(f"proc {name} {{")
        out.extend(_lines(body, 1))
        out.append("}")
    if p.procs:
        out.append("main {")
        out.extend(_lines(p.main, 1))
        out.append("}")
    else:
        out.extend(_lines(p.main, 0))
    return "\n".join(out) + "\n"
