"""Abstract syntax for the probabilistic imperative language.

Every command node carries an integer ``label`` that is unique within a
program. Labels are excluded from equality, so two programs compare equal
when they have the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

from .dists import Dist


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, BinOp]

ARITH_OPS = ("+", "-", "*", "div", "mod")
CMP_OPS = ("==", "<>", "<", ">", "<=", ">=")
BOOL_OPS = ("&", "|")


def expr_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    return set()


# --- commands --------------------------------------------------------------

@dataclass(eq=True)
class Command:
    pass


def _label():
    return field(default=-1, compare=False, repr=False)


@dataclass(eq=True)
class Skip(Command):
    label: int = _label()


@dataclass(eq=True)
class Abort(Command):
    label: int = _label()


@dataclass(eq=True)
class Assert(Command):
    cond: Expr
    label: int = _label()


@dataclass(eq=True)
class Tick(Command):
    amount: Fraction
    label: int = _label()


@dataclass(eq=True)
class Assign(Command):
    var: str
    expr: Expr
    label: int = _label()


@dataclass(eq=True)
class Sample(Command):
    """``var = expr op dist`` where ``op`` is ``+``, ``-`` or ``*``.

    A pure draw ``x = unif(a, b)`` is stored with ``expr = Num(0)`` and
    ``op = "+"``.
    """

    var: str
    expr: Expr
    op: str
    dist: Dist
    label: int = _label()


@dataclass(eq=True)
class ProbIf(Command):
    prob: Fraction
    left: Command
    right: Command
    label: int = _label()


@dataclass(eq=True)
class NonDet(Command):
    left: Command
    right: Command
    label: int = _label()


@dataclass(eq=True)
class If(Command):
    cond: Expr
    then: Command
    orelse: Command
    label: int = _label()


@dataclass(eq=True)
class Seq(Command):
    first: Command
    second: Command
    label: int = _label()


@dataclass(eq=True)
class While(Command):
    cond: Expr
    body: Command
    label: int = _label()


@dataclass(eq=True)
class Call(Command):
    proc: str
    label: int = _label()


@dataclass(eq=True)
class Program:
    globals: list
    procs: dict  # name -> Command, in declaration order
    main: Command
    name: Optional[str] = field(default=None, compare=False)

    def commands(self) -> Iterator[Command]:
        for body in self.procs.values():
            yield from walk(body)
        yield from walk(self.main)


def children(c: Command) -> tuple:
    if isinstance(c, (ProbIf, NonDet)):
        return (c.left, c.right)
    if isinstance(c, If):
        return (c.then, c.orelse)
    if isinstance(c, Seq):
        return (c.first, c.second)
    if isinstance(c, While):
        return (c.body,)
    return ()


def walk(c: Command) -> Iterator[Command]:
    """Preorder traversal."""
    stack = [c]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def assign_labels(p: Program) -> Program:
    n = 0
    for c in p.commands():
        c.label = n
        n += 1
    return p


def seq_of(cmds: list) -> Command:
    """Right-nested sequence; an empty list is ``skip``."""
    if not cmds:
        return Skip()
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


def flatten_seq(c: Command) -> list:
    out = []
    stack = [c]
    while stack:
        node = stack.pop()
        if isinstance(node, Seq):
            stack.append(node.second)
            stack.append(node.first)
        else:
            out.append(node)
    return out


def modified_vars(c: Command, procs: dict, _seen=None) -> set:
    """Variables a command may write, following calls transitively."""
    seen = set() if _seen is None else _seen
    out = set()
    for node in walk(c):
        if isinstance(node, (Assign, Sample)):
            out.add(node.var)
        elif isinstance(node, Call) and node.proc not in seen:
            seen.add(node.proc)
            out |= modified_vars(procs[node.proc], procs, seen)
    return out
