"""Lexer, recursive-descent parser and static checks for ``.imp`` programs."""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .ast import (Abort, Assert, Assign, BinOp, Call, If, NonDet, Num, ProbIf,
                  Program, Sample, Skip, Tick, Var, While, assign_labels,
                  expr_vars, seq_of, walk)
from .dists import Dist, DistError


class ProgramError(Exception):
    """Base class for all front-end errors."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + msg)


class LexError(ProgramError):
    pass


class ParseError(ProgramError):
    pass


class ValidationError(ProgramError):
    pass


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|\#[^\n]*|/\*.*?\*/)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<op>==|<>|!=|<=|>=|&&|\|\||[{}()\[\];,=<>+\-*/%&|!?])
""", re.VERBOSE | re.DOTALL)

KEYWORDS = {"var", "global", "proc", "main", "skip", "abort", "assert", "assume",
            "tick", "if", "else", "while", "call", "true", "false", "div", "mod"}

DIST_NAMES = {"unif": "uniform", "uniform": "uniform", "ber": "bernoulli",
              "bernoulli": "bernoulli", "bin": "binomial", "binomial": "binomial",
              "hyper": "hypergeometric", "hypergeometric": "hypergeometric"}


def tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LexError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        val = m.group()
        if kind not in ("ws", "comment"):
            if kind == "id" and val in KEYWORDS:
                kind = "kw"
            toks.append((kind, val, line, m.start() - line_start + 1))
        nl = val.count("\n")
        if nl:
            line += nl
            line_start = m.start() + val.rfind("\n") + 1
        pos = m.end()
    toks.append(("eof", "", line, pos - line_start + 1))
    return toks


def _as_int(q):
    if q.denominator != 1:
        raise DistError(f"expected an integer parameter, got {q}")
    return int(q)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, val, k=0):
        t = self.peek(k)
        return t[1] == val and t[0] in ("op", "kw")

    def error(self, msg, tok=None):
        t = tok or self.peek()
        found = t[1] or "end of input"
        raise ParseError(f"{msg} (found {found!r})", t[2], t[3])

    def expect(self, val):
        if not self.at(val):
            self.error(f"expected {val!r}")
        self.i += 1

    def accept(self, val):
        if self.at(val):
            self.i += 1
            return True
        return False

    def ident(self):
        t = self.peek()
        if t[0] != "id":
            self.error("expected identifier")
        self.i += 1
        return t[1]

    # numbers
    def integer(self):
        neg = self.accept("-")
        t = self.peek()
        if t[0] != "num" or "." in t[1]:
            self.error("expected integer")
        self.i += 1
        return -int(t[1]) if neg else int(t[1])

    def rational(self):
        neg = self.accept("-")
        t = self.peek()
        if t[0] != "num":
            self.error("expected number")
        self.i += 1
        q = Fraction(t[1])
        if self.at("/") and self.peek(1)[0] == "num":
            self.i += 1
            d = self.peek()
            self.i += 1
            den = Fraction(d[1])
            if den == 0:
                raise ParseError("zero denominator", d[2], d[3])
            q /= den
        return -q if neg else q

    # program structure
    def program(self):
        globs = []
        while self.at("var") or self.at("global"):
            self.i += 1
            globs.append(self.ident())
            while self.accept(","):
                globs.append(self.ident())
            self.expect(";")
        procs, main, stmts = {}, None, []
        while self.peek()[0] != "eof":
            if self.at("proc"):
                tok = self.peek()
                self.i += 1
                name = self.ident()
                if self.accept("("):
                    self.expect(")")
                if name in procs or name == "main":
                    raise ParseError(f"duplicate procedure {name!r}", tok[2], tok[3])
                procs[name] = self.block()
            elif self.at("main"):
                if main is not None or stmts:
                    self.error("duplicate main")
                self.i += 1
                if self.accept("("):
                    self.expect(")")
                main = self.block()
            else:
                if main is not None:
                    self.error("statement after main block")
                stmts.append(self.stmt())
        if main is None:
            main = seq_of(stmts)
        return Program(globs, procs, main)

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek()[0] == "eof":
                self.error("expected '}'")
            stmts.append(self.stmt())
        self.i += 1
        return seq_of(stmts)

    def stmt(self):
        first, simple = self.unit()
        units, probs = [first], []
        while self.accept("["):
            probs.append(self.rational())
            self.expect("]")
            u, simple = self.unit()
            units.append(u)
        if simple:
            if not self.accept(";") and not self.at("}") and self.peek()[0] != "eof":
                self.error("expected ';'")
        else:
            self.accept(";")
        out = units[-1]
        for p, u in zip(reversed(probs), reversed(units[:-1])):
            out = ProbIf(p, u, out)
        return out

    def unit(self):
        """Returns ``(command, is_simple)``."""
        if self.at("{"):
            return self.block(), False
        if self.at("if"):
            self.i += 1
            self.expect("(")
            if self.accept("*") or self.accept("?"):
                self.expect(")")
                left = self.body()
                self.expect("else")
                return NonDet(left, self.body()), False
            cond = self.expr()
            self.expect(")")
            then = self.body()
            orelse = self.body() if self.accept("else") else Skip()
            return If(cond, then, orelse), False
        if self.at("while"):
            self.i += 1
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.body()), False
        return self.simple(), True

    def body(self):
        return self.stmt()

    def simple(self):
        t = self.peek()
        if self.accept("skip"):
            return Skip()
        if self.accept("abort"):
            return Abort()
        if self.at("assert") or self.at("assume"):
            self.i += 1
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Assert(e)
        if self.accept("tick"):
            self.expect("(")
            q = self.rational()
            self.expect(")")
            return Tick(q)
        if self.accept("call"):
            name = self.ident()
            if self.accept("("):
                self.expect(")")
            return Call(name)
        if t[0] == "id":
            name = self.ident()
            self.expect("=")
            return self.rhs(name)
        self.error("expected a statement")

    def is_dist(self):
        t = self.peek()
        return t[0] == "id" and t[1] in DIST_NAMES and self.at("(", 1)

    def dist(self):
        t = self.peek()
        kind = DIST_NAMES[t[1]]
        self.i += 1
        self.expect("(")
        args = [self.rational()]
        while self.accept(","):
            args.append(self.rational())
        self.expect(")")
        if kind == "binomial" and len(args) == 3 and args[2] != 0:
            args = [args[0], args[1] / args[2]]
        try:
            if kind == "bernoulli":
                params = tuple(args)
            elif kind == "binomial":
                params = (_as_int(args[0]),) + tuple(args[1:])
            else:
                params = tuple(_as_int(a) for a in args)
            return Dist(kind, params)
        except DistError as exc:
            raise ParseError(str(exc), t[2], t[3]) from None

    def rhs(self, name):
        if self.is_dist():
            return Sample(name, Num(0), "+", self.dist())
        acc = self.term()
        while self.at("+") or self.at("-"):
            op = self.peek()[1]
            self.i += 1
            if self.is_dist():
                return Sample(name, acc, op, self.dist())
            acc = BinOp(op, acc, self.term())
        return Assign(name, acc)

    # expressions
    def expr(self):
        left = self.conj()
        while self.at("|") or self.at("||"):
            self.i += 1
            left = BinOp("|", left, self.conj())
        return left

    def conj(self):
        left = self.negation()
        while self.at("&") or self.at("&&"):
            self.i += 1
            left = BinOp("&", left, self.negation())
        return left

    def negation(self):
        if self.accept("!"):
            return BinOp("==", self.negation(), Num(0))
        return self.comparison()

    def comparison(self):
        left = self.sum()
        for op in ("==", "<>", "!=", "<=", ">=", "<", ">"):
            if self.at(op):
                self.i += 1
                return BinOp("<>" if op == "!=" else op, left, self.sum())
        return left

    def sum(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.peek()[1]
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while True:
            if self.at("*"):
                op = "*"
            elif self.at("div") or self.at("/"):
                op = "div"
            elif self.at("mod") or self.at("%"):
                op = "mod"
            else:
                return left
            self.i += 1
            left = BinOp(op, left, self.unary())

    def unary(self):
        if self.accept("-"):
            inner = self.unary()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return BinOp("-", Num(0), inner)
        return self.atom()

    def atom(self):
        t = self.peek()
        if t[0] == "num":
            if "." in t[1]:
                self.error("expected integer")
            self.i += 1
            return Num(int(t[1]))
        if self.accept("true"):
            return Num(1)
        if self.accept("false"):
            return Num(0)
        if t[0] == "id":
            self.i += 1
            return Var(t[1])
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected expression")


def validate(p: Program) -> None:
    declared = set(p.globals)
    if len(declared) != len(p.globals):
        raise ValidationError("duplicate variable declaration")
    for c in p.commands():
        used = set()
        if isinstance(c, (Assert, If, While)):
            used = expr_vars(c.cond)
        elif isinstance(c, Assign):
            used = expr_vars(c.expr) | {c.var}
        elif isinstance(c, Sample):
            used = expr_vars(c.expr) | {c.var}
        elif isinstance(c, Call) and c.proc not in p.procs:
            raise ValidationError(f"call to undefined procedure {c.proc!r}")
        elif isinstance(c, Tick) and c.amount < 0:
            raise ValidationError("tick amount must be non-negative")
        elif isinstance(c, ProbIf) and not 0 <= c.prob <= 1:
            raise ValidationError(f"probability {c.prob} outside [0, 1]")
        missing = used - declared
        if missing:
            raise ValidationError(f"undeclared variable {sorted(missing)[0]!r}")
        for e in _exprs(c):
            _check_expr(e)


def _exprs(c):
    if isinstance(c, (Assert, If, While)):
        return [c.cond]
    if isinstance(c, (Assign, Sample)):
        return [c.expr]
    return []


def _check_expr(e):
    if isinstance(e, BinOp):
        if e.op in ("div", "mod") and isinstance(e.right, Num) and e.right.value == 0:
            raise ValidationError("division by zero")
        _check_expr(e.left)
        _check_expr(e.right)


def parse_program(text: str, name=None) -> Program:
    p = _Parser(text).program()
    p.name = name
    validate(p)
    return assign_labels(p)


def parse_expr(text: str):
    ps = _Parser(text)
    e = ps.expr()
    if ps.peek()[0] != "eof":
        ps.error("unexpected trailing input")
    return e


def load_program(path) -> Program:
    path = Path(path)
    return parse_program(path.read_text(), name=path.stem)


def cmd_count(p: Program) -> int:
    return sum(1 for _ in p.commands())


__all__ = ["ProgramError", "LexError", "ParseError", "ValidationError",
           "parse_program", "parse_expr", "load_program", "validate", "walk"]
