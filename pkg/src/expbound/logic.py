"""Linear constraint contexts over program variables.

A context is a finite conjunction of inequalities ``L >= 0`` with ``L``
affine. Contexts over-approximate the reachable integer states at each
program point. Entailment is decided exactly over the rationals with a
Farkas certificate search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import floor, gcd

from .frontend.ast import (Abort, Assert, Assign, BinOp, Call, If, NonDet, Num,
                           ProbIf, Sample, Seq, Skip, Tick, Var, While,
                           modified_vars)
from .lp import LinearProgram, feasible


class LinExpr:
    """Immutable affine expression ``sum(c_v * v) + const``."""

    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs=(), const=0):
        if isinstance(coeffs, dict):
            coeffs = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0))
        self.coeffs = coeffs
        self.const = Fraction(const)
        self._hash = hash((coeffs, self.const))

    @staticmethod
    def var(name: str) -> "LinExpr":
        return LinExpr(((name, Fraction(1)),), 0)

    @staticmethod
    def constant(c) -> "LinExpr":
        return LinExpr((), c)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def coeff(self, v: str) -> Fraction:
        for name, c in self.coeffs:
            if name == v:
                return c
        return Fraction(0)

    def vars(self) -> set:
        return {v for v, _ in self.coeffs}

    def is_const(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        return (isinstance(other, LinExpr) and self._hash == other._hash
                and self.coeffs == other.coeffs and self.const == other.const)

    def __hash__(self):
        return self._hash

    def __add__(self, other):
        if not isinstance(other, LinExpr):
            return LinExpr(self.coeffs, self.const + other)
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return LinExpr(d, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return LinExpr(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        k = Fraction(k)
        if k == 0:
            return LinExpr((), 0)
        return LinExpr(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    __rmul__ = __mul__

    def subst(self, x: str, e: "LinExpr") -> "LinExpr":
        a = self.coeff(x)
        if a == 0:
            return self
        d = {v: c for v, c in self.coeffs if v != x}
        for v, c in e.coeffs:
            d[v] = d.get(v, 0) + a * c
        return LinExpr(d, self.const + a * e.const)

    def rename(self, mapping: dict) -> "LinExpr":
        d = {}
        for v, c in self.coeffs:
            w = mapping.get(v, v)
            d[w] = d.get(w, 0) + c
        return LinExpr(d, self.const)

    def eval(self, env) -> Fraction:
        return self.const + sum((c * env[v] for v, c in self.coeffs), Fraction(0))

    def normalized(self) -> "LinExpr":
        """Scale to coprime integer coefficients and round the constant
        down. ``L >= 0`` and ``normalized(L) >= 0`` have the same integer
        solutions."""
        if not self.coeffs:
            return LinExpr((), 1 if self.const >= 0 else -1)
        den = 1
        for _, c in self.coeffs:
            den = den * c.denominator // gcd(den, c.denominator)
        g = 0
        for _, c in self.coeffs:
            g = gcd(g, int(c * den))
        k = Fraction(den, g)
        return LinExpr(tuple((v, c * k) for v, c in self.coeffs), floor(self.const * k))

    def __repr__(self):
        return f"LinExpr({self})"

    def __str__(self):
        parts = []
        for v, c in self.coeffs:
            mag = abs(c)
            s = v if mag == 1 else f"{mag}*{v}"
            parts.append(("- " if c < 0 else "+ ") + s)
        if self.const or not parts:
            parts.append(("- " if self.const < 0 else "+ ") + str(abs(self.const)))
        out = " ".join(parts)
        return out[2:] if out.startswith("+ ") else "-" + out[2:]


def linearize(e):
    """Affine form of an integer expression, or ``None`` if non-linear."""
    if isinstance(e, Num):
        return LinExpr.constant(e.value)
    if isinstance(e, Var):
        return LinExpr.var(e.name)
    if isinstance(e, BinOp):
        if e.op in ("+", "-"):
            a, b = linearize(e.left), linearize(e.right)
            if a is None or b is None:
                return None
            return a + b if e.op == "+" else a - b
        if e.op == "*":
            a, b = linearize(e.left), linearize(e.right)
            if a is None or b is None:
                return None
            if a.is_const():
                return b * a.const
            if b.is_const():
                return a * b.const
    return None


_FALSE = LinExpr.constant(-1)


def cond_constraints(e, negate: bool = False) -> list:
    """Inequalities ``L >= 0`` implied by ``e`` (or by its negation).

    The result over-approximates: conjuncts that are not linear, and
    disjunctions, are dropped. An unsatisfiable condition yields a
    constant negative inequality.
    """
    if isinstance(e, BinOp) and e.op in ("&", "|"):
        conj = (e.op == "&") != negate
        a = cond_constraints(e.left, negate)
        b = cond_constraints(e.right, negate)
        if conj:
            return a + b
        if _FALSE in a:
            return b
        if _FALSE in b:
            return a
        return []
    if isinstance(e, BinOp) and e.op in ("==", "<>", "<", ">", "<=", ">="):
        a, b = linearize(e.left), linearize(e.right)
        op = e.op
        if negate:
            op = {"==": "<>", "<>": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}[op]
        if a is None or b is None:
            return []
        d = b - a
        if op == "<":
            out = [d - 1]
        elif op == "<=":
            out = [d]
        elif op == ">":
            out = [-d - 1]
        elif op == ">=":
            out = [-d]
        elif op == "==":
            out = [d, -d]
        else:
            return [_FALSE] if d.is_const() and d.const == 0 else []
        return [_norm(x) for x in out]
    lin = linearize(e)
    if lin is None:
        return []
    if lin.is_const():
        truth = lin.const != 0
        return [] if truth != negate else [_FALSE]
    return [_norm(lin), _norm(-lin)] if negate else []


def _norm(le):
    return le.normalized()


@dataclass(frozen=True)
class LinCtx:
    ineqs: frozenset = field(default_factory=frozenset)
    bottom: bool = False

    @staticmethod
    def of(ineqs) -> "LinCtx":
        out = set()
        for le in ineqs:
            le = le.normalized()
            if le.is_const():
                if le.const < 0:
                    return BOTTOM
                continue
            out.add(le)
        ctx = LinCtx(frozenset(_prune_syntactic(out)))
        if not _satisfiable(ctx.ineqs):
            return BOTTOM
        return ctx

    def vars(self) -> set:
        out = set()
        for le in self.ineqs:
            out |= le.vars()
        return out

    def sorted(self) -> list:
        return sorted(self.ineqs, key=lambda le: (len(le.coeffs), str(le)))

    def __str__(self):
        if self.bottom:
            return "false"
        if not self.ineqs:
            return "true"
        return " && ".join(f"{le} >= 0" for le in self.sorted())


TOP = LinCtx()
BOTTOM = LinCtx(frozenset(), True)


def _prune_syntactic(ineqs: set) -> set:
    """Among inequalities with equal linear part keep the tightest."""
    best = {}
    for le in ineqs:
        cur = best.get(le.coeffs)
        if cur is None or le.const < cur.const:
            best[le.coeffs] = le
    return set(best.values())


@lru_cache(maxsize=None)
def _satisfiable(ineqs: frozenset) -> bool:
    if not ineqs:
        return True
    return not _farkas(ineqs, _FALSE)


@lru_cache(maxsize=200000)
def _farkas(ineqs: frozenset, goal: LinExpr) -> bool:
    """True iff ``goal = sum(l_i * ineq_i) + c`` with ``l_i, c >= 0``."""
    lp = LinearProgram()
    items = list(ineqs)
    lam = [lp.new_var(f"l{i}") for i in range(len(items))]
    names = set(goal.vars())
    for le in items:
        names |= le.vars()
    rows = {v: {} for v in names}
    consts = {}
    for j, le in zip(lam, items):
        for v, c in le.coeffs:
            rows[v][j] = c
        if le.const:
            consts[j] = le.const
    for v in sorted(names):
        lp.add(rows[v], "==", goal.coeff(v))
    lp.add(consts, "<=", goal.const)
    return feasible(lp)


def entails(ctx: LinCtx, goal: LinExpr) -> bool:
    """Does every rational point of ``ctx`` satisfy ``goal >= 0``?"""
    if ctx.bottom:
        return True
    if goal.is_const():
        return goal.const >= 0
    if goal in ctx.ineqs:
        return True
    for le in ctx.ineqs:
        if le.coeffs == goal.coeffs:
            if le.const <= goal.const:
                return True
    if not goal.vars() <= ctx.vars():
        return False
    return _farkas(ctx.ineqs, goal)


def entails_all(ctx: LinCtx, goals) -> bool:
    return all(entails(ctx, g) for g in goals)


def conj(ctx: LinCtx, ineqs) -> LinCtx:
    if ctx.bottom:
        return ctx
    return LinCtx.of(list(ctx.ineqs) + list(ineqs))


def ctx_assume(ctx: LinCtx, cond) -> LinCtx:
    return conj(ctx, cond_constraints(cond))


def ctx_assume_not(ctx: LinCtx, cond) -> LinCtx:
    return conj(ctx, cond_constraints(cond, negate=True))


def eliminate(ctx: LinCtx, x: str) -> LinCtx:
    """Project ``x`` away (Fourier-Motzkin)."""
    if ctx.bottom:
        return ctx
    keep, pos, neg = [], [], []
    for le in ctx.ineqs:
        a = le.coeff(x)
        if a > 0:
            pos.append(le)
        elif a < 0:
            neg.append(le)
        else:
            keep.append(le)
    for p in pos:
        for n in neg:
            a, b = p.coeff(x), -n.coeff(x)
            keep.append(p * b + n * a)
    out = LinCtx.of(keep)
    return _prune_redundant(out)


def _prune_redundant(ctx: LinCtx, limit: int = 6) -> LinCtx:
    if ctx.bottom or len(ctx.ineqs) <= limit:
        return ctx
    items = ctx.sorted()
    kept = list(items)
    for le in reversed(items):
        rest = frozenset(x for x in kept if x is not le)
        if _farkas(rest, le):
            kept = [x for x in kept if x is not le]
    return LinCtx(frozenset(kept))


def ctx_assign(ctx: LinCtx, x: str, e) -> LinCtx:
    lin = linearize(e) if not isinstance(e, LinExpr) else e
    return _assign_lin(ctx, x, lin)


def _assign_lin(ctx, x, lin):
    if ctx.bottom:
        return ctx
    if lin is None:
        return eliminate(ctx, x)
    a = lin.coeff(x)
    if a != 0:
        # invertible: old x = (x - rest) / a
        rest = lin - LinExpr.var(x) * a
        old = (LinExpr.var(x) - rest) * (1 / a)
        return LinCtx.of([le.subst(x, old) for le in ctx.ineqs])
    out = eliminate(ctx, x)
    d = LinExpr.var(x) - lin
    return conj(out, [d, -d])


_FRESH = "%v"


def ctx_sample(ctx: LinCtx, x: str, e, op: str, dist) -> LinCtx:
    """Post-context of ``x = e op dist`` for ``op`` in ``+``/``-``.

    The drawn value is modelled by a fresh variable bounded by the support
    and projected away afterwards, which yields the convex hull of the
    posts for every value of the support.
    """
    if ctx.bottom:
        return ctx
    lin = linearize(e)
    lo, hi = dist.bounds()
    if lin is None or op not in ("+", "-"):
        return eliminate(ctx, x)
    v = LinExpr.var(_FRESH)
    widened = conj(ctx, [v - lo, hi - v])
    target = lin + v if op == "+" else lin - v
    return eliminate(_assign_lin(widened, x, target), _FRESH)


def join(a: LinCtx, b: LinCtx) -> LinCtx:
    if a.bottom:
        return b
    if b.bottom:
        return a
    keep = [le for le in a.ineqs if entails(b, le)]
    keep += [le for le in b.ineqs if entails(a, le)]
    return _prune_redundant(LinCtx.of(keep))


def widen(old: LinCtx, new: LinCtx) -> LinCtx:
    if old.bottom:
        return new
    if new.bottom:
        return old
    return LinCtx(frozenset(le for le in old.ineqs if entails(new, le)))


def leq(a: LinCtx, b: LinCtx) -> bool:
    """``a`` describes a subset of ``b``."""
    if a.bottom:
        return True
    if b.bottom:
        return False
    return all(entails(a, le) for le in b.ineqs)


WIDEN_AFTER = 3


@dataclass
class Contexts:
    """Pre/post contexts per command label, plus loop-head invariants."""

    pre: dict = field(default_factory=dict)
    post: dict = field(default_factory=dict)
    head: dict = field(default_factory=dict)
    proc_entry: dict = field(default_factory=dict)
    proc_exit: dict = field(default_factory=dict)


class _Inference:
    def __init__(self, program):
        self.p = program
        self.res = Contexts()
        self.mods = {name: modified_vars(body, program.procs)
                     for name, body in program.procs.items()}

    def run(self) -> Contexts:
        # a procedure is entered in the join of its call-site contexts
        entries = {name: BOTTOM for name in self.p.procs}
        exits = {name: BOTTOM for name in self.p.procs}
        for it in range(50):
            self.res.proc_entry = dict(entries)
            self.res.proc_exit = dict(exits)
            self.sites = {name: BOTTOM for name in self.p.procs}
            new_exits = {name: self.cmd(body, entries[name])
                         for name, body in self.p.procs.items()}
            self.cmd(self.p.main, TOP)
            if (all(leq(self.sites[n], entries[n]) for n in entries)
                    and all(leq(new_exits[n], exits[n]) for n in exits)):
                break

            def grow(old, new):
                return join(old, new) if it < WIDEN_AFTER else widen(old, join(old, new))
            entries = {n: grow(entries[n], self.sites[n]) for n in entries}
            exits = {n: grow(exits[n], new_exits[n]) for n in exits}
        else:  # pragma: no cover
            raise RuntimeError("context inference did not converge")
        return self.res

    def cmd(self, c, ctx: LinCtx) -> LinCtx:
        self.res.pre[c.label] = ctx
        out = self._transfer(c, ctx)
        self.res.post[c.label] = out
        return out

    def _transfer(self, c, ctx):
        if isinstance(c, (Skip, Tick)):
            return ctx
        if isinstance(c, Abort):
            return BOTTOM
        if isinstance(c, Assert):
            return ctx_assume(ctx, c.cond)
        if isinstance(c, Assign):
            return ctx_assign(ctx, c.var, c.expr)
        if isinstance(c, Sample):
            return ctx_sample(ctx, c.var, c.expr, c.op, c.dist)
        if isinstance(c, Seq):
            return self.cmd(c.second, self.cmd(c.first, ctx))
        if isinstance(c, (ProbIf, NonDet)):
            return join(self.cmd(c.left, ctx), self.cmd(c.right, ctx))
        if isinstance(c, If):
            a = self.cmd(c.then, ctx_assume(ctx, c.cond))
            b = self.cmd(c.orelse, ctx_assume_not(ctx, c.cond))
            return join(a, b)
        if isinstance(c, Call):
            self.sites[c.proc] = join(self.sites[c.proc], ctx)
            out = ctx
            for v in sorted(self.mods[c.proc]):
                out = eliminate(out, v)
            exit_ctx = self.res.proc_exit.get(c.proc, BOTTOM)
            if exit_ctx.bottom:
                return BOTTOM
            return conj(out, exit_ctx.ineqs)
        if isinstance(c, While):
            head = ctx
            for it in range(100):
                body_post = self.cmd(c.body, ctx_assume(head, c.cond))
                nxt = join(ctx, body_post)
                if leq(nxt, head):
                    break
                head = join(head, nxt) if it < WIDEN_AFTER else widen(head, nxt)
            else:  # pragma: no cover
                raise RuntimeError("context inference did not converge")
            self.res.head[c.label] = head
            return ctx_assume_not(head, c.cond)
        raise TypeError(c)


def infer_contexts(program) -> Contexts:
    return _Inference(program).run()


def dump_contexts(program, contexts: Contexts) -> str:
    from .frontend.printer import print_command
    lines = []
    for c in program.commands():
        head = print_command(c).splitlines()[0]
        if len(head) > 40:
            head = head[:37] + "..."
        pre = contexts.pre.get(c.label)
        post = contexts.post.get(c.label)
        lines.append(f"[{c.label}] {head}")
        lines.append(f"    pre:  {pre}")
        lines.append(f"    post: {post}")
        if c.label in contexts.head:
            lines.append(f"    loop: {contexts.head[c.label]}")
    return "\n".join(lines) + "\n"
