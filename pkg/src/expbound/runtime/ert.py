"""Truncated expected-cost oracle.

Loops are unrolled at most ``K`` times per entry and calls are inlined to
depth ``K``. Mass still inside a loop after ``K`` iterations, or at a call
beyond depth ``K``, is dropped and reported as residual. The expected cost
of the truncated program is therefore a lower bound on the true expected
cost, exact when the residual is zero.

Distributions over states are exact (``state -> Fraction``) and never
pruned; exceeding the support cap raises :class:`SupportCapExceeded`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from ..frontend.ast import (Abort, Assert, Assign, Call, If, NonDet, ProbIf,
                            Sample, Seq, Skip, Tick, While, walk)
from .machine import compile_expr, compile_expr_at

try:  # exact rationals; gmpy2 is much faster on long chains of products
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction
from .simulate import initial_state

DEFAULT_CAP = 200_000


class SupportCapExceeded(RuntimeError):
    pass


@dataclass
class ErtResult:
    lower: Fraction  # expected cost of the truncated program plus E[f]
    residual: Fraction  # probability mass cut off by the truncation
    cost: Fraction = Fraction(0)
    final: dict = field(default_factory=dict)  # state tuple -> mass
    method: str = "forward"


def _as_fn(f) -> Optional[Callable]:
    if f is None:
        return None
    if hasattr(f, "eval") and not callable(f):
        return lambda env: Fraction(f.eval(env))
    return f


class _Forward:
    """Forward propagation of a distribution over state tuples.

    With ``bits`` set, masses are integers in units of ``2**-bits`` and
    every product is rounded down; the rounding loss joins the residual.
    Rounding down only removes mass, so with a non-negative ``f`` the
    result stays a lower bound.
    """

    def __init__(self, program, K: int, cap: int, scheduler: str,
                 bits: Optional[int] = None):
        self.p = program
        self.K = K
        self.cap = cap
        self.scheduler = scheduler
        self.bits = bits
        self.one = (1 << bits) if bits is not None else _Q(1)
        self.vars = tuple(program.globals)
        self.pos = {v: i for i, v in enumerate(self.vars)}
        self.cost = _Q(0)
        self.residual = _Q(0)
        self._fns = {}
        self._memo = {}

    # -- masses ---------------------------------------------------------------

    def scale(self, w, q):
        """``w * q`` for a mass ``w`` and an exact probability ``q``."""
        if self.bits is None:
            return w * q
        num = w * int(q.numerator)
        out = num // int(q.denominator)
        if num != out * int(q.denominator):
            self.residual += _Q(num - out * int(q.denominator), int(q.denominator))
        return out

    def mul(self, w, v):
        """Product of two masses."""
        if self.bits is None:
            return w * v
        prod = w * v
        out = prod >> self.bits
        if prod != out << self.bits:
            self.residual += _Q(prod - (out << self.bits), self.one)
        return out

    def weighted(self, w, x):
        """Exact ``w * x`` for a mass ``w`` and an accumulated quantity ``x``
        (expected cost or residual) of a unit-mass run."""
        return w * x if self.bits is None else _Q(w) * x / self.one

    def value(self, x) -> Fraction:
        """Accumulated quantity as a plain rational."""
        x = _Q(x) if self.bits is None else _Q(x) / self.one
        return Fraction(int(x.numerator), int(x.denominator))

    # -- evaluation -----------------------------------------------------------

    def fn(self, e):
        key = id(e)
        hit = self._fns.get(key)
        if hit is None:
            hit = (e, compile_expr_at(e, self.pos))
            self._fns[key] = hit
        return hit[1]

    def env(self, s):
        return dict(zip(self.vars, s))

    def _add(self, out, s, w):
        if not w:
            return
        out[s] = out.get(s, 0) + w
        if len(out) > self.cap:
            raise SupportCapExceeded(f"distribution support exceeds {self.cap} states")

    def split(self, dist, cond):
        f = self.fn(cond)
        yes, no = {}, {}
        for s, w in dist.items():
            (yes if f(s) != 0 else no)[s] = w
        return yes, no

    def merge(self, a, b):
        for s, w in b.items():
            self._add(a, s, w)
        return a

    def run(self, c, dist, depth=0):
        if not dist:
            return dist
        if isinstance(c, Skip):
            return dist
        if isinstance(c, Abort):
            return {}
        if isinstance(c, Assert):
            return self.split(dist, c.cond)[0]
        if isinstance(c, Tick):
            self.cost += _Q(c.amount) * sum(dist.values())
            return dist
        if isinstance(c, Assign):
            f, i = self.fn(c.expr), self.pos[c.var]
            out = {}
            for s, w in dist.items():
                t = list(s)
                t[i] = int(f(s))
                self._add(out, tuple(t), w)
            return out
        if isinstance(c, Sample):
            f, i = self.fn(c.expr), self.pos[c.var]
            sign = 1 if c.op == "+" else -1
            support = c.dist.support()
            out = {}
            for s, w in dist.items():
                base = int(f(s))
                for v, q in support:
                    t = list(s)
                    t[i] = base + sign * v
                    self._add(out, tuple(t), self.scale(w, q))
            return out
        if isinstance(c, Seq):
            return self.run(c.second, self.run(c.first, dist, depth), depth)
        if isinstance(c, ProbIf):
            p, q = Fraction(c.prob), 1 - Fraction(c.prob)
            left = self.run(c.left, {s: self.scale(w, p) for s, w in dist.items()}, depth)
            right = self.run(c.right, {s: self.scale(w, q) for s, w in dist.items()}, depth)
            return self.merge(left, right)
        if isinstance(c, NonDet):
            return self.run(c.left if self.scheduler == "first" else c.right, dist, depth)
        if isinstance(c, If):
            yes, no = self.split(dist, c.cond)
            return self.merge(self.run(c.then, yes, depth), self.run(c.orelse, no, depth))
        if isinstance(c, While):
            return self.summarized(c, c.label, dist, depth, self.loop)
        if isinstance(c, Call):
            if depth >= self.K:
                self.residual += sum(dist.values(), _Q(0))
                return {}
            body = self.p.procs[c.proc]
            return self.summarized(body, ("proc", c.proc), dist, depth + 1, self.run)
        raise TypeError(c)

    def summarized(self, c, key, dist, depth, how):
        """Run ``c`` state by state, reusing the outcome of each
        ``(command, state, depth)`` once computed. Loops and procedure
        bodies are entered from the same states over and over."""
        out = {}
        for s, w in dist.items():
            hit = self._memo.get((key, s, depth))
            if hit is None:
                saved = self.cost, self.residual
                self.cost = self.residual = _Q(0)
                res = how(c, {s: self.one}, depth)
                hit = (self.cost, self.residual, res)
                self.cost, self.residual = saved
                self._memo[(key, s, depth)] = hit
            cost, resid, res = hit
            self.cost += self.weighted(w, cost)
            self.residual += self.weighted(w, resid)
            for t, v in res.items():
                self._add(out, t, self.mul(w, v))
        return out

    def loop(self, c, dist, depth):
        """``K`` unrollings of ``c``; mass still looping afterwards is
        residual."""
        out = {}
        cur = dist
        for _ in range(self.K):
            cur, done = self.split(cur, c.cond)
            self.merge(out, done)
            if not cur:
                return out
            cur = self.run(c.body, cur, depth)
        cur, done = self.split(cur, c.cond)
        self.merge(out, done)
        self.residual += sum(cur.values(), _Q(0))
        return out


def _loop_free(p) -> bool:
    """No loops and no recursion, so backward evaluation terminates."""
    if any(isinstance(c, While) for c in p.commands()):
        return False

    def reaches(name, target, seen):
        for c in walk(p.procs[name]):
            if isinstance(c, Call):
                if c.proc == target:
                    return True
                if c.proc not in seen:
                    seen.add(c.proc)
                    if reaches(c.proc, target, seen):
                        return True
        return False

    return not any(reaches(n, n, set()) for n in p.procs)


def _backward(p, state: dict, f) -> Fraction:
    """Exact expected cost of a loop-free program, taking the better branch
    at every nondeterministic choice."""
    fns = {}

    def ev(e, env):
        key = id(e)
        if key not in fns:
            fns[key] = (e, compile_expr(e))
        return fns[key][1](env)

    def go(todo, env):
        if not todo:
            return Fraction(f(env)) if f is not None else Fraction(0)
        c, rest = todo[0], todo[1:]
        if isinstance(c, Skip):
            return go(rest, env)
        if isinstance(c, Abort):
            return Fraction(0)
        if isinstance(c, Assert):
            return go(rest, env) if ev(c.cond, env) != 0 else Fraction(0)
        if isinstance(c, Tick):
            return Fraction(c.amount) + go(rest, env)
        if isinstance(c, Assign):
            return go(rest, {**env, c.var: int(ev(c.expr, env))})
        if isinstance(c, Sample):
            base = int(ev(c.expr, env))
            sign = 1 if c.op == "+" else -1
            return sum((q * go(rest, {**env, c.var: base + sign * v})
                        for v, q in c.dist.support()), Fraction(0))
        if isinstance(c, Seq):
            return go((c.first, c.second) + rest, env)
        if isinstance(c, ProbIf):
            return (c.prob * go((c.left,) + rest, env)
                    + (1 - c.prob) * go((c.right,) + rest, env))
        if isinstance(c, NonDet):
            return max(go((c.left,) + rest, env), go((c.right,) + rest, env))
        if isinstance(c, If):
            kid = c.then if ev(c.cond, env) != 0 else c.orelse
            return go((kid,) + rest, env)
        if isinstance(c, Call):
            return go((p.procs[c.proc],) + rest, env)
        raise TypeError(c)

    return go((p.main,), dict(state))


def _has_nondet(p) -> bool:
    return any(isinstance(c, NonDet) for c in p.commands())


def ert_truncated(p, state: Optional[dict] = None, unroll: int = 200, f=None,
                  cap: int = DEFAULT_CAP, scheduler: Optional[str] = None,
                  bits: Optional[int] = None) -> ErtResult:
    """Lower bound on the expected cost of ``p`` from ``state`` plus the
    expectation of ``f`` over terminating states.

    ``f`` is a callable on variable environments, or anything with an
    ``eval(env)`` method such as a bound. Nondeterministic choices take the
    maximum: exactly per state for loop-free programs, otherwise as the
    better of the two uniform schedulers (``first``/``second``), which is
    still a lower bound. ``scheduler`` forces one uniform scheduler.

    Masses are exact unless ``bits`` is given, in which case they are
    rounded down to multiples of ``2**-bits`` (see :class:`_Forward`); use
    it only with a non-negative ``f``.
    """
    if unroll < 0:
        raise ValueError("unroll must be non-negative")
    fn = _as_fn(f)
    env0 = initial_state(p.globals, state)
    nondet = _has_nondet(p)
    if scheduler is None and nondet and _loop_free(p):
        return ErtResult(_backward(p, env0, fn), Fraction(0), method="exact-max")
    scheds = [scheduler] if scheduler else (["first", "second"] if nondet else ["first"])
    best = None
    for sched in scheds:
        fw = _Forward(p, unroll, cap, sched, bits)
        out = fw.run(p.main, {tuple(env0[v] for v in fw.vars): fw.one})
        cost = fw.value(fw.cost)
        final = {s: fw.value(w) for s, w in out.items()}
        tail = Fraction(0)
        if fn is not None:
            tail = sum((w * Fraction(fn(fw.env(s))) for s, w in final.items()), Fraction(0))
        res = ErtResult(cost + tail, fw.value(fw.residual), cost, final,
                        f"forward-{sched}" if nondet else "forward")
        if best is None or res.lower > best.lower:
            best = res
    return best


def eval_bound(bound, state: dict) -> Fraction:
    """Value of a symbolic bound at ``state``."""
    return bound.eval(state)
