"""Potential functions built from interval atoms.

An atom ``|[a,b]|`` denotes ``max(0, b - a)``. Internally an atom is the
affine expression ``L = b - a`` (a :class:`LinExpr`), so its value is
``max(0, L)``. A base function is a product of atoms, represented as a
sorted tuple; the empty tuple is the constant function 1. A potential is a
linear combination of base functions.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .frontend.ast import (Assert, Assign, Call, If, NonDet, ProbIf, Sample,
                           Seq, Tick, While, children, expr_vars, walk)
from .logic import (BOTTOM, LinCtx, LinExpr, cond_constraints, conj, entails,
                    linearize)

ONE = ()


# --- atoms -----------------------------------------------------------------

def atom_ok(le: LinExpr) -> bool:
    """Atoms have the shape ``v + c``, ``-v + c`` or ``v - w + c``."""
    cs = sorted(c for _, c in le.coeffs)
    return (cs in ([1], [-1], [-1, 1])) and le.const.denominator == 1


def atom_endpoints(le: LinExpr) -> tuple:
    """``(lo, hi)`` strings with ``hi - lo == le``."""
    pos = [v for v, c in le.coeffs if c > 0]
    neg = [v for v, c in le.coeffs if c < 0]
    k = le.const
    if len(pos) == 1 and len(neg) == 1:
        lo, hi = neg[0], pos[0]
        return (lo, _plus(hi, k)) if k >= 0 else (_plus(lo, -k), hi)
    if len(pos) == 1 and not neg:
        return ("0", _plus(pos[0], k)) if k >= 0 else (str(-k), pos[0])
    if len(neg) == 1 and not pos:
        return (neg[0], str(k))
    return ("0", str(le))


def _plus(v, k):
    return v if k == 0 else f"{v}+{k}"


def atom_str(le: LinExpr) -> str:
    lo, hi = atom_endpoints(le)
    return f"|[{lo},{hi}]|"


def atom_from_endpoints(lo: LinExpr, hi: LinExpr) -> LinExpr:
    return hi - lo


def atom_key(le: LinExpr):
    """Two-variable atoms first, then alphabetical by printed form."""
    return (-len(le.coeffs), atom_str(le))


def atom_value(le: LinExpr, env) -> Fraction:
    v = le.eval(env)
    return v if v > 0 else Fraction(0)


# --- base functions --------------------------------------------------------

def make_base(atoms) -> tuple:
    return tuple(sorted(atoms, key=atom_key))


def base_degree(b: tuple) -> int:
    return len(b)


def base_str(b: tuple) -> str:
    if not b:
        return "1"
    parts = []
    for a, grp in itertools.groupby(b):
        n = len(list(grp))
        parts.append(atom_str(a) + (f"^{n}" if n > 1 else ""))
    return "·".join(parts)


def base_vars(b: tuple) -> set:
    out = set()
    for a in b:
        out |= a.vars()
    return out


def eval_base(b: tuple, env) -> Fraction:
    out = Fraction(1)
    for a in b:
        v = a.eval(env)
        if v <= 0:
            return Fraction(0)
        out *= v
    return out


def base_order_key(b: tuple):
    exps = sorted((len(list(g)) for _, g in itertools.groupby(b)), reverse=True)
    return (-len(b), [-e for e in exps], [atom_key(a) for a in b])


class BaseFnSet:
    """Ordered set of base functions; index 0 is the constant 1."""

    def __init__(self, bases, aux=()):
        seen = {ONE: 0}
        order = [ONE]
        for b in sorted(set(bases) - {ONE}, key=base_order_key):
            seen[b] = len(order)
            order.append(b)
        self.bases = order
        self.index = seen
        self.atoms = sorted({a for b in order for a in b}, key=atom_key)
        self.atom_set = set(self.atoms)
        self.max_degree = max(len(b) for b in order)
        by_coeffs = {}
        for a in self.atoms:
            by_coeffs.setdefault(a.coeffs, []).append(a)
        self._by_coeffs = by_coeffs
        self._subst_cache = {}
        aux = set(aux)
        self.aux = {i for i, b in enumerate(order) if any(a in aux for a in b)}

    def __len__(self):
        return len(self.bases)

    def __iter__(self):
        return iter(self.bases)

    def __contains__(self, b):
        return b in self.index

    def __getitem__(self, i):
        return self.bases[i]

    def atoms_like(self, le: LinExpr) -> list:
        return self._by_coeffs.get(le.coeffs, [])

    def eval(self, coeffs, env) -> Fraction:
        return sum((c * eval_base(self.bases[i], env) for i, c in coeffs.items()),
                   Fraction(0))

    def involving(self, x: str) -> list:
        return [i for i, b in enumerate(self.bases) if any(a.coeff(x) for a in b)]

    def __str__(self):
        return ", ".join(base_str(b) for b in self.bases)


# --- substitution ----------------------------------------------------------

def subst_atom(le: LinExpr, x: str, e: LinExpr, B: BaseFnSet, ctx: LinCtx) -> Optional[dict]:
    """Express ``max(0, le[e/x])`` as a combination of atoms of ``B`` and
    the constant, valid in every state of ``ctx``. Returns ``{atom-or-ONE:
    coeff}`` with atoms as 1-tuples, or ``None`` if no exact form exists."""
    new = le.subst(x, e)
    if new == le:
        return {(le,): Fraction(1)}
    if new.is_const():
        return {ONE: new.const} if new.const > 0 else {}
    if new in B.atom_set:
        return {(new,): Fraction(1)}
    if entails(ctx, -new):
        return {}
    best = None
    for a in B.atoms_like(new):
        k = new.const - a.const
        if entails(ctx, a) and (k >= 0 or entails(ctx, new)):
            if best is None or (abs(k), atom_key(a)) < (abs(best[1]), atom_key(best[0])):
                best = (a, k)
    if best is None:
        return _split_atom(new, B, ctx)
    a, k = best
    out = {(a,): Fraction(1)}
    if k:
        out[ONE] = k
    return out


def _split_atom(new: LinExpr, B: BaseFnSet, ctx: LinCtx) -> Optional[dict]:
    """``|new| = |a1| + |a2| + k`` for atoms with ``new = a1 + a2 + k`` when
    ``ctx`` makes ``new``, ``a1`` and ``a2`` non-negative."""
    if not entails(ctx, new):
        return None
    best = None
    atoms = B.atoms
    for n, a1 in enumerate(atoms):
        for a2 in atoms[n:]:
            rest = new - a1 - a2
            if not rest.is_const():
                continue
            key = (abs(rest.const), atom_key(a1), atom_key(a2))
            if best is not None and key >= best[0]:
                continue
            if entails(ctx, a1) and entails(ctx, a2):
                best = (key, a1, a2, rest.const)
    if best is None:
        return None
    _, a1, a2, k = best
    out = {}
    for a in (a1, a2):
        out[(a,)] = out.get((a,), 0) + Fraction(1)
    if k:
        out[ONE] = Fraction(k)
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = make_base(m1 + m2)
            out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c != 0}


def substitute(b: tuple, x: str, e: LinExpr, B: BaseFnSet, ctx: LinCtx) -> Optional[dict]:
    """``b[e/x]`` as ``{index: coeff}`` over ``B``, exact on ``ctx``; ``None``
    when ``b`` is unstable under the assignment."""
    poly = {ONE: Fraction(1)}
    for a in b:
        pa = subst_atom(a, x, e, B, ctx)
        if pa is None:
            return None
        poly = _poly_mul(poly, pa)
        if not poly:
            return {}
    out = {}
    for m, c in poly.items():
        i = B.index.get(m)
        if i is None:
            return None
        out[i] = c
    return out


def stable_set(x: str, e: Optional[LinExpr], B: BaseFnSet, ctx: LinCtx) -> dict:
    """Map each post index ``j`` to its pre-image ``{i: a_ij}``, or to
    ``None`` when ``B[j]`` is unstable under ``x = e``. Only indices whose
    base function mentions ``x`` appear; the rest map to themselves."""
    key = (x, e, ctx)
    hit = B._subst_cache.get(key)
    if hit is not None:
        return hit
    out = {}
    for j in B.involving(x):
        out[j] = None if e is None else substitute(B[j], x, e, B, ctx)
    B._subst_cache[key] = out
    return out


# --- base function generation ---------------------------------------------

def _guard_forms(cond) -> list:
    return [g for g in cond_constraints(cond) if not g.is_const()]


def _max_decrease(c, g: LinExpr, program) -> Optional[Fraction]:
    """Largest amount one run of ``c`` can lower ``g`` (negative if ``g``
    always grows); ``None`` if ``c`` changes a variable of ``g`` in a way
    that is not a bounded shift."""
    vs = g.vars()
    if isinstance(c, Assign):
        if c.var not in vs:
            return Fraction(0)
        lin = linearize(c.expr)
        if lin is None or lin.coeff(c.var) != 1 or len(lin.coeffs) != 1:
            return None
        return -g.coeff(c.var) * lin.const
    if isinstance(c, Sample):
        if c.var not in vs:
            return Fraction(0)
        lin = linearize(c.expr)
        if lin is None or lin.coeff(c.var) != 1 or len(lin.coeffs) != 1:
            return None
        lo, hi = c.dist.bounds()
        sign = 1 if c.op == "+" else -1
        shifts = [lin.const + sign * lo, lin.const + sign * hi]
        return max(-g.coeff(c.var) * s for s in shifts)
    if isinstance(c, Seq):
        a = _max_decrease(c.first, g, program)
        b = _max_decrease(c.second, g, program)
        return None if a is None or b is None else a + b
    if isinstance(c, (ProbIf, NonDet, If)):
        kids = (c.left, c.right) if not isinstance(c, If) else (c.then, c.orelse)
        ds = [_max_decrease(k, g, program) for k in kids]
        return None if None in ds else max(ds)
    if isinstance(c, While):
        from .frontend.ast import modified_vars
        return None if modified_vars(c, program.procs) & vs else Fraction(0)
    if isinstance(c, Call):
        return _max_decrease(program.procs[c.proc], g, program)
    return Fraction(0)


def _has_tick(c, program, seen=None) -> bool:
    seen = set() if seen is None else seen
    for node in walk(c):
        if isinstance(node, Tick) and node.amount > 0:
            return True
        if isinstance(node, Call) and node.proc not in seen:
            seen.add(node.proc)
            if _has_tick(program.procs[node.proc], program, seen):
                return True
    return False


def _ticks_directly(c) -> bool:
    """A positive tick in ``c`` outside nested loops and calls."""
    if isinstance(c, Tick):
        return c.amount > 0
    if isinstance(c, (While, Call)):
        return False
    return any(_ticks_directly(k) for k in children(c))


def _cmd_vars(c) -> set:
    out = set()
    for node in walk(c):
        if isinstance(node, (Assert, If, While)):
            out |= expr_vars(node.cond)
        elif isinstance(node, (Assign, Sample)):
            out |= expr_vars(node.expr) | {node.var}
    return out


def gen_atoms(program, contexts=None) -> list:
    """Degree-one atoms suggested by the program text."""
    atoms = []

    def add(le):
        if le.is_const() or not atom_ok(le):
            return
        if le not in atoms:
            atoms.append(le)

    cmds = list(program.commands())
    # guards and the distance to leaving the loop
    for c in cmds:
        if isinstance(c, (While, If, Assert)):
            for g in _guard_forms(c.cond):
                add(g)
                if not isinstance(c, Assert):  # assumptions are plain facts
                    add(g + 1)
            if isinstance(c, If):
                for g in [g for g in cond_constraints(c.cond, negate=True) if not g.is_const()]:
                    add(g)
                    add(g + 1)
        if isinstance(c, While):
            for g in _guard_forms(c.cond):
                d = _max_decrease(c.body, g, program)
                if d is not None and d > 1:
                    add(g + d)
    # variables of loops that carry cost
    for c in cmds:
        if isinstance(c, While) and _ticks_directly(c.body):
            for v in sorted(_cmd_vars(c)):
                add(LinExpr.var(v))
    # loop-head facts of interval shape
    if contexts is not None:
        for ctx in contexts.head.values():
            for le in ctx.sorted():
                add(le)
    # shifts that would otherwise leave an atom unstable; these only serve
    # intermediate annotations and stay out of the final bound
    aux = []
    if contexts is not None:
        base = list(atoms)
        for c in cmds:
            ctx = contexts.pre.get(c.label, BOTTOM)
            if ctx.bottom:
                continue
            for x, lin in _shift_images(c):
                for a in base:
                    if not a.coeff(x):
                        continue
                    new = a.subst(x, lin)
                    if new in atoms or new.const <= a.const or entails(ctx, -new):
                        continue
                    like = [b for b in atoms if b.coeffs == new.coeffs]
                    if not any(entails(ctx, b) and (new.const >= b.const or entails(ctx, new))
                               for b in like):
                        add(new)
                        if atoms[-1] == new:
                            aux.append(new)
    return sorted(atoms, key=atom_key), aux


def _shift_images(c) -> list:
    """``(x, x + k)`` pairs for the values an increment may assign."""
    if isinstance(c, (Assign, Sample)):
        lin = linearize(c.expr)
        if lin is None or lin.coeff(c.var) != 1 or len(lin.coeffs) != 1:
            return []
        if isinstance(c, Assign):
            return [(c.var, lin)]
        if c.op not in ("+", "-"):
            return []
        sign = 1 if c.op == "+" else -1
        return [(c.var, lin + sign * v) for v, _ in c.dist.support()]
    return []


def gen_base_functions(program, contexts=None, degree: int = 2, extra=()) -> BaseFnSet:
    atoms, aux = gen_atoms(program, contexts)
    for m in extra:
        for a in m:
            if a not in atoms:
                atoms.append(a)
    bases = {ONE}
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(atoms, d):
            bases.add(make_base(combo))
    for m in extra:
        bases.add(make_base(m))
    return BaseFnSet(bases, aux)


# --- rewrite functions -----------------------------------------------------

@dataclass(frozen=True)
class Rewrite:
    """A potential ``F`` with ``F >= 0`` in every state satisfying ``guard``."""

    coeffs: tuple  # sorted (index, coeff) pairs
    guard: tuple = ()  # LinExprs, each required >= 0
    kind: str = ""

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def applicable(self, ctx: LinCtx) -> bool:
        return all(entails(ctx, g) for g in self.guard)


def _rw(d: dict, guard=(), kind="") -> Optional[Rewrite]:
    d = {i: Fraction(c) for i, c in d.items() if c != 0}
    if not d:
        return None
    return Rewrite(tuple(sorted(d.items())), tuple(guard), kind)


def _times(B: BaseFnSet, poly: dict, b: tuple) -> Optional[dict]:
    out = {}
    for m, c in poly.items():
        i = B.index.get(make_base(m + b))
        if i is None:
            return None
        out[i] = out.get(i, 0) + c
    return out


def gen_rewrite_functions(B: BaseFnSet) -> list:
    """Rewrite functions over ``B``.

    * the constant 1 and every base function (each is non-negative);
    * for atoms ``L`` and ``L - k`` (k > 0): ``|L| - |L-k| - k`` and its
      negation, which vanish when ``L - k >= 0``; ``|L-k| + k - |L|``
      and ``|L| - |L-k|`` hold everywhere;
    * for atoms with ``L3 = L1 + L2``: ``|L1| + |L2| - |L3|`` everywhere and
      its negation when ``L1, L2 >= 0``;
    * products of the above with atoms, where the products are in ``B``;
    * on integers, ``(|L| - |L-1| - 1) * |L|`` vanishes identically and
      ``|L|^2 - |L|`` is non-negative.
    """
    out = []
    seen = set()

    def push(rw):
        if rw is not None and (rw.coeffs, rw.guard) not in seen:
            seen.add((rw.coeffs, rw.guard))
            out.append(rw)

    push(_rw({0: 1}, kind="const"))
    for i in range(1, len(B)):
        push(_rw({i: 1}, kind="absorb"))
    atoms = B.atoms
    linear = []  # (poly over monomials, guard, both signs?)
    for a1 in atoms:
        for a2 in B.atoms_like(a1):
            k = a1.const - a2.const
            if k <= 0:
                continue
            eq = {(a1,): 1, (a2,): -1, ONE: -k}
            linear.append((eq, (a2,), True))
            linear.append(({(a2,): 1, ONE: k, (a1,): -1}, (), False))
            linear.append(({(a1,): 1, (a2,): -1}, (), False))
    for a1, a2 in itertools.combinations_with_replacement(atoms, 2):
        s = a1 + a2
        if s.is_const():
            continue
        for a3 in atoms:
            if a3 == s:
                linear.append(({(a3,): 1, (a1,): -1, (a2,): -1}, (a1, a2), True))
    for poly, guard, both in linear:
        for mult in [ONE] + ([(a,) for a in atoms] if B.max_degree >= 2 else []):
            d = _times(B, poly, mult)
            if d is None:
                continue
            # the unguarded inequality holds everywhere, the negated equation
            # needs its guard
            if both:
                push(_rw(d, guard, "eq"))
                push(_rw({i: -c for i, c in d.items()}, (), "ineq"))
            else:
                push(_rw(d, guard, "ineq"))
    if B.max_degree >= 2:
        for a1 in atoms:
            if a1.coeffs and all(c.denominator == 1 for _, c in a1.coeffs):
                sq = B.index.get(make_base((a1, a1)))
                lin = B.index.get((a1,))
                if sq is not None and lin is not None:
                    push(_rw({sq: 1, lin: -1}, kind="int"))
                a2 = a1 - 1
                if a2 in B.atom_set:
                    d = _times(B, {(a1,): 1, (a2,): -1, ONE: -1}, (a1,))
                    if d is not None:
                        push(_rw(d, kind="int"))
                        push(_rw({i: -c for i, c in d.items()}, kind="int"))
    return out


# --- hints -----------------------------------------------------------------

class HintError(ValueError):
    pass


_ATOM_RE = re.compile(r"\|\[([^\],]+),([^\]]+)\]\|")


def parse_poly(text: str) -> dict:
    """Parse ``c·|[a,b]|^k·|[c,d]| + ...`` into ``{monomial: coeff}``."""
    from .frontend.parser import parse_expr
    src = text.replace("·", "*").replace(" ", "")
    out = {}
    pos = 0
    if not src:
        raise HintError("empty potential")
    while pos < len(src):
        sign = 1
        if src[pos] in "+-":
            sign = -1 if src[pos] == "-" else 1
            pos += 1
        coeff = Fraction(sign)
        atoms = []
        while True:
            m = _ATOM_RE.match(src, pos)
            if m:
                lo = linearize(parse_expr(m.group(1)))
                hi = linearize(parse_expr(m.group(2)))
                if lo is None or hi is None:
                    raise HintError(f"non-linear atom endpoint in {m.group(0)}")
                a = hi - lo
                pos = m.end()
                k = 1
                pm = re.match(r"\^(\d+)", src[pos:])
                if pm:
                    k = int(pm.group(1))
                    pos += pm.end()
                atoms.extend([a] * k)
            else:
                nm = re.match(r"\d+(?:\.\d+)?(?:/\d+)?", src[pos:])
                if not nm:
                    raise HintError(f"cannot parse potential at {src[pos:]!r}")
                coeff *= Fraction(nm.group(0))
                pos += nm.end()
            if pos < len(src) and src[pos] == "*":
                pos += 1
                continue
            break
        mono = make_base(atoms)
        out[mono] = out.get(mono, 0) + coeff
        if pos < len(src) and src[pos] not in "+-":
            raise HintError(f"unexpected {src[pos]!r} in potential")
    return {m: c for m, c in out.items() if c != 0}


@dataclass
class Hint:
    guard: tuple  # LinExprs
    poly: dict    # monomial -> coeff


def parse_hints(text: str) -> list:
    """One hint per line: ``<condition> => <potential>`` (``:`` also works
    as the separator), where the condition is a conjunction in program
    syntax or ``true``. ``#`` starts a comment."""
    from .frontend.parser import ParseError, parse_expr
    hints = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=>" if "=>" in line else ":"
        if sep not in line:
            raise HintError(f"line {n}: expected '<condition> => <potential>'")
        cond, poly = line.split(sep, 1)
        try:
            guard = tuple(cond_constraints(parse_expr(cond.strip())))
        except ParseError as exc:
            raise HintError(f"line {n}: {exc}") from None
        hint = Hint(guard, parse_poly(poly))
        if not verify_nonneg(hint.poly, hint.guard):
            raise HintError(f"line {n}: potential is not provably non-negative "
                            "under its condition")
        hints.append(hint)
    return hints


def verify_nonneg(poly: dict, guard=()) -> bool:
    """Decide ``poly >= 0`` on ``guard`` for potentials of degree <= 1 by
    checking every sign pattern of the atoms; higher degrees are rejected."""
    if any(len(m) > 1 for m in poly):
        return False
    atoms = sorted({m[0] for m in poly if m}, key=atom_key)
    base = LinCtx.of(guard)
    if base.bottom:
        return True
    for signs in itertools.product((True, False), repeat=len(atoms)):
        extra = [a if s else -a for a, s in zip(atoms, signs)]
        region = conj(base, extra)
        if region.bottom:
            continue
        lin = LinExpr.constant(poly.get(ONE, 0))
        for a, s in zip(atoms, signs):
            if s:
                lin = lin + a * poly[(a,)]
        if not entails(region, lin):
            return False
    return True


def hint_rewrites(hints: list, B: BaseFnSet) -> list:
    out = []
    for h in hints:
        d = {}
        for m, c in h.poly.items():
            i = B.index.get(m)
            if i is None:
                break
            d[i] = c
        else:
            rw = _rw(d, h.guard, "hint")
            if rw is not None:
                out.append(rw)
    return out
