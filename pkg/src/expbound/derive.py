"""Backward derivation of potential annotations as linear constraints.

Annotations are vectors indexed by the base functions. Each coordinate is
an affine form over LP variables (a dict ``var -> coeff`` with the key
``CONST`` for the constant part). Deriving a command maps the annotation
after it to the annotation before it and records linear constraints in
the shared :class:`~expbound.lp.LinearProgram`. All LP variables are
non-negative.

Weakening points add ``sum(u_F * F)`` for the rewrite functions ``F`` that
apply in the local context. Loop invariants, procedure specifications and
the root are of the form ``sum(u_F * F)`` as well, which makes them
non-negative on their context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .frontend.ast import (Abort, Assert, Assign, Call, If, NonDet, ProbIf,
                           Sample, Seq, Skip, Tick, While, modified_vars)
from .logic import TOP, LinCtx, linearize
from .lp import LinearProgram
from .potential import BaseFnSet, base_vars, stable_set

CONST = -1


def aff_add(a: dict, b: dict, k=1) -> dict:
    out = dict(a)
    for v, c in b.items():
        nv = out.get(v, 0) + k * c
        if nv:
            out[v] = nv
        elif v in out:
            del out[v]
    return out


def aff_scale(a: dict, k) -> dict:
    if k == 0:
        return {}
    return {v: c * k for v, c in a.items()}


@dataclass
class Ann:
    coords: list
    relaxed_at: Optional[LinCtx] = None

    def copy(self, relaxed_at=None) -> "Ann":
        return Ann(list(self.coords), relaxed_at)


@dataclass
class ProcSpec:
    pre: Ann
    post: Ann


@dataclass
class Derivation:
    lp: LinearProgram
    B: BaseFnSet
    root: list  # LP variable index per base function
    annotations: dict = field(default_factory=dict)  # label -> (pre, post)
    specs: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)


class Deriver:
    def __init__(self, program, B: BaseFnSet, rewrites: list, contexts,
                 specs_per_proc: int = 1, record: bool = False):
        self.p = program
        self.B = B
        self.N = len(B)
        self.rewrites = rewrites
        self.ctx = contexts
        self.lp = LinearProgram()
        self.record = record
        self.annotations = {}
        self.K = max(1, specs_per_proc)
        self._appl = {}
        self._mods = {name: modified_vars(body, program.procs)
                      for name, body in program.procs.items()}
        self.specs = {}
        self.relax_points = 0

    # -- helpers --------------------------------------------------------------

    def zero(self) -> Ann:
        return Ann([{} for _ in range(self.N)])

    def applicable(self, ctx: LinCtx) -> list:
        hit = self._appl.get(ctx)
        if hit is None:
            hit = [rw for rw in self.rewrites if rw.applicable(ctx)]
            self._appl[ctx] = hit
        return hit

    def combo(self, ctx: LinCtx, tag: str) -> list:
        """Fresh ``sum(u_F * F)`` over rewrites applicable in ``ctx``."""
        coords = [{} for _ in range(self.N)]
        if ctx.bottom:
            # unreachable: any potential will do
            for i in range(self.N):
                up = self.lp.new_var(f"{tag}_p{i}")
                un = self.lp.new_var(f"{tag}_n{i}")
                coords[i] = {up: Fraction(1), un: Fraction(-1)}
            return coords
        for n, rw in enumerate(self.applicable(ctx)):
            u = self.lp.new_var(f"{tag}_u{n}")
            for i, c in rw.coeffs:
                coords[i][u] = c
        return coords

    def relax(self, ann: Ann, ctx: LinCtx, tag: str) -> Ann:
        """``ann + sum(u_F * F)``: a potential that dominates ``ann`` on ``ctx``."""
        if ann.relaxed_at is not None and ann.relaxed_at == ctx:
            return ann
        self.relax_points += 1
        extra = self.combo(ctx, tag)
        return Ann([aff_add(a, e) for a, e in zip(ann.coords, extra)], ctx)

    def nonneg(self, ctx: LinCtx, tag: str) -> Ann:
        return Ann(self.combo(ctx, tag), ctx)

    def equate(self, a: Ann, b: Ann) -> None:
        for x, y in zip(a.coords, b.coords):
            d = aff_add(x, y, -1)
            if not d:
                continue
            c = d.pop(CONST, 0)
            self.lp.add(d, "==", -c)

    def set_zero(self, aff: dict) -> None:
        d = dict(aff)
        c = d.pop(CONST, 0)
        if d or c:
            self.lp.add(d, "==", -c)

    # -- commands -------------------------------------------------------------

    def derive(self, c, post: Ann, spec_index: int = 0) -> Ann:
        pre = self._derive(c, post, spec_index)
        if self.record:
            self.annotations[c.label] = (pre, post)
        return pre

    def _derive(self, c, post: Ann, k: int) -> Ann:
        pre_ctx = self.ctx.pre[c.label]
        post_ctx = self.ctx.post[c.label]
        tag = f"c{c.label}"
        if isinstance(c, Skip):
            return post
        if isinstance(c, Abort):
            return self.zero()
        if isinstance(c, Assert):
            return Ann(post.coords, None)
        if isinstance(c, Tick):
            out = post.copy(post.relaxed_at)
            out.coords[0] = aff_add(out.coords[0], {CONST: c.amount})
            return out
        if isinstance(c, Seq):
            return self.derive(c.first, self.derive(c.second, post, k), k)
        if isinstance(c, ProbIf):
            left = self.derive(c.left, post, k)
            right = self.derive(c.right, post, k)
            p = c.prob
            return Ann([aff_add(aff_scale(a, p), b, 1 - p)
                        for a, b in zip(left.coords, right.coords)])
        if isinstance(c, (If, NonDet)):
            kids = (c.then, c.orelse) if isinstance(c, If) else (c.left, c.right)
            pres = [self.derive(kid, post, k) for kid in kids]
            ctxs = [self.ctx.pre[kid.label] for kid in kids]
            live = [(a, g) for a, g in zip(pres, ctxs) if not g.bottom]
            if not live:
                return self.nonneg(pre_ctx, tag + "_dead")
            out = self.relax(live[0][0], live[0][1], tag + "_b0")
            for n, (a, g) in enumerate(live[1:], 1):
                self.equate(out, self.relax(a, g, f"{tag}_b{n}"))
            return Ann(out.coords, None)
        if isinstance(c, Assign):
            lin = linearize(c.expr)
            return self._subst(c.var, [(lin, Fraction(1))], post, pre_ctx, post_ctx, tag)
        if isinstance(c, Sample):
            lin = linearize(c.expr)
            branches = []
            for v, p in c.dist.support():
                if lin is None or c.op not in ("+", "-"):
                    branches.append((None, p))
                else:
                    branches.append((lin + v if c.op == "+" else lin - v, p))
            return self._subst(c.var, branches, post, pre_ctx, post_ctx, tag)
        if isinstance(c, While):
            head = self.ctx.head[c.label]
            inv = self.nonneg(head, tag + "_inv")
            body_pre = self.derive(c.body, Ann(inv.coords, None), k)
            body_ctx = self.ctx.pre[c.body.label]
            if not body_ctx.bottom:
                self.equate(inv, self.relax(body_pre, body_ctx, tag + "_body"))
            if not post_ctx.bottom:
                self.equate(inv, self.relax(post, post_ctx, tag + "_exit"))
            return Ann(inv.coords, None)
        if isinstance(c, Call):
            return self._call(c, post, pre_ctx, post_ctx, tag, k)
        raise TypeError(c)

    def _subst(self, x, branches, post, pre_ctx, post_ctx, tag) -> Ann:
        """Pre-annotation of a (possibly random) assignment to ``x``, given
        ``(expr, prob)`` pairs for the assigned value."""
        touched = self.B.involving(x)
        if not touched:
            return post
        if pre_ctx.bottom:
            return self.nonneg(pre_ctx, tag + "_dead")
        p = self.relax(post, post_ctx, tag + "_post") if not post_ctx.bottom else post
        pre = [dict(a) for a in p.coords]
        for j in touched:
            pre[j] = {}
        unstable = set()
        for lin, prob in branches:
            images = stable_set(x, lin, self.B, pre_ctx)
            for j in touched:
                img = images[j]
                if img is None:
                    unstable.add(j)
                    continue
                for i, a in img.items():
                    pre[i] = aff_add(pre[i], p.coords[j], prob * a)
        for j in sorted(unstable):
            self.set_zero(p.coords[j])
        return self.relax(Ann(pre), pre_ctx, tag + "_pre")

    def spec_for(self, name: str, k: int) -> ProcSpec:
        key = (name, k)
        if key not in self.specs:
            entry = self.ctx.proc_entry.get(name, TOP)
            exit_ = self.ctx.proc_exit.get(name, TOP)
            self.specs[key] = ProcSpec(self.nonneg(entry, f"spec_{name}{k}_pre"),
                                       self.nonneg(exit_, f"spec_{name}{k}_post"))
        return self.specs[key]

    def _call(self, c, post, pre_ctx, post_ctx, tag, k) -> Ann:
        spec = self.spec_for(c.proc, k % self.K)
        mods = self._mods[c.proc]
        frame = [{} for _ in range(self.N)]
        for i, b in enumerate(self.B):
            if not (base_vars(b) & mods):
                frame[i] = {self.lp.new_var(f"{tag}_f{i}"): Fraction(1)}
        if not post_ctx.bottom:
            self.equate(self.relax(post, post_ctx, tag + "_post"),
                        Ann([aff_add(a, f) for a, f in zip(spec.post.coords, frame)]))
        pre = Ann([aff_add(a, f) for a, f in zip(spec.pre.coords, frame)])
        return self.relax(pre, pre_ctx, tag + "_pre")

    # -- program --------------------------------------------------------------

    def run(self) -> Derivation:
        for n in range(self.K):
            for name in self.p.procs:
                self.spec_for(name, n)
        done = set()
        while len(done) < len(self.specs):
            for key in sorted(self.specs):
                if key in done:
                    continue
                done.add(key)
                name, n = key
                body = self.p.procs[name]
                spec = self.specs[key]
                body_pre = self.derive(body, Ann(spec.post.coords, None), n)
                entry = self.ctx.pre[body.label]
                if not entry.bottom:
                    self.equate(spec.pre, self.relax(body_pre, entry, f"proc_{name}{n}"))
        main_pre = self.derive(self.p.main, self.zero(), 0)
        # auxiliary base functions never appear in the bound itself
        root = [None if i in self.B.aux else self.lp.new_var(f"root{i}")
                for i in range(self.N)]
        entry = self.ctx.pre[self.p.main.label]
        self.equate(Ann([{r: Fraction(1)} if r is not None else {} for r in root]),
                    self.relax(main_pre, entry, "root"))
        stats = {"vars": self.lp.num_vars, "constraints": len(self.lp.rows),
                 "base_functions": self.N, "rewrites": len(self.rewrites),
                 "weakenings": self.relax_points}
        return Derivation(self.lp, self.B, root, dict(self.annotations),
                          dict(self.specs), stats)


def derive_program(program, B, rewrites, contexts, specs_per_proc=1,
                   record=False) -> Derivation:
    return Deriver(program, B, rewrites, contexts, specs_per_proc, record).run()


def dump_constraints(d: Derivation) -> str:
    lines = [f"# {d.stats['vars']} variables, {d.stats['constraints']} constraints",
             "# base functions: " + str(d.B)]
    for coeffs, sense, rhs in d.lp.rows:
        terms = " ".join(f"{'+' if c > 0 else '-'} {abs(c)}*{d.lp.names[v]}"
                         for v, c in sorted(coeffs.items()))
        lines.append(f"{terms or '0'} {sense} {rhs}")
    return "\n".join(lines) + "\n"
