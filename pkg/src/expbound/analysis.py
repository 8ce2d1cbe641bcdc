"""End-to-end bound inference for a program."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import lp as lpmod
from .bound import Bound, extract_bound
from .derive import Derivation, derive_program, dump_constraints
from .logic import Contexts, dump_contexts, infer_contexts
from .potential import (BaseFnSet, gen_base_functions, gen_rewrite_functions,
                        hint_rewrites)


@dataclass
class AnalysisReport:
    program: str
    degree: int
    bound: Optional[Bound]
    status: str  # "bound" | "no bound"
    seconds: float
    stats: dict = field(default_factory=dict)
    contexts: Optional[Contexts] = None
    derivation: Optional[Derivation] = None
    objectives: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.bound is not None


def atom_weights(B: BaseFnSet) -> dict:
    """Weight ``10^n`` where ``n`` counts the other atoms of ``B`` whose
    interval contains this one (same variables, pointwise larger). Wider
    atoms are cheaper, so the optimizer prefers ``|[0,x]|`` to
    ``|[1,x]| + 1``."""
    out = {}
    for a in B.atoms:
        above = sum(1 for b in B.atoms_like(a) if b != a and b.const > a.const)
        out[a] = 10 ** above
    return out


def objective_levels(B: BaseFnSet, root: list) -> list:
    """One weighted objective per degree, highest degree first, ending with
    the constant term."""
    w = atom_weights(B)
    levels = []
    for d in range(B.max_degree, 0, -1):
        obj = {}
        for i, b in enumerate(B.bases):
            if len(b) == d and root[i] is not None:
                wt = 1
                for a in b:
                    wt *= w[a]
                obj[root[i]] = Fraction(wt)
        levels.append(obj)
    levels.append({root[0]: Fraction(1)})
    return levels


def analyze(program, degree: int = 2, specs_per_proc: int = 1, hints=(),
            keep: bool = False) -> AnalysisReport:
    t0 = time.perf_counter()
    contexts = infer_contexts(program)
    extra = [m for h in hints for m in h.poly if m]
    B = gen_base_functions(program, contexts, degree, extra=extra)
    rewrites = gen_rewrite_functions(B) + hint_rewrites(hints, B)
    d = derive_program(program, B, rewrites, contexts, specs_per_proc, record=keep)
    t1 = time.perf_counter()
    levels = objective_levels(B, d.root)
    sol = lpmod.iterative_minimize(d.lp, levels)
    t2 = time.perf_counter()
    stats = dict(d.stats)
    stats.update(pivots=sol.pivots, derive_seconds=round(t1 - t0, 3),
                 lp_seconds=round(t2 - t1, 3))
    bound = None
    if sol.status == "optimal":
        bound = extract_bound(B, [sol.values[r] if r is not None else 0 for r in d.root])
    return AnalysisReport(program.name or "<program>", degree, bound,
                          "bound" if bound is not None else "no bound",
                          t2 - t0, stats, contexts if keep else None,
                          d if keep else None, sol.objectives)


def analyze_text(text: str, **kw) -> AnalysisReport:
    from .frontend import parse_program
    return analyze(parse_program(text), **kw)


__all__ = ["AnalysisReport", "analyze", "analyze_text", "atom_weights",
           "objective_levels", "dump_constraints", "dump_contexts"]
