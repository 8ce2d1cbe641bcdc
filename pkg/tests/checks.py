"""Exact randomized checks shared by the property tests and the acceptance
suite: rewrite functions are non-negative where their guards hold, stable
substitutions are identities, and potentials are linear in their
coefficients."""

import random
from fractions import Fraction
from functools import lru_cache

from expbound.cli import corpus_dir
from expbound.frontend import Assign, Sample, load_program
from expbound.logic import infer_contexts, linearize
from expbound.potential import eval_base, gen_base_functions, gen_rewrite_functions, stable_set

NAMES = tuple(sorted(p.stem for p in corpus_dir().glob("*.imp")))


@lru_cache(maxsize=None)
def setup(name, degree=2):
    p = load_program(corpus_dir() / f"{name}.imp")
    ctx = infer_contexts(p)
    B = gen_base_functions(p, ctx, degree)
    return p, ctx, B, gen_rewrite_functions(B)


@lru_cache(maxsize=None)
def subst_cases(name):
    """``(x, expr, pre-context)`` for every assignment and sampling branch."""
    p, ctx, B, _ = setup(name)
    out = []
    for c in p.commands():
        pre = ctx.pre[c.label]
        if pre.bottom:
            continue
        lin = linearize(c.expr) if isinstance(c, (Assign, Sample)) else None
        if lin is None:
            continue
        if isinstance(c, Assign):
            out.append((c.var, lin, pre))
        else:
            for v, _ in c.dist.support():
                out.append((c.var, lin + v if c.op == "+" else lin - v, pre))
    return tuple(out)


def satisfies(ineqs, env):
    return all(le.eval(env) >= 0 for le in ineqs)


def sample_state(rng, variables, ineqs, tries=200):
    """Random integer state satisfying ``ineqs`` by rejection, or None."""
    for _ in range(tries):
        span = rng.choice((3, 10, 60))
        env = {v: rng.randint(-span, span) for v in variables}
        if satisfies(ineqs, env):
            return env
    return None


def check_rewrite(rng, name):
    """One rewrite-function check; None if no state met the guard."""
    p, _, B, rws = setup(name)
    rw = rng.choice(rws)
    env = sample_state(rng, p.globals, rw.guard)
    if env is None:
        return None
    value = sum((c * eval_base(B[i], env) for i, c in rw.coeffs), Fraction(0))
    return value >= 0


def check_subst(rng, name):
    """One substitution check: ``B[j](env[x := e]) == sum a_ij B[i](env)``."""
    cases = subst_cases(name)
    if not cases:
        return None
    p, _, B, _ = setup(name)
    x, e, pre = rng.choice(cases)
    env = sample_state(rng, p.globals, pre.ineqs)
    if env is None:
        return None
    after = dict(env)
    after[x] = e.eval(env)
    images = stable_set(x, e, B, pre)
    for j, img in images.items():
        if img is None:
            continue
        rhs = sum((a * eval_base(B[i], env) for i, a in img.items()), Fraction(0))
        if eval_base(B[j], after) != rhs:
            return False
    return True


def check_linearity(rng, name):
    """``Phi(a*Q + b*R) == a*Phi(Q) + b*Phi(R)`` at a random state."""
    p, _, B, _ = setup(name)
    n = len(B)

    def coeffs():
        return {i: Fraction(rng.randint(-20, 20), rng.randint(1, 6)) for i in range(n)}

    qa, qb = coeffs(), coeffs()
    a, b = Fraction(rng.randint(-9, 9), rng.randint(1, 4)), Fraction(rng.randint(-9, 9))
    env = {v: rng.randint(-60, 60) for v in p.globals}
    mixed = {i: a * qa[i] + b * qb[i] for i in range(n)}
    return B.eval(mixed, env) == a * B.eval(qa, env) + b * B.eval(qb, env)


CHECKS = {"rewrite": check_rewrite, "subst": check_subst, "linear": check_linearity}


def run_checks(total, seed=0):
    """Run ``total`` non-vacuous checks spread over kinds and programs.
    Returns ``(done, violations, skipped)``."""
    rng = random.Random(seed)
    kinds = list(CHECKS)
    done = bad = skipped = 0
    while done < total:
        kind = kinds[done % len(kinds)]
        verdict = CHECKS[kind](rng, rng.choice(NAMES))
        if verdict is None:
            skipped += 1
            if skipped > 10 * total:
                break
            continue
        done += 1
        bad += not verdict
    return done, bad, skipped
