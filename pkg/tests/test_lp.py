import random
from fractions import Fraction

import pytest

from conftest import corpus_program
from expbound.analysis import analyze, objective_levels
from expbound.derive import derive_program
from expbound.frontend import parse_program
from expbound.logic import infer_contexts
from expbound.lp import (LinearProgram, feasible, format_lp, iterative_minimize,
                         solve_lexicographic, solve_min)
from expbound.potential import gen_base_functions, gen_rewrite_functions
from lp_oracle import brute_force, random_lp, to_lp


def one_var(*rows):
    lp = LinearProgram()
    x = lp.new_var("x")
    for sense, rhs in rows:
        lp.add({x: 1}, sense, rhs)
    return lp, x


def test_min_x_at_least_three():
    lp, x = one_var((">=", 3))
    sol = solve_min(lp, {x: 1})
    assert sol.status == "optimal" and sol.values[x] == 3 and sol.objective == 3


def test_infeasible():
    lp, x = one_var((">=", 1), ("<=", 0))
    assert solve_min(lp, {}).status == "infeasible"
    assert not feasible(lp)


def test_unbounded_is_distinct():
    lp, x = one_var((">=", 1))
    assert solve_min(lp, {x: -1}).status == "unbounded"


def test_no_variables():
    sol = solve_min(LinearProgram(), {})
    assert sol.status == "optimal" and sol.values == []


@pytest.mark.parametrize("guide", [True, False])
def test_random_lps_match_vertex_enumeration(guide):
    rng = random.Random(99)
    for _ in range(60):
        n, rows, c = random_lp(rng)
        expected = brute_force(n, rows, c)
        lp, obj = to_lp(n, rows, c)
        sol = solve_min(lp, obj) if guide else solve_lexicographic(lp, [obj], guide=False)
        got = (sol.status, sol.objective if sol.status == "optimal" else None)
        assert got == expected
        if sol.status == "optimal":
            assert all(v >= 0 for v in sol.values)
            assert sum(c[i] * sol.values[i] for i in range(n)) == sol.objective


def test_lexicographic_matches_pinned_oracle():
    rng = random.Random(5)
    checked = 0
    while checked < 25:
        n, rows, c1 = random_lp(rng)
        first = brute_force(n, rows, c1)
        if first[0] != "optimal":
            continue
        c2 = [Fraction(rng.randint(-9, 9)) for _ in range(n)]
        pinned = rows + [(c1, "==", first[1])]
        second = brute_force(n, pinned, c2)
        lp, o1 = to_lp(n, rows, c1)
        sol = iterative_minimize(lp, [o1, {i: v for i, v in enumerate(c2) if v}])
        if second[0] == "unbounded":
            assert sol.status == "unbounded"
        else:
            assert sol.status == "optimal"
            assert sol.objectives == [first[1], second[1]]
        checked += 1


def test_deterministic():
    rng = random.Random(3)
    for _ in range(20):
        n, rows, c = random_lp(rng)
        lp, obj = to_lp(n, rows, c)
        a, b = solve_min(lp, obj), solve_min(lp, obj)
        assert (a.status, a.values) == (b.status, b.values)


def _derivation(src, degree=1):
    p = parse_program(src)
    ctx = infer_contexts(p)
    B = gen_base_functions(p, ctx, degree)
    d = derive_program(p, B, gen_rewrite_functions(B), ctx)
    return B, d


WORKED = "var x; while (x >= 2) { x = x - 1 [1/3] x = x - 2; tick(1); }"


@pytest.mark.parametrize("guide", [True, False])
def test_worked_example_levels(guide):
    B, d = _derivation(WORKED)
    levels = objective_levels(B, d.root)
    sol = solve_lexicographic(d.lp, levels, guide=guide)
    coeffs = {str(B[i]) if i else "1": sol.values[r]
              for i, r in enumerate(d.root) if r is not None}
    nonzero = {k: v for k, v in coeffs.items() if v}
    assert len(nonzero) == 1
    (atom, value), = nonzero.items()
    assert value == Fraction(3, 5)


def test_weights_prefer_wider_atoms():
    B, d = _derivation(WORKED)
    levels = objective_levels(B, d.root)
    weights = {B.bases[i]: levels[0][r] for i, r in enumerate(d.root)
               if r is not None and r in levels[0]}
    ordered = sorted(weights, key=lambda b: -b[0].const)
    ws = [weights[b] for b in ordered]
    assert ws == sorted(ws)
    assert ws[0] < ws[-1]


def test_pinning_keeps_every_level_feasible():
    B, d = _derivation(WORKED, degree=2)
    levels = objective_levels(B, d.root)
    sol = iterative_minimize(d.lp, levels)
    assert sol.status == "optimal"
    for level, value in zip(levels, sol.objectives):
        assert sum(c * sol.values[v] for v, c in level.items()) == value
        d.lp.add(level, "==", value)
    assert feasible(d.lp)


def test_constant_only_program():
    rep = analyze(parse_program("tick(3);"))
    assert rep.bound.text() == "3"


def test_format_lp():
    lp, x = one_var((">=", Fraction(1, 2)))
    text = format_lp(lp, {x: 1})
    assert "Minimize" in text and " c0: + 1 x >= 0.5" in text and text.endswith("End\n")


def test_guided_and_exact_agree_on_corpus():
    for name in ("linear01", "ber", "rdwalk", "C4B_t13"):
        p = corpus_program(name)
        ctx = infer_contexts(p)
        B = gen_base_functions(p, ctx, 1)
        d = derive_program(p, B, gen_rewrite_functions(B), ctx)
        levels = objective_levels(B, d.root)
        a = solve_lexicographic(d.lp, levels, guide=True)
        b = solve_lexicographic(d.lp, levels, guide=False)
        assert a.objectives == b.objectives
