from fractions import Fraction

import numpy as np
import pytest

from conftest import corpus_program
from expbound.frontend import parse_program
from expbound.runtime import (SupportCapExceeded, ert_truncated, estimate, eval_bound,
                              initial_state, run_once, simulate)
from expbound.bound import parse_bound

WALK = parse_program("var x; while (x > 0) { x = x - 1 [3/4] x = x + 1; tick(1); }")
ONE_STEP = parse_program("var x; x = x - 1 [3/4] x = x + 1; tick(1);")


def prog(src):
    return parse_program(src)


def test_run_once_examples():
    assert run_once(prog("var x; tick(5);"), {"x": 7}).cost == 5
    assert run_once(WALK, {"x": 0}).cost == 0
    r = run_once(prog("var x; x = 2; while (x > 0) { x = x - 1; tick(1); }"))
    assert r.cost == 2 and r.final == {"x": 0} and not r.censored


def test_fractional_ticks_are_exact():
    assert run_once(prog("var x; tick(1/3); tick(2/3);")).cost == 1


def test_failed_assert_stops_with_cost_so_far():
    r = run_once(prog("var x; tick(2); assert(x > 0); tick(5);"), {"x": 0})
    assert r.cost == 2 and not r.censored


def test_abort_is_censored():
    r = run_once(prog("var x; tick(1); abort;"), max_steps=1000)
    assert r.censored
    with pytest.warns(RuntimeWarning, match="censored"):
        est = estimate(prog("var x; tick(1); abort;"), trials=10, max_steps=100)
    assert est.censored == 10 and est.trials == 0


def test_initial_state():
    assert initial_state(["x", "y"], {"x": 3}) == {"x": 3, "y": 0}
    with pytest.raises(ValueError):
        initial_state(["x"], {"z": 1})


def test_estimate_trivial():
    est = estimate(prog("var x; tick(1);"), trials=100)
    assert est.mean == 1 and est.stderr == 0
    coin = estimate(prog("var x; tick(1) [1/2] skip;"), trials=4000, seed=3)
    assert abs(coin.mean - 0.5) <= 3 * coin.stderr
    assert coin.stderr == pytest.approx(np.std(coin.costs, ddof=1) / np.sqrt(4000))


def test_simple_walk_mean():
    est = estimate(WALK, {"x": 100}, trials=10000, seed=0)
    assert abs(est.mean - 200) / 200 < 0.02


def test_scalar_and_vector_agree():
    p = corpus_program("race")
    state = {"h": 0, "t": 12}
    units, censored, m = simulate(p, state, trials=40, seed=9)
    for t in range(40):
        r = run_once(p, state, seed=9, trial=t)
        assert r.cost == Fraction(int(units[t])) * m.unit
    assert not censored.any()


def test_seed_determinism_and_order_independence():
    p = corpus_program("prdwalk")
    a = estimate(p, {"n": 30}, trials=500, seed=4)
    b = estimate(p, {"n": 30}, trials=500, seed=4)
    assert a.mean == b.mean
    # trial t draws the same stream no matter how many trials run
    big, _, _ = simulate(p, {"n": 30}, trials=500, seed=4)
    small, _, _ = simulate(p, {"n": 30}, trials=50, seed=4)
    assert (big[:50] == small).all()


def test_scheduler_irrelevant_without_nondeterminism():
    p = corpus_program("miner")
    runs = [simulate(p, {"n": 10}, trials=300, seed=2, scheduler=s)[0]
            for s in ("first", "second", "random")]
    assert (runs[0] == runs[1]).all() and (runs[0] == runs[2]).all()


def test_schedulers_resolve_choice():
    p = prog("var x; if (*) { tick(1); } else { tick(3); }")
    assert estimate(p, trials=50, scheduler="first").mean == 1
    assert estimate(p, trials=50, scheduler="second").mean == 3
    mixed = estimate(p, trials=4000, scheduler="random", seed=1)
    assert abs(mixed.mean - 2) <= 4 * mixed.stderr
    with pytest.raises(ValueError):
        estimate(p, trials=5, scheduler="worst")


# --- truncated oracle -------------------------------------------------------------

def test_ert_tick():
    r = ert_truncated(prog("var x; tick(7/2);"))
    assert r.lower == Fraction(7, 2) and r.residual == 0


def test_ert_one_step_invariant():
    for k in (-3, 0, 1, 17, 250):
        r = ert_truncated(ONE_STEP, {"x": k}, f=lambda env: 2 * env["x"])
        assert r.lower == 2 * k


def test_ert_walk_truncated():
    r = ert_truncated(WALK, {"x": 1}, unroll=50)
    assert Fraction(19, 10) <= r.lower < 2 and r.residual > 0


def test_ert_monotone_in_unroll():
    p = corpus_program("sprdwalk")
    values = [ert_truncated(p, {"x": 0, "n": 5}, unroll=k).lower for k in (0, 5, 10, 20, 40)]
    assert values == sorted(values) and values[-1] > values[0]


@pytest.mark.parametrize("src", [
    "var x; x = x + unif(0, 3); tick(1) [1/2] tick(3); if (x > 1) { tick(2); }",
    "var x; x = x - 1 [1/4] x = x + 2; tick(1);",
    "var x, y; y = bin(3, 2/3); x = x + y; tick(1/2) [1/3] skip;",
])
def test_ert_constant_propagation(src):
    p = prog(src)
    f = lambda env: abs(env["x"])
    for k in (0, 1, Fraction(5, 2)):
        base = ert_truncated(p, {"x": 2}, f=f).lower
        shifted = ert_truncated(p, {"x": 2}, f=lambda env: k + f(env)).lower
        assert shifted == k + base


def test_ert_nondeterminism_takes_max():
    p = prog("var x; if (*) { tick(1); } else { x = x + 1 [1/2] skip; tick(3); }")
    assert ert_truncated(p).lower == 3
    loop = prog("var x; while (x > 0) { x = x - 1; if (*) { tick(1); } else { tick(2); } }")
    assert ert_truncated(loop, {"x": 4}).lower == 8


def test_ert_rounding_is_a_lower_bound():
    p = corpus_program("prdwalk")
    exact = ert_truncated(p, {"x": 0, "n": 12}, unroll=30)
    rounded = ert_truncated(p, {"x": 0, "n": 12}, unroll=30, bits=40)
    assert rounded.lower <= exact.lower
    assert exact.lower - rounded.lower < Fraction(1, 10**6)
    assert rounded.residual >= exact.residual


def test_ert_support_cap():
    with pytest.raises(SupportCapExceeded):
        ert_truncated(corpus_program("prdwalk"), {"n": 40}, cap=5)


def test_simulation_agrees_with_oracle_on_loop_free_programs():
    p = prog("var x, y; x = unif(0, 4); y = x + bin(2, 1/3); "
             "if (y > 3) { tick(5); } else { tick(1) [1/4] tick(2); }")
    exact = float(ert_truncated(p).lower)
    hits = sum(abs(est.mean - exact) <= 4 * est.stderr
               for est in (estimate(p, trials=500, seed=s) for s in range(40)))
    assert hits >= 38


def test_eval_bound():
    assert eval_bound(parse_bound("2·|[x,n+1]|"), {"x": 0, "n": 100}) == 202
    assert eval_bound(parse_bound("0"), {}) == 0
