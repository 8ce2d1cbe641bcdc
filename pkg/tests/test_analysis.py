from fractions import Fraction

import pytest

from conftest import corpus_program
from expbound import analyze, analyze_text, parse_bound
from expbound.analysis import atom_weights
from expbound.logic import LinExpr
from expbound.potential import gen_base_functions
from expbound.frontend import parse_program
from expbound.logic import infer_contexts

WORKED = "var x; while (x >= 2) { x = x - 1 [1/3] x = x - 2; tick(1); }"
x = LinExpr.var("x")


def test_worked_example_exact():
    rep = analyze_text(WORKED, degree=1)
    assert rep.bound == parse_bound("3/5·|[0,x]|")
    assert rep.bound.as_dict() == {(x,): Fraction(3, 5)}


def test_worked_example_base_functions():
    p = parse_program(WORKED)
    B = gen_base_functions(p, infer_contexts(p), 1)
    assert set(B.bases) == {(), (x,), (x - 1,), (x - 2,)}
    w = atom_weights(B)
    assert w[x] < w[x - 1] < w[x - 2]


def test_tick_only():
    assert analyze_text("var x; tick(3);").bound.text() == "3"


def test_no_guards_only_constant():
    p = parse_program("var x; x = x + 1; tick(2);")
    B = gen_base_functions(p, infer_contexts(p), 1)
    assert B.bases == [()]


def test_recursion_without_ticks_is_free():
    src = "var x; proc p { if (x > 0) { x = x - 1; call p; } } main { call p; }"
    rep = analyze_text(src)
    assert rep.found and rep.bound.is_zero()


def test_infinite_cost_has_no_bound():
    rep = analyze_text("var x; while (x > 0) { tick(1); }")
    assert not rep.found and rep.status == "no bound"


@pytest.mark.parametrize("name, degree", [("rdwalk", 1), ("linear01", 2), ("ber", 1),
                                          ("fcall", 2), ("sprdwalk", 2)])
def test_linear_golden(name, degree, golden):
    rep = analyze(corpus_program(name), degree=degree)
    assert rep.bound.text() == golden[name]


def test_polynomial_needs_degree_two():
    assert not analyze(corpus_program("rdbub"), degree=1).found
    assert analyze(corpus_program("rdbub"), degree=2).bound.text() == "3·|[0,n]|^2"


def test_deterministic_reports():
    a = analyze(corpus_program("C4B_t13"))
    b = analyze(corpus_program("C4B_t13"))
    assert a.bound == b.bound and a.stats["vars"] == b.stats["vars"]


def test_bound_dominates_tick_program():
    rep = analyze_text("var x; x = 2; while (x > 0) { x = x - 1; tick(1); }")
    assert rep.bound.eval({"x": 0}) >= 2


def _deriver(src):
    from expbound.derive import Deriver
    p = parse_program(src)
    ctx = infer_contexts(p)
    return p, Deriver(p, gen_base_functions(p, ctx, 1), [], ctx)


def test_tick_rule_adds_constant():
    from expbound.derive import CONST, Ann
    p, d = _deriver("var x; tick(1);")
    pre = d.derive(p.main, Ann([{7: Fraction(1)}]))
    assert pre.coords[0] == {7: 1, CONST: 1}


def test_probabilistic_branch_weights():
    from expbound.derive import CONST
    p, d = _deriver("var x; tick(1) [1/3] tick(2);")
    pre = d.derive(p.main, d.zero())
    assert pre.coords[0] == {CONST: Fraction(5, 3)}
