from fractions import Fraction

import pytest

from conftest import corpus_program
from expbound.cli import corpus_dir
from expbound.frontend import (Assign, Dist, DistError, LexError, NonDet, ParseError,
                               ProbIf, Sample, Tick, ValidationError, While,
                               parse_expr, parse_program, print_program)


@pytest.mark.parametrize("path", sorted(corpus_dir().glob("*.imp")), ids=lambda p: p.stem)
def test_corpus_round_trip(path):
    p = corpus_program(path.stem)
    again = parse_program(print_program(p))
    assert again == p
    assert print_program(again) == print_program(p)


def test_labels_unique():
    p = corpus_program("trader")
    labels = [c.label for c in p.commands()]
    assert len(labels) == len(set(labels))
    assert min(labels) >= 0


def test_probabilistic_branch_and_sample():
    p = parse_program("var x; x = x - 1 [1/3] x = x - 2; x = x + unif(0, 5);")
    first, second = p.main.first, p.main.second
    assert isinstance(first, ProbIf) and first.prob == Fraction(1, 3)
    assert isinstance(second, Sample) and second.op == "+"
    assert second.dist == Dist("uniform", (0, 5))


def test_nondet_and_while():
    p = parse_program("var x; while (x > 0) { if (*) { x = x - 1; } else { x = x - 2; } tick(1); }")
    assert isinstance(p.main, While)
    assert isinstance(p.main.body.first, NonDet)
    assert isinstance(p.main.body.second, Tick)


def test_chained_probabilities_nest_right():
    p = parse_program("var x; x = 1 [1/2] x = 2 [1/3] x = 3;")
    assert isinstance(p.main, ProbIf) and isinstance(p.main.right, ProbIf)
    assert p.main.right.left == Assign("x", parse_expr("2"))


@pytest.mark.parametrize("src, err", [
    ("var x; x = ;", ParseError),
    ("var x; x = x $ 1;", LexError),
    ("var x; y = 1;", ValidationError),
    ("var x; call f;", ValidationError),
    ("var x; x = 1 [3/2] x = 2;", ValidationError),
    ("var x; tick(-1);", ValidationError),
    ("var x; x = unif(3, 1);", ParseError),
    ("var x, x; skip;", ValidationError),
    ("var x; x = x / 0;", ValidationError),
])
def test_rejects_bad_programs(src, err):
    with pytest.raises(err):
        parse_program(src)


@pytest.mark.parametrize("dist, mean", [
    (Dist("bernoulli", (Fraction(1, 2),)), Fraction(1, 2)),
    (Dist("binomial", (3, Fraction(2, 3))), Fraction(2)),
    (Dist("uniform", (0, 10)), Fraction(5)),
    (Dist("hypergeometric", (10, 4, 3)), Fraction(6, 5)),
])
def test_dist_pmf(dist, mean):
    pairs = dist.support()
    assert sum(p for _, p in pairs) == 1
    assert all(p > 0 for _, p in pairs)
    assert dist.mean() == mean
    assert [v for v, _ in pairs] == sorted(v for v, _ in pairs)


def test_dist_rejects_bad_parameters():
    with pytest.raises(DistError):
        Dist("bernoulli", (Fraction(3, 2),))
    with pytest.raises(DistError):
        Dist("binomial", (-1, Fraction(1, 2)))
