"""Finite integer-valued distributions with exact probabilities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb


class DistError(ValueError):
    pass


@dataclass(frozen=True)
class Dist:
    kind: str  # "bernoulli" | "binomial" | "uniform" | "hypergeometric"
    params: tuple

    def __post_init__(self):
        check_dist(self)

    def support(self) -> list:
        return dist_support(self)

    def bounds(self) -> tuple:
        s = dist_support(self)
        return s[0][0], s[-1][0]

    def mean(self) -> Fraction:
        return sum((Fraction(v) * p for v, p in dist_support(self)), Fraction(0))


def _prob(p) -> Fraction:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise DistError(f"probability {p} outside [0, 1]")
    return p


def check_dist(d: Dist) -> None:
    k, ps = d.kind, d.params
    if k == "bernoulli":
        if len(ps) != 1:
            raise DistError("bernoulli takes one parameter")
        _prob(ps[0])
    elif k == "binomial":
        if len(ps) != 2 or not isinstance(ps[0], int) or ps[0] < 0:
            raise DistError("binomial takes a count n >= 0 and a probability")
        _prob(ps[1])
    elif k == "uniform":
        if len(ps) != 2 or not all(isinstance(v, int) for v in ps) or ps[0] > ps[1]:
            raise DistError("uniform takes integers a <= b")
    elif k == "hypergeometric":
        if len(ps) != 3 or not all(isinstance(v, int) for v in ps):
            raise DistError("hypergeometric takes integers N, K, n")
        big_n, big_k, n = ps
        if not (0 <= big_k <= big_n and 0 <= n <= big_n):
            raise DistError("hypergeometric needs 0 <= K <= N and 0 <= n <= N")
    else:
        raise DistError(f"unknown distribution {k!r}")


def dist_support(d: Dist) -> list:
    """Sorted ``(value, probability)`` pairs with positive probability."""
    k, ps = d.kind, d.params
    if k == "bernoulli":
        p = Fraction(ps[0])
        pairs = [(0, 1 - p), (1, p)]
    elif k == "binomial":
        n, p = ps[0], Fraction(ps[1])
        pairs = [(i, comb(n, i) * p**i * (1 - p) ** (n - i)) for i in range(n + 1)]
    elif k == "uniform":
        a, b = ps
        w = Fraction(1, b - a + 1)
        pairs = [(i, w) for i in range(a, b + 1)]
    else:
        big_n, big_k, n = ps
        total = comb(big_n, n)
        lo, hi = max(0, n + big_k - big_n), min(big_k, n)
        pairs = [(i, Fraction(comb(big_k, i) * comb(big_n - big_k, n - i), total))
                 for i in range(lo, hi + 1)]
    return [(v, Fraction(p)) for v, p in pairs if p > 0]


def format_dist(d: Dist) -> str:
    short = {"bernoulli": "ber", "binomial": "bin", "uniform": "unif",
             "hypergeometric": "hyper"}[d.kind]
    return f"{short}({', '.join(str(p) for p in d.params)})"
