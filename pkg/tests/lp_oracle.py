"""Brute-force LP oracle: enumerate every basic solution exactly.

For ``min c.x`` subject to rows and ``x >= 0`` in ``n`` variables, every
vertex is the unique solution of ``n`` tight constraints. The feasible set
is pointed, so a feasible LP has a vertex; it is unbounded iff some
direction ``d >= 0`` of the recession cone has ``c.d < 0``, which is again
decided by enumerating vertices of the cone cut by ``sum(d) = 1``.
"""

import itertools
import random
from fractions import Fraction


def _solve(rows, n):
    """Unique solution of the square system ``rows`` (coeff list, rhs) or None."""
    m = [list(r) + [b] for r, b in rows]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[col])]
    return [m[i][n] for i in range(n)]


def _independent(idx, tight, n):
    """Greedy maximal linearly independent subset of the rows ``idx``."""
    basis, out = [], []
    for i in idx:
        v = list(tight[i][0])
        for piv, row in basis:
            if v[piv] != 0:
                f = v[piv] / row[piv]
                v = [a - f * b for a, b in zip(v, row)]
        piv = next((j for j in range(n) if v[j] != 0), None)
        if piv is not None:
            basis.append((piv, v))
            out.append(i)
    return out


def _satisfies(x, cons):
    for a, sense, b in cons:
        v = sum(ai * xi for ai, xi in zip(a, x))
        if sense == "==" and v != b or sense == "<=" and v > b or sense == ">=" and v < b:
            return False
    return True


def _vertex_min(n, cons, c):
    """Minimum of ``c.x`` over the vertices of ``cons`` (which include
    ``x >= 0``), or None if there is no vertex."""
    tight = [(a, b) for a, _, b in cons]
    best = None
    # every vertex is tight on a basis of the equalities plus enough
    # inequalities; dependent equalities are still checked by _satisfies
    eqs = _independent([i for i, (_, s, _) in enumerate(cons) if s == "=="], tight, n)
    ineqs = [i for i in range(len(cons)) if cons[i][1] != "=="]
    choices = (tuple(eqs) + rest for rest in itertools.combinations(ineqs, n - len(eqs)))
    for pick in choices:
        x = _solve([tight[i] for i in pick], n)
        if x is None or not _satisfies(x, cons):
            continue
        v = sum(ci * xi for ci, xi in zip(c, x))
        if best is None or v < best:
            best = v
    return best


def brute_force(n, rows, c):
    """``("optimal", value)``, ``("infeasible", None)`` or ``("unbounded", None)``."""
    bounds = [([Fraction(int(i == j)) for j in range(n)], ">=", Fraction(0)) for i in range(n)]
    cons = [(list(a), s, Fraction(b)) for a, s, b in rows] + bounds
    best = _vertex_min(n, cons, c)
    if best is None:
        return "infeasible", None
    cone = [(list(a), s, Fraction(0)) for a, s, _ in rows] + bounds
    cone.append(([Fraction(1)] * n, "==", Fraction(1)))
    ray = _vertex_min(n, cone, c)
    if ray is not None and ray < 0:
        return "unbounded", None
    return "optimal", best


def random_lp(rng: random.Random):
    """Coefficients and right-hand sides in [-9, 9]. Most systems are built
    around a hidden point so that all three outcomes are common."""
    n = rng.randint(1, 6)
    m = rng.randint(1, 10)
    point = [rng.choice((0, 0, 1, 2)) for _ in range(n)] if rng.random() < 0.7 else None
    rows = []
    for _ in range(m):
        a = [Fraction(rng.randint(-9, 9)) if rng.random() < 0.7 else Fraction(0)
             for _ in range(n)]
        sense = rng.choice(["<=", "<=", ">=", "=="])
        if point is None:
            b = rng.randint(-9, 9)
        else:
            at = int(sum(ai * xi for ai, xi in zip(a, point)))
            slack = 0 if sense == "==" else rng.randint(0, 4)
            b = at + slack if sense == "<=" else at - slack
            b = max(-9, min(9, b))
        rows.append((a, sense, Fraction(b)))
    c = [Fraction(rng.randint(-9, 9)) for _ in range(n)]
    return n, rows, c


def to_lp(n, rows, c):
    from expbound.lp import LinearProgram
    lp = LinearProgram()
    for i in range(n):
        lp.new_var(f"x{i}")
    for a, s, b in rows:
        lp.add({i: v for i, v in enumerate(a)}, s, b)
    return lp, {i: v for i, v in enumerate(c) if v}
