"""Exact rational linear programming.

A two-phase primal simplex over sparse dictionary rows. Pivot selection
uses the most negative reduced cost and falls back to Bland's rule after a
run of degenerate pivots, so it always terminates. Lexicographic
minimization reuses the optimal tableau of one objective as the start of
the next, after freezing every column whose reduced cost is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

try:  # gmpy2 rationals are much faster than Fraction but optional
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


try:
    from ._highs import propose_basis as _guide
except ImportError:  # pragma: no cover
    _guide = None


class InfeasibleError(Exception):
    pass


class UnboundedError(Exception):
    pass


@dataclass
class LinearProgram:
    """Variables are indexed integers, all constrained to be non-negative."""

    names: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # (coeffs dict, sense, rhs)

    def new_var(self, name: str) -> int:
        self.names.append(name)
        return len(self.names) - 1

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add(self, coeffs: dict, sense: str, rhs) -> None:
        if sense not in ("<=", ">=", "=="):
            raise ValueError(sense)
        coeffs = {k: v for k, v in coeffs.items() if v != 0}
        self.rows.append((coeffs, sense, Fraction(rhs)))


@dataclass
class Solution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    pivots: int = 0

    @property
    def objective(self) -> Optional[Fraction]:
        return self.objectives[-1] if self.objectives else None


DEGENERATE_LIMIT = 50


class _Tableau:
    """Simplex tableau in canonical form: one basic column per row."""

    def __init__(self, rows, rhs, basis, ncols):
        self.rows = rows          # list of dict col -> value
        self.rhs = rhs            # list of values
        self.basis = basis        # list of basic column per row
        self.ncols = ncols
        self.colrows = {}
        for i, r in enumerate(rows):
            for c in r:
                self.colrows.setdefault(c, set()).add(i)
        self.frozen = set()
        self.pivots = 0
        # basic artificials are kept at level zero: any pivot touching
        # their row evicts them
        self.art_start = None

    def pivot(self, r: int, c: int, obj: dict) -> Optional[object]:
        row = self.rows[r]
        a = row[c]
        if a != 1:
            inv = 1 / a
            for k in row:
                row[k] *= inv
            self.rhs[r] *= inv
        prhs = self.rhs[r]
        colrows = self.colrows
        for i in list(colrows[c]):
            if i == r:
                continue
            other = self.rows[i]
            f = other[c]
            for k, v in row.items():
                nv = other.get(k, 0) - f * v
                if nv:
                    if k not in other:
                        colrows.setdefault(k, set()).add(i)
                    other[k] = nv
                elif k in other:
                    del other[k]
                    colrows[k].discard(i)
            self.rhs[i] -= f * prhs
        f = obj.get(c)
        shift = 0
        if f:
            for k, v in row.items():
                nv = obj.get(k, 0) - f * v
                if nv:
                    obj[k] = nv
                elif k in obj:
                    del obj[k]
            shift = f * prhs
        self.basis[r] = c
        self.pivots += 1
        return shift

    def optimize(self, obj: dict, value):
        """Minimize; ``obj`` holds reduced costs of nonbasic columns and is
        updated in place. Returns the final objective value."""
        degenerate = 0
        while True:
            bland = degenerate >= DEGENERATE_LIMIT
            enter, best = None, 0
            for k, d in obj.items():
                if d < 0 and k not in self.frozen:
                    if bland:
                        if enter is None or k < enter:
                            enter = k
                    elif d < best or (d == best and k < enter):
                        enter, best = k, d
            if enter is None:
                return value
            leave, best_key = None, None
            art = self.art_start
            for i in self.colrows.get(enter, ()):
                a = self.rows[i][enter]
                b = self.basis[i]
                if art is not None and b >= art:
                    key = (0, 0, b)
                elif a > 0:
                    key = (self.rhs[i] / a, 1, b)
                else:
                    continue
                if best_key is None or key < best_key:
                    leave, best_key = i, key
            if leave is None:
                raise UnboundedError("objective is unbounded below")
            degenerate = degenerate + 1 if best_key[0] == 0 else 0
            value += self.pivot(leave, enter, obj)


def _reduced(obj_coeffs: dict, tab: _Tableau):
    """Reduced-cost row and objective value for the current basis."""
    red = {k: _Q(v) for k, v in obj_coeffs.items() if v}
    value = _Q(0)
    for i, b in enumerate(tab.basis):
        f = red.get(b)
        if f:
            for k, v in tab.rows[i].items():
                nv = red.get(k, 0) - f * v
                if nv:
                    red[k] = nv
                elif k in red:
                    del red[k]
            value += f * tab.rhs[i]
    return red, value


def _standard_form(lp: LinearProgram):
    n = lp.num_vars
    rows, rhs, basis = [], [], []
    ncols = n
    needs_art = []
    for coeffs, sense, b in lp.rows:
        row = {k: _Q(v) for k, v in coeffs.items()}
        b = _Q(b)
        slack = None
        if sense != "==":
            slack = ncols
            ncols += 1
            row[slack] = _Q(1) if sense == "<=" else _Q(-1)
        if b < 0:
            row = {k: -v for k, v in row.items()}
            b = -b
        rows.append(row)
        rhs.append(b)
        if slack is not None and row[slack] == 1:
            basis.append(slack)
            needs_art.append(False)
        else:
            basis.append(None)
            needs_art.append(True)
    first_art = ncols
    for i, need in enumerate(needs_art):
        if need:
            rows[i][ncols] = _Q(1)
            basis[i] = ncols
            ncols += 1
    return rows, rhs, basis, ncols, first_art


def _phase_one(lp: LinearProgram) -> _Tableau:
    rows, rhs, basis, ncols, first_art = _standard_form(lp)
    tab = _Tableau(rows, rhs, basis, ncols)
    if ncols > first_art:
        art_obj = {k: 1 for k in range(first_art, ncols)}
        red, value = _reduced(art_obj, tab)
        value = tab.optimize(red, value)
        if value > 0:
            raise InfeasibleError("constraints are infeasible")
        tab = _drop_artificials(tab, first_art)
    return tab


def _drop_artificials(tab: _Tableau, first_art: int, avoid=frozenset()) -> Optional[_Tableau]:
    """Pivot zero-level artificials out of the basis, drop redundant rows and
    delete artificial columns. ``None`` if an artificial is positive."""
    drop = []
    for i, b in enumerate(tab.basis):
        if b >= first_art:
            if tab.rhs[i] != 0:
                return None
            cand = sorted(k for k in tab.rows[i] if k < first_art and k not in avoid)
            if not cand:
                cand = sorted(k for k in tab.rows[i] if k < first_art)
            if cand:
                tab.pivot(i, cand[0], {})
            else:
                drop.append(i)
    ncols = tab.ncols
    if drop:
        dropped = set(drop)
        keep = [i for i in range(len(tab.rows)) if i not in dropped]
        pivots = tab.pivots
        tab = _Tableau([tab.rows[i] for i in keep], [tab.rhs[i] for i in keep],
                       [tab.basis[i] for i in keep], ncols)
        tab.pivots = pivots
    for i in range(len(tab.rows)):
        for k in [k for k in tab.rows[i] if k >= first_art]:
            del tab.rows[i][k]
            tab.colrows[k].discard(i)
    tab.frozen = set(range(first_art, ncols))
    return tab


def _crash(lp: LinearProgram, cols: list, fixed=frozenset()) -> Optional[_Tableau]:
    """Exact tableau for a proposed basis, or ``None`` if the proposal is
    not a primal feasible basis avoiding the ``fixed`` columns."""
    rows, rhs, basis, ncols, first_art = _standard_form(lp)
    tab = _Tableau(rows, rhs, basis, ncols)
    cols = [c for c in cols if c not in fixed]
    want = set(cols)
    for c in cols:
        if c in tab.basis:
            continue
        best = None
        for i in tab.colrows.get(c, ()):
            b = tab.basis[i]
            if b >= first_art or b not in want:
                key = (b < first_art, i)
                if best is None or key < best[0]:
                    best = (key, i)
        if best is not None:
            tab.pivot(best[1], c, {})
    if any(v < 0 for v in tab.rhs):
        return None
    for i, b in enumerate(tab.basis):
        if b >= first_art and tab.rhs[i] != 0:
            return None
    tab.art_start = first_art
    tab.frozen = set(range(first_art, ncols))
    for i, b in enumerate(tab.basis):
        if b in fixed:
            cand = sorted(k for k in tab.rows[i] if k not in fixed and k != b
                          and k not in tab.frozen)
            if tab.rhs[i] != 0 or not cand:
                return None
            tab.pivot(i, cand[0], {})
    return tab


def _solve_square(columns: list, rhs: dict, m: int) -> Optional[list]:
    """Solve ``M z = rhs`` exactly, where column ``k`` of the ``m x m``
    matrix ``M`` is the sparse dict ``columns[k]``. ``None`` if singular."""
    rows = [dict() for _ in range(m)]
    for k, col in enumerate(columns):
        for r, v in col.items():
            rows[r][k] = _Q(v)
    b = [_Q(rhs.get(r, 0)) for r in range(m)]
    colrows = {}
    for r, row in enumerate(rows):
        for k in row:
            colrows.setdefault(k, set()).add(r)
    order = []  # (row, col) pivots
    done_rows = set()
    remaining = set(range(m))
    while remaining:
        # sparsest remaining row, then its sparsest column
        r = min(remaining, key=lambda i: (len(rows[i]), i))
        row = rows[r]
        if not row:
            return None
        k = min(row, key=lambda j: (len(colrows[j]), j))
        piv = row[k]
        for i in list(colrows[k]):
            if i == r or i in done_rows:
                continue
            other = rows[i]
            f = other[k] / piv
            for j, v in row.items():
                nv = other.get(j, 0) - f * v
                if nv:
                    if j not in other:
                        colrows.setdefault(j, set()).add(i)
                    other[j] = nv
                else:
                    if j in other:
                        del other[j]
                        colrows[j].discard(i)
            b[i] -= f * b[r]
        remaining.discard(r)
        done_rows.add(r)
        order.append((r, k))
        for j in row:
            colrows[j].discard(r)
    z = [None] * m
    for r, k in reversed(order):
        row = rows[r]
        acc = b[r]
        for j, v in row.items():
            if j != k:
                acc -= v * z[j]
        z[k] = acc / row[k]
    return z


class _Certificate:
    """Primal values and reduced costs of a verified optimal basis."""

    def __init__(self, x, reduced, value):
        self.x = x
        self.reduced = reduced
        self.value = value


def _verify(lp: LinearProgram, objective: dict, cols: list, arts: list,
            fixed: set) -> Optional[_Certificate]:
    """Check exactly that ``cols`` plus unit columns for the rows ``arts``
    is an optimal basis of ``lp`` restricted to ``x_j = 0`` for ``j`` in
    ``fixed``. The unit columns must sit at zero."""
    n = lp.num_vars
    m = len(lp.rows)
    # standard-form columns: structural, then one slack per inequality row
    colmap = {}
    slack_row = {}
    nxt = n
    rhs = {}
    for i, (coeffs, sense, b) in enumerate(lp.rows):
        for k, v in coeffs.items():
            colmap.setdefault(k, {})[i] = v
        if sense != "==":
            colmap[nxt] = {i: 1 if sense == "<=" else -1}
            slack_row[nxt] = i
            nxt += 1
        if b:
            rhs[i] = b
    basis = list(dict.fromkeys(cols))
    if len(basis) > m:
        return None
    columns = [colmap.get(c, {}) for c in basis]
    columns += [{i: 1} for i in arts]
    if len(columns) != m:
        return None
    xb = _solve_square(columns, rhs, m)
    if xb is None:
        return None
    nb = len(basis)
    for k, v in enumerate(xb):
        if k < nb:
            if v < 0 or (basis[k] in fixed and v != 0):
                return None
        elif v != 0:
            return None
    # duals: M^T y = c_B
    cb = {}
    for k, c in enumerate(basis):
        if objective.get(c):
            cb[k] = objective[c]
    mt = [dict() for _ in range(m)]
    for k, col in enumerate(columns):
        for r, v in col.items():
            mt[r][k] = v
    y = _solve_square(mt, cb, m)
    if y is None:
        return None
    reduced = {}
    inb = set(basis)
    for c in range(n):
        colmap.setdefault(c, {})  # a column in no row has reduced cost c_j
    for c, col in colmap.items():
        if c in inb:
            continue
        d = _Q(objective.get(c, 0))
        for r, v in col.items():
            if y[r]:
                d -= y[r] * v
        if d < 0 and c not in fixed:
            return None
        if d:
            reduced[c] = d
    x = [Fraction(0)] * n
    value = _Q(0)
    for k, c in enumerate(basis):
        if c < n:
            x[c] = _frac(xb[k])
            value += _Q(objective.get(c, 0)) * xb[k]
    return _Certificate(x, reduced, value)


def _guided(lp: LinearProgram, objective: dict, fixed: set):
    """Basis proposed by a floating-point solver: ``(cols, certificate)``,
    where the certificate is ``None`` unless the basis checks out."""
    if _guide is None:
        return None, None
    try:
        proposal = _guide(lp, objective, fixed)
    except Exception:  # pragma: no cover - the guide is only a heuristic
        return None, None
    if proposal is None:
        return None, None
    cols, arts = proposal
    return cols, _verify(lp, objective, cols, arts, fixed)


def _phase_one_lp(lp: LinearProgram):
    """``min sum(a)`` subject to the rows of ``lp`` plus one artificial
    ``a_i`` per row, with right-hand sides made non-negative."""
    aux = LinearProgram(list(lp.names))
    obj = {}
    for i, (coeffs, sense, b) in enumerate(lp.rows):
        if b < 0:
            coeffs = {k: -v for k, v in coeffs.items()}
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
            b = -b
        a = aux.new_var(f"art{i}")
        obj[a] = Fraction(1)
        aux.rows.append(({**coeffs, a: Fraction(1)}, sense, b))
    return aux, obj


def _certify_infeasible(lp: LinearProgram) -> Optional[bool]:
    """``True`` when a guided phase one proves ``lp`` infeasible, ``False``
    when it proves it feasible, ``None`` when the guide is unavailable or
    its basis fails the exact check."""
    aux, obj = _phase_one_lp(lp)
    _, cert = _guided(aux, obj, set())
    if cert is None:
        return None
    return cert.value > 0


def solve_lexicographic(lp: LinearProgram, objectives: list, guide: bool = True) -> Solution:
    """Minimize each objective in turn over the optimal face of the previous
    ones. Objectives are dicts ``var -> coefficient``.

    With ``guide`` set, a floating-point solver proposes an optimal basis
    for each objective. The proposal is accepted only after an exact check
    of primal feasibility and of every reduced cost; otherwise the exact
    simplex takes over, starting from the proposal when it is feasible.
    """
    tab = None
    fixed = set()
    values = []
    pivots = 0
    x = None
    for obj in objectives:
        cols, cert = _guided(lp, obj, fixed) if guide else (None, None)
        if cert is None and guide and x is None and cols is None:
            if _certify_infeasible(lp):
                return Solution("infeasible")
        if cert is not None:
            values.append(_frac(cert.value))
            fixed |= {k for k, d in cert.reduced.items() if d > 0}
            x = cert.x
            tab = None
            continue
        start = _crash(lp, cols, fixed) if cols is not None else None
        if start is not None:
            pivots += start.pivots
            start.pivots = 0
            start.frozen |= fixed
            tab = start
        elif tab is None:
            try:
                tab = _phase_one(lp)
            except InfeasibleError:
                return Solution("infeasible")
            tab.frozen |= fixed
        red, value = _reduced(obj, tab)
        before = tab.pivots
        try:
            value = tab.optimize(red, value)
        except UnboundedError:
            return Solution("unbounded", pivots=pivots + tab.pivots)
        pivots += tab.pivots - before
        tab.pivots = before
        values.append(_frac(value))
        for k, d in red.items():
            if d > 0:
                tab.frozen.add(k)
                fixed.add(k)
        x = [Fraction(0)] * lp.num_vars
        for i, b in enumerate(tab.basis):
            if b < lp.num_vars:
                x[b] = _frac(tab.rhs[i])
    if x is None:  # no objectives
        try:
            tab = _phase_one(lp)
        except InfeasibleError:
            return Solution("infeasible")
        x = [Fraction(0)] * lp.num_vars
        for i, b in enumerate(tab.basis):
            if b < lp.num_vars:
                x[b] = _frac(tab.rhs[i])
    return Solution("optimal", x, values, pivots)


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    return Fraction(int(v.numerator), int(v.denominator))


def solve_min(lp: LinearProgram, objective: dict) -> Solution:
    return solve_lexicographic(lp, [objective])


def feasible(lp: LinearProgram) -> bool:
    verdict = _certify_infeasible(lp) if _guide is not None else None
    if verdict is not None:
        return not verdict
    try:
        _phase_one(lp)
    except InfeasibleError:
        return False
    return True


def iterative_minimize(lp: LinearProgram, levels: list) -> Solution:
    """Minimize the objectives of ``levels`` in order, pinning each optimum
    before moving to the next."""
    return solve_lexicographic(lp, levels)


def format_lp(lp: LinearProgram, objective: dict) -> str:
    """CPLEX LP text for inspection with external solvers."""

    def term(coef, var):
        sign = "-" if coef < 0 else "+"
        c = abs(Fraction(coef))
        num = float(c) if c.denominator != 1 else int(c)
        return f"{sign} {num} {lp.names[var]}"

    def expr(d):
        if not d:
            return "0 " + lp.names[0] if lp.names else "0"
        return " ".join(term(v, k) for k, v in sorted(d.items()))

    out = ["\\ generated by expbound", "Minimize", " obj: " + expr(objective),
           "Subject To"]
    for i, (coeffs, sense, rhs) in enumerate(lp.rows):
        op = {"==": "=", "<=": "<=", ">=": ">="}[sense]
        out.append(f" c{i}: {expr(coeffs)} {op} {float(rhs) if rhs.denominator != 1 else int(rhs)}")
    out.append("Bounds")
    for name in lp.names:
        out.append(f" {name} >= 0")
    out.append("End")
    return "\n".join(out) + "\n"
