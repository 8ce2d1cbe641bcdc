"""Floating-point basis proposals from HiGHS.

Only used to pick a starting basis for the exact simplex; every number the
package reports is recomputed and certified in rational arithmetic.
"""

from __future__ import annotations

import highspy
import numpy as np


def propose_basis(lp, objective: dict, fixed: set):
    """Basis HiGHS reports at its optimum, or ``None``.

    Returns ``(cols, rows)``: the basic standard-form columns (structural
    columns, then one slack per inequality row) and the equality rows whose
    row activity is basic, which need an artificial column at level zero."""
    n = lp.num_vars
    m = len(lp.rows)
    if m == 0:
        return [], []
    inf = highspy.kHighsInf
    model = highspy.HighsLp()
    model.num_col_ = n
    model.num_row_ = m
    cost = np.zeros(n)
    for k, v in objective.items():
        cost[k] = float(v)
    model.col_cost_ = cost
    model.col_lower_ = np.zeros(n)
    upper = np.full(n, inf)
    for k in fixed:
        if k < n:
            upper[k] = 0.0
    model.col_upper_ = upper
    lower = np.empty(m)
    rupper = np.empty(m)
    slack_of = {}
    col = n
    starts, index, value = [0], [], []
    cols = [[] for _ in range(n)]
    for i, (coeffs, sense, rhs) in enumerate(lp.rows):
        b = float(rhs)
        if sense == "==":
            lower[i] = rupper[i] = b
        else:
            slack_of[i] = col
            tight = col in fixed
            col += 1
            if sense == "<=":
                lower[i], rupper[i] = (b if tight else -inf), b
            else:
                lower[i], rupper[i] = b, (b if tight else inf)
        for k, v in coeffs.items():
            cols[k].append((i, float(v)))
    for k in range(n):
        for i, v in cols[k]:
            index.append(i)
            value.append(v)
        starts.append(len(index))
    model.row_lower_ = lower
    model.row_upper_ = rupper
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = np.array(starts, dtype=np.int32)
    model.a_matrix_.index_ = np.array(index, dtype=np.int32)
    model.a_matrix_.value_ = np.array(value, dtype=np.float64)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "simplex")
    h.passModel(model)
    h.run()
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        return None
    basis = h.getBasis()
    if not basis.valid:
        return None
    basic = highspy.HighsBasisStatus.kBasic
    out = [k for k, st in enumerate(basis.col_status) if st == basic]
    out += [slack_of[i] for i, st in enumerate(basis.row_status)
            if st == basic and i in slack_of]
    arts = [i for i, st in enumerate(basis.row_status)
            if st == basic and i not in slack_of]
    return out, arts
