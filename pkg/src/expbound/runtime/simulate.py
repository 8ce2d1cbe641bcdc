"""Monte-Carlo simulation of the cost semantics.

``run_once`` interprets a single trial; ``estimate`` runs many trials in
lockstep on numpy arrays. Both consume the counter-based draws of
:mod:`.rng`, so trial ``t`` under seed ``s`` follows the same path in
either mode. Costs are tracked exactly as integer multiples of the
smallest tick unit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import rng
from .machine import Machine, RuntimeFault, compile_program

MAX_STEPS = 10 ** 7
SCHEDULERS = ("first", "second", "random")
_HALF = [1 << 63]


@dataclass
class RunResult:
    cost: Fraction
    final: dict
    steps: int
    censored: bool = False


@dataclass
class SimEstimate:
    trials: int
    mean: float
    stderr: float
    minimum: float = 0.0
    maximum: float = 0.0
    quartiles: tuple = (0.0, 0.0, 0.0)
    censored: int = 0
    exact_mean: Optional[Fraction] = None
    costs: Optional[np.ndarray] = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {"trials": self.trials, "mean": self.mean, "stderr": self.stderr,
                "min": self.minimum, "max": self.maximum,
                "q1": self.quartiles[0], "median": self.quartiles[1],
                "q3": self.quartiles[2], "censored": self.censored}


def _machine(p) -> Machine:
    return p if isinstance(p, Machine) else compile_program(p)


def _check_scheduler(scheduler: str) -> None:
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}; expected one of {SCHEDULERS}")


def initial_state(variables, given: Optional[dict]) -> dict:
    """Total state over ``variables``; unspecified variables start at 0."""
    given = dict(given or {})
    unknown = set(given) - set(variables)
    if unknown:
        raise ValueError(f"unknown variables: {', '.join(sorted(unknown))}")
    return {v: int(given.get(v, 0)) for v in variables}


def run_once(p, state: Optional[dict] = None, scheduler: str = "first", seed: int = 0,
             trial: int = 0, max_steps: int = MAX_STEPS) -> RunResult:
    """One execution from ``state``."""
    _check_scheduler(scheduler)
    m = _machine(p)
    env = initial_state(m.variables, state)
    code = m.code
    pc, units, steps, k = 0, 0, 0, 0
    stack = []
    while True:
        if steps >= max_steps:
            return RunResult(units * m.unit, env, steps, True)
        ins = code[pc]
        steps += 1
        op = ins.op
        if op == "assign":
            env[ins.var] = int(ins.fn(env))
            pc += 1
        elif op == "sample":
            _, values, cuts = ins.arg
            v = values[rng.pick(rng.draw(seed, trial, k), cuts)]
            k += 1
            env[ins.var] = int(ins.fn(env)) + ins.sign * v
            pc += 1
        elif op == "tick":
            units += ins.arg
            pc += 1
        elif op == "branch":
            pc = ins.then if ins.fn(env) != 0 else ins.other
        elif op == "choose":
            left = rng.pick(rng.draw(seed, trial, k), ins.arg) == 0
            k += 1
            pc = ins.then if left else ins.other
        elif op == "nondet":
            if scheduler == "random":
                left = rng.pick(rng.draw(seed, trial, k), _HALF) == 0
                k += 1
            else:
                left = scheduler == "first"
            pc = ins.then if left else ins.other
        elif op == "jump":
            pc = ins.arg
        elif op == "assert":
            if ins.fn(env) == 0:
                return RunResult(units * m.unit, env, steps)
            pc += 1
        elif op == "call":
            stack.append(pc + 1)
            pc = ins.arg
        elif op == "ret":
            pc = stack.pop()
        elif op == "halt":
            return RunResult(units * m.unit, env, steps)
        elif op == "abort":
            # abort diverges: the run never terminates
            return RunResult(units * m.unit, env, max_steps, True)
        else:  # pragma: no cover
            raise RuntimeFault(op)


class _SubEnv:
    """Variable lookups restricted to a subset of trials."""

    __slots__ = ("env", "idx")

    def __init__(self, env, idx):
        self.env = env
        self.idx = idx

    def __getitem__(self, name):
        return self.env[name][self.idx]


def simulate(p, state: Optional[dict] = None, trials: int = 10000, seed: int = 0,
             scheduler: str = "first", max_steps: int = MAX_STEPS):
    """Run ``trials`` executions; returns ``(cost_units, censored, machine)``
    with one entry per trial."""
    _check_scheduler(scheduler)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    m = _machine(p)
    code = m.code
    init = initial_state(m.variables, state)
    env = {v: np.full(trials, x, dtype=np.int64) for v, x in init.items()}
    keys = rng.stream_keys(seed, np.arange(trials))
    pc = np.zeros(trials, dtype=np.int64)
    units = np.zeros(trials, dtype=np.int64)
    steps = np.zeros(trials, dtype=np.int64)
    ndraw = np.zeros(trials, dtype=np.int64)
    censored = np.zeros(trials, dtype=bool)
    stack = np.zeros((4, trials), dtype=np.int64)
    sp = np.zeros(trials, dtype=np.int64)
    active = np.arange(trials)
    while active.size:
        pcs = pc[active]
        finished = np.zeros(active.size, dtype=bool)
        for i, ins in enumerate(code):
            pos = np.flatnonzero(pcs == i)
            if not pos.size:
                continue
            idx = active[pos]
            steps[idx] += 1
            op = ins.op
            if op == "assign":
                env[ins.var][idx] = ins.fn(_SubEnv(env, idx))
                nxt = i + 1
            elif op == "sample":
                arr, _, cuts = ins.arg
                u = rng.draws(keys[idx], ndraw[idx])
                ndraw[idx] += 1
                env[ins.var][idx] = ins.fn(_SubEnv(env, idx)) + ins.sign * arr[rng.pick_vec(u, cuts)]
                nxt = i + 1
            elif op == "tick":
                units[idx] += ins.arg
                nxt = i + 1
            elif op == "branch":
                cond = np.asarray(ins.fn(_SubEnv(env, idx)))
                nxt = np.where(cond != 0, ins.then, ins.other)
            elif op == "choose":
                u = rng.draws(keys[idx], ndraw[idx])
                ndraw[idx] += 1
                nxt = np.where(rng.pick_vec(u, ins.arg) == 0, ins.then, ins.other)
            elif op == "nondet":
                if scheduler == "random":
                    u = rng.draws(keys[idx], ndraw[idx])
                    ndraw[idx] += 1
                    nxt = np.where(rng.pick_vec(u, _HALF) == 0, ins.then, ins.other)
                else:
                    nxt = ins.then if scheduler == "first" else ins.other
            elif op == "jump":
                nxt = ins.arg
            elif op == "assert":
                ok = np.asarray(ins.fn(_SubEnv(env, idx))) != 0
                ok = np.broadcast_to(ok, idx.shape)
                finished[pos[~ok]] = True
                nxt = np.where(ok, i + 1, -1)
            elif op == "call":
                if sp[idx].max() + 1 >= stack.shape[0]:
                    stack = np.vstack([stack, np.zeros_like(stack)])
                stack[sp[idx], idx] = i + 1
                sp[idx] += 1
                nxt = ins.arg
            elif op == "ret":
                sp[idx] -= 1
                nxt = stack[sp[idx], idx]
            elif op == "halt":
                finished[pos] = True
                nxt = -1
            elif op == "abort":
                censored[idx] = True
                finished[pos] = True
                nxt = -1
            else:  # pragma: no cover
                raise RuntimeFault(op)
            pc[idx] = nxt
            pcs[pos] = nxt
        over = steps[active] >= max_steps
        censored[active[over & ~finished]] = True
        active = active[~(finished | over)]
    return units, censored, m


def summarize(units: np.ndarray, censored: np.ndarray, unit: Fraction) -> SimEstimate:
    ok = units[~censored]
    n_cens = int(censored.sum())
    if n_cens:
        warnings.warn(f"{n_cens} censored run(s) excluded from the mean", RuntimeWarning,
                      stacklevel=3)
    if not ok.size:
        return SimEstimate(0, math.nan, math.nan, censored=n_cens)
    costs = ok.astype(np.float64) * float(unit)
    exact = Fraction(int(ok.sum())) * unit / ok.size
    stderr = float(costs.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
    q = np.percentile(costs, [25, 50, 75])
    return SimEstimate(int(ok.size), float(exact), stderr, float(costs.min()),
                       float(costs.max()), tuple(float(x) for x in q), n_cens,
                       exact, costs)


def estimate(p, state: Optional[dict] = None, trials: int = 10000, seed: int = 0,
             scheduler: str = "first", max_steps: int = MAX_STEPS) -> SimEstimate:
    """Mean expected cost from ``state`` over ``trials`` independent runs."""
    units, censored, m = simulate(p, state, trials, seed, scheduler, max_steps)
    return summarize(units, censored, m.unit)
