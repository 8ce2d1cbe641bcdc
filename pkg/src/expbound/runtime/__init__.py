"""Executable cost semantics: simulation and a truncated expected-cost oracle."""

from .ert import ErtResult, SupportCapExceeded, ert_truncated, eval_bound
from .machine import Machine, RuntimeFault, compile_program
from .simulate import (MAX_STEPS, SCHEDULERS, RunResult, SimEstimate, estimate,
                       initial_state, run_once, simulate)

__all__ = ["ErtResult", "SupportCapExceeded", "ert_truncated", "eval_bound",
           "Machine", "RuntimeFault", "compile_program", "MAX_STEPS", "SCHEDULERS",
           "RunResult", "SimEstimate", "estimate", "initial_state", "run_once",
           "simulate"]
