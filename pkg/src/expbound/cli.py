"""Command-line interface.

Subcommands: ``analyze`` derives a bound, ``bench`` runs the corpus
against the golden bounds, ``simulate`` estimates expected cost by
Monte-Carlo, ``check`` compares a derived bound with simulation and the
truncated oracle, and ``compare`` reports the relative error between bound
and simulated mean.

Exit codes: 0 success, 2 no bound found (or a soundness violation for
``check``), 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import multiprocessing as mp
import sys
import time
import warnings
from fractions import Fraction
from importlib import resources
from pathlib import Path
from queue import Empty

from . import lp as lpmod
from .analysis import analyze
from .bound import format_decimal
from .derive import dump_constraints
from .frontend import NonDet, ProgramError, load_program
from .logic import dump_contexts
from .potential import HintError, parse_hints
from .runtime import (SCHEDULERS, SupportCapExceeded, ert_truncated, estimate,
                      initial_state)

EXIT_OK, EXIT_ERROR, EXIT_NO_BOUND = 0, 1, 2


class UsageError(ValueError):
    pass


# --- inputs ------------------------------------------------------------------

def parse_inputs(specs) -> list:
    """Input points from ``"x=0,n=100"`` strings. Several points may be
    separated by ``;``; a value ``a:b:step`` expands to a range (inclusive)
    and ranges combine as a cartesian product."""
    points = []
    for text in specs or []:
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            names, choices = [], []
            for item in part.split(","):
                if "=" not in item:
                    raise UsageError(f"bad input {item!r}; expected name=value")
                name, value = (t.strip() for t in item.split("=", 1))
                names.append(name)
                choices.append(_values(value))
            for combo in itertools.product(*choices):
                points.append(dict(zip(names, combo)))
    return points


def _values(text: str) -> list:
    try:
        if ":" in text:
            parts = [int(t) for t in text.split(":")]
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            if step <= 0:
                raise UsageError("range step must be positive")
            return list(range(lo, hi + 1, step))
        return [int(text)]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad input value {text!r}") from None


def input_text(point: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in point.items())


# --- output ------------------------------------------------------------------

def _num(q, decimal: bool = True) -> str:
    if isinstance(q, Fraction):
        return format_decimal(q) if decimal else str(q)
    return f"{q:.6g}"


def _emit_rows(rows: list, fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
        return
    if not rows:
        return
    keys = list(rows[0])
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([r[k] for k in keys])
        return
    widths = {k: max(len(k), *(len(str(r[k])) for r in rows)) for k in keys}
    out.write("| " + " | ".join(k.ljust(widths[k]) for k in keys) + " |\n")
    out.write("|" + "|".join("-" * (widths[k] + 2) for k in keys) + "|\n")
    for r in rows:
        out.write("| " + " | ".join(str(r[k]).ljust(widths[k]) for k in keys) + " |\n")


def _load_hints(path):
    if not path:
        return ()
    return parse_hints(Path(path).read_text())


def _analyze(args, prog):
    return analyze(prog, degree=args.degree, specs_per_proc=args.specs_per_proc,
                   hints=_load_hints(args.hints),
                   keep=bool(args.dump_contexts or args.dump_constraints or args.emit_lp))


# --- subcommands -------------------------------------------------------------

def cmd_analyze(args, out) -> int:
    prog = load_program(args.file)
    rep = _analyze(args, prog)
    if args.dump_contexts:
        out.write(dump_contexts(prog, rep.contexts))
    if args.dump_constraints:
        out.write(dump_constraints(rep.derivation))
    if args.emit_lp:
        from .analysis import objective_levels
        d = rep.derivation
        Path(args.emit_lp).write_text(lpmod.format_lp(d.lp, objective_levels(d.B, d.root)[0]))
    text = rep.bound.text(args.decimal) if rep.found else None
    if args.format == "json":
        data = {"program": rep.program, "degree": rep.degree, "status": rep.status,
                "bound": text, "terms": rep.bound.to_json()["terms"] if rep.found else None,
                "lp": {"vars": rep.stats["vars"], "constraints": rep.stats["constraints"]},
                "seconds": round(rep.seconds, 3)}
        json.dump(data, out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        _emit_rows([{"program": rep.program, "degree": rep.degree, "status": rep.status,
                     "bound": text or "", "vars": rep.stats["vars"],
                     "constraints": rep.stats["constraints"],
                     "seconds": f"{rep.seconds:.3f}"}], "csv", out)
    else:
        out.write(f"program: {rep.program}\n")
        out.write(f"degree:  {rep.degree}\n")
        out.write(f"bound:   {text if rep.found else f'no bound found of degree <= {rep.degree}'}\n")
        out.write(f"lp:      {rep.stats['vars']} variables, {rep.stats['constraints']} constraints\n")
        out.write(f"time:    {rep.seconds:.2f}s\n")
    return EXIT_OK if rep.found else EXIT_NO_BOUND


def corpus_dir() -> Path:
    return Path(str(resources.files("expbound") / "corpus"))


def load_golden(path=None) -> dict:
    path = Path(path) if path else corpus_dir() / "golden.json"
    if not path.exists():
        return {}
    return json.loads(path.read_text())


def _bench_one(path: str, degree: int, queue) -> None:
    try:
        rep = analyze(load_program(path), degree=degree)
        queue.put(("ok", rep.bound.text() if rep.found else None, rep.stats, rep.seconds))
    except Exception as exc:  # reported as an error row
        queue.put(("error", f"{type(exc).__name__}: {exc}", {}, 0.0))


def run_bench(directory, degree: int = 2, timeout: float = 60.0, golden=None) -> list:
    """Analyze every ``.imp`` in ``directory`` (sorted by name), each in its
    own process with a time limit. Failures become rows, not exceptions."""
    golden = load_golden() if golden is None else golden
    rows = []
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    for path in sorted(Path(directory).glob("*.imp")):
        name = path.stem
        queue = ctx.Queue()
        proc = ctx.Process(target=_bench_one, args=(str(path), degree, queue))
        t0 = time.perf_counter()
        proc.start()
        proc.join(timeout)
        if proc.is_alive():
            proc.terminate()
            proc.join()
            status, bound, stats, secs = "timeout", None, {}, time.perf_counter() - t0
        else:
            try:
                status, bound, stats, secs = queue.get(timeout=5)
            except Empty:
                status, bound, stats, secs = "error", "analysis process died", {}, 0.0
        if status == "ok":
            status = "bound" if bound is not None else "no bound"
        expect = golden.get(name, "?") if name in golden else "?"
        if status in ("timeout", "error"):
            match = "-"
        elif name not in golden:
            match = "?"
        else:
            match = "yes" if expect == bound else "no"
        rows.append({"program": name, "status": status,
                     "bound": bound if status != "error" else "",
                     "golden": "" if expect in ("?", None) else expect,
                     "match": match, "vars": stats.get("vars", ""),
                     "constraints": stats.get("constraints", ""),
                     "seconds": f"{secs:.2f}",
                     **({"error": bound} if status == "error" else {})})
    # uniform columns
    keys = ["program", "status", "bound", "golden", "match", "vars", "constraints", "seconds"]
    if any("error" in r for r in rows):
        keys.append("error")
    return [{k: ("" if r.get(k) is None else r.get(k, "")) for k in keys} for r in rows]


def cmd_bench(args, out) -> int:
    directory = args.dir or corpus_dir()
    golden = load_golden(args.golden)
    rows = run_bench(directory, args.degree, args.timeout, golden)
    _emit_rows(rows, "table" if args.format == "text" else args.format, out)
    if args.format == "text":
        matched = sum(r["match"] == "yes" for r in rows)
        out.write(f"\n{matched}/{len(rows)} programs match the golden bounds\n")
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    prog = load_program(args.file)
    points = parse_inputs(args.input) or [{}]
    rows = []
    for pt in points:
        est = estimate(prog, pt, trials=args.trials, seed=args.seed,
                       scheduler=args.scheduler, max_steps=args.max_steps)
        rows.append({"program": prog.name, "input": input_text(pt), **est.as_dict()})
    if args.format == "text":
        for r in rows:
            note = f" ({r['censored']} censored)" if r["censored"] else ""
            out.write(f"{r['program']} [{r['input']}] mean {r['mean']:.6g} "
                      f"± {r['stderr']:.3g} over {r['trials']} trials{note}\n")
    else:
        _emit_rows(rows, args.format, out)
    return EXIT_OK


def cmd_compare(args, out) -> int:
    prog = load_program(args.file)
    rep = _analyze(args, prog)
    if not rep.found:
        out.write(f"no bound found of degree <= {rep.degree}\n")
        return EXIT_NO_BOUND
    rows = []
    for pt in parse_inputs(args.input) or [{}]:
        value = rep.bound.eval(initial_state(prog.globals, pt))
        est = estimate(prog, pt, trials=args.trials, seed=args.seed,
                       scheduler=args.scheduler, max_steps=args.max_steps)
        err = abs(float(value) - est.mean) / float(value) * 100 if value > 0 else float("nan")
        rows.append({"program": rep.program, "input": input_text(pt),
                     "bound": _num(value), "mc-mean": f"{est.mean:.6g}",
                     "mc-stderr": f"{est.stderr:.3g}", "error-%": f"{err:.3f}"})
    out.write(f"bound: {rep.bound.text(args.decimal)}\n" if args.format == "text" else "")
    _emit_rows(rows, "csv" if args.format == "text" else args.format, out)
    return EXIT_OK


def check_point(prog, bound, point, trials=2000, seed=0, unroll=200,
                schedulers=SCHEDULERS, bits=256, max_steps=10 ** 7) -> dict:
    """Compare ``bound`` at ``point`` with every scheduler's Monte-Carlo
    estimate (bound >= mean - 3 stderr) and with the truncated oracle
    (bound >= certified lower bound)."""
    value = bound.eval(initial_state(prog.globals, point))
    worst = None
    if not any(isinstance(c, NonDet) for c in prog.commands()):
        # schedulers only act at nondeterministic choices: one run covers all
        schedulers = schedulers[:1]
    for sched in schedulers:
        est = estimate(prog, point, trials=trials, seed=seed, scheduler=sched,
                       max_steps=max_steps)
        if worst is None or est.mean - 3 * est.stderr > worst.mean - 3 * worst.stderr:
            worst = est
    mc_ok = float(value) >= worst.mean - 3 * worst.stderr
    try:
        ert = ert_truncated(prog, point, unroll=unroll, bits=bits)
        lower, residual = ert.lower, ert.residual
        ert_ok = value >= lower
    except SupportCapExceeded:
        lower = residual = None
        ert_ok = True
    return {"program": prog.name, "input": input_text(point), "bound-value": value,
            "mc-mean": worst.mean, "mc-stderr": worst.stderr, "ert-lower": lower,
            "residual-mass": residual, "mc-ok": mc_ok, "ert-ok": ert_ok,
            "ert-skipped": lower is None}


def cmd_check(args, out) -> int:
    prog = load_program(args.file)
    rep = _analyze(args, prog)
    if not rep.found:
        out.write(f"no bound found of degree <= {rep.degree}\n")
        return EXIT_NO_BOUND
    scheds = SCHEDULERS if args.scheduler == "all" else (args.scheduler,)
    rows, ok = [], True
    for pt in parse_inputs(args.input) or [{}]:
        r = check_point(prog, rep.bound, pt, args.trials, args.seed, args.unroll, scheds,
                        bits=args.round_bits or None, max_steps=args.max_steps)
        ok &= r["mc-ok"] and r["ert-ok"]
        rows.append({"program": r["program"], "input": r["input"],
                     "bound-value": _num(r["bound-value"]),
                     "mc-mean": f"{r['mc-mean']:.6g}", "mc-stderr": f"{r['mc-stderr']:.3g}",
                     "ert-lower": "" if r["ert-lower"] is None else _num(r["ert-lower"]),
                     "residual-mass": "" if r["residual-mass"] is None
                     else f"{float(r['residual-mass']):.3g}",
                     "sound": "yes" if r["mc-ok"] and r["ert-ok"] else "NO"})
    _emit_rows(rows, "csv" if args.format == "text" else args.format, out)
    return EXIT_OK if ok else EXIT_NO_BOUND


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--degree", type=int, default=2, help="maximal degree of the bound")
    common.add_argument("--specs-per-proc", type=int, default=1,
                        help="specifications per procedure")
    common.add_argument("--hints", help="file of extra rewrite functions")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--decimal", action="store_true", help="print decimal coefficients")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=10000)
    common.add_argument("--scheduler", default="first",
                        help="first | second | random (check also accepts all)")
    common.add_argument("--unroll", type=int, default=200, help="oracle unrolling depth")
    common.add_argument("--input", action="append",
                        help='input point such as "x=0,n=100"; repeatable')
    common.add_argument("--max-steps", type=int, default=10 ** 7)
    common.add_argument("--dump-contexts", action="store_true")
    common.add_argument("--dump-constraints", action="store_true")
    common.add_argument("--emit-lp", metavar="FILE", help="write the first LP in CPLEX format")

    p = argparse.ArgumentParser(prog="expbound",
                                description="Expected-cost bounds for probabilistic programs.")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="derive a bound")
    a.add_argument("file")
    b = sub.add_parser("bench", parents=[common], help="analyze a corpus")
    b.add_argument("dir", nargs="?", help="directory of .imp files (default: bundled corpus)")
    b.add_argument("--golden", help="JSON file of expected bounds")
    b.add_argument("--timeout", type=float, default=60.0)
    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo estimate")
    s.add_argument("file")
    c = sub.add_parser("check", parents=[common], help="soundness check of a derived bound")
    c.add_argument("file")
    c.add_argument("--round-bits", type=int, default=256,
                   help="round oracle masses down to this many bits (0: exact)")
    m = sub.add_parser("compare", parents=[common], help="bound versus simulated mean")
    m.add_argument("file")
    return p


COMMANDS = {"analyze": cmd_analyze, "bench": cmd_bench, "simulate": cmd_simulate,
            "check": cmd_check, "compare": cmd_compare}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        allowed = SCHEDULERS + (("all",) if args.command == "check" else ())
        if args.scheduler not in allowed:
            raise UsageError(f"unknown scheduler {args.scheduler!r}")
        if args.degree < 0:
            raise UsageError("degree must be non-negative")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            code = COMMANDS[args.command](args, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except (ProgramError, HintError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def run(argv) -> str:
    """Run the CLI and return what it printed (for tests and scripts)."""
    buf = io.StringIO()
    main(argv, buf)
    return buf.getvalue()
