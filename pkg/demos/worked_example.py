"""Walk through the analysis of a small probabilistic loop.

    while (x >= 2) { x = x - 1 [1/3] x = x - 2; tick(1); }

Each iteration lowers x by 5/3 on average and costs 1, so the expected
cost is about 3/5 of x.
"""

from expbound import analyze_text
from expbound.logic import dump_contexts
from expbound.frontend import parse_program
from expbound.runtime import ert_truncated, estimate

SRC = "var x; while (x >= 2) { x = x - 1 [1/3] x = x - 2; tick(1); }"

prog = parse_program(SRC, name="worked")
rep = analyze_text(SRC, degree=1, keep=True)

print("contexts")
print(dump_contexts(prog, rep.contexts))
print("base functions:", rep.derivation.B)
print("LP size:", rep.stats["vars"], "variables,", rep.stats["constraints"], "constraints")
print("bound:", rep.bound)
print()

print(f"{'x':>5} {'bound':>8} {'MC mean':>9} {'exact (K=400)':>14}")
for x in (2, 10, 50, 200):
    est = estimate(prog, {"x": x}, trials=5000, seed=x)
    low = ert_truncated(prog, {"x": x}, unroll=400).lower
    print(f"{x:>5} {float(rep.bound.eval({'x': x})):>8.2f} {est.mean:>9.3f} {float(low):>14.4f}")
