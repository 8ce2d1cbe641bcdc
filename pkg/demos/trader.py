"""Quadratic bound for the trader program and how tight it is.

The price s walks above s_min; after every step the trader buys up to ten
shares, paying one tick per unit of the current price.
"""

from expbound import analyze
from expbound.cli import check_point, corpus_dir
from expbound.frontend import load_program

prog = load_program(corpus_dir() / "trader.imp")
rep = analyze(prog, degree=2)
print("bound:", rep.bound)
print(f"derived in {rep.seconds:.2f}s")
print()
print(f"{'s':>4} {'s_min':>5} {'bound':>8} {'MC mean':>10} {'ert lower':>10}")
for s, s_min in ((5, 0), (10, 0), (20, 5), (30, 10)):
    r = check_point(prog, rep.bound, {"s": s, "s_min": s_min}, trials=2000, unroll=200)
    print(f"{s:>4} {s_min:>5} {float(r['bound-value']):>8.0f} {r['mc-mean']:>10.1f} "
          f"{float(r['ert-lower']):>10.1f}")
