"""Analyze the bundled corpus and compare each bound with simulation at
one input point. Simulation resolves nondeterministic choices with the
`second` scheduler, the costly one for ndwalk."""

import random

from expbound import analyze
from expbound.cli import corpus_dir
from expbound.frontend import load_program
from expbound.runtime import estimate

rng = random.Random(0)
for path in sorted(corpus_dir().glob("*.imp")):
    prog = load_program(path)
    rep = analyze(prog)
    if not rep.found:
        print(f"{prog.name:<11} no bound")
        continue
    point = {v: rng.randint(5, 30) for v in prog.globals}
    value = float(rep.bound.eval(point))
    est = estimate(prog, point, trials=2000, seed=1, scheduler="second")
    gap = f"{100 * (value - est.mean) / value:6.2f}%" if value else "     -"
    print(f"{prog.name:<11} {str(rep.bound):<62} bound {value:9.1f}  "
          f"mean {est.mean:9.1f} ± {3 * est.stderr:5.1f}  gap {gap}")
