"""Sweep P x L x d with four planted signals and compare mean err(k).

SPC is run with L1 bounds proportional to sqrt(P) so that the same three
settings make sense for both values of P. A ``*`` marks the best method in
each cell, and ``!`` an SMSSVD error above the signal strength (a sign that
a component landed on the wrong signal).

    python demos/residual_grid.py [low|medium|high] [seed]
"""
import sys

import numpy as np

from smssvd.evaluation import compare_methods
from smssvd.synthetic import generate, residual_grid

METHODS = ["svd", "smssvd", "spc:c=r0.04", "spc:c=r0.12", "spc:c=r0.36"]


def main(level="medium", seed=0):
    print(f"{'P':>5} {'L':>4} {'d':>2}" + "".join(f"{m:>13}" for m in METHODS))
    for spec in residual_grid(level, seed=seed):
        rows = compare_methods(generate(spec), METHODS)
        mean = {m: np.mean([r.err for r in rows if r.method == m]) for m in METHODS}
        best = min(mean, key=mean.get)
        flag = any(r.flagged for r in rows if r.method == "smssvd")
        cells = "".join(f"{mean[m]:>12.4f}{'*' if m == best else ' '}" for m in METHODS)
        print(f"{spec.P:>5} {spec.L:>4} {spec.d:>2}{cells}{' !' if flag else ''}", flush=True)


if __name__ == "__main__":
    args = sys.argv[1:]
    main(args[0] if args else "medium", int(args[1]) if len(args) > 1 else 0)
