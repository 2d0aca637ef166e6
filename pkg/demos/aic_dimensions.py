"""How many dimensions does it take to explain sample groups?

Three sample groups differ on 40 of 5000 variables; every variable
carries unit noise. AIC of a per-group Gaussian model is computed on the
first m sample coordinates of SVD and of SMSSVD. A lower curve means the
representation separates the groups with fewer parameters. SVD mixes the
40 informative variables with thousands of noise directions, while
SMSSVD builds its subspace from the high-variance rows alone.

Variance filtering assumes the informative variables are among the most
variable ones. Noise rows that are louder than the signal rows defeat it.

    python demos/aic_dimensions.py [seed]
"""
import sys

import numpy as np

from smssvd import EngineConfig, aic_curve, make_rng, smssvd, svd_truncated

DIMS = 6


def make_data(seed, n=20, P=5000, L=40):
    rng = make_rng(seed)
    labels = np.repeat([0, 1, 2], n)
    X = rng.standard_normal((P, 3 * n))
    pattern = np.array([[1.0, -0.5, -0.5], [0.0, 0.75, -0.75]])
    X[:L // 2] += pattern[0][labels]
    X[L // 2:L] += pattern[1][labels]
    return X, labels


def main(seed=0):
    X, labels = make_data(seed)
    f = svd_truncated(X, DIMS)
    dec = smssvd(X, EngineConfig(max_components=DIMS, seed=seed))
    curves = {
        "svd": aic_curve(f.V * f.sigma, labels),
        "smssvd": aic_curve(dec.sample_coordinates(), labels),
    }
    print(f"{'m':>3}" + "".join(f"{k:>12}" for k in curves))
    for m in range(DIMS):
        vals = [f"{c[m].aic:>12.1f}" if m < len(c) else f"{'-':>12}" for c in curves.values()]
        print(f"{m + 1:>3}" + "".join(vals))
    for name, c in curves.items():
        best = min(c, key=lambda r: r.aic)
        print(f"{name}: minimum AIC {best.aic:.1f} at m={best.dims}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
