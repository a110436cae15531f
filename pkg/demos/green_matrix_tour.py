"""Evaluate the linear solution operator across the damping regimes.

Prints the Green-matrix entries on both sides of the crossing radius, the
agreement with an extended-precision matrix exponential and the
high-frequency damping supremum.
"""

import numpy as np

from nsplab.reference import determinant_defect, green_oracle_errors, green_sample
from nsplab.semigroup import DispersionSymbol, green_matrix, verify_high_freq_damping


def main():
    eps = 0.1
    sym = DispersionSymbol("electron", eps)
    rc = np.sqrt((1 + np.sqrt(1 + 4 * eps**2)) / (2 * eps**2))
    print(f"crossing radius for eps={eps}: {rc:.6f}")
    for r in (0.5, rc * (1 - 1e-9), rc, 2 * rc):
        G = green_matrix(1.0, r, sym)
        print(f"  r={r:10.6f}  G(t=1) = [[{G[0, 0]: .6e}, {G[0, 1]: .6e}], [{G[1, 0]: .6e}, {G[1, 1]: .6e}]]")

    e, r, t = green_sample(10_000, seed=0)
    err = green_oracle_errors(green_matrix, e, r, t)
    det = max(float(determinant_defect(t[e == x], r[e == x], float(x)).max()) for x in np.unique(e))
    print(f"oracle sample: max relative error {err.max():.2e}, determinant defect {det:.2e}")

    res = verify_high_freq_damping([1e-3, 1e-2, 1e-1, 1.0], np.linspace(0, 200, 201), np.geomspace(1e-2, 1e4, 1001))
    print(f"high-frequency damping sup: {res['sup']:.4f} (bound 3)")


if __name__ == "__main__":
    main()
