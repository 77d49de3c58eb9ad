"""Clamped-plate spectrum on the unit disk.

Solves the lowest eigenvalues of the discrete bilaplacian form with clamped
boundary conditions (zero extension) and compares them against the roots of
the clamped-plate frequency equation J_m(k) I_{m+1}(k) + I_m(k) J_{m+1}(k) = 0,
whose fourth powers are the exact eigenvalues.
"""
import numpy as np

import platelab as pl
from platelab import assembly

EXACT = (104.3631055588, 452.0045101332, 452.0045101332)


def main():
    dom = pl.disk(1.0)
    print("clamped plate on the unit disk")
    print(f"{'h':>8} {'lambda_1':>12} {'lambda_2':>12} {'lambda_3':>12} "
          f"{'rel err 1':>10}")
    for inv_h in (32, 48, 64):
        h = 1.0 / inv_h
        grid, mask = pl.build_grid(dom, h)
        Q0 = assembly.assemble_Q0(grid, mask)
        mass = assembly.assemble_weighted(grid, mask, None, "mass", 0.0, 1)
        spec = pl.lowest_eigenpairs(Q0, mass, m=3)
        err = abs(spec.values[0] - EXACT[0]) / EXACT[0]
        print(f"{h:8.5f} {spec.values[0]:12.4f} {spec.values[1]:12.4f} "
              f"{spec.values[2]:12.4f} {err:10.4%}")
    print(f"{'exact':>8} {EXACT[0]:12.4f} {EXACT[1]:12.4f} {EXACT[2]:12.4f}")
    print("\nThe error decays like c*h: the zero-extension boundary rows act")
    print("like a clamped wall displaced by a fraction of a cell, a first-")
    print("order effect that dominates the second-order interior stencil.")


if __name__ == "__main__":
    main()
