"""Hardy-Rellich best constants as generalized eigenvalues.

For each regularization level n the best constant in
    integral(|grad v|^2) >= A * integral(v^2 / d_n^2)
(and the fourth-order analogues) is the smallest eigenvalue of the pencil
(form, weighted mass).  The plain constants decay as n grows because the
singular weight concentrates at the boundary; subtracting a multiple of the
plain mass (the "weak" form) is the standard fix, and the weak constants are
reported alongside the shift that was used.
"""
import platelab as pl
from platelab import assembly, verifier


def main():
    dom = pl.disk(1.0)
    h = 1.0 / 64
    grid, mask = pl.build_grid(dom, h)
    dist = pl.euclidean_from_sdf(dom, grid, mask)
    Q0 = assembly.assemble_Q0(grid, mask)
    grad = assembly.assemble_weighted(grid, mask, None, "grad", 0.0, 1)
    mass = assembly.assemble_weighted(grid, mask, None, "mass", 0.0, 1)

    print("unit disk, h = 1/64")
    for kind, A, target in (("hardy_grad", grad, "1/4"),
                            ("rellich_mass", Q0, "9/16"),
                            ("rellich_grad", Q0, "-")):
        rep = verifier.estimate_hardy_constant(A, grid, mask, dist, kind,
                                               mass=mass)
        print(f"\n  {kind}  (weak-form reference constant: {target})")
        for n, c in rep.n_sweep:
            print(f"    n = {n:4d}   constant = {c:.6f}")
        c_weak, shift = rep.weak_pair
        print(f"    weak constant = {c_weak:.6f}   (shift = {shift:g})")
    print("\nThe weak constants approach their continuum values only")
    print("logarithmically in the regularization level, so at practical")
    print("grid sizes they sit well above 1/4 and 9/16.")


if __name__ == "__main__":
    main()
