"""Weighted boundary-decay integrals of the ground state.

An eigenfunction of the clamped plate vanishes quadratically at the boundary,
so the weighted integral

    integral(|hess u|^2 d_n^-2a + |grad u|^2 d_n^-(2+2a) + u^2 d_n^-(4+2a))

stays bounded as n -> infinity exactly when a < 1/2, and blows up at
a >= 1/2.  The STABLE/BLOWUP flag is the top-two-n increment test; on
practical grids a boundary-collar artifact makes it fire even at a < 1/2
(see the note printed at the end), though the growth rate still separates
the two regimes cleanly.
"""
import platelab as pl
from platelab import assembly, verifier


def main():
    dom = pl.disk(1.0)
    h = 1.0 / 64
    grid, mask = pl.build_grid(dom, h)
    dist = pl.euclidean_from_sdf(dom, grid, mask)
    Q0 = assembly.assemble_Q0(grid, mask)
    mass = assembly.assemble_weighted(grid, mask, None, "mass", 0.0, 1)
    spec = pl.lowest_eigenpairs(Q0, mass, m=1)

    print("ground state of the clamped disk, h = 1/64")
    print(f"{'alpha':>6} {'lhs(n_max)':>12} {'rhs':>12} {'c_hat':>10} "
          f"{'increment':>10}  flag")
    for a in (0.1, 0.25, 0.4, 0.5, 0.6):
        rep = verifier.verify_decay(spec, 0, a, dist, grid, mask)
        (_, lo), (_, hi) = rep.n_sweep[-2:]
        inc = (hi - lo) / lo
        flag = "BLOWUP" if rep.blowup else "STABLE"
        print(f"{a:6.2f} {rep.lhs:12.4f} {rep.rhs:12.4f} {rep.c_hat:10.4f} "
              f"{inc:10.2%}  {flag}")
    print("\nNote: the n-sweep increments at alpha < 1/2 carry a grid")
    print("artifact of size ~h^(1-2a) from the one-cell collar, where the")
    print("centered difference of u is O(h) instead of the true O(d^2);")
    print("see README 'Known numerical limitations'.")


if __name__ == "__main__":
    main()
