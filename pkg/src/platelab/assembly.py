"""Discrete quadratic forms on masked grid unknowns as sparse symmetric matrices.

All second differences use zero extension outside the interior mask.  The
operator form Q and the bilaplacian form Q0 include the difference rows at
every lattice node touched by an interior unknown; this is what enforces the
clamped condition du/dn = 0 at stencil order.  Weighted forms (singular
weights d_n^-p) are quadrature sums over strictly interior nodes only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import EllipticityLost, NotElliptic
from .finsler import CoefficientField, DistanceField, freeze_coefficients
from .geometry import Grid, GridMask

# row weights for |hess u|^2 = u_xx^2 + u_yy^2 + 2 u_xy^2
_HESS_WEIGHTS = (1.0, 1.0, 2.0)


@dataclass(frozen=True)
class FormMatrix:
    """Sparse symmetric quadratic form on the masked unknowns."""

    matrix: sp.csr_matrix
    kind: str
    h: float
    power: float = 0.0
    n_reg: int = 0

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, u, v=None) -> float:
        """Q(u) or the bilinear Q(u, v)."""
        if v is None:
            v = u
        return float(u @ (self.matrix @ v))

    def export_triplets(self, path) -> None:
        """Plain-text coordinate export: 'row col value', 17 significant digits."""
        coo = self.matrix.tocoo()
        with open(path, "w", encoding="utf-8") as f:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                f.write("%d %d %.17g\n" % (r, c, v))


@dataclass(frozen=True)
class EllipticityWindow:
    lambda_ell: float
    Lambda_ell: float


def _lattice_ops(grid: Grid):
    """Full-lattice centered difference operators (n_nodes x n_nodes)."""
    h = grid.h
    ex = np.ones(grid.nx)
    ey = np.ones(grid.ny)
    Tx = sp.diags([ex[:-1], -2 * ex, ex[:-1]], [-1, 0, 1], format="csr")
    Ty = sp.diags([ey[:-1], -2 * ey, ey[:-1]], [-1, 0, 1], format="csr")
    Cx = sp.diags([-ex[:-1], ex[:-1]], [-1, 1], format="csr") / (2 * h)
    Cy = sp.diags([-ey[:-1], ey[:-1]], [-1, 1], format="csr") / (2 * h)
    Ix = sp.identity(grid.nx, format="csr")
    Iy = sp.identity(grid.ny, format="csr")
    Dxx = sp.kron(Iy, Tx, format="csr") / h**2
    Dyy = sp.kron(Ty, Ix, format="csr") / h**2
    Dxy = sp.kron(Cy, Cx, format="csr")
    Gx = sp.kron(Iy, Cx, format="csr")
    Gy = sp.kron(Cy, Ix, format="csr")
    return Dxx, Dyy, Dxy, Gx, Gy


def _restriction(grid: Grid, mask: GridMask) -> sp.csr_matrix:
    """Selection matrix R (n_nodes x count): zero extension of mask vectors."""
    iy, ix = mask.node_of_dof[:, 0], mask.node_of_dof[:, 1]
    rows = iy * grid.nx + ix
    return sp.csr_matrix(
        (np.ones(mask.count), (rows, np.arange(mask.count))),
        shape=(grid.n_nodes, mask.count))


def _symmetrize(A: sp.spmatrix) -> sp.csr_matrix:
    A = A.tocsr()
    return ((A + A.T) * 0.5).tocsr()


def _ritz_probe(A: sp.csr_matrix, seed: int = 0, nvec: int = 8) -> float:
    """Smallest Ritz value over a seeded random subspace (cheap PD probe)."""
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((A.shape[0], min(nvec, A.shape[0])))
    V, _ = np.linalg.qr(V)
    H = V.T @ (A @ V)
    return float(np.linalg.eigvalsh((H + H.T) / 2).min())


def assemble_Q0(grid: Grid, mask: GridMask) -> FormMatrix:
    """Q0(u) = h^2 * sum_nodes (Lap_h u)^2 with zero extension (13-point form)."""
    Dxx, Dyy, _, _, _ = _lattice_ops(grid)
    R = _restriction(grid, mask)
    L = (Dxx + Dyy) @ R
    Q0 = _symmetrize((L.T @ L) * grid.h**2)
    return FormMatrix(Q0, "Q0", grid.h)


def assemble_Q(grid: Grid, mask: GridMask, coeffs: CoefficientField,
               check_elliptic: bool = True) -> FormMatrix:
    """Q(u) = h^2 * sum_nodes s(u)^T M(x) s(u), s = (u_xx, u_yy, u_xy).

    For the bilaplacian tensor the assembly routes through Lap_h^T Lap_h so
    that Q equals Q0 entrywise.
    """
    Mfield = freeze_coefficients(coeffs, grid)
    if np.allclose(Mfield, np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0],
                                     [0.0, 0.0, 0.0]]), atol=0.0):
        q0 = assemble_Q0(grid, mask)
        return FormMatrix(q0.matrix, "Q", grid.h)
    Dxx, Dyy, Dxy, _, _ = _lattice_ops(grid)
    R = _restriction(grid, mask)
    B = sp.vstack([Dxx @ R, Dyy @ R, Dxy @ R], format="csr")
    n = grid.n_nodes
    Mflat = Mfield.reshape(n, 3, 3)
    blocks = [[sp.diags(Mflat[:, a, b]) for b in range(3)] for a in range(3)]
    A = sp.bmat(blocks, format="csr")
    Q = _symmetrize((B.T @ (A @ B)) * grid.h**2)
    fm = FormMatrix(Q, "Q", grid.h)
    if check_elliptic and _ritz_probe(Q) <= 0.0:
        raise NotElliptic("assembled form has a nonpositive Ritz value")
    return fm


def assemble_weighted(grid: Grid, mask: GridMask, dist: Optional[DistanceField],
                      order: str, power: float, n_reg: int = 1) -> FormMatrix:
    """Weighted forms over interior nodes with weight d_n^-power.

    order='mass': diag(h^2 w); 'grad': G^T diag(h^2 w) G; 'hess':
    B^T diag(h^2 w) B with the (1,1,2) Hessian row weights.
    """
    n_reg = int(n_reg)
    if n_reg < 1:
        raise ValueError("n_reg must be >= 1")
    if power == 0.0 or dist is None:
        w = np.ones(mask.count)
        if power != 0.0:
            raise ValueError("a distance field is required for nonzero power")
    else:
        dn = dist.interior_values(mask) + 1.0 / n_reg
        w = dn ** (-float(power))
    W = sp.diags(grid.h**2 * w).tocsr()
    if order == "mass":
        return FormMatrix(W, "weighted_mass", grid.h, float(power), n_reg)
    Dxx, Dyy, Dxy, Gx, Gy = _lattice_ops(grid)
    R = _restriction(grid, mask)
    Rt = R.T
    # power 0: difference rows at every lattice node (same zero-extension
    # convention as Q0, so the unweighted forms are genuinely coercive);
    # singular weights: quadrature restricted to strictly interior nodes.
    if order == "grad":
        A = sp.csr_matrix((mask.count, mask.count))
        for Gop in (Gx, Gy):
            if power == 0.0:
                G = Gop @ R
                A = A + (G.T @ G) * grid.h**2
            else:
                G = Rt @ (Gop @ R)
                A = A + G.T @ (W @ G)
        return FormMatrix(_symmetrize(A), "weighted_grad", grid.h,
                          float(power), n_reg)
    if order == "hess":
        A = sp.csr_matrix((mask.count, mask.count))
        for wrow, Dop in zip(_HESS_WEIGHTS, (Dxx, Dyy, Dxy)):
            if power == 0.0:
                D = Dop @ R
                A = A + wrow * (D.T @ D) * grid.h**2
            else:
                D = Rt @ (Dop @ R)
                A = A + wrow * (D.T @ (W @ D))
        return FormMatrix(_symmetrize(A), "weighted_hess", grid.h,
                          float(power), n_reg)
    raise ValueError(f"unknown weighted order {order!r}")


def interior_difference_ops(grid: Grid, mask: GridMask):
    """(Dxx, Dyy, Dxy, Gx, Gy) restricted to interior rows and columns."""
    Dxx, Dyy, Dxy, Gx, Gy = _lattice_ops(grid)
    R = _restriction(grid, mask)
    Rt = R.T
    return tuple(Rt @ (Op @ R) for Op in (Dxx, Dyy, Dxy, Gx, Gy))


def principal_submatrix(form: FormMatrix, mask: GridMask,
                        sub_interior: np.ndarray) -> tuple:
    """Restrict a form to the dofs whose nodes satisfy ``sub_interior``.

    Returns (FormMatrix, dof index array).  This is the discrete meaning of
    restricting the quadratic form to the eroded subdomain.
    """
    iy, ix = mask.node_of_dof[:, 0], mask.node_of_dof[:, 1]
    keep = np.nonzero(sub_interior[iy, ix])[0]
    sub = form.matrix[keep][:, keep].tocsr()
    return FormMatrix(sub, form.kind, form.h, form.power, form.n_reg), keep


def ellipticity_window(Q: FormMatrix, Q0: FormMatrix, m: int = 1,
                       tol: float = 1e-8, seed: int = 42) -> EllipticityWindow:
    """Extreme generalized eigenvalues of the pencil (Q, Q0)."""
    from .spectral import lowest_eigenpairs

    lo = lowest_eigenpairs(Q, Q0, m=m, tol=tol, seed=seed)
    hi = lowest_eigenpairs(Q0, Q, m=m, tol=tol, seed=seed)
    lam = float(lo.values[0])
    Lam = 1.0 / float(hi.values[0])
    return EllipticityWindow(lambda_ell=lam, Lambda_ell=Lam)


def _hessian_basis_matrix(M: np.ndarray) -> np.ndarray:
    """Voigt matrix conjugated into the orthonormal basis (uxx, uyy, sqrt2 uxy).

    The spectral norm in this basis bounds |Q_tilde(v) - Q(v)| by
    norm * integral |hess v|^2.
    """
    T = np.diag([1.0, 1.0, 1.0 / np.sqrt(2.0)])
    return T @ M @ T


def tensor_sup_norm(coeffs: CoefficientField, samples: np.ndarray) -> float:
    """Sup over sample points of the Hessian-basis spectral norm of M(x)."""
    M = coeffs.voigt(samples[:, 0], samples[:, 1])
    T = np.diag([1.0, 1.0, 1.0 / np.sqrt(2.0)])
    Mt = np.einsum("ab,nbc,cd->nad", T, M, T)
    return float(np.max(np.abs(np.linalg.eigvalsh((Mt + Mt.transpose(0, 2, 1)) / 2))))


def perturb_coeffs(base: CoefficientField, delta_magnitude: float,
                   seed: int = 0) -> CoefficientField:
    """Add a reproducible constant symmetric tensor perturbation.

    The perturbation has sup operator norm exactly ``delta_magnitude`` in the
    orthonormal Hessian basis; symmetries a_ijkl = a_jikl = a_ijlk = a_klij
    hold by construction.  Raises EllipticityLost if the perturbed quartic
    symbol loses positivity on sampled directions.
    """
    delta_magnitude = float(delta_magnitude)
    if delta_magnitude < 0:
        raise ValueError("delta magnitude must be nonnegative")
    if delta_magnitude == 0.0:
        return base
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((3, 3))
    S = (S + S.T) / 2.0
    S *= delta_magnitude / max(np.abs(np.linalg.eigvalsh(S)))
    Tinv = np.diag([1.0, 1.0, np.sqrt(2.0)])
    dM = Tinv @ S @ Tinv  # back to the multiplicity-weighted Voigt storage

    base_voigt = base.voigt

    def voigt(x, y):
        M = base_voigt(x, y)
        return M + dM

    field = CoefficientField("perturbed", voigt, base=base,
                             delta_norm=delta_magnitude)
    # positivity probe of the quartic symbol on sampled directions
    thetas = np.linspace(0.0, np.pi, 64, endpoint=False)
    s = np.stack([np.cos(thetas) ** 2, np.sin(thetas) ** 2,
                  np.cos(thetas) * np.sin(thetas)], axis=-1)
    xs = rng.standard_normal(16)
    ys = rng.standard_normal(16)
    M = field.voigt(xs, ys)  # (16, 3, 3)
    q = np.einsum("nij,ti,tj->nt", M, s, s)
    if np.min(q) <= 1e-12:
        raise EllipticityLost(
            f"quartic symbol nonpositive (min {np.min(q):.3e}) after "
            f"perturbation of magnitude {delta_magnitude}")
    return field
