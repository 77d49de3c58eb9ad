"""Sparse symmetric generalized eigensolver with residual certificates,
plus spectral fractional powers via truncated eigenexpansions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import FormMatrix
from .errors import InsufficientBasis, MassNotPD, NoConvergence

DEFAULT_TOL = 1e-8
DEFAULT_SEED = 42


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenpairs of a pencil (A, B) with certified residuals."""

    values: np.ndarray      # (m,), nondecreasing
    vectors: np.ndarray     # (count, m), B-orthonormal
    residuals: np.ndarray   # (m,), ||A v - t B v|| / (t ||v||_B)
    B: sp.csr_matrix
    m: int

    def b_inner(self, u, v) -> float:
        return float(u @ (self.B @ v))

    def b_norm(self, u) -> float:
        return float(np.sqrt(max(self.b_inner(u, u), 0.0)))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("index,value,residual\n")
            for i, (v, r) in enumerate(zip(self.values, self.residuals)):
                f.write("%d,%.17g,%.17g\n" % (i, v, r))


def _as_matrix(A: Union[FormMatrix, sp.spmatrix]) -> sp.csr_matrix:
    if isinstance(A, FormMatrix):
        return A.matrix
    return A.tocsr()


def lowest_eigenpairs(A, B, m: int, tol: float = DEFAULT_TOL,
                      seed: int = DEFAULT_SEED,
                      OPinv: Optional[spla.LinearOperator] = None) -> Spectrum:
    """The m algebraically smallest generalized eigenvalues of (A, B).

    Shift-invert at sigma = 0 (A is positive definite for all pencils used
    here).  Deterministic for fixed (A, B, m, tol, seed).  ``OPinv`` lets a
    caller reuse one factorization of A across a sweep of mass matrices.
    """
    Am = _as_matrix(A)
    Bm = _as_matrix(B)
    n = Am.shape[0]
    if m < 1 or m > n - 1:
        raise ValueError(f"m={m} out of range for n={n}")

    # cheap PD probe on the mass side
    rng = np.random.default_rng(seed)
    for _ in range(4):
        z = rng.standard_normal(n)
        if float(z @ (Bm @ z)) <= 0.0:
            raise MassNotPD("mass matrix fails the positivity probe")

    v0 = rng.standard_normal(n)
    if OPinv is None:
        lu = spla.splu(Am.tocsc())
        OPinv = spla.LinearOperator(Am.shape, matvec=lu.solve)
    try:
        vals, vecs = spla.eigsh(Am, k=m, M=Bm, sigma=0.0, which="LM",
                                v0=v0, OPinv=OPinv)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence("eigsh failed to converge",
                            residuals=getattr(exc, "eigenvalues", None)) from exc
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    res = np.empty(m)
    for k in range(m):
        v = vecs[:, k]
        bn = np.sqrt(float(v @ (Bm @ v)))
        num = np.linalg.norm(Am @ v - vals[k] * (Bm @ v))
        res[k] = num / (abs(vals[k]) * bn)
    if np.any(res > tol):
        raise NoConvergence(
            f"residuals {res} exceed tol {tol}", residuals=res)
    return Spectrum(values=vals, vectors=vecs, residuals=res, B=Bm, m=m)


def fractional_apply(spec: Spectrum, alpha_half: float, u: np.ndarray):
    """Apply H^alpha_half via the truncated spectral sum.

    Returns (H^a u restricted to the computed basis, rigorous tail bound
    lambda_m^a * ||u - P_m u||_B).  For u an exact computed eigenvector the
    truncation is exact and the tail vanishes.
    """
    if not (0.0 <= alpha_half < 1.0):
        raise ValueError("alpha_half must lie in [0, 1)")
    V = spec.vectors
    c = V.T @ (spec.B @ u)
    partial = V @ (spec.values ** alpha_half * c)
    proj = V @ c
    tail_norm = spec.b_norm(u - proj)
    tail_bound = float(spec.values[-1] ** alpha_half * tail_norm)
    partial_norm = spec.b_norm(partial)
    if tail_bound > 0.1 * max(partial_norm, 1e-300):
        raise InsufficientBasis(
            f"tail bound {tail_bound:.3e} exceeds 10% of partial sum norm "
            f"{partial_norm:.3e}")
    return partial, tail_bound
