"""End-to-end numerical checks of the boundary-decay machinery.

Covers: Hardy-Rellich constant estimation (plain and weak, via generalized
pencils against singular-weight mass forms), the weighted boundary-decay
integrals against ||Hu|| ||H^(a/2)u||, the form inequality
Q(d_n^-a u) <= k Q(u, d_n^-2a u) + k' ||u||^2 on finite witness sets, and its
stability under coefficient perturbations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (FormMatrix, assemble_Q0, assemble_weighted,
                       interior_difference_ops)
from .errors import AlphaOutOfRange, BoundViolated
from .finsler import DistanceField
from .geometry import Grid, GridMask, smoothstep
from .spectral import Spectrum, lowest_eigenpairs

STABILIZATION_INCREMENT = 0.05  # top-two-n relative increment threshold


def k_alpha_ref(alpha: float) -> float:
    """k(a) = 9 / ((1 - 4a^2)(9 - 4a^2)), the sharp inflation constant."""
    a2 = alpha * alpha
    return 9.0 / ((1.0 - 4.0 * a2) * (9.0 - 4.0 * a2))


def gamma_alpha(alpha: float) -> float:
    """gamma(a) = (40 a^2 - 16 a^4) / 9; lies in (0, 1] for a in (0, 1/2]."""
    a2 = alpha * alpha
    return (40.0 * a2 - 16.0 * a2 * a2) / 9.0


def cross_term_bound(c2: float, A: float, B: float) -> float:
    """Closed-form bound 3 (1 + c2^2/A + (9/16) c2^4/B) on the cross constant."""
    return 3.0 * (1.0 + c2**2 / A + (9.0 / 16.0) * c2**4 / B)


def default_n_sweep(h: float) -> list:
    """{8, 16, 32, 64, round(1/h)} capped at round(1/h)."""
    cap = max(1, int(round(1.0 / h)))
    ns = sorted({min(n, cap) for n in (8, 16, 32, 64, cap)})
    return ns


@dataclass(frozen=True)
class HardyReport:
    kind: str                     # hardy_grad | rellich_mass | rellich_grad
    constant_hat: float           # plain pencil minimum at the largest n
    n_sweep: tuple                # ((n, constant_hat), ...)
    weak_pair: Optional[tuple]    # (weak constant, shift) or None
    weak_sweep: tuple = ()


_HARDY_POWERS = {"hardy_grad": ("mass", 2.0),
                 "rellich_mass": ("mass", 4.0),
                 "rellich_grad": ("grad", 2.0)}


def estimate_hardy_constant(A: FormMatrix, grid: Grid, mask: GridMask,
                            dist: DistanceField, kind: str,
                            n_sweep: Optional[Sequence[int]] = None,
                            mass: Optional[FormMatrix] = None,
                            shift_exponents: range = range(0, 11),
                            stability_tol: float = 0.02,
                            seed: int = 42) -> HardyReport:
    """Best-constant estimates for the Hardy-Rellich pencils.

    constant_hat(n) = min generalized eigenvalue of (A, W_n); the weak pair
    shifts A by the smallest power-of-two multiple of the mass making the
    estimate stable across the top two regularization levels.
    """
    if kind not in _HARDY_POWERS:
        raise ValueError(f"unknown Hardy kind {kind!r}")
    order, power = _HARDY_POWERS[kind]
    if n_sweep is None:
        n_sweep = default_n_sweep(grid.h)
    n_sweep = sorted(set(int(n) for n in n_sweep))
    if mass is None:
        mass = assemble_weighted(grid, mask, None, "mass", 0.0, 1)

    lu = spla.splu(A.matrix.tocsc())
    op = spla.LinearOperator(A.matrix.shape, matvec=lu.solve)
    sweep = []
    for n in n_sweep:
        W = assemble_weighted(grid, mask, dist, order, power, n)
        spec = lowest_eigenpairs(A, W, m=1, seed=seed, OPinv=op)
        sweep.append((n, float(spec.values[0])))

    weak_pair = None
    weak_sweep = ()
    if len(n_sweep) >= 2:
        n_hi, n_lo = n_sweep[-1], n_sweep[-2]
        W_hi = assemble_weighted(grid, mask, dist, order, power, n_hi)
        W_lo = assemble_weighted(grid, mask, dist, order, power, n_lo)
        for j in shift_exponents:
            shift = 2.0**j
            As = FormMatrix((A.matrix + shift * mass.matrix).tocsr(),
                            A.kind, A.h)
            lus = spla.splu(As.matrix.tocsc())
            ops = spla.LinearOperator(As.matrix.shape, matvec=lus.solve)
            c_hi = float(lowest_eigenpairs(As, W_hi, m=1, seed=seed,
                                           OPinv=ops).values[0])
            c_lo = float(lowest_eigenpairs(As, W_lo, m=1, seed=seed,
                                           OPinv=ops).values[0])
            weak_sweep = ((n_lo, c_lo), (n_hi, c_hi))
            if abs(c_lo - c_hi) <= stability_tol * abs(c_hi):
                weak_pair = (c_hi, shift)
                break
        else:
            weak_pair = (c_hi, shift)
    return HardyReport(kind=kind, constant_hat=sweep[-1][1],
                       n_sweep=tuple(sweep), weak_pair=weak_pair,
                       weak_sweep=weak_sweep)


@dataclass(frozen=True)
class DecayReport:
    alpha: float
    lhs: float                    # weighted sum at the largest n
    rhs: float                    # ||Hu|| ||H^(a/2)u|| for the eigenvector
    c_hat: float
    n_sweep: tuple                # ((n, lhs), ...)
    blowup: bool
    flagged_alpha: bool           # alpha >= 1/2, blow-up demonstration regime


def verify_decay(spec: Spectrum, u_index: int, alpha: float,
                 dist: DistanceField, grid: Grid, mask: GridMask,
                 n_sweep: Optional[Sequence[int]] = None) -> DecayReport:
    """Weighted boundary integrals of an eigenfunction vs the spectral bound.

    lhs = integral(|hess u|^2 d_n^-2a + |grad u|^2 d_n^-(2+2a)
    + u^2 d_n^-(4+2a)); rhs = lambda^(1+a/2) for a normalized eigenvector.
    """
    if not (0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1)")
    flagged = alpha >= 0.5
    if n_sweep is None:
        n_sweep = default_n_sweep(grid.h)
    n_sweep = sorted(set(int(n) for n in n_sweep))
    u = spec.vectors[:, u_index]
    lam = float(spec.values[u_index])
    nrm2 = spec.b_inner(u, u)
    sweep = []
    for n in n_sweep:
        lhs_n = 0.0
        for order, power in (("hess", 2 * alpha),
                             ("grad", 2 + 2 * alpha),
                             ("mass", 4 + 2 * alpha)):
            W = assemble_weighted(grid, mask, dist, order, power, n)
            lhs_n += W(u)
        sweep.append((n, lhs_n))
    lhs = sweep[-1][1]
    rhs = lam ** (1.0 + alpha / 2.0) * nrm2
    blowup = False
    if len(sweep) >= 2:
        prev = sweep[-2][1]
        blowup = (lhs - prev) > STABILIZATION_INCREMENT * prev
    return DecayReport(alpha=alpha, lhs=lhs, rhs=rhs, c_hat=lhs / rhs,
                       n_sweep=tuple(sweep), blowup=blowup,
                       flagged_alpha=flagged)


@dataclass(frozen=True)
class PAlphaReport:
    alpha: float
    k_used: float
    kprime_used: float
    lhs: float                    # worst-case Q(w_n u) over witnesses
    rhs: float                    # matching k*Q(u, w_n^2 u) + k'
    margin: float                 # min over (witness, n) of rhs - lhs
    k_alpha_ref: float
    gamma_alpha: float
    witness: tuple                # labels
    per_witness_margin: tuple = ()


def make_witnesses(spec: Spectrum, dist: DistanceField, grid: Grid,
                   mask: GridMask, n_eig: int = 5, n_bumps: int = 3,
                   seed: int = 42):
    """Low eigenvectors plus seeded smooth bumps, all mass-normalized."""
    rng = np.random.default_rng(seed)
    iy, ix = mask.node_of_dof[:, 0], mask.node_of_dof[:, 1]
    xs = grid.origin[0] + grid.h * ix
    ys = grid.origin[1] + grid.h * iy
    d = dist.interior_values(mask)
    dmax = float(d.max())
    witnesses = []
    labels = []
    for j in range(min(n_eig, spec.m)):
        witnesses.append(spec.vectors[:, j].copy())
        labels.append(f"phi_{j + 1}")
    for b in range(n_bumps):
        while True:
            cx = rng.uniform(xs.min(), xs.max())
            cy = rng.uniform(ys.min(), ys.max())
            k = np.argmin((xs - cx) ** 2 + (ys - cy) ** 2)
            if d[k] > 0.35 * dmax:
                break
        sig = rng.uniform(0.15, 0.3) * dmax
        u = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sig**2))
        u *= smoothstep(d / (0.25 * dmax))
        nrm = math.sqrt(float(u @ (spec.B @ u)))
        witnesses.append(u / nrm)
        labels.append(f"bump_{b + 1}")
    return witnesses, labels


def probe_P_alpha(Q: FormMatrix, mass: FormMatrix, dist: DistanceField,
                  alpha: float, witnesses, labels=None,
                  k: Optional[float] = None, kprime: Optional[float] = None,
                  n_sweep: Optional[Sequence[int]] = None,
                  mask: Optional[GridMask] = None,
                  grid: Optional[Grid] = None) -> PAlphaReport:
    """Check Q(w_n u) <= k Q(u, w_n^2 u) + k' ||u||^2 over witnesses and n.

    With k defaulting to 1.05 * k_alpha_ref, k' is the smallest power of two
    making every margin nonnegative; negative margins are data, not errors.
    """
    if not (0.0 < alpha < 0.5):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1/2)")
    if n_sweep is None:
        n_sweep = default_n_sweep(Q.h)
    n_sweep = sorted(set(int(n) for n in n_sweep))
    if k is None:
        k = 1.05 * k_alpha_ref(alpha)
    dvals = dist.interior_values(mask)
    Bm = mass.matrix
    needs = []          # (witness, n) -> lhs - k*mid
    lhs_all = []
    mid_all = []
    for u in witnesses:
        nrm2 = float(u @ (Bm @ u))
        for n in n_sweep:
            wn = (dvals + 1.0 / n) ** (-alpha)
            lhs = Q(wn * u)
            mid = Q(u, wn * wn * u)
            needs.append((lhs - k * mid) / nrm2)
            lhs_all.append(lhs)
            mid_all.append(mid)
    needs = np.array(needs)
    if kprime is None:
        need = float(needs.max())
        j = max(0, int(math.ceil(math.log2(need)))) if need > 1.0 else 0
        kprime = 2.0**j
    margins = kprime - needs
    per_witness = margins.reshape(len(witnesses), len(n_sweep)).min(axis=1)
    worst = int(np.argmin(margins))
    if labels is None:
        labels = tuple(f"w{i}" for i in range(len(witnesses)))
    return PAlphaReport(
        alpha=alpha, k_used=float(k), kprime_used=float(kprime),
        lhs=float(lhs_all[worst]),
        rhs=float(k * mid_all[worst] + kprime),
        margin=float(margins.min()),
        k_alpha_ref=k_alpha_ref(alpha), gamma_alpha=gamma_alpha(alpha),
        witness=tuple(labels), per_witness_margin=tuple(per_witness))


def measure_cross_term_constant(dist: DistanceField, alpha: float,
                                witnesses, grid: Grid, mask: GridMask,
                                Q0: Optional[FormMatrix] = None,
                                n_reg: Optional[int] = None) -> float:
    """c_hat = max over witnesses of
    sum h^2 |hess(d_n^a v)| |hess(d_n^-a v)| / Q0(v)."""
    if not (0.0 < alpha < 0.5):
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, 1/2)")
    if Q0 is None:
        Q0 = assemble_Q0(grid, mask)
    if n_reg is None:
        n_reg = dist.n_reg
    Dxx, Dyy, Dxy, _, _ = interior_difference_ops(grid, mask)
    dn = dist.interior_values(mask) + 1.0 / n_reg
    h2 = grid.h**2
    c_hat = 0.0
    for v in witnesses:
        vp = dn**alpha * v
        vm = dn ** (-alpha) * v
        hp = np.sqrt((Dxx @ vp) ** 2 + (Dyy @ vp) ** 2 + 2 * (Dxy @ vp) ** 2)
        hm = np.sqrt((Dxx @ vm) ** 2 + (Dyy @ vm) ** 2 + 2 * (Dxy @ vm) ** 2)
        left = h2 * float(hp @ hm)
        c_hat = max(c_hat, left / Q0(v))
    return c_hat


def probe_perturbation(base_report: PAlphaReport, Q_tilde: FormMatrix,
                       mass: FormMatrix, dist: DistanceField,
                       delta_norm: float, lambda_tilde: float,
                       c_hat: float, witnesses, labels=None,
                       n_sweep: Optional[Sequence[int]] = None,
                       mask: Optional[GridMask] = None) -> PAlphaReport:
    """Re-run the form-inequality probe for a perturbed tensor with the
    inflated constant k~ = k / (1 - (1 + c k) ||a~ - a|| / lambda~)."""
    k = base_report.k_used
    hypothesis = lambda_tilde / (1.0 + c_hat * k)
    if delta_norm >= hypothesis:
        raise BoundViolated(
            f"perturbation {delta_norm} >= lambda~/(1+ck) = {hypothesis}; "
            "outside the stability hypothesis")
    k_tilde = k / (1.0 - (1.0 + c_hat * k) * delta_norm / lambda_tilde)
    return probe_P_alpha(Q_tilde, mass, dist, base_report.alpha, witnesses,
                         labels=labels, k=k_tilde, n_sweep=n_sweep, mask=mask)
