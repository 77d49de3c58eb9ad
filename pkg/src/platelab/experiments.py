"""Orchestration: the boundary-erosion stability study, cutoff Rayleigh
bounds, run configuration, and CSV/JSON report emission."""
from __future__ import annotations

import configparser
import json
import math
import os
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from . import assembly, finsler, geometry, spectral, verifier
from .assembly import FormMatrix, assemble_Q, assemble_weighted, principal_submatrix
from .errors import ConfigError, PlatelabError
from .finsler import CoefficientField, DistanceField
from .geometry import AnalyticDomain, CutoffField, build_cutoff, build_grid
from .spectral import Spectrum, lowest_eigenpairs

CSV_FMT = "%.17g"
STABILITY_HEADER = "n,eps,lambda,lambda_tilde,drift,rayleigh_upper,ball_law_error"


@dataclass(frozen=True)
class RunConfig:
    domain_kind: str
    domain_params: dict
    operator_kind: str
    operator_params: dict
    h: float
    m: int
    alphas: tuple
    eps_list: tuple
    n_sweep: tuple
    seed: int
    tol: float
    out_dir: str
    allow_blowup: bool = False
    threads: int = 0
    delta: float = 0.0


def make_domain(kind: str, params: dict) -> AnalyticDomain:
    kind = kind.lower()
    if kind == "disk":
        return geometry.disk(params["radius"])
    if kind == "rectangle":
        return geometry.rectangle(params["width"], params["height"])
    if kind == "superellipse":
        return geometry.superellipse(params["a"], params["b"], params["p"])
    raise ConfigError(f"unknown domain kind {kind!r}")


def make_coeffs(kind: str, params: dict) -> CoefficientField:
    kind = kind.lower()
    if kind == "bilaplacian":
        return finsler.bilaplacian()
    if kind == "product":
        b = np.array([[params["b00"], params.get("b01", 0.0)],
                      [params.get("b01", 0.0), params["b11"]]])
        return finsler.product(b)
    if kind == "diagonal":
        a = np.array([[params["a00"], params.get("a01", 0.0)],
                      [params.get("a01", 0.0), params["a11"]]])
        return finsler.diagonal(a)
    raise ConfigError(f"unknown operator kind {kind!r}")


def load_config(path: str) -> RunConfig:
    """Flat key-value sections (INI grammar, UTF-8); see README for the keys."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    try:
        dom = dict(cp["domain"])
        kind = dom.pop("kind")
        domain_params = {k: float(v) for k, v in dom.items()}
        op = dict(cp["operator"]) if "operator" in cp else {"kind": "bilaplacian"}
        op_kind = op.pop("kind")
        op_params = {k: float(v) for k, v in op.items()}
        h = float(cp["grid"]["h"])
        m = int(cp.get("spectral", "m", fallback="3"))
        tol = float(cp.get("spectral", "tol", fallback="1e-8"))
        alphas = tuple(float(a) for a in
                       cp.get("sweeps", "alphas", fallback="0.25").split())
        eps_list = tuple(float(e) for e in
                         cp.get("sweeps", "eps", fallback="").split())
        n_raw = cp.get("sweeps", "n_sweep", fallback="")
        n_sweep = tuple(int(n) for n in n_raw.split()) if n_raw.strip() \
            else tuple(verifier.default_n_sweep(h))
        seed = int(cp.get("run", "seed", fallback="42"))
        out_dir = cp.get("run", "out", fallback=".")
        delta = float(cp.get("perturbation", "delta", fallback="0.0"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad or missing config key: {exc}") from exc
    cfg = RunConfig(domain_kind=kind, domain_params=domain_params,
                    operator_kind=op_kind, operator_params=op_params,
                    h=h, m=m, alphas=alphas, eps_list=eps_list,
                    n_sweep=n_sweep, seed=seed, tol=tol, out_dir=out_dir,
                    delta=delta)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.h <= 0:
        raise ConfigError("grid spacing h must be positive")
    if cfg.m < 1:
        raise ConfigError("eigenpair count m must be >= 1")
    domain = make_domain(cfg.domain_kind, cfg.domain_params)
    for eps in cfg.eps_list:
        if eps < 4.0 * cfg.h:
            raise ConfigError(f"eps={eps} violates eps >= 4h (h={cfg.h})")
        if eps >= domain.inradius:
            raise ConfigError(f"eps={eps} >= inradius {domain.inradius}")
    for a in cfg.alphas:
        if not (0.0 < a < 1.0):
            raise ConfigError(f"alpha={a} outside (0, 1)")


@dataclass(frozen=True)
class StabilityRow:
    n: int
    eps: float
    lam: float
    lam_tilde: float
    drift: float
    rayleigh_upper: float
    ball_law_error: float
    residual: float
    residual_tilde: float
    converged: bool = True


@dataclass(frozen=True)
class StabilityReport:
    domain_kind: str
    h: float
    m: int
    rows: tuple                   # StabilityRow
    fitted_exponent: dict         # n -> least-squares slope
    hess_deps_bound: dict = field(default_factory=dict)  # eps -> measured sup

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(STABILITY_HEADER + "\n")
            for r in self.rows:
                f.write(",".join([
                    "%d" % r.n,
                    CSV_FMT % r.eps,
                    CSV_FMT % r.lam,
                    CSV_FMT % r.lam_tilde,
                    CSV_FMT % r.drift,
                    CSV_FMT % r.rayleigh_upper,
                    CSV_FMT % r.ball_law_error,
                ]) + "\n")


def cutoff_rayleigh_bound(spec: Spectrum, cutoff: CutoffField,
                          Q: FormMatrix, mass: FormMatrix,
                          mask) -> np.ndarray:
    """Upper bounds sup{Q(v)/||v||^2 : v in span(tau phi_1..tau phi_n)}.

    Returns one bound per n = 1..m via the dense generalized eigenproblem in
    the transplanted subspace.
    """
    iy, ix = mask.node_of_dof[:, 0], mask.node_of_dof[:, 1]
    tau = cutoff.tau[iy, ix]
    U = tau[:, None] * spec.vectors
    S = U.T @ (Q.matrix @ U)
    T = U.T @ (mass.matrix @ U)
    S = (S + S.T) / 2
    T = (T + T.T) / 2
    bounds = np.empty(spec.m)
    for n in range(1, spec.m + 1):
        import scipy.linalg as sla
        vals = sla.eigh(S[:n, :n], T[:n, :n], eigvals_only=True)
        bounds[n - 1] = vals[-1]
    return bounds


def fit_drift_exponent(eps: np.ndarray, drift: np.ndarray,
                       floor: np.ndarray) -> float:
    """Least-squares slope of log drift vs log eps, excluding rows below
    10x the solver residual floor."""
    keep = drift > 10.0 * floor
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(drift[keep]), 1)
    return float(slope)


def measure_eroded_hessian_bound(domain: AnalyticDomain, grid, mask,
                                 eps: float) -> float:
    """Measured sup |hess d_eps| on the transition band {d < 2 eps}."""
    X, Y = grid.meshgrid()
    deps = -(domain.sdf(X, Y) + eps)  # distance to the eroded boundary
    h = grid.h
    dxx = (deps[1:-1, 2:] - 2 * deps[1:-1, 1:-1] + deps[1:-1, :-2]) / h**2
    dyy = (deps[2:, 1:-1] - 2 * deps[1:-1, 1:-1] + deps[:-2, 1:-1]) / h**2
    dxy = (deps[2:, 2:] + deps[:-2, :-2] - deps[2:, :-2] - deps[:-2, 2:]) / (4 * h**2)
    d = -domain.sdf(X, Y)[1:-1, 1:-1]
    band = mask.interior[1:-1, 1:-1] & (d > eps + 2 * h) & (d < 2 * eps)
    if band.sum() == 0:
        return float("nan")
    return float(np.sqrt(dxx**2 + dyy**2 + 2 * dxy**2)[band].max())


def run_erosion_study(domain: AnalyticDomain, coeffs: CoefficientField,
                      h: float, m: int, eps_list: Sequence[float],
                      tol: float = 1e-8, seed: int = 42,
                      grid=None, mask=None, Q=None, mass=None,
                      spec=None) -> StabilityReport:
    """Eigenvalue drift under boundary erosion via principal-submatrix
    restriction of the operator form on a fixed grid."""
    if grid is None or mask is None:
        grid, mask = build_grid(domain, h)
    if Q is None:
        Q = assemble_Q(grid, mask, coeffs)
    if mass is None:
        mass = assemble_weighted(grid, mask, None, "mass", 0.0, 1)
    if spec is None:
        spec = lowest_eigenpairs(Q, mass, m=m, tol=tol, seed=seed)
    dist_sdf = finsler.euclidean_from_sdf(domain, grid, mask)
    X, Y = grid.meshgrid()
    sd = domain.sdf(X, Y)

    rows = []
    hess_deps = {}
    for eps in eps_list:
        if eps < 4.0 * h:
            raise ConfigError(f"eps={eps} < 4h={4 * h}")
        sub_int = sd < -eps
        Qs, keep = principal_submatrix(Q, mask, sub_int)
        Ms, _ = principal_submatrix(mass, mask, sub_int)
        spec_t = lowest_eigenpairs(Qs, Ms, m=m, tol=tol, seed=seed)
        cutoff = build_cutoff(grid, dist_sdf, eps)
        bounds = cutoff_rayleigh_bound(spec, cutoff, Q, mass, mask)
        hess_deps[eps] = measure_eroded_hessian_bound(domain, grid, mask, eps)
        for n in range(m):
            lam = float(spec.values[n])
            lam_t = float(spec_t.values[n])
            if domain.kind == "disk":
                r = domain.params["radius"]
                ball_err = abs(lam_t / lam - (1.0 - eps / r) ** (-4))
            else:
                ball_err = float("nan")
            rows.append(StabilityRow(
                n=n + 1, eps=float(eps), lam=lam, lam_tilde=lam_t,
                drift=lam_t - lam, rayleigh_upper=float(bounds[n]),
                ball_law_error=ball_err,
                residual=float(spec.residuals[n]),
                residual_tilde=float(spec_t.residuals[n])))

    fitted = {}
    eps_arr = np.array([r.eps for r in rows])
    for n in range(1, m + 1):
        sel = np.array([r.n == n for r in rows])
        drift = np.array([r.drift for r in rows])[sel]
        floor = np.array([2.0 * (r.residual + r.residual_tilde) * r.lam
                          for r in rows])[sel]
        fitted[n] = fit_drift_exponent(eps_arr[sel], drift, floor)
    return StabilityReport(domain_kind=domain.kind, h=h, m=m,
                           rows=tuple(rows), fitted_exponent=fitted,
                           hess_deps_bound=hess_deps)


def write_json(path: str, payload) -> None:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o))

    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=default)
        f.write("\n")
