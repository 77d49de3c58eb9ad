"""Command-line front end.

Exit codes: 0 success, 2 configuration/usage error, 3 solver failure.
Errors are emitted as machine-readable JSON on stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import assembly, finsler, verifier
from .errors import ConfigError, NoConvergence, PlatelabError
from .experiments import (RunConfig, load_config, make_coeffs, make_domain,
                          run_erosion_study, write_json, CSV_FMT)
from .geometry import build_grid
from .spectral import lowest_eigenpairs


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _emit_error(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def _build_common(cfg: RunConfig):
    domain = make_domain(cfg.domain_kind, cfg.domain_params)
    coeffs = make_coeffs(cfg.operator_kind, cfg.operator_params)
    grid, mask = build_grid(domain, cfg.h)
    return domain, coeffs, grid, mask


def _mass(grid, mask):
    return assembly.assemble_weighted(grid, mask, None, "mass", 0.0, 1)


def _cmd_spectrum(cfg: RunConfig, out: str) -> int:
    domain, coeffs, grid, mask = _build_common(cfg)
    Q = assembly.assemble_Q(grid, mask, coeffs)
    spec = lowest_eigenpairs(Q, _mass(grid, mask), m=cfg.m, tol=cfg.tol,
                             seed=cfg.seed)
    spec.to_csv(os.path.join(out, "spectrum.csv"))
    return 0


def _cmd_distance(cfg: RunConfig, out: str) -> int:
    domain, coeffs, grid, mask = _build_common(cfg)
    dist = finsler.finsler_distance(domain, grid, mask, coeffs)
    dist_e = finsler.finsler_distance(domain, grid, mask, coeffs,
                                      metric="euclidean")
    dist = finsler.with_equivalence(dist, dist_e, mask)
    res = finsler.eikonal_residual(dist, coeffs, mask)
    d_e = dist_e.interior_values(mask)
    far = d_e > 3.0 * grid.h
    stats = {
        "metric": dist.metric,
        "c1_hat": dist.c1_hat,
        "c2_hat": dist.c2_hat,
        "n_reg": dist.n_reg,
        "residual_median": float(np.median(res[far])) if far.any() else None,
        "residual_q95": float(np.quantile(res[far], 0.95)) if far.any() else None,
        "frac_within_5h": float(np.mean(res[far] <= 5.0 * grid.h))
        if far.any() else None,
    }
    write_json(os.path.join(out, "distance.json"), stats)
    iy, ix = mask.node_of_dof[:, 0], mask.node_of_dof[:, 1]
    xs = grid.origin[0] + grid.h * ix
    ys = grid.origin[1] + grid.h * iy
    with open(os.path.join(out, "distance.csv"), "w", encoding="utf-8") as f:
        f.write("x,y,d_finsler,d_euclid,residual\n")
        dv = dist.interior_values(mask)
        for row in zip(xs, ys, dv, d_e, res):
            f.write(",".join(CSV_FMT % v for v in row) + "\n")
    return 0


def _cmd_hardy(cfg: RunConfig, out: str) -> int:
    domain, coeffs, grid, mask = _build_common(cfg)
    dist = finsler.euclidean_from_sdf(domain, grid, mask)
    Q0 = assembly.assemble_Q0(grid, mask)
    grad = assembly.assemble_weighted(grid, mask, None, "grad", 0.0, 1)
    mass = _mass(grid, mask)
    reports = {}
    for kind, A in (("hardy_grad", grad), ("rellich_mass", Q0),
                    ("rellich_grad", Q0)):
        rep = verifier.estimate_hardy_constant(
            A, grid, mask, dist, kind, n_sweep=cfg.n_sweep, mass=mass,
            seed=cfg.seed)
        reports[kind] = dataclasses.asdict(rep)
    write_json(os.path.join(out, "hardy.json"), reports)
    return 0


def _check_alphas(cfg: RunConfig, upper: float) -> None:
    if cfg.allow_blowup:
        return
    bad = [a for a in cfg.alphas if not (0.0 < a < upper)]
    if bad:
        raise ConfigError(
            f"alpha values {bad} outside (0, {upper}); pass --allow-blowup "
            "to run the blow-up demonstration")


def _cmd_decay(cfg: RunConfig, out: str) -> int:
    _check_alphas(cfg, 0.5)
    domain, coeffs, grid, mask = _build_common(cfg)
    dist = finsler.euclidean_from_sdf(domain, grid, mask)
    Q = assembly.assemble_Q(grid, mask, coeffs)
    mass = _mass(grid, mask)
    spec = lowest_eigenpairs(Q, mass, m=max(cfg.m, 1), tol=cfg.tol,
                             seed=cfg.seed)
    with open(os.path.join(out, "decay.csv"), "w", encoding="utf-8") as f:
        f.write("alpha,n_reg,lhs,rhs,c_hat,flag\n")
        for a in cfg.alphas:
            rep = verifier.verify_decay(spec, 0, a, dist, grid, mask,
                                        n_sweep=cfg.n_sweep)
            for n, lhs in rep.n_sweep:
                flag = "BLOWUP" if rep.blowup else "STABLE"
                f.write("%s,%d,%s,%s,%s,%s\n" % (
                    CSV_FMT % a, n, CSV_FMT % lhs, CSV_FMT % rep.rhs,
                    CSV_FMT % (lhs / rep.rhs), flag))
    return 0


def _cmd_palpha(cfg: RunConfig, out: str) -> int:
    _check_alphas(cfg, 0.5)
    domain, coeffs, grid, mask = _build_common(cfg)
    dist = finsler.finsler_distance(domain, grid, mask, coeffs)
    Q = assembly.assemble_Q(grid, mask, coeffs)
    mass = _mass(grid, mask)
    spec = lowest_eigenpairs(Q, mass, m=5, tol=cfg.tol, seed=cfg.seed)
    witnesses, labels = verifier.make_witnesses(spec, dist, grid, mask,
                                                seed=cfg.seed)
    payload = {}
    for a in cfg.alphas:
        if not (0.0 < a < 0.5):
            continue
        rep = verifier.probe_P_alpha(Q, mass, dist, a, witnesses,
                                     labels=labels, n_sweep=cfg.n_sweep,
                                     mask=mask, grid=grid)
        entry = {"base": dataclasses.asdict(rep)}
        if cfg.delta > 0.0:
            tilde = assembly.perturb_coeffs(coeffs, cfg.delta, seed=cfg.seed)
            Qt = assembly.assemble_Q(grid, mask, tilde)
            Q0 = assembly.assemble_Q0(grid, mask)
            win = assembly.ellipticity_window(Qt, Q0, seed=cfg.seed)
            c_hat = verifier.measure_cross_term_constant(
                dist, a, witnesses, grid, mask, Q0=Q0)
            try:
                rep_t = verifier.probe_perturbation(
                    rep, Qt, mass, dist, tilde.delta_norm, win.lambda_ell,
                    c_hat, witnesses, labels=labels, n_sweep=cfg.n_sweep,
                    mask=mask)
                entry["perturbed"] = dataclasses.asdict(rep_t)
            except PlatelabError as exc:
                entry["perturbed"] = {"error": type(exc).__name__,
                                      "message": str(exc)}
        payload[repr(a)] = entry
    write_json(os.path.join(out, "palpha.json"), payload)
    return 0


def _cmd_erode(cfg: RunConfig, out: str) -> int:
    if not cfg.eps_list:
        raise ConfigError("erode requires a nonempty eps list")
    domain, coeffs, grid, mask = _build_common(cfg)
    report = run_erosion_study(domain, coeffs, cfg.h, cfg.m, cfg.eps_list,
                               tol=cfg.tol, seed=cfg.seed, grid=grid,
                               mask=mask)
    report.to_csv(os.path.join(out, "stability.csv"))
    write_json(os.path.join(out, "stability.json"), {
        "fitted_exponent": {str(k): v for k, v in
                            report.fitted_exponent.items()},
        "hess_deps_bound": {repr(k): v for k, v in
                            report.hess_deps_bound.items()},
    })
    return 0


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "distance": _cmd_distance,
    "hardy": _cmd_hardy,
    "decay": _cmd_decay,
    "palpha": _cmd_palpha,
    "erode": _cmd_erode,
}


def cli_main(argv=None) -> int:
    parser = _Parser(prog="platelab")
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=0)
        p.add_argument("--allow-blowup", action="store_true")
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("missing subcommand; expected one of "
                              + ", ".join(sorted(_COMMANDS)))
        if args.threads > 0:
            os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
            os.environ.setdefault("OPENBLAS_NUM_THREADS", str(args.threads))
        cfg = load_config(args.config)
        updates = {}
        if args.seed is not None:
            updates["seed"] = args.seed
        if args.allow_blowup:
            updates["allow_blowup"] = True
        if args.threads:
            updates["threads"] = args.threads
        if updates:
            cfg = dataclasses.replace(cfg, **updates)
        out = args.out if args.out is not None else cfg.out_dir
        os.makedirs(out, exist_ok=True)
        return _COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        return _emit_error(2, "ConfigError", str(exc))
    except NoConvergence as exc:
        return _emit_error(3, "NoConvergence", str(exc))
    except PlatelabError as exc:
        return _emit_error(3, type(exc).__name__, str(exc))


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
