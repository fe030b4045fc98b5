"""steepwell command line: eig, limit, ground, sweep, bubble.

Exit codes: 0 ok, 2 invalid configuration, 3 a solve did not converge,
4 output could not be written.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from .bubble import bubble_energy_bound
from .experiments import (
    SweepConfig,
    emit,
    parse_config,
    parse_exponent,
    run_sweep,
    validate_config,
)
from .model import ConfigError, IndefiniteFormError, derived_constants, estimate_embedding_constant
from .radial import build_grid
from .solver import SolverOptions, solve_ground_state, solve_limit_problem
from .spectral import EigenConvergenceError, ball_grid, lambda_eigen, mu_L0, mu_zero

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--dim", type=int, default=5)
    c.add_argument("--p", default="3", help="exponent, or 2** for the critical one")
    c.add_argument("--delta", type=float, default=50.0)
    c.add_argument("--vinf", type=float, default=1.0)
    c.add_argument("--ramp", type=float, default=0.5)
    c.add_argument("--rmax", type=float, default=4.0)
    c.add_argument("--mesh", type=int, default=2048, help="nodes on [0, rmax]")
    c.add_argument("--ball-mesh", type=int, default=1024, help="nodes on the unit ball")
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--max-iter", type=int, default=5000)
    c.add_argument("--out", default=None)
    c.add_argument("--format", choices=("csv", "json"), default=None)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--parallel", action="store_true")
    c.add_argument("-v", "--verbose", action="store_true")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="steepwell", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    eig = sub.add_parser("eig", parents=[common], help="principal eigenvalues")
    eig.add_argument("--lambda", dest="lam", type=float, default=1e3)
    sub.add_parser("limit", parents=[common], help="least energy on the unit ball")
    g = sub.add_parser("ground", parents=[common], help="steep-well ground state")
    g.add_argument("--lambda", dest="lam", type=float, required=True)
    s = sub.add_parser("sweep", parents=[common], help="lambda sweep from a config file")
    s.add_argument("--config", required=True)
    b = sub.add_parser("bubble", parents=[common], help="cut-off bubble energy bound")
    b.add_argument("--eps-min", type=float, default=1e-3)
    b.add_argument("--eps-max", type=float, default=0.5)
    b.add_argument("--eps-count", type=int, default=40)
    return ap


def _config_from_args(args) -> SweepConfig:
    return validate_config(SweepConfig(
        dim_N=args.dim, p=parse_exponent(args.p, args.dim), delta=args.delta,
        v_inf=args.vinf, ramp_width=args.ramp, r_max=args.rmax, mesh=args.mesh,
        ball_mesh=args.ball_mesh, tol=args.tol, max_iter=args.max_iter,
        output_path=args.out, format=args.format or "csv", parallel=args.parallel,
        lambda_values=(getattr(args, "lam", None) or 1e3,)))


def _report(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_eig(args) -> int:
    cfg = _config_from_args(args)
    ball = ball_grid(cfg.dim_N, cfg.ball_mesh)
    spec = cfg.problem(args.lam)
    grid = build_grid(cfg.dim_N, cfg.r_max, cfg.mesh)
    mu0 = mu_zero(ball)
    mul0 = mu_L0(ball, cfg.delta)
    pair = lambda_eigen(grid, spec)
    lam_hat, sigma = estimate_embedding_constant(grid, spec, seed=args.seed)
    consts = derived_constants(spec, mul0, lam_hat)
    _report({"mu0": mu0, "mu_L0": mul0, "lambda": args.lam, "mu_L_lambda": pair.value,
             "eig_residual": pair.residual, "lambda0": consts.lambda0, "C1": consts.c1,
             "sigma_estimate": sigma}, args)
    return EXIT_OK


def cmd_limit(args) -> int:
    cfg = _config_from_args(args)
    res = solve_limit_problem(ball_grid(cfg.dim_N, cfg.ball_mesh), cfg.delta, cfg.p,
                              cfg.options())
    _report({"c_omega": res.energy, "iterations": res.iterations, "residual": res.residual,
             "nehari_defect": res.nehari_defect, "converged": res.converged}, args)
    return EXIT_OK if res.converged else EXIT_SOLVER


def cmd_ground(args) -> int:
    cfg = _config_from_args(args)
    grid = build_grid(cfg.dim_N, cfg.r_max, cfg.mesh)
    res = solve_ground_state(grid, cfg.problem(args.lam), opts=cfg.options())
    _report({"lambda": args.lam, "c_lambda": res.energy, "iterations": res.iterations,
             "residual": res.residual, "nehari_defect": res.nehari_defect,
             "converged": res.converged}, args)
    return EXIT_OK if res.converged else EXIT_SOLVER


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    over = {}
    if args.out:
        over["output_path"] = args.out
    if args.format:
        over["format"] = args.format
    if args.parallel:
        over["parallel"] = True
    if over:
        from dataclasses import replace
        cfg = replace(cfg, **over)
    records = run_sweep(cfg)
    text = emit(records, cfg.format, cfg.output_path)
    if cfg.output_path is None:
        sys.stdout.write(text)
    return EXIT_OK if all(r.converged for r in records) else EXIT_SOLVER


def cmd_bubble(args) -> int:
    import numpy as np

    eps = np.geomspace(args.eps_min, args.eps_max, args.eps_count)
    bound = bubble_energy_bound(args.dim, args.delta, eps)
    _report({"dim": args.dim, "delta": args.delta, "min_energy": bound.min_energy,
             "threshold": bound.threshold, "margin": bound.margin,
             "relative_margin": bound.relative_margin,
             "argmin_epsilon": bound.argmin_epsilon}, args)
    return EXIT_OK


COMMANDS = {"eig": cmd_eig, "limit": cmd_limit, "ground": cmd_ground,
            "sweep": cmd_sweep, "bubble": cmd_bubble}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except (ConfigError, IndefiniteFormError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EigenConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
