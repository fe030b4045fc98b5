"""Lambda sweeps toward the well problem, and their serialization.

A sweep solves the unit-ball problem once, then for each lambda the
steep-well ground state and the principal eigenvalue, and reports how far
the steep-well solution is from the (zero-extended) limit solution.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .model import (
    ConfigError,
    PotentialSpec,
    ProblemSpec,
    check_exponent,
    critical_exponent,
    fibering,
    lambda_threshold,
    nehari_scale,
    quadratic_value,
)
from .radial import RadialGrid, build_grid, laplacian_values
from .solver import (
    GroundStateResult,
    SolverOptions,
    solve_ground_state,
    solve_limit_problem,
    tail_mass,
)
from .spectral import ball_grid, mu_L_lambda, mu_zero

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1e2, 3e2, 1e3, 3e3, 1e4, 3e4, 1e5)
CSV_COLUMNS = ("lambda", "c_lambda", "mu_L_lambda", "tail_mass", "p_tail_mass",
               "l2_dist_to_limit", "energy_gap", "iterations", "residual", "converged")
LAP_COLUMN = "lap_dist_to_limit"
IDENTITY_RTOL = 1e-10


@dataclass(frozen=True)
class SweepConfig:
    dim_N: int = 5
    p: float = 3.0
    delta: float = 50.0
    v_inf: float = 1.0
    ramp_width: float = 0.5
    lambda_values: tuple = DEFAULT_LAMBDAS
    r_max: float = 4.0
    mesh: int = 2048
    ball_mesh: int = 1024
    tol: float = 1e-9
    max_iter: int = 5000
    output_path: str | None = None
    format: str = "csv"
    parallel: bool = False
    laplacian_distance: bool = False

    def problem(self, lam: float) -> ProblemSpec:
        return ProblemSpec(PotentialSpec(self.v_inf, self.ramp_width), lam, self.delta,
                           self.p, self.dim_N)

    def options(self) -> SolverOptions:
        return SolverOptions(tol=self.tol, max_iter=self.max_iter)


@dataclass(frozen=True)
class SweepRecord:
    lam: float
    c_lambda: float
    mu_L_lambda: float
    tail_mass: float
    p_tail_mass: float
    l2_dist_to_limit: float
    energy_gap: float
    iterations: int
    residual: float
    converged: bool
    lap_dist_to_limit: float | None = None

    def row(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        lap = d.pop(LAP_COLUMN)
        out = {k: d[k] for k in CSV_COLUMNS}
        if lap is not None:
            out[LAP_COLUMN] = lap
        return out


# -- configuration ------------------------------------------------------------

_KEYS = {
    "dim": ("dim_N", int),
    "p": ("p", None),
    "delta": ("delta", float),
    "vinf": ("v_inf", float),
    "ramp": ("ramp_width", float),
    "lambdas": ("lambda_values", None),
    "rmax": ("r_max", float),
    "mesh": ("mesh", int),
    "ball_mesh": ("ball_mesh", int),
    "tol": ("tol", float),
    "max_iter": ("max_iter", int),
    "out": ("output_path", str),
    "format": ("format", str),
    "parallel": ("parallel", None),
    "laplacian_distance": ("laplacian_distance", None),
}


def parse_exponent(text: str, dim_N: int) -> float:
    t = text.strip().lower()
    if t in ("2**", "crit", "critical"):
        if dim_N <= 4:
            raise ConfigError("critical exponent undefined for N <= 4")
        return critical_exponent(dim_N)
    return float(t)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config_text(text: str) -> SweepConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    values = {}
    try:
        dim = int(raw["dim"]) if "dim" in raw else SweepConfig.dim_N
        for key, value in raw.items():
            name, conv = _KEYS[key]
            if key == "p":
                values[name] = parse_exponent(value, dim)
            elif key == "lambdas":
                values[name] = tuple(float(v) for v in value.replace(",", " ").split())
            elif key in ("parallel", "laplacian_distance"):
                values[name] = _parse_bool(value)
            else:
                values[name] = conv(value)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value: {exc}") from exc
    return validate_config(SweepConfig(**values))


def parse_config(path) -> SweepConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text)


def validate_config(cfg: SweepConfig) -> SweepConfig:
    """Range checks; computes mu0 on the ball grid to enforce delta < mu0."""
    if cfg.dim_N < 5:
        raise ConfigError(f"dimension must be >= 5, got {cfg.dim_N}")
    check_exponent(cfg.p, cfg.dim_N)
    if not cfg.delta > 0:
        raise ConfigError(f"delta must be positive, got {cfg.delta}")
    if not cfg.v_inf > 0 or not 0 < cfg.ramp_width:
        raise ConfigError("vinf and ramp must be positive")
    lams = cfg.lambda_values
    if not lams:
        raise ConfigError("lambdas must be nonempty")
    if any(not (l > 0 and math.isfinite(l)) for l in lams):
        raise ConfigError("lambdas must be positive and finite")
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ConfigError("lambdas must be strictly increasing")
    if cfg.r_max <= 1.0 + cfg.ramp_width:
        raise ConfigError(f"rmax {cfg.r_max:g} must exceed the ramp end {1 + cfg.ramp_width:g}")
    if cfg.mesh < 8 or cfg.ball_mesh < 8:
        raise ConfigError("meshes must have at least 8 nodes")
    if not cfg.tol > 0 or cfg.max_iter < 1:
        raise ConfigError("tol must be positive and max_iter >= 1")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    mu0 = mu_zero(ball_grid(cfg.dim_N, cfg.ball_mesh))
    if cfg.delta >= mu0:
        raise ConfigError(f"delta {cfg.delta:g} >= mu0 {mu0:.2f} violates the well condition delta < mu0")
    lam0 = lambda_threshold(cfg.problem(lams[-1]))
    low = [l for l in lams if l <= lam0]
    if low:
        # the threshold is sufficient, not necessary; positivity is re-checked per solve
        warnings.warn(f"lambdas {low} are not above the positivity threshold {lam0:g}",
                      RuntimeWarning, stacklevel=2)
    return cfg


# -- sweep --------------------------------------------------------------------

@dataclass(frozen=True)
class LimitSolution:
    result: GroundStateResult

    @property
    def energy(self) -> float:
        return self.result.energy

    def extend(self, grid: RadialGrid) -> np.ndarray:
        """Zero extension to r > 1, linear interpolation in between nodes."""
        g = self.result.grid
        r = np.concatenate(([0.0], g.nodes, [1.0]))
        u = self.result.field.values
        v = np.concatenate(([u[0]], u, [0.0]))
        return np.interp(grid.nodes, r, v, right=0.0)


def solve_limit(cfg: SweepConfig) -> LimitSolution:
    res = solve_limit_problem(ball_grid(cfg.dim_N, cfg.ball_mesh), cfg.delta, cfg.p,
                              cfg.options())
    return LimitSolution(res)


def identities_hold(result: GroundStateResult, p: float, rtol: float = IDENTITY_RTOL) -> bool:
    q, pp, c = result.quadratic, result.lp_power, result.energy
    return (abs(q - pp) <= rtol * q) and (abs(q - 2.0 * p * c / (p - 2.0)) <= rtol * q)


def sweep_row(cfg: SweepConfig, lam: float, limit: LimitSolution) -> SweepRecord:
    spec = cfg.problem(lam)
    grid = build_grid(cfg.dim_N, cfg.r_max, cfg.mesh)
    res = solve_ground_state(grid, spec, opts=cfg.options())
    mu = mu_L_lambda(grid, spec)
    w = grid.weights
    u = res.field.values
    ext = limit.extend(grid)
    dists = [math.sqrt(float(np.sum(w * (s * u - ext) ** 2))) for s in (1.0, -1.0)]
    sign = 1.0 if dists[0] <= dists[1] else -1.0
    lap = None
    if cfg.laplacian_distance:
        diff = laplacian_values(grid, sign * u - ext)
        lap = math.sqrt(float(np.sum(w * diff * diff)))
    return SweepRecord(
        lam=float(lam),
        c_lambda=res.energy,
        mu_L_lambda=mu,
        tail_mass=tail_mass(res, 1.0, 2.0),
        p_tail_mass=tail_mass(res, spec.potential.big_r, spec.p),
        l2_dist_to_limit=min(dists),
        energy_gap=limit.energy - res.energy,
        iterations=res.iterations,
        residual=res.residual,
        converged=bool(res.converged and identities_hold(res, spec.p)),
        lap_dist_to_limit=lap,
    )


def _row_task(args):
    return sweep_row(*args)


def run_sweep(cfg: SweepConfig, limit: LimitSolution | None = None) -> list[SweepRecord]:
    """One record per lambda, ascending; rows failing to converge are kept."""
    limit = limit or solve_limit(cfg)
    lams = sorted(cfg.lambda_values)
    tasks = [(cfg, lam, limit) for lam in lams]
    if cfg.parallel and len(tasks) > 1:
        with ProcessPoolExecutor() as pool:
            records = list(pool.map(_row_task, tasks))
    else:
        records = [_row_task(t) for t in tasks]
    records.sort(key=lambda r: r.lam)
    for r in records:
        if not r.converged:
            log.warning("lambda = %g did not converge (residual %.3e)", r.lam, r.residual)
    return records


@dataclass(frozen=True)
class NehariComparison:
    t: float
    energy_mu: float
    energy_lambda: float


def nehari_comparison_check(result: GroundStateResult, spec_mu: ProblemSpec,
                            spec_lambda: ProblemSpec) -> NehariComparison:
    """Project the lambda ground state onto the mu-Nehari manifold.

    For mu < lambda the quadratic part drops, so t < 1 and
    J_mu(t u) = (1/2 - 1/p) t^p ||u||_p^p < J_lambda(u).
    """
    if spec_mu.lam > spec_lambda.lam:
        raise ValueError("need mu <= lambda")
    grid = result.grid
    u = result.field
    t = nehari_scale(grid, spec_mu, u)
    e_mu = float(fibering(grid, spec_mu, u, t))
    e_lam = 0.5 * quadratic_value(grid, spec_lambda, u) - result.lp_power / spec_lambda.p
    return NehariComparison(t, e_mu, e_lam)


# -- output -------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(records, fmt: str = "csv") -> str:
    if not records:
        raise ValueError("refusing to emit an empty sweep")
    rows = [r.row() for r in records]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow(_fmt(v) for v in row.values())
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(records, fmt: str = "csv", path=None) -> str:
    """Write the rendered records to ``path`` (or return them if None)."""
    text = render(records, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text
