"""Least-energy solutions by Nehari-projected Sobolev-gradient descent.

The iterate always lives on the Nehari manifold; each step moves along the
energy gradient preconditioned by (A + I)^{-1}, then rescales back onto the
manifold with the closed-form fibering maximizer.  Everything below works in
y = sqrt(w) u so that the preconditioner is a well-scaled banded SPD matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .model import ConfigError, IndefiniteFormError, LimitSpec, ProblemSpec, is_critical
from .radial import RadialField, RadialGrid, ScaledForm, _values
from .spectral import EigenConvergenceError, mu_zero, principal_eigen

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """Stopping and step control.

    ``tol`` is relative: the solve stops once the preconditioned residual is
    below tol * ||u||_lambda.
    """

    tol: float = 1e-9
    max_iter: int = 5000
    stall_rtol: float = 1e-12
    stall_window: int = 5
    armijo: float = 1e-4
    step0: float = 1.0
    backtrack: float = 0.5
    max_backtracks: int = 60
    max_restarts: int = 3


@dataclass(frozen=True)
class GroundStateResult:
    field: RadialField
    energy: float
    residual: float
    iterations: int
    nehari_defect: float
    converged: bool
    quadratic: float = 0.0
    lp_power: float = 0.0
    energies: tuple = field(default=(), repr=False)

    @property
    def grid(self) -> RadialGrid:
        return self.field.grid


class _Problem:
    """Scaled-variable evaluation of Q, ||.||_p^p, gradient and preconditioner."""

    def __init__(self, grid: RadialGrid, spec):
        self.grid = grid
        self.spec = spec
        self.p = float(spec.p)
        self.form = spec.form(grid)
        self.sf: ScaledForm = self.form.scaled()
        self.s = grid.sqrt_weights
        self.w = grid.weights
        try:
            self.precond = cholesky_banded(self.sf.band(1.0))
        except LinAlgError as exc:
            raise IndefiniteFormError("A + I is not positive definite; lambda too small") from exc

    def parts(self, y: np.ndarray) -> tuple[float, float]:
        u = y / self.s
        return self.sf.energy(y), float(np.sum(self.w * np.abs(u) ** self.p))

    def project(self, y: np.ndarray) -> np.ndarray:
        q, pp = self.parts(y)
        if not (q > 0 and pp > 0):
            raise IndefiniteFormError(f"cannot project: Q = {q:.3g}, |u|_p^p = {pp:.3g}")
        return y * (q / pp) ** (1.0 / (self.p - 2.0))

    def energy(self, y: np.ndarray) -> float:
        q, pp = self.parts(y)
        return 0.5 * q - pp / self.p

    def gradient(self, y: np.ndarray) -> np.ndarray:
        """sqrt(w) * (A u - |u|^{p-2} u)."""
        u = y / self.s
        return self.sf.apply(y) - self.s * np.abs(u) ** (self.p - 2.0) * u

    def precondition(self, g: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self.precond, False), g)


def _residual(prob: "_Problem", y: np.ndarray) -> float:
    g = prob.gradient(y)
    return math.sqrt(max(float(g @ prob.precondition(g)), 0.0))


def residual_norm(grid: RadialGrid, spec, u) -> float:
    """<g, (A + I)^{-1} g>^{1/2} for the energy gradient g at u."""
    prob = _Problem(grid, spec)
    y = prob.s * _values(grid, u)
    g = prob.gradient(y)
    return math.sqrt(max(float(g @ prob.precondition(g)), 0.0))


def _initial(prob: _Problem, init) -> np.ndarray:
    if init is not None:
        return prob.s * _values(prob.grid, init)
    pair = principal_eigen(prob.sf, prob.grid)
    return prob.s * pair.field.values


def _concentrated(grid: RadialGrid) -> np.ndarray:
    """A bubble of width h at the origin, tapered to vanish at r_max."""
    r = grid.nodes
    taper = np.clip(1.0 - (r / grid.r_max) ** 2, 0.0, None) ** 2
    return grid.sqrt_weights * (grid.h / (grid.h**2 + r * r)) ** (0.5 * (grid.dim_N - 4)) * taper


def _descend(prob: _Problem, y: np.ndarray, opts: SolverOptions):
    """Projected preconditioned descent from y (already on the manifold)."""
    e = prob.energy(y)
    energies = [e]
    it = 0
    res = math.inf
    for it in range(1, opts.max_iter + 1):
        g = prob.gradient(y)
        d = prob.precondition(g)
        slope = float(g @ d)
        res = math.sqrt(max(slope, 0.0))
        scale = math.sqrt(prob.sf.energy(y))
        if res <= opts.tol * scale:
            return y, energies, res, True, it - 1
        if len(energies) > opts.stall_window:
            old = energies[-1 - opts.stall_window]
            if abs(old - e) <= opts.stall_rtol * abs(e):
                return y, energies, res, True, it - 1
        alpha = opts.step0
        flat = 1e-10 * abs(e)
        for _ in range(opts.max_backtracks):
            trial = prob.project(y - alpha * d)
            e_trial = prob.energy(trial)
            if e_trial <= e - opts.armijo * alpha * slope:
                break
            # decrease below roundoff: fall back to the residual as merit
            if e_trial <= e + flat and _residual(prob, trial) < res:
                break
            alpha *= opts.backtrack
        else:
            return y, energies, res, False, it - 1
        y, e = trial, e_trial
        energies.append(e)
    g = prob.gradient(y)
    res = math.sqrt(max(float(g @ prob.precondition(g)), 0.0))
    return y, energies, res, res <= opts.tol * math.sqrt(prob.sf.energy(y)), opts.max_iter


def _finish(prob: _Problem, y: np.ndarray, energies, res, converged, iterations) -> GroundStateResult:
    y = prob.project(y)
    u = y / prob.s
    if u[0] < 0:
        u = -u
    grid = prob.grid
    q = prob.form(u)
    pp = float(np.sum(grid.weights * np.abs(u) ** prob.p))
    energy = 0.5 * q - pp / prob.p
    defect = abs(q - pp) / q
    g = prob.gradient(prob.s * u)
    res = math.sqrt(max(float(g @ prob.precondition(g)), 0.0))
    return GroundStateResult(
        field=RadialField(grid, u),
        energy=energy,
        residual=res,
        iterations=iterations,
        nehari_defect=defect,
        converged=bool(converged and defect <= 1e-10),
        quadratic=q,
        lp_power=pp,
        energies=tuple(energies),
    )


def solve(grid: RadialGrid, spec, init=None, opts: SolverOptions | None = None) -> GroundStateResult:
    """Shared driver for the steep-well and the limit problems.

    At the critical exponent the energy landscape has a concentrated branch
    that the eigenfunction start does not see, so without an explicit init a
    second descent starts from a narrow bubble and the lower result is kept.
    """
    opts = opts or SolverOptions()
    prob = _Problem(grid, spec)
    starts = [_initial(prob, init)]
    if init is None and is_critical(spec.p, grid.dim_N):
        starts.append(_concentrated(grid))
    best = None
    for start in starts:
        result = _run(prob, start, opts)
        if best is None or (result.converged, -result.energy) > (best.converged, -best.energy):
            best = result
    return best


def _run(prob: _Problem, start: np.ndarray, opts: SolverOptions) -> GroundStateResult:
    restarts = 0
    total = 0
    while True:
        try:
            y = prob.project(start)
            y, energies, res, ok, its = _descend(prob, y, opts)
            total += its
            break
        except IndefiniteFormError:
            restarts += 1
            if restarts > opts.max_restarts:
                raise
            log.warning("projection failed; restarting from the principal eigenfunction")
            start = _initial(prob, None)
    return _finish(prob, y, energies, res, ok, total)


def solve_ground_state(grid: RadialGrid, spec: ProblemSpec, init=None,
                       opts: SolverOptions | None = None) -> GroundStateResult:
    """Least-energy radial solution of the steep-well problem on B_{r_max}."""
    return solve(grid, spec, init, opts)


def solve_limit_problem(grid_on_ball: RadialGrid, delta: float, p: float,
                        opts: SolverOptions | None = None, boundary: str | None = None,
                        init=None) -> GroundStateResult:
    """Least-energy radial solution of the well problem on the unit ball."""
    if grid_on_ball.r_max != 1.0:
        raise ValueError("the limit problem lives on the unit-ball grid")
    kw = {} if boundary is None else {"boundary": boundary}
    spec = LimitSpec(delta=delta, p=p, dim_N=grid_on_ball.dim_N, **kw)
    mu0 = mu_zero(grid_on_ball)
    if delta >= mu0:
        raise ConfigError(f"delta {delta:g} >= mu0 {mu0:.2f} violates the well condition delta < mu0")
    return solve(grid_on_ball, spec, init, opts)


def tail_mass(result: GroundStateResult, radius: float = 1.0, power: float = 2.0) -> float:
    """Fraction of sum w |u|^power carried by nodes with r > radius."""
    grid = result.grid
    a = grid.weights * np.abs(result.field.values) ** power
    return float(a[grid.nodes > radius].sum() / a.sum())


def brute_force_oracle(grid_small: RadialGrid, spec, starts: int = 200, seed: int = 0,
                       tol: float = 1e-11, max_iter: int = 200_000) -> float:
    """Minimum over seeded random starts of plain projected gradient descent.

    Deliberately independent of the main solver: no preconditioner, no line
    search, a fixed step 1/||S||_inf, all starts advanced together.
    """
    if grid_small.m > 48:
        raise ValueError("the brute-force oracle is meant for grids with m <= 48")
    sf = spec.form(grid_small).scaled()
    band = sf.band()
    row = np.abs(band[2]).copy()
    row[:-1] += np.abs(band[1, 1:])
    row[1:] += np.abs(band[1, 1:])
    row[:-2] += np.abs(band[0, 2:])
    row[2:] += np.abs(band[0, 2:])
    step = 1.0 / row.max()
    s = grid_small.sqrt_weights[:, None]
    w = grid_small.weights[:, None]
    p = float(spec.p)

    rng = np.random.default_rng(seed)
    y = s * rng.standard_normal((starts, grid_small.m)).T

    def project(y):
        ky = sf.apply_k(y)
        q = np.sum(ky * ky, axis=0) + np.sum(sf.potential[:, None] * y * y, axis=0)
        pp = np.sum(w * np.abs(y / s) ** p, axis=0)
        return y * (q / pp) ** (1.0 / (p - 2.0)), q, pp

    y, q, pp = project(y)
    active = np.ones(starts, dtype=bool)
    for _ in range(max_iter):
        ya = y[:, active]
        u = ya / s
        g = sf.apply(ya) - s * np.abs(u) ** (p - 2.0) * u
        gnorm = np.linalg.norm(g, axis=0)
        scale = np.sqrt(q[active])
        done = gnorm <= tol * scale
        ynew, qa, ppa = project(ya - step * g)
        ynew[:, done] = ya[:, done]
        y[:, active] = ynew
        q[active] = np.where(done, q[active], qa)
        pp[active] = np.where(done, pp[active], ppa)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    energies = (0.5 - 1.0 / p) * pp
    return float(energies.min())
