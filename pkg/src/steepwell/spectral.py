"""Principal eigenvalues of the discrete fourth-order operators.

All linear algebra runs in the variables y = sqrt(w) u, where the weighted
pencil (B, W) becomes the standard symmetric problem S y = mu y with
S = K^2 + diag(c).  S is pentadiagonal and its rows are O(h^-4) uniformly,
unlike B whose rows inherit the r^{N-1} spread of the weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded, solve_banded
from scipy.optimize import brentq
from scipy.special import jv

from .model import ConfigError, LimitSpec, ProblemSpec
from .radial import QuadraticForm, RadialField, RadialGrid, ScaledForm, build_grid, scaled_laplacian

log = logging.getLogger(__name__)

EIG_TOL = 1e-10
EIG_MAX_ITER = 500
_PLAIN_STEPS = 3


class EigenConvergenceError(RuntimeError):
    def __init__(self, message: str, pair: "EigenPair"):
        super().__init__(message)
        self.pair = pair


@dataclass(frozen=True)
class EigenPair:
    """Principal eigenpair.

    ``residual`` is the relative backward error
    ||A u - mu u||_w / (||A|| ||u||_w); the unscaled residual of an O(h^-4)
    operator cannot drop below roundoff times ||A||.
    """

    value: float
    field: RadialField
    residual: float
    iterations: int


def _full_band(upper: np.ndarray) -> np.ndarray:
    """(l=2, u=2) general band storage from symmetric upper storage."""
    m = upper.shape[1]
    ab = np.zeros((5, m))
    ab[:3] = upper
    ab[3, :-1] = upper[1, 1:]
    ab[4, :-2] = upper[0, 2:]
    return ab


def _norm_estimate(sf: ScaledForm) -> float:
    band = sf.band()
    rows = np.abs(band[2]).copy()
    rows[:-1] += np.abs(band[1, 1:])
    rows[1:] += np.abs(band[1, 1:])
    rows[:-2] += np.abs(band[0, 2:])
    rows[2:] += np.abs(band[0, 2:])
    return float(rows.max())


def _is_positive_definite(sf: ScaledForm, shift: float) -> bool:
    try:
        cholesky_banded(sf.band(-shift))
    except LinAlgError:
        return False
    return True


def initial_bump(grid: RadialGrid) -> np.ndarray:
    return np.clip(1.0 - grid.nodes**2, 0.0, None) ** 2


def principal_eigen(form: QuadraticForm | ScaledForm, grid: RadialGrid,
                    tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> EigenPair:
    """Smallest eigenvalue of the pencil (B, W) by shifted inverse iteration.

    Three inverse-iteration steps with a shift below the spectrum (Cholesky),
    then Rayleigh-quotient iteration (banded LU).  The result is certified
    as the lowest eigenvalue by a Cholesky factorization just below it.
    """
    sf = form if isinstance(form, ScaledForm) else form.scaled()
    if sf.grid != grid:
        raise ValueError("form and grid disagree")
    s = grid.sqrt_weights
    norm_s = _norm_estimate(sf)
    floor = float(sf.potential.min()) - 1.0
    lower = cholesky_banded(sf.band(-floor))

    y = s * initial_bump(grid)
    y /= np.linalg.norm(y)
    rho = sf.energy(y)
    plain_left = _PLAIN_STEPS
    residual = math.inf
    for it in range(1, max_iter + 1):
        if plain_left > 0:
            z = cho_solve_banded((lower, False), y)
            plain_left -= 1
        else:
            z = _rqi_solve(sf, rho, y)
        y = z / np.linalg.norm(z)
        rho_new = sf.energy(y)
        residual = float(np.linalg.norm(sf.apply(y) - rho_new * y)) / norm_s
        change = abs(rho_new - rho)
        rho = rho_new
        if plain_left == 0 and residual <= tol and change <= 1e-10 * max(abs(rho), 1.0):
            margin = max(1e-7 * abs(rho), 100.0 * np.finfo(float).eps * norm_s)
            if _is_positive_definite(sf, rho - margin):
                return EigenPair(rho, RadialField(grid, _sign_fix(y / s)), residual, it)
            # converged to a higher mode: fall back to plain iteration
            log.debug("RQI landed on a non-principal eigenvalue %.6g; restarting", rho)
            plain_left = 20
    pair = EigenPair(rho, RadialField(grid, _sign_fix(y / s)), residual, max_iter)
    raise EigenConvergenceError(
        f"inverse iteration did not converge in {max_iter} steps (residual {residual:.3e})", pair)


def _rqi_solve(sf: ScaledForm, shift: float, y: np.ndarray) -> np.ndarray:
    for attempt in range(4):
        try:
            z = solve_banded((2, 2), _full_band(sf.band(-shift)), y, check_finite=False)
        except LinAlgError:
            z = None
        if z is not None and np.all(np.isfinite(z)):
            return z
        shift *= 1.0 + 1e-12 * 10**attempt
    raise LinAlgError("shifted solve singular after perturbation")


def _sign_fix(u: np.ndarray) -> np.ndarray:
    """Flip so that the field has positive weighted mean near the origin."""
    return -u if u[np.argmax(np.abs(u))] < 0 else u


def mu_zero(grid_on_ball: RadialGrid, **kw) -> float:
    """Principal eigenvalue of Delta^2 on the unit ball with Navier data."""
    _require_ball(grid_on_ball)
    return principal_eigen(ScaledForm.from_grid(grid_on_ball, 0.0), grid_on_ball, **kw).value


def mu_L0(grid_on_ball: RadialGrid, delta: float, **kw) -> float:
    """mu(L0) = mu0 - delta; refuses delta >= mu0."""
    mu0 = mu_zero(grid_on_ball, **kw)
    if delta >= mu0:
        raise ConfigError(f"delta {delta:g} >= mu0 {mu0:.2f} violates the well condition delta < mu0")
    return mu0 - delta


def limit_eigen(grid_on_ball: RadialGrid, spec: LimitSpec, **kw) -> EigenPair:
    _require_ball(grid_on_ball)
    return principal_eigen(spec.form(grid_on_ball), grid_on_ball, **kw)


def lambda_eigen(grid: RadialGrid, spec: ProblemSpec, **kw) -> EigenPair:
    return principal_eigen(spec.form(grid), grid, **kw)


def mu_L_lambda(grid_on_rmax: RadialGrid, spec: ProblemSpec, **kw) -> float:
    return lambda_eigen(grid_on_rmax, spec, **kw).value


def ess_spectrum_lower_bound(spec: ProblemSpec) -> float:
    """lambda*M0 - delta, the bottom of the essential spectrum bound."""
    return spec.lam * spec.potential.m0 - spec.delta


def dirichlet_laplacian_eigen(grid: RadialGrid) -> float:
    """Smallest eigenvalue of -Delta_h with the same closures."""
    from scipy.linalg import eigh_tridiagonal

    kd, ko = scaled_laplacian(grid)
    m = grid.m
    return float(-eigh_tridiagonal(kd, ko, select="i", select_range=(m - 1, m - 1),
                                   eigvals_only=True)[0])


def exterior_mass_fraction(pair: EigenPair, radius: float = 1.0) -> float:
    grid = pair.field.grid
    u = pair.field.values
    w = grid.weights
    return float(np.sum(w[grid.nodes > radius] * u[grid.nodes > radius] ** 2) / np.sum(w * u * u))


def bessel_mu0(dim_N: int) -> float:
    """Closed-form mu0 = j^4, j the first zero of J_{N/2-1}."""
    nu = 0.5 * dim_N - 1.0
    xs = np.linspace(0.5, 12.0, 2000)
    vals = jv(nu, xs)
    k = int(np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0])
    j = brentq(lambda x: jv(nu, x), xs[k], xs[k + 1], xtol=1e-15)
    return j**4


def ball_grid(dim_N: int, m: int) -> RadialGrid:
    return build_grid(dim_N, 1.0, m)


def _require_ball(grid: RadialGrid) -> None:
    if grid.r_max != 1.0:
        raise ValueError(f"well problems need the unit-ball grid, got r_max={grid.r_max}")
