"""Problem data, the energy functional and its Nehari geometry.

Two problem families share the same machinery:

* ``ProblemSpec`` -- the steep-well problem on the truncated whole space,
  quadratic weight V_lambda = lambda*V - delta;
* ``LimitSpec`` -- the well problem on the unit ball, weight -delta.

Both expose ``weight(grid)`` and ``p``, and ``form(grid)``; every function in
this module accepts either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .radial import (
    BC_NAVIER,
    QuadraticForm,
    RadialField,
    RadialGrid,
    _values,
    assemble_bilaplacian_form,
    face_coefficients,
    laplacian_values,
    sphere_area,
)

BC_CLAMPED = "clamped_outer"


class IndefiniteFormError(ValueError):
    """The quadratic part of the energy is not positive on the given field."""


class ConfigError(ValueError):
    """Problem parameters outside the admissible range."""


def critical_exponent(dim_N: int) -> float:
    """2** = 2N/(N-4)."""
    return 2.0 * dim_N / (dim_N - 4)


def is_critical(p: float, dim_N: int) -> bool:
    return math.isclose(p, critical_exponent(dim_N), rel_tol=1e-12)


def check_exponent(p: float, dim_N: int) -> None:
    crit = critical_exponent(dim_N)
    if not p > 2:
        raise ConfigError(f"p = {p} must exceed 2")
    if p > crit and not is_critical(p, dim_N):
        raise ConfigError(f"p = {p} exceeds the critical exponent 2** = {crit:g} for N = {dim_N}")
    if is_critical(p, dim_N) and dim_N < 8:
        raise ConfigError(f"critical exponent p = 2** requires N >= 8, got N = {dim_N}")


@dataclass(frozen=True)
class PotentialSpec:
    """Radial well: 0 on the unit ball, linear ramp of width ``ramp_width``
    up to ``v_inf``, constant afterwards."""

    v_inf: float = 1.0
    ramp_width: float = 0.5
    well_radius: float = 1.0

    def __post_init__(self):
        if not (self.v_inf > 0 and self.ramp_width > 0 and self.well_radius > 0):
            raise ConfigError("potential parameters must be positive")

    @property
    def m0(self) -> float:
        return 0.5 * self.v_inf

    @property
    def big_r(self) -> float:
        """Radius of {V <= V_inf/2}."""
        return self.well_radius + 0.5 * self.ramp_width


def evaluate_potential(spec: PotentialSpec, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("radius must be non-negative")
    ramp = np.clip((r_arr - spec.well_radius) / spec.ramp_width, 0.0, 1.0)
    out = spec.v_inf * ramp
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ProblemSpec:
    """Steep-well problem: Delta^2 u + (lam V - delta) u = |u|^{p-2} u."""

    potential: PotentialSpec = field(default_factory=PotentialSpec)
    lam: float = 1e3
    delta: float = 50.0
    p: float = 3.0
    dim_N: int = 5

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.dim_N < 5:
            raise ConfigError(f"dimension must be >= 5, got {self.dim_N}")
        check_exponent(self.p, self.dim_N)

    def weight(self, grid: RadialGrid) -> np.ndarray:
        return self.lam * evaluate_potential(self.potential, grid.nodes) - self.delta

    def positive_weight(self, grid: RadialGrid) -> np.ndarray:
        return np.maximum(self.weight(grid), 0.0)

    def form(self, grid: RadialGrid) -> QuadraticForm:
        _check_dim(grid, self.dim_N)
        return assemble_bilaplacian_form(grid, self.weight(grid), f"lam*V - delta, lam={self.lam:g}")

    def with_lambda(self, lam: float) -> "ProblemSpec":
        return ProblemSpec(self.potential, lam, self.delta, self.p, self.dim_N)


@dataclass(frozen=True)
class LimitSpec:
    """Well problem Delta^2 u - delta u = |u|^{p-2} u on the unit ball.

    ``boundary`` is Navier (u = Delta u = 0) by default; ``clamped``
    (u = u' = 0) is the diagnostic variant obtained by zero extension.
    """

    delta: float = 50.0
    p: float = 3.0
    dim_N: int = 5
    boundary: str = BC_NAVIER

    def __post_init__(self):
        if self.delta < 0:
            raise ConfigError(f"delta must be non-negative, got {self.delta}")
        if self.boundary not in (BC_NAVIER, BC_CLAMPED):
            raise ConfigError(f"unknown boundary condition {self.boundary!r}")
        check_exponent(self.p, self.dim_N)

    def weight(self, grid: RadialGrid) -> np.ndarray:
        return np.full(grid.m, -self.delta)

    def positive_weight(self, grid: RadialGrid) -> np.ndarray:
        return np.zeros(grid.m)

    def form(self, grid: RadialGrid) -> QuadraticForm:
        _check_dim(grid, self.dim_N)
        form = assemble_bilaplacian_form(grid, -self.delta, f"-delta, delta={self.delta:g}")
        if self.boundary == BC_CLAMPED:
            form = clamp_outer(form)
        return form


def _check_dim(grid: RadialGrid, dim_N: int) -> None:
    if grid.dim_N != dim_N:
        raise ConfigError(f"grid dimension {grid.dim_N} differs from problem dimension {dim_N}")


def clamp_penalty(grid: RadialGrid) -> float:
    """Coefficient of u_m^2 added to Q by zero-extending u past r_max.

    The discrete Laplacian of the extension is nonzero only at the node
    r = r_max, where it equals a_{m+1/2} u_m / w_{m+1}.
    """
    a_last = face_coefficients(grid)[-1]
    w_edge = sphere_area(grid.dim_N) * grid.r_max ** (grid.dim_N - 1) * grid.h
    return a_last**2 / w_edge


def clamp_outer(form: QuadraticForm) -> QuadraticForm:
    band = form.band.copy()
    band[2, -1] += clamp_penalty(form.grid)
    return ClampedForm(form.grid, band, form.potential, (form.bc_tag[0], BC_CLAMPED),
                       form.weight_description + "; clamped")


@dataclass(frozen=True, eq=False)
class ClampedForm(QuadraticForm):
    """Navier form plus the boundary penalty of the zero extension."""

    def __call__(self, u, v=None) -> float:
        x = _values(self.grid, u)
        y = x if v is None else _values(self.grid, v)
        return super().__call__(u, v) + clamp_penalty(self.grid) * x[-1] * y[-1]

    def scaled(self):
        sf = super().scaled()
        extra = np.zeros(self.grid.m)
        extra[-1] = clamp_penalty(self.grid) / self.grid.weights[-1]
        return type(sf)(sf.grid, sf.k_diag, sf.k_off, sf.potential + extra)


def lambda_threshold(spec: ProblemSpec) -> float:
    """Lambda_0 = (M0 + delta)/M0 with M0 = V_inf/2."""
    m0 = spec.potential.m0
    return (m0 + spec.delta) / m0


# -- the functional ---------------------------------------------------------

def _quadratic(grid, spec, u: np.ndarray) -> float:
    return spec.form(grid)(u)


def quadratic_value(grid: RadialGrid, spec, u) -> float:
    """Q_lambda(u, u) = ||u||_lambda^2 (may be negative for small lambda)."""
    return _quadratic(grid, spec, _values(grid, u))


def norm_lambda(grid: RadialGrid, spec, u) -> float:
    q = quadratic_value(grid, spec, u)
    if q < 0:
        raise IndefiniteFormError(f"Q(u,u) = {q:.6g} < 0; lambda below the positivity threshold")
    return math.sqrt(q)


def norm_lambda0(grid: RadialGrid, spec, u) -> float:
    """||u||_{lambda,0}: quadratic form with V_lambda^+ in place of V_lambda."""
    x = _values(grid, u)
    lu = laplacian_values(grid, x)
    w = grid.weights
    return math.sqrt(float(np.sum(w * lu * lu) + np.sum(w * spec.positive_weight(grid) * x * x)))


def h2_norm(grid: RadialGrid, u) -> float:
    """Discrete (||Delta u||^2 + ||u||^2)^{1/2}, equivalent to the H^2 norm."""
    x = _values(grid, u)
    lu = laplacian_values(grid, x)
    return math.sqrt(float(np.sum(grid.weights * (lu * lu + x * x))))


def energy(grid: RadialGrid, spec, u) -> float:
    x = _values(grid, u)
    q = _quadratic(grid, spec, x)
    if q < 0:
        raise IndefiniteFormError(f"Q(u,u) = {q:.6g} < 0; lambda below the positivity threshold")
    return 0.5 * q - float(np.sum(grid.weights * np.abs(x) ** spec.p)) / spec.p


def _operator_apply(form: QuadraticForm, x: np.ndarray) -> np.ndarray:
    """A u with <A u, v>_w = Q(u, v): the Laplacian applied twice plus c u."""
    grid = form.grid
    out = laplacian_values(grid, laplacian_values(grid, x)) + form.potential * x
    if isinstance(form, ClampedForm):
        out[-1] += clamp_penalty(grid) * x[-1] / grid.weights[-1]
    return out


def energy_gradient(grid: RadialGrid, spec, u) -> RadialField:
    """Weighted-l2 Riesz representative of J'(u)."""
    x = _values(grid, u)
    form = spec.form(grid)
    if form(x) < 0:
        raise IndefiniteFormError("quadratic form negative at u")
    g = _operator_apply(form, x) - np.abs(x) ** (spec.p - 2) * x
    return RadialField(grid, g)


def nehari_scale(grid: RadialGrid, spec, u) -> float:
    """The t > 0 with t*u on the Nehari manifold: Q(tu) = ||tu||_p^p."""
    x = _values(grid, u)
    pp = float(np.sum(grid.weights * np.abs(x) ** spec.p))
    if pp == 0.0:
        raise ValueError("cannot project the zero field onto the Nehari manifold")
    q = _quadratic(grid, spec, x)
    if q <= 0:
        raise IndefiniteFormError(f"Q(u,u) = {q:.6g} <= 0; no Nehari scaling exists")
    return (q / pp) ** (1.0 / (spec.p - 2.0))


def fibering(grid: RadialGrid, spec, u, t):
    """J(t u) for an array of t, from two numbers Q(u) and ||u||_p^p."""
    x = _values(grid, u)
    q = _quadratic(grid, spec, x)
    pp = float(np.sum(grid.weights * np.abs(x) ** spec.p))
    t = np.asarray(t, dtype=float)
    return 0.5 * t**2 * q - t**spec.p * pp / spec.p


# -- sampled constants --------------------------------------------------------

def random_smooth_fields(grid: RadialGrid, count: int, rng: np.random.Generator,
                         modes: int = 12) -> np.ndarray:
    """``count`` random radial fields (rows) built from low cosine modes.

    Each mode cos((k - 1/2) pi r / r_max) is even in r and vanishes at
    r_max; amplitudes decay like 1/k^2 so the fields stay H^2-tame.
    """
    k = np.arange(1, modes + 1)
    basis = np.cos(np.outer((k - 0.5) * np.pi / grid.r_max, grid.nodes))
    amps = rng.standard_normal((count, modes)) / k**2
    return amps @ basis


def estimate_embedding_constant(grid: RadialGrid, spec, trials: int = 200,
                                seed: int = 0, extra_fields=()) -> tuple[float, float]:
    """Sampled min of Q(u,u)/||u||_p^2 and sigma = Lambda^{p/(p-2)}.

    The minimum over a finite trial set is an upper estimate of the true
    discrete constant.
    """
    if trials < 100:
        raise ValueError("need at least 100 trial fields")
    rng = np.random.default_rng(seed)
    fields = list(random_smooth_fields(grid, trials, rng))
    fields.extend(_values(grid, f) for f in extra_fields)
    ratios = [embedding_ratio(grid, spec, f) for f in fields]
    lam_hat = min(ratios)
    return lam_hat, sigma_from_embedding(lam_hat, spec.p)


def embedding_ratio(grid: RadialGrid, spec, u) -> float:
    x = _values(grid, u)
    q = _quadratic(grid, spec, x)
    if q < 0:
        raise IndefiniteFormError("quadratic form negative on a trial field")
    lp = float(np.sum(grid.weights * np.abs(x) ** spec.p)) ** (1.0 / spec.p)
    return q / lp**2


def sigma_from_embedding(lam_hat: float, p: float) -> float:
    return lam_hat ** (p / (p - 2.0))


@dataclass(frozen=True)
class DerivedConstants:
    m0: float
    big_r: float
    lambda0: float
    c1: float
    c2: float
    sigma: float


def derived_constants(spec: ProblemSpec, mu_l0: float, embedding: float) -> DerivedConstants:
    """Closed-form thresholds given mu(L0) and a sampled embedding constant."""
    pot = spec.potential
    c1 = math.sqrt(mu_l0 / (mu_l0 + 2.0 * spec.delta))
    return DerivedConstants(
        m0=pot.m0,
        big_r=pot.big_r,
        lambda0=lambda_threshold(spec),
        c1=c1,
        c2=1.0,
        sigma=sigma_from_embedding(embedding, spec.p),
    )
