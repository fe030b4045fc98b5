"""Extremal profiles for the critical exponent and the cut-off energy test.

U_eps(r) = c_N (eps / (eps^2 + r^2))^{(N-4)/2} attains the best constant S
in ||Delta u||_2^2 >= S ||u||_{2**}^2.  Radial integrals are evaluated with
composite Gauss-Legendre on geometrically graded panels; on unbounded
ranges the part beyond R_quad is added from the asymptotic series of the
integrand in 1/r^2.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, critical_exponent
from .radial import sphere_area

log = logging.getLogger(__name__)

R_QUAD = 1e3
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def default_cn(dim_N: int) -> float:
    """c_N with Delta^2 U_1 = U_1^{2**-1}."""
    N = dim_N
    return float((N * (N - 4) * (N * N - 4)) ** ((N - 4) / 8.0))


@dataclass(frozen=True)
class BubbleSpec:
    dim_N: int = 8
    epsilon: float = 0.1
    c_N: float | None = None
    cutoff_inner: float = 0.5
    cutoff_outer: float = 0.9

    def __post_init__(self):
        if self.dim_N < 5:
            raise ConfigError("bubble profiles need N >= 5")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not 0 < self.cutoff_inner < self.cutoff_outer < 1:
            raise ConfigError("need 0 < r0 < r1 < 1 for the cut-off")
        if self.c_N is not None and not self.c_N > 0:
            raise ConfigError("c_N must be positive")

    @property
    def cn(self) -> float:
        return default_cn(self.dim_N) if self.c_N is None else float(self.c_N)

    @property
    def exponent(self) -> float:
        return 0.5 * (self.dim_N - 4)


def bubble_profile(spec: BubbleSpec, r):
    r = np.asarray(r, dtype=float)
    e = spec.epsilon
    out = spec.cn * (e / (e * e + r * r)) ** spec.exponent
    return float(out) if out.ndim == 0 else out


def bubble_derivatives(spec: BubbleSpec, r):
    """U, U' and Delta U in closed form."""
    r = np.asarray(r, dtype=float)
    a, e, c, N = spec.exponent, spec.epsilon, spec.cn, spec.dim_N
    base = e * e + r * r
    u = c * e**a * base ** (-a)
    du = -2.0 * a * c * e**a * r * base ** (-a - 1.0)
    lap = -2.0 * a * c * e**a * (N * e * e + 2.0 * r * r) * base ** (-a - 2.0)
    return u, du, lap


def smooth_cutoff(r, r0: float, r1: float):
    """1 on [0, r0], 0 on [r1, inf), quintic smoothstep in between (C^2)."""
    if not 0 < r0 < r1:
        raise ValueError("need 0 < r0 < r1")
    s = np.clip((np.asarray(r, dtype=float) - r0) / (r1 - r0), 0.0, 1.0)
    out = 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)
    return float(out) if out.ndim == 0 else out


def _cutoff_derivatives(r, r0, r1):
    r = np.asarray(r, dtype=float)
    L = r1 - r0
    s = np.clip((r - r0) / L, 0.0, 1.0)
    inside = (r > r0) & (r < r1)
    eta = 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)
    d1 = np.where(inside, -30.0 * s * s * (1.0 - s) ** 2 / L, 0.0)
    d2 = np.where(inside, -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / L**2, 0.0)
    return eta, d1, d2


def _panels(a: float, b: float, scale: float, per_decade: int = 8) -> np.ndarray:
    """Break points on [a, b], geometric from ``scale`` outwards."""
    inner = max(a, min(scale * 1e-3, b))
    pts = [a, inner] if inner > a else [a]
    if b > inner:
        n = max(2, int(math.ceil(per_decade * math.log10(b / inner))))
        pts.extend(np.geomspace(inner, b, n + 1)[1:])
    return np.unique(np.asarray(pts))


def radial_quadrature(func, a: float, b: float, scale: float, dim_N: int) -> float:
    """omega_{N-1} * int_a^b f(r) r^{N-1} dr with f vectorized."""
    edges = _panels(a, b, scale)
    lo, hi = edges[:-1, None], edges[1:, None]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    r = mid + half * _GL_NODES[None, :]
    vals = func(r) * r ** (dim_N - 1)
    return sphere_area(dim_N) * float(np.sum(half * (vals @ _GL_WEIGHTS[:, None])))


def _tail_power_series(coeffs, eps: float, s: float, R: float, dim_N: int,
                       rtol: float = 1e-18, max_terms: int = 200) -> tuple[float, float]:
    """omega * int_R^inf sum_j coeffs[j] r^{2j} (eps^2 + r^2)^{-s} r^{N-1} dr.

    Expands (eps^2 + r^2)^{-s} = r^{-2s} sum_k binom(-s, k) (eps/r)^{2k}.
    Returns (value, size of the first omitted term).
    """
    total, last = 0.0, math.inf
    for j, cj in enumerate(coeffs):
        if cj == 0:
            continue
        q = dim_N - 1 + 2 * j - 2 * s
        coef = 1.0  # binom(-s, k), by recurrence
        for k in range(max_terms):
            if k > 0:
                coef *= -(s + k - 1) / k
            power = q - 2 * k + 1
            if power >= 0:
                raise ValueError("tail integral diverges")
            term = cj * coef * eps ** (2 * k) * R**power / (-power)
            total += term
            last = abs(term)
            if abs(term) <= rtol * abs(total):
                break
    return sphere_area(dim_N) * total, sphere_area(dim_N) * last


class TailError(RuntimeError):
    pass


def whole_space_integrals(spec: BubbleSpec, R: float = R_QUAD) -> tuple[float, float]:
    """(int |Delta U_eps|^2, int |U_eps|^{2**}) over R^N."""
    N, e, c, a = spec.dim_N, spec.epsilon, spec.cn, spec.exponent
    crit = critical_exponent(N)

    def lap_sq(r):
        return bubble_derivatives(spec, r)[2] ** 2

    def crit_pow(r):
        return np.abs(bubble_profile(spec, r)) ** crit

    core_lap = radial_quadrature(lap_sq, 0.0, R, e, N)
    core_pow = radial_quadrature(crit_pow, 0.0, R, e, N)
    # |Delta U|^2 = 4 a^2 c^2 e^{2a} (N e^2 + 2 r^2)^2 (e^2 + r^2)^{-N}
    k = 4.0 * a * a * c * c * e ** (2 * a)
    tail_lap, err_lap = _tail_power_series(
        [k * N * N * e**4, k * 4.0 * N * e * e, k * 4.0], e, N, R, N)
    # U^{2**} = c^{2**} e^N (e^2 + r^2)^{-N}
    tail_pow, err_pow = _tail_power_series([c**crit * e**N], e, N, R, N)
    lap_total, pow_total = core_lap + tail_lap, core_pow + tail_pow
    if err_lap > 1e-10 * lap_total or err_pow > 1e-10 * pow_total:
        raise TailError("asymptotic tail not converged")
    return lap_total, pow_total


def sobolev_constant(dim_N: int, epsilon: float = 1.0, c_N: float | None = None,
                     check_invariance: bool = True) -> float:
    """S = int |Delta U|^2 / (int U^{2**})^{2/2**}."""
    crit = critical_exponent(dim_N)

    def quotient(eps):
        lap, pw = whole_space_integrals(BubbleSpec(dim_N, eps, c_N))
        return lap / pw ** (2.0 / crit)

    s = quotient(epsilon)
    if check_invariance:
        for eps in (0.5, 2.0):
            other = quotient(eps)
            if abs(other - s) > 1e-8 * s:
                raise RuntimeError(f"S not scale invariant: {s!r} vs {other!r} at eps={eps}")
    return s


def cutoff_integrals(spec: BubbleSpec) -> dict:
    """Integrals over the ball of u_eps = eta U_eps.

    Keys: ``lap`` (int |Delta u|^2), ``l2`` (int u^2), ``crit`` (int |u|^{2**}).
    Delta(eta U) = eta Delta U + 2 eta' U' + U Delta eta.
    """
    N = spec.dim_N
    r0, r1 = spec.cutoff_inner, spec.cutoff_outer
    crit = critical_exponent(N)

    def pieces(r):
        u, du, lapu = bubble_derivatives(spec, r)
        eta, d1, d2 = _cutoff_derivatives(r, r0, r1)
        lap_eta = d2 + (N - 1) / r * d1
        return eta * u, eta * lapu + 2.0 * d1 * du + u * lap_eta

    def lap_sq(r):
        return pieces(r)[1] ** 2

    def sq(r):
        return pieces(r)[0] ** 2

    def pw(r):
        return np.abs(pieces(r)[0]) ** crit

    out = {}
    for key, f in (("lap", lap_sq), ("l2", sq), ("crit", pw)):
        out[key] = (radial_quadrature(f, 0.0, r0, spec.epsilon, N)
                    + radial_quadrature(f, r0, r1, r1 - r0, N))
    return out


def nehari_t(lap: float, l2: float, crit_int: float, delta: float, dim_N: int) -> float:
    """t_eps = ((int |Delta u|^2 - delta int u^2) / int |u|^{2**})^{1/(2**-2)}."""
    crit = critical_exponent(dim_N)
    return ((lap - delta * l2) / crit_int) ** (1.0 / (crit - 2.0))


def projected_energy(lap: float, l2: float, crit_int: float, delta: float, dim_N: int) -> float:
    """(2/N) (int |Delta u|^2 - delta u^2)^{N/4} / (int |u|^{2**})^{(N-4)/4}."""
    N = dim_N
    num = lap - delta * l2
    return (2.0 / N) * num ** (N / 4.0) / crit_int ** ((N - 4) / 4.0)


@dataclass(frozen=True)
class BubbleBound:
    min_energy: float
    threshold: float
    margin: float
    argmin_epsilon: float
    epsilons: np.ndarray
    energies: np.ndarray

    @property
    def relative_margin(self) -> float:
        return self.margin / self.threshold


def bubble_energy_bound(dim_N: int, delta: float, epsilon_grid=None,
                        cutoff: tuple[float, float] = (0.5, 0.9)) -> BubbleBound:
    """min over eps of J(t_eps u_eps) against the level (2/N) S^{N/4}."""
    from .spectral import bessel_mu0

    if dim_N < 8:
        raise ConfigError("the cut-off bubble bound needs N >= 8")
    if delta < 0:
        raise ConfigError("delta must be non-negative")
    mu0 = bessel_mu0(dim_N)
    if delta >= mu0:
        raise ConfigError(f"delta {delta:g} >= mu0 {mu0:.2f} violates the well condition delta < mu0")
    eps = np.geomspace(1e-3, 0.5, 40) if epsilon_grid is None else np.asarray(epsilon_grid, float)
    if eps.size < 20:
        raise ValueError("need at least 20 epsilon values")
    S = sobolev_constant(dim_N)
    threshold = (2.0 / dim_N) * S ** (dim_N / 4.0)
    energies = np.full(eps.size, np.nan)
    for i, e in enumerate(eps):
        ints = cutoff_integrals(BubbleSpec(dim_N, float(e), None, *cutoff))
        if ints["lap"] - delta * ints["l2"] <= 0:
            warnings.warn(f"negative Nehari numerator at eps={e:g}; skipped", RuntimeWarning)
            continue
        energies[i] = projected_energy(ints["lap"], ints["l2"], ints["crit"], delta, dim_N)
    k = int(np.nanargmin(energies))
    return BubbleBound(float(energies[k]), threshold, threshold - float(energies[k]),
                       float(eps[k]), eps, energies)


def l2_mass_scaling_fit(dim_N: int, epsilon_grid=None,
                        cutoff: tuple[float, float] = (0.5, 0.9)) -> float:
    """Slope of log int u_eps^2 against log eps (after / |ln eps| when N = 8)."""
    if dim_N < 8:
        raise ConfigError("the mass scaling law is stated for N >= 8")
    eps = np.geomspace(1e-5, 1e-2, 16) if epsilon_grid is None else np.asarray(epsilon_grid, float)
    if eps.max() / eps.min() < 100:
        raise ValueError("epsilon grid must span at least two decades")
    mass = l2_masses(dim_N, eps, cutoff)
    if dim_N == 8:
        mass = mass / np.abs(np.log(eps))
    slope, _ = np.polyfit(np.log(eps), np.log(mass), 1)
    return float(slope)


def l2_masses(dim_N: int, eps, cutoff=(0.5, 0.9)) -> np.ndarray:
    return np.array([cutoff_integrals(BubbleSpec(dim_N, float(e), None, *cutoff))["l2"]
                     for e in eps])


def grid_cutoff_field(grid, spec: BubbleSpec) -> np.ndarray:
    """u_eps = eta U_eps sampled at the nodes of a ball grid."""
    r = grid.nodes
    return smooth_cutoff(r, spec.cutoff_inner, spec.cutoff_outer) * bubble_profile(spec, r)
