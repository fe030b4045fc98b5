"""Radial finite differences on R^N.

A radial function u(|x|) is sampled at the interior nodes r_i = i*h,
i = 1..m, with h = r_max/(m+1).  Integrals over R^N use the volume weights

    w_i = omega_{N-1} * r_i^{N-1} * h,

and the Laplacian is written in flux (divergence) form so that it is
self-adjoint for exactly these weights.  The face coefficients are chosen
so that the discrete divergence theorem holds cell by cell, which makes the
stencil exact on constants and on r^2, and gives zero flux through the
origin (the even-extension condition u'(0) = 0).  The outer node r_max
carries a homogeneous Dirichlet value.

With L = W^{-1} D (D symmetric tridiagonal, W = diag(w)) the bilaplacian
form is

    Q(u, v) = sum_i w_i (L u)_i (L v)_i + sum_i w_i c_i u_i v_i
            = u^T (D W^{-1} D + W C) v,

a symmetric pentadiagonal matrix.  The Dirichlet closure of both Laplacian
applications realizes Navier conditions u = Delta u = 0 at r_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

BC_NAVIER = "navier_outer"
BC_ORIGIN = "symmetric_origin"


class GridMismatchError(ValueError):
    """A field was combined with a grid it was not sampled on."""


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere S^{dim-1} in R^dim."""
    return float(2.0 * np.exp(0.5 * dim * np.log(np.pi) - gammaln(0.5 * dim)))


def ball_volume(dim: int, radius: float = 1.0) -> float:
    return sphere_area(dim) * radius**dim / dim


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial mesh of the ball B_{r_max} in R^N.

    Attributes
    ----------
    dim_N : int
        Ambient dimension.
    r_max : float
        Truncation radius; the field vanishes there.
    m : int
        Number of interior nodes.
    h : float
        Spacing r_max / (m + 1).
    nodes : np.ndarray
        r_i = i*h, i = 1..m.
    weights : np.ndarray
        Volume weights omega_{N-1} r_i^{N-1} h.
    """

    dim_N: int
    r_max: float
    m: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = self.r_max / (self.m + 1)
        nodes = h * np.arange(1, self.m + 1, dtype=float)
        weights = sphere_area(self.dim_N) * nodes ** (self.dim_N - 1) * h
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __eq__(self, other):
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return (self.dim_N, self.r_max, self.m) == (other.dim_N, other.r_max, other.m)

    def __hash__(self):
        return hash((self.dim_N, self.r_max, self.m))

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def sample(self, func) -> "RadialField":
        """Evaluate a vectorized radial function at the nodes."""
        return RadialField(self, np.asarray(func(self.nodes), dtype=float))


def build_grid(dim_N: int, r_max: float, m: int) -> RadialGrid:
    if int(dim_N) != dim_N or dim_N < 5:
        raise ValueError(f"dimension must be an integer >= 5, got {dim_N}")
    if not r_max > 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    if int(m) != m or m < 8:
        raise ValueError(f"need at least 8 interior nodes, got {m}")
    return RadialGrid(int(dim_N), float(r_max), int(m))


@dataclass(frozen=True, eq=False)
class RadialField:
    """Values of a radial function at the interior nodes of ``grid``."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.m,):
            raise ValueError(
                f"field has shape {values.shape}, grid expects ({self.grid.m},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __neg__(self):
        return RadialField(self.grid, -self.values)

    def __mul__(self, scalar):
        return RadialField(self.grid, scalar * self.values)

    __rmul__ = __mul__

    def __add__(self, other):
        other = _values(self.grid, other)
        return RadialField(self.grid, self.values + other)

    def __sub__(self, other):
        other = _values(self.grid, other)
        return RadialField(self.grid, self.values - other)


def _values(grid: RadialGrid, u) -> np.ndarray:
    """Raw node values of ``u``, checking it belongs to ``grid``."""
    if isinstance(u, RadialField):
        if u.grid != grid:
            raise GridMismatchError(f"field on {u.grid!r} used with {grid!r}")
        return u.values
    arr = np.asarray(u, dtype=float)
    if arr.shape[0] != grid.m:
        raise GridMismatchError(f"array of length {arr.shape[0]} used with m={grid.m}")
    return arr


def face_coefficients(grid: RadialGrid) -> np.ndarray:
    """Flux coefficients a_{i+1/2}, i = 1..m, of the symmetric stencil D.

    (D u)_i = a_{i+1/2} (u_{i+1} - u_i) - a_{i-1/2} (u_i - u_{i-1}),
    a_{1/2} = 0, u_{m+1} = 0.  Fixed by requiring D r^2 = 2N w exactly.
    """
    N, h, r = grid.dim_N, grid.h, grid.nodes
    cumulative = np.cumsum(r ** (N - 1))
    return sphere_area(N) * N * cumulative / (r + 0.5 * h)


def stencil(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and superdiagonal of the symmetric tridiagonal D."""
    a = face_coefficients(grid)
    a_left = np.concatenate(([0.0], a[:-1]))
    return -(a + a_left), a[:-1].copy()


def _tridiag_apply(diag, upper, x):
    y = diag * x
    y[:-1] += upper * x[1:]
    y[1:] += upper * x[:-1]
    return y


def laplacian_values(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    diag, upper = stencil(grid)
    return _tridiag_apply(diag, upper, np.asarray(u, dtype=float)) / grid.weights


def apply_laplacian(grid: RadialGrid, u: RadialField) -> RadialField:
    """Discrete radial Laplacian with u'(0) = 0 and u(r_max) = 0."""
    return RadialField(grid, laplacian_values(grid, _values(grid, u)))


def scaled_laplacian(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of K = W^{-1/2} D W^{-1/2}.

    K is the Laplacian in the variables y = sqrt(w) u, where the weighted
    inner product becomes the Euclidean one.  Entries are O(h^-2).
    """
    diag, upper = stencil(grid)
    s = grid.sqrt_weights
    return diag / grid.weights, upper / (s[:-1] * s[1:])


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Symmetric pentadiagonal matrix of Q(u, v) in node values.

    ``band`` uses LAPACK upper storage: band[2 + i - j, j] = A[i, j] for
    i <= j.  ``potential`` holds the zeroth-order weight c_i at the nodes.
    """

    grid: RadialGrid
    band: np.ndarray
    potential: np.ndarray
    bc_tag: tuple[str, str] = (BC_ORIGIN, BC_NAVIER)
    weight_description: str = ""

    def matvec(self, u) -> np.ndarray:
        x = _values(self.grid, u)
        b = self.band
        y = b[2] * x
        y[:-1] += b[1, 1:] * x[1:]
        y[1:] += b[1, 1:] * x[:-1]
        y[:-2] += b[0, 2:] * x[2:]
        y[2:] += b[0, 2:] * x[:-2]
        return y

    def __call__(self, u, v=None) -> float:
        """Q(u, v) evaluated through the Laplacian (more accurate than the band)."""
        x = _values(self.grid, u)
        y = x if v is None else _values(self.grid, v)
        w = self.grid.weights
        lx = laplacian_values(self.grid, x)
        ly = lx if v is None else laplacian_values(self.grid, y)
        return float(np.sum(w * lx * ly) + np.sum(w * self.potential * x * y))

    def scaled(self) -> "ScaledForm":
        return ScaledForm.from_grid(self.grid, self.potential)

    def dense(self) -> np.ndarray:
        m = self.grid.m
        A = np.diag(self.band[2])
        A += np.diag(self.band[1, 1:], 1) + np.diag(self.band[1, 1:], -1)
        A += np.diag(self.band[0, 2:], 2) + np.diag(self.band[0, 2:], -2)
        return A.reshape(m, m)


def _as_potential(grid: RadialGrid, weight) -> np.ndarray:
    if isinstance(weight, RadialField):
        c = _values(grid, weight).copy()
    else:
        c = np.broadcast_to(np.asarray(weight, dtype=float), (grid.m,)).copy()
    if not np.all(np.isfinite(c)):
        raise ValueError("potential weight must be finite at every node")
    return c


def assemble_bilaplacian_form(grid: RadialGrid, weight=0.0, description: str = "") -> QuadraticForm:
    """Band matrix of sum w (L u)(L v) + sum w c u v for the weight c."""
    c = _as_potential(grid, weight)
    diag, upper = stencil(grid)
    winv = 1.0 / grid.weights
    m = grid.m
    band = np.zeros((3, m))
    # (D W^-1 D)_{ii}, _{i,i+1}, _{i,i+2}; no cancellation between terms
    main = diag**2 * winv
    main[:-1] += upper**2 * winv[1:]
    main[1:] += upper**2 * winv[:-1]
    band[2] = main + grid.weights * c
    band[1, 1:] = upper * (diag[:-1] * winv[:-1] + diag[1:] * winv[1:])
    band[0, 2:] = upper[:-1] * upper[1:] * winv[1:-1]
    return QuadraticForm(grid, band, c, weight_description=description)


@dataclass(frozen=True)
class ScaledForm:
    """Q in the variables y = sqrt(w) u: S = K^2 + diag(c)."""

    grid: RadialGrid
    k_diag: np.ndarray
    k_off: np.ndarray
    potential: np.ndarray

    @classmethod
    def from_grid(cls, grid: RadialGrid, potential) -> "ScaledForm":
        kd, ko = scaled_laplacian(grid)
        return cls(grid, kd, ko, _as_potential(grid, potential))

    def apply_k(self, y: np.ndarray) -> np.ndarray:
        """K @ y; accepts (m,) or (m, k) arrays."""
        out = self.k_diag[:, None] * y if y.ndim == 2 else self.k_diag * y
        off = self.k_off[:, None] if y.ndim == 2 else self.k_off
        out[:-1] += off * y[1:]
        out[1:] += off * y[:-1]
        return out

    def apply(self, y: np.ndarray) -> np.ndarray:
        c = self.potential[:, None] if y.ndim == 2 else self.potential
        return self.apply_k(self.apply_k(y)) + c * y

    def energy(self, y: np.ndarray) -> float:
        ky = self.apply_k(y)
        return float(ky @ ky + np.sum(self.potential * y * y))

    def band(self, shift: float = 0.0) -> np.ndarray:
        """Upper band storage of S + shift*I."""
        kd, ko = self.k_diag, self.k_off
        m = kd.size
        band = np.zeros((3, m))
        main = kd**2 + self.potential + shift
        main[:-1] += ko**2
        main[1:] += ko**2
        band[2] = main
        band[1, 1:] = ko * (kd[:-1] + kd[1:])
        band[0, 2:] = ko[:-1] * ko[1:]
        return band


def inner_l2(grid: RadialGrid, u, v) -> float:
    return float(np.sum(grid.weights * _values(grid, u) * _values(grid, v)))


def lp_norm(grid: RadialGrid, u, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    x = np.abs(_values(grid, u))
    return float(np.sum(grid.weights * x**p) ** (1.0 / p))


def lp_power(grid: RadialGrid, u, p: float) -> float:
    """sum_i w_i |u_i|^p, i.e. lp_norm(u, p)**p without the root."""
    return float(np.sum(grid.weights * np.abs(_values(grid, u)) ** p))
