import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steepwell.model import (
    BC_CLAMPED,
    ConfigError,
    LimitSpec,
    ProblemSpec,
    critical_exponent,
    energy,
    energy_gradient,
    random_smooth_fields,
)
from steepwell.radial import build_grid, lp_power
from steepwell.solver import (
    SolverOptions,
    brute_force_oracle,
    residual_norm,
    solve,
    solve_ground_state,
    solve_limit_problem,
    tail_mass,
)
from steepwell.spectral import ball_grid


def check_identities(res, p):
    q = res.quadratic
    assert abs(q - res.lp_power) <= 1e-10 * q
    assert abs(q - 2 * p * res.energy / (p - 2)) <= 1e-10 * q


@pytest.mark.parametrize("lam", [1e2, 1e3, 1e4])
def test_ground_state_identities(lam):
    g = build_grid(5, 4.0, 512)
    spec = ProblemSpec(lam=lam)
    res = solve_ground_state(g, spec)
    assert res.converged
    check_identities(res, spec.p)
    assert res.energy == pytest.approx(energy(g, spec, res.field), rel=1e-12)
    assert res.residual <= 1e-9 * np.sqrt(res.quadratic)
    # the weighted gradient is small relative to the field scale
    grad = energy_gradient(g, spec, res.field).values
    assert np.all(np.isfinite(grad))
    assert res.field.values[0] > 0


def test_energy_decreases_monotonically():
    g = build_grid(5, 4.0, 256)
    res = solve_ground_state(g, ProblemSpec(lam=1e3))
    e = np.array(res.energies)
    assert np.all(np.diff(e) <= 1e-10 * abs(e[0]))


def test_matches_brute_force_small_grid():
    g = build_grid(5, 4.0, 24)
    spec = ProblemSpec(lam=1e3)
    res = solve_ground_state(g, spec)
    ref = brute_force_oracle(g, spec, starts=40, seed=1)
    assert res.energy == pytest.approx(ref, rel=1e-6)


def test_brute_force_grid_limit():
    with pytest.raises(ValueError):
        brute_force_oracle(build_grid(5, 4.0, 64), ProblemSpec())


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**16))
def test_random_starts_do_not_beat_solver(seed):
    g = build_grid(5, 4.0, 128)
    spec = ProblemSpec(lam=1e3)
    best = solve_ground_state(g, spec)
    start = random_smooth_fields(g, 1, np.random.default_rng(seed))[0]
    other = solve_ground_state(g, spec, init=start)
    assert best.energy <= other.energy * (1 + 1e-8)


def test_limit_problem():
    g = ball_grid(5, 256)
    res = solve_limit_problem(g, 50.0, 3.0)
    assert res.converged
    check_identities(res, 3.0)
    with pytest.raises(ConfigError):
        solve_limit_problem(g, 1000.0, 3.0)
    with pytest.raises(ValueError):
        solve_limit_problem(build_grid(5, 2.0, 64), 50.0, 3.0)
    clamped = solve_limit_problem(g, 50.0, 3.0, boundary=BC_CLAMPED)
    assert clamped.energy > res.energy


def test_residual_norm_agrees():
    g = build_grid(5, 4.0, 256)
    spec = ProblemSpec(lam=1e3)
    res = solve_ground_state(g, spec)
    assert residual_norm(g, spec, res.field) == pytest.approx(res.residual, rel=1e-6, abs=1e-12)


def test_tail_mass_shrinks_with_lambda():
    g = build_grid(5, 4.0, 512)
    tails = [tail_mass(solve_ground_state(g, ProblemSpec(lam=l))) for l in (1e2, 1e3, 1e4)]
    assert tails[0] > tails[1] > tails[2]
    assert 0 <= tails[2] < 1


def test_critical_case_takes_lower_branch():
    n = 8
    p = critical_exponent(n)
    g = build_grid(n, 4.0, 512)
    spec = ProblemSpec(lam=1e3, p=p, dim_N=n)
    eig_start = solve(g, spec, init=np.clip(1 - g.nodes**2, 0, None) ** 2 + 1e-3 * np.exp(-g.nodes))
    auto = solve(g, spec)
    assert auto.converged
    assert auto.energy <= eig_start.energy
    check_identities(auto, p)


def test_max_iter_reports_nonconvergence():
    g = build_grid(5, 4.0, 256)
    res = solve_ground_state(g, ProblemSpec(lam=1e3), opts=SolverOptions(max_iter=1))
    assert not res.converged
    assert res.nehari_defect <= 1e-10
    assert lp_power(g, res.field, 3.0) == pytest.approx(res.quadratic, rel=1e-10)
