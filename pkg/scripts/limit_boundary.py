"""Compare the steep-well spectrum and energy with both ball limits.

Zero extension of u outside the ball forces u = u' = 0 at r = 1, so the
large-lambda values approach the clamped ball problem from below.
"""

from steepwell.model import BC_CLAMPED, LimitSpec, ProblemSpec
from steepwell.radial import build_grid
from steepwell.solver import solve_ground_state, solve_limit_problem
from steepwell.spectral import ball_grid, limit_eigen, mu_L_lambda

ball = ball_grid(5, 1024)
grid = build_grid(5, 4.0, 2048)
nav = LimitSpec()
cla = LimitSpec(boundary=BC_CLAMPED)
print(f"mu  Navier {limit_eigen(ball, nav).value:.3f}  clamped {limit_eigen(ball, cla).value:.3f}")
print(f"c   Navier {solve_limit_problem(ball, 50.0, 3.0).energy:.6g}  "
      f"clamped {solve_limit_problem(ball, 50.0, 3.0, boundary=BC_CLAMPED).energy:.6g}")
for lam in (1e3, 1e4, 1e5, 1e6, 1e7):
    spec = ProblemSpec(lam=lam)
    print(f"lambda {lam:8.0e}: mu {mu_L_lambda(grid, spec):9.3f}  "
          f"c {solve_ground_state(grid, spec).energy:.6g}")
