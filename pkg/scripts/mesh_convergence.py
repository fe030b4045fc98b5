"""Principal ball eigenvalue against the closed-form value, mesh by mesh."""

import math

from steepwell.spectral import ball_grid, bessel_mu0, mu_zero

for dim in (5, 8):
    exact = bessel_mu0(dim)
    prev = None
    print(f"N = {dim}: exact {exact:.6f}")
    for m in (128, 256, 512, 1024, 2048):
        err = abs(mu_zero(ball_grid(dim, m)) - exact)
        order = "" if prev is None else f"  order {math.log2(prev / err):.3f}"
        print(f"  m = {m:5d}  error {err:.3e}{order}")
        prev = err
