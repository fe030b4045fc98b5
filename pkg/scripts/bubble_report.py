"""Cut-off bubble energies against (2/N) S^{N/4} for several delta."""

import numpy as np

from steepwell.bubble import bubble_energy_bound, l2_mass_scaling_fit, sobolev_constant

print(f"S(8) = {sobolev_constant(8):.12g}")
eps = np.geomspace(1e-3, 0.5, 40)
for delta in (0.0, 50.0, 200.0, 1000.0):
    b = bubble_energy_bound(8, delta, eps)
    print(f"delta {delta:7.1f}: margin {b.margin:+.4e} (relative {b.relative_margin:+.2e})"
          f" at eps {b.argmin_epsilon:.3g}")
print(f"mass exponents: N=9 {l2_mass_scaling_fit(9):.4f}, N=8 {l2_mass_scaling_fit(8):.4f}")
