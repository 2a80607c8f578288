"""
Weak coupling limits of a Friedrichs model
===========================================

A small system couples to a band of reservoir energies with strength
lambda.  On the rescaled time horizon t/lambda^2 the reduced dynamics
approaches the semigroup generated by the level shift operator; the full
dynamics, mapped through isometries into a fixed asymptotic band, also
converges (extended limit).
"""

import numpy as np

from cplab.friedrichs_wcl import (asymptotic_generator, extended_wcl_experiment,
                                  level_shift, offset_flat_model,
                                  reduced_wcl_experiment, scalar_flat_model)
from cplab.matrixcore import dag, frob

# the level shift operator carries the decay rate (imaginary part) and the
# second-order energy displacement (real part, a principal value integral)
ups = level_shift(offset_flat_model(0.1)).upsilon[0, 0]
print("offset flat window: level shift =", np.round(ups, 8))
print("  analytic value   =", np.round(-0.01 * np.log(3.0) - 1j * np.pi * 0.01, 8))

gen = asymptotic_generator(scalar_flat_model())
print("dissipation identity i(Y - Y*) = nu* nu:",
      f"{frob(1j * (gen.upsilon - dag(gen.upsilon)) - dag(gen.nu) @ gen.nu):.2e}")

print("\nreduced limit, scalar flat model, t = 1:")
for row in reduced_wcl_experiment(scalar_flat_model(), 1.0, (0.5, 0.35, 0.25)):
    print(f"  lambda={row['lambda']:.2f}  grid={row['grid_n']:5d}"
          f"  error={row['error']:.5f}  ({row['runtime_s']:.2f} s)")

print("\nextended limit, same model, t = 1, t0 = 0:")
for row in extended_wcl_experiment(scalar_flat_model(), 1.0, 0.0, (0.5, 0.35, 0.25)):
    print(f"  lambda={row['lambda']:.2f}  grid={row['grid_n']:5d}"
          f"  dilation dim={row['asym_n']:4d}  error={row['error']:.6f}")
