"""
Quantum Langevin dynamics on a truncated Fock space
====================================================

The singular coupling generator Z acts on system x Fock(reservoir modes).
Compressing its unitary group to the system-vacuum sector must reproduce
(i) the Markov semigroup on observables and (ii) the full completely
positive evolution, with errors vanishing as the mode grid refines.  The
one-excitation sector of Z is exactly the discretized dilation generator
of the toy model, and a balanced jump-energy operator Y makes the total
energy K + dGamma(Y) an exact constant of motion.
"""

import numpy as np

from cplab.dilation_toy import build_zr, contraction_generator, reservoir_grid
from cplab.langevin_fock import (build_fock, build_langevin_Z,
                                 commutation_residual, langevin_reduction_check,
                                 one_excitation_block, scalar_decay_data,
                                 total_energy, two_level_decay_data)
from cplab.matrixcore import frob

# scalar pure decay
upsilon, nu = scalar_decay_data()
print("scalar model, t = 1:")
for (r, n) in ((10.0, 41), (20.0, 81)):
    gen = build_langevin_Z(upsilon, nu, reservoir_grid(r, n), build_fock(n, 2))
    err_semi, err_cp = langevin_reduction_check(gen, 1.0, np.array([[1.0]]))
    print(f"  r={r:5.1f} n={n:3d}  semigroup error {err_semi:.5f}"
          f"  cp error {err_cp:.1e}")

# the one-excitation block is the toy dilation generator, matrix for matrix
grid = reservoir_grid(10.0, 41)
gen = build_langevin_Z(upsilon, nu, grid, build_fock(41, 2))
toy = build_zr(contraction_generator(upsilon), grid)
print("one-excitation block vs toy dilation:",
      f"{frob(one_excitation_block(gen) - toy.z):.1e}")

# two-level system with a sigma_x observable
upsilon2, nu2 = two_level_decay_data()
sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
print("two-level model, t = 1:")
for (r, n) in ((5.0, 21), (10.0, 41), (20.0, 81)):
    gen2 = build_langevin_Z(upsilon2, nu2, reservoir_grid(r, n),
                            build_fock(n, 2))
    err_semi, err_cp = langevin_reduction_check(gen2, 1.0, sigma_x)
    print(f"  r={r:5.1f} n={n:3d}  semigroup error {err_semi:.5f}"
          f"  cp error {err_cp:.5f}")

# energy conservation: Y = 1 balances the two-level decay channel
gen2 = build_langevin_Z(upsilon2, nu2, reservoir_grid(5.0, 21),
                        build_fock(21, 2))
energy = total_energy(np.diag([0.0, 1.0]), np.array([[1.0]]), gen2)
print("total energy commutator with Z:",
      f"{commutation_residual(energy, gen2.z):.1e}")
