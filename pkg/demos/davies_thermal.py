"""
Reduced weak coupling limit of a two-level system in a structured reservoir
============================================================================

The Markov generator of the reduced limit is assembled from the coupling
profile sampled at the Bohr frequencies (jump blocks) and a principal value
integral over the reservoir band (level shift).  With thermal occupation
weights on the coupling the generator satisfies detailed balance, the KMS
two-point identity holds, and a reservoir-level antiunitary conjugation
exists.
"""

import numpy as np

from cplab.classical import restrict_to_diagonal
from cplab.invariance_dbc import gibbs_state, quadratic_balance_residual
from cplab.matrixcore import basis_matrix, frob
from cplab.pauli_fierz import (davies_generator, kms_twopoint_check,
                               reservoir_conjugation, thermal_condition_residual,
                               two_level_thermal_model, two_level_vacuum_model)

g, eps, beta = 0.1, 1.0, 1.0

# vacuum coupling: pure decay at the golden-rule rate 2 pi g^2
vacuum = davies_generator(two_level_vacuum_model(g=g, eps=eps))
excited = basis_matrix(2, 1, 1)
print("vacuum decay: M(E11) / E11 =",
      np.round(vacuum.m.apply(excited)[1, 1].real, 10),
      " golden rule -2 pi g^2 =", np.round(-2 * np.pi * g * g, 10))

# thermal coupling: rates in the Boltzmann ratio, Gibbs state stationary
model = two_level_thermal_model(g=g, eps=eps, beta=beta)
thermal = davies_generator(model)
rates = restrict_to_diagonal(thermal.m, np.diag([0.0, eps]).astype(complex))
print("thermal rates: down", np.round(rates[1, 0], 8),
      " up", np.round(rates[0, 1], 8),
      " ratio - e^{-beta eps} =",
      f"{rates[0, 1] / rates[1, 0] - np.exp(-beta * eps):+.1e}")

rho = gibbs_state(np.diag([0.0, eps]), beta).rho
print("Gibbs state stationary:",
      f"{frob(thermal.m.predual().apply(rho)):.2e}")

# certification stack: covariance, quadratic balance, reservoir balance, KMS
print("jump-energy covariance residual:", f"{thermal.y.residual:.2e}")
print("quadratic balance residual:",
      f"{quadratic_balance_residual(thermal.nu, thermal.y.y, beta):.2e}")
print("reservoir thermal condition:",
      f"{thermal_condition_residual(model):.2e}")
for t in (0.0, 0.5, 1.0):
    lhs, rhs, diff = kms_twopoint_check(model, t=t)
    print(f"KMS two-point at t={t:.1f}: |lhs - rhs| = {diff:.2e}")

# the vacuum coupling fails the same checks decisively
bare = two_level_vacuum_model(g=g, eps=eps, half_width=0.45)
print("vacuum negative control:",
      f"thermal condition {thermal_condition_residual(bare, beta=beta):.1e},",
      f"KMS defect {kms_twopoint_check(bare, beta=beta)[2]:.1e}")

# the antiunitary reservoir conjugation pairs mirrored modes
conj = reservoir_conjugation(model)
print("reservoir conjugation on", conj.u_eps.shape[0], "modes:",
      f"involution {conj.involution_residual:.2e},",
      f"energy flip {conj.y_flip_residual:.2e}")
