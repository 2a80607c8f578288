"""
Classical rate matrices embedded as quantum generators
=======================================================
"""

import numpy as np

from cplab.classical import (classical_dbc_check, lift_classical,
                             lift_projections, random_reversible,
                             restrict_to_diagonal, stationary_distribution)
from cplab.invariance_dbc import ThermalState, dbc_check_alt, dbc_check_standard
from cplab.lindblad import build_generator
from cplab.matrixcore import frob

rng = np.random.default_rng(3)

# a three-state chain: off-diagonal rates, rows summing to zero
m = np.array([[-0.5, 0.3, 0.2],
              [0.5, -0.7, 0.2],
              [0.5, 0.3, -0.8]])
p = stationary_distribution(m)
print("stationary law:", np.round(p, 6))
print("detailed balance for its own stationary law:",
      classical_dbc_check(m, p))

# lifting to a quantum generator and restricting to the diagonal algebra
# is the identity on rate matrices
lifted = lift_classical(m)
back = restrict_to_diagonal(build_generator(lifted), lift_projections(3))
print("lift/restrict round trip:", f"{frob(np.asarray(back) - m):.2e}")

# reversible chains lift to generators satisfying quantum detailed balance
# with respect to diag(p), in both weighting conventions
m_rev, p_rev = random_reversible(4, rng)
state = ThermalState(beta=1.0, rho=np.diag(p_rev).astype(complex))
lifted_rev = lift_classical(m_rev)
print("reversible chain lifts to quantum dbc:",
      dbc_check_standard(lifted_rev, state), "/",
      dbc_check_alt(lifted_rev, state))
print("non-reversible chain, same test:      ",
      dbc_check_standard(lifted, ThermalState(beta=1.0,
                                              rho=np.diag(p).astype(complex))))
