"""
Completely positive maps: certification, minimal dilations, operator inequalities
==================================================================================
"""

import numpy as np

from cplab.cpmap import (CpMapData, choi, dilation_equivalence,
                         is_completely_positive, kadison_schwarz_residual,
                         map_distance, stinespring_minimal)
from cplab.matrixcore import basis_matrix, dag, frob

rng = np.random.default_rng(7)

# a random Kraus presentation is completely positive by construction
blocks = tuple(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
               for _ in range(2))
xi = CpMapData(blocks=blocks)
print("random two-block map certified cp:", is_completely_positive(xi))

# mixing in a transpose component destroys complete positivity while the
# map stays positive on actual density matrices
def with_transpose(a, w=0.35):
    return (1.0 - w) * xi.apply(a) + w * a.T

print("after a 35% transpose admixture:  ",
      is_completely_positive(with_transpose, d_in=3, d_out=3))
c = choi(with_transpose, d_in=3, d_out=3)
print("smallest Choi eigenvalue:", f"{np.linalg.eigvalsh(c).min():+.4f}")

# the minimal block presentation is recovered from the superoperator alone,
# and any two minimal presentations differ by a unitary mixing of blocks
extracted = stinespring_minimal(xi.superop())
print("minimal extraction distance:", f"{map_distance(extracted, xi):.2e}",
      "with", extracted.n_blocks, "blocks")

u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
mixed = CpMapData(blocks=tuple(sum(u[i, j] * blocks[j] for j in range(2))
                               for i in range(2)))
recovered = dilation_equivalence(xi, mixed)
print("planted mixing unitary recovered to",
      f"{frob(recovered - u):.2e}")

# cp maps with invertible unit image satisfy the Kadison-Schwarz inequality:
# the residual matrix below is positive semidefinite
a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
r = kadison_schwarz_residual(xi, a)
print("Kadison-Schwarz residual eigenvalues:",
      np.round(np.linalg.eigvalsh(0.5 * (r + dag(r))), 6))
