"""Dense linear-algebra substrate shared by every other module.

Conventions used throughout the package:

* matrices are numpy arrays of dtype complex, row-major;
* ``vectorize`` flattens row-major, so vec(A)[i*d + j] = A[i, j];
* a superoperator is stored as the (d_out^2, d_in^2) matrix acting on
  vectorized inputs;
* the default matrix norm is Frobenius.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg


Array = np.ndarray


class NotHermitian(ValueError):
    pass


class NotOrthogonal(ValueError):
    pass


def as_matrix(a) -> Array:
    """Coerce to a complex 2-d array without copying when possible."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    return m


def frob(a: Array) -> float:
    return float(np.linalg.norm(a))


def dag(a: Array) -> Array:
    return np.conj(np.swapaxes(a, -1, -2))


def herm_residual(a: Array) -> float:
    return frob(a - dag(a))


def require_hermitian(a: Array, tol: float = 1e-10, what: str = "matrix") -> Array:
    a = as_matrix(a)
    if herm_residual(a) > tol * (1.0 + frob(a)):
        raise NotHermitian(f"{what} is not hermitian within {tol}")
    # symmetrize so downstream eigh sees an exactly hermitian argument
    return 0.5 * (a + dag(a))


def kron(a: Array, b: Array) -> Array:
    """Kronecker product, (A ⊗ B)[(i,k),(j,l)] = A[i,j] B[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(x: Array, dims: tuple[int, int], which: int) -> Array:
    """Trace out factor ``which`` (1 or 2) of an operator on C^d1 ⊗ C^d2."""
    d1, d2 = dims
    x = as_matrix(x)
    if x.shape != (d1 * d2, d1 * d2):
        raise ValueError(f"shape {x.shape} incompatible with dims {dims}")
    t = x.reshape(d1, d2, d1, d2)
    if which == 1:
        return np.einsum("kikj->ij", t)
    if which == 2:
        return np.einsum("ikjk->ij", t)
    raise ValueError("which must be 1 or 2")


@dataclass(frozen=True)
class HermEig:
    """Eigendecomposition of a hermitian matrix, eigenvalues ascending."""

    values: Array   # real, shape (d,)
    vectors: Array  # unitary, columns are eigenvectors

    def reconstruct(self) -> Array:
        return (self.vectors * self.values) @ dag(self.vectors)

    def function(self, f: Callable[[Array], Array]) -> Array:
        """Apply a scalar function through the spectral decomposition."""
        return (self.vectors * f(self.values)) @ dag(self.vectors)


def herm_eig(a: Array, tol: float = 1e-10) -> HermEig:
    a = require_hermitian(a, tol)
    values, vectors = np.linalg.eigh(a)
    return HermEig(values=values, vectors=vectors)


def eig_clusters(values: Array, scale: float | None = None) -> list[list[int]]:
    """Group sorted eigenvalues into clusters closer than 1e-8 * (1 + scale).

    ``scale`` defaults to the largest eigenvalue magnitude.  Returns index
    lists into ``values`` (which must be ascending, as from herm_eig).
    """
    values = np.asarray(values, dtype=float)
    if scale is None:
        scale = float(np.max(np.abs(values))) if values.size else 0.0
    gap = 1e-8 * (1.0 + scale)
    clusters: list[list[int]] = []
    for i in range(values.size):
        if clusters and values[i] - values[clusters[-1][-1]] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def spectral_projections(a: Array, tol: float = 1e-10) -> list[tuple[float, Array]]:
    """Orthogonal projections onto the eigenspaces of a hermitian matrix.

    Returns (eigenvalue, projection) pairs; degenerate eigenvalues are merged
    by eig_clusters, each reported eigenvalue is the cluster mean.
    """
    eig = herm_eig(a, tol)
    out = []
    for cluster in eig_clusters(eig.values):
        vecs = eig.vectors[:, cluster]
        out.append((float(np.mean(eig.values[cluster])), vecs @ dag(vecs)))
    return out


def check_projection_family(projections: Sequence[Array], tol: float = 1e-10) -> None:
    """Require pairwise orthogonal hermitian projections summing to 1."""
    d = as_matrix(projections[0]).shape[0]
    total = np.zeros((d, d), dtype=complex)
    for i, p in enumerate(projections):
        p = as_matrix(p)
        if frob(p @ p - p) > tol * (1 + frob(p)) or herm_residual(p) > tol * (1 + frob(p)):
            raise NotOrthogonal(f"element {i} is not an orthogonal projection")
        for q in projections[i + 1:]:
            if frob(p @ as_matrix(q)) > tol:
                raise NotOrthogonal("projections are not mutually orthogonal")
        total += p
    if frob(total - np.eye(d)) > tol * d:
        raise NotOrthogonal("projections do not resolve the identity")


def expm(a: Array) -> Array:
    """Matrix exponential.

    Hermitian and skew-hermitian arguments go through an eigendecomposition
    (cheaper and exactly unitary for skew-hermitian input); everything else
    falls back to scipy's Pade-based expm.
    """
    a = as_matrix(a)
    scale = 1.0 + frob(a)
    if herm_residual(a) <= 1e-13 * scale:
        eig = herm_eig(0.5 * (a + dag(a)), tol=1e-12)
        return eig.function(np.exp)
    if frob(a + dag(a)) <= 1e-13 * scale:
        eig = herm_eig(-0.5j * (a - dag(a)), tol=1e-12)
        return eig.function(lambda x: np.exp(1j * x))
    return scipy.linalg.expm(a)


def expm_herm(h: Array, factor: complex) -> Array:
    """e^{factor * H} for hermitian H through the spectral decomposition."""
    eig = herm_eig(h)
    return eig.function(lambda x: np.exp(factor * x))


def vectorize(a: Array) -> Array:
    return np.asarray(a, dtype=complex).reshape(-1)


def devectorize(v: Array, shape: tuple[int, int] | None = None) -> Array:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if shape is None:
        d = int(round(np.sqrt(v.size)))
        if d * d != v.size:
            raise ValueError(f"length {v.size} is not a perfect square")
        shape = (d, d)
    return v.reshape(shape)


def basis_matrix(d: int, i: int, j: int) -> Array:
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def left_mult(x: Array) -> Array:
    """Superoperator matrix of A -> X A (row-major vec)."""
    x = as_matrix(x)
    return kron(x, np.eye(x.shape[1]))


def right_mult(y: Array) -> Array:
    """Superoperator matrix of A -> A Y (row-major vec)."""
    y = as_matrix(y)
    return kron(np.eye(y.shape[0]), y.T)


def sandwich(x: Array, y: Array) -> Array:
    """Superoperator matrix of A -> X A Y (row-major vec)."""
    return kron(as_matrix(x), as_matrix(y).T)


@dataclass(frozen=True)
class Superoperator:
    """Linear map on d x d matrices stored as a d^2 x d^2 matrix."""

    dim: int
    matrix: Array

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (self.dim ** 2, self.dim ** 2):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.dim}")
        object.__setattr__(self, "matrix", m)

    def apply(self, a: Array) -> Array:
        return devectorize(self.matrix @ vectorize(a), (self.dim, self.dim))

    def compose(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix @ other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix + other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix - other.matrix)

    def __mul__(self, c: complex) -> "Superoperator":
        return Superoperator(self.dim, c * self.matrix)

    __rmul__ = __mul__

    def norm(self) -> float:
        return frob(self.matrix)

    def adjoint_hs(self) -> "Superoperator":
        """Adjoint with respect to the Hilbert-Schmidt pairing Tr(B* A)."""
        return Superoperator(self.dim, dag(self.matrix))

    def predual(self) -> "Superoperator":
        """The map on states: Tr(predual(rho) A) = Tr(rho self(A))."""
        d = self.dim
        t = self.matrix.reshape(d, d, d, d)
        return Superoperator(d, t.transpose(3, 2, 1, 0).reshape(d * d, d * d))


def superop_of_map(fn: Callable[[Array], Array], dim: int) -> Superoperator:
    """Build the matrix of a map from its action on the matrix units."""
    cols = np.empty((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            cols[:, i * dim + j] = vectorize(fn(basis_matrix(dim, i, j)))
    return Superoperator(dim, cols)


def identity_superop(dim: int) -> Superoperator:
    return Superoperator(dim, np.eye(dim * dim, dtype=complex))


def commutator_superop(k: Array) -> Superoperator:
    """The derivation A -> i[K, A] for hermitian K."""
    k = require_hermitian(k, what="generator of the derivation")
    return Superoperator(k.shape[0], 1j * (left_mult(k) - right_mult(k)))


def haar_unitary(d: int, rng: np.random.Generator) -> Array:
    """Haar-distributed unitary via QR of a Ginibre matrix."""
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> Array:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (z + dag(z))


def fix_phase(block: Array) -> Array:
    """Rotate a matrix by a global phase so its largest entry is real positive.

    Ties resolve to the first entry in row-major order (np.argmax).  Zero
    matrices are returned unchanged.
    """
    b = np.asarray(block, dtype=complex)
    idx = np.unravel_index(int(np.argmax(np.abs(b))), b.shape)
    pivot = b[idx]
    if abs(pivot) == 0.0:
        return b
    return b * (np.conj(pivot) / abs(pivot))
