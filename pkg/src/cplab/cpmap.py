"""Completely positive maps in the Heisenberg picture.

A CP map Xi: B(C^{d_in}) -> B(C^{d_out}) is presented by blocks
nu_1, ..., nu_h, each a (d_in, d_out) matrix (a linear map
C^{d_out} -> C^{d_in}), acting on observables as

    Xi(A) = sum_j nu_j* A nu_j.

The Choi matrix lives on C^{d_in} ⊗ C^{d_out} and is assembled as
C = sum_{ij} E_ij ⊗ Xi(E_ij); for a single block nu this is the rank-one
|w><w| with w = vec(conj(nu)) = sum_i e_i ⊗ (nu* e_i).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrixcore import (
    Array,
    Superoperator,
    as_matrix,
    basis_matrix,
    dag,
    devectorize,
    fix_phase,
    frob,
    herm_eig,
    herm_residual,
    sandwich,
    vectorize,
)


class NotCompletelyPositive(ValueError):
    pass


class NotEquivalent(ValueError):
    pass


class NotMinimal(ValueError):
    pass


class SingularUnit(ValueError):
    pass


@dataclass(frozen=True)
class CpMapData:
    """Block (Kraus) presentation of a CP map in the Heisenberg picture."""

    blocks: tuple[Array, ...]
    d_in: int = field(init=False)
    d_out: int = field(init=False)

    def __post_init__(self):
        blocks = tuple(as_matrix(b) for b in self.blocks)
        if not blocks:
            raise ValueError("need at least one block")
        shape = blocks[0].shape
        for b in blocks:
            if b.shape != shape:
                raise ValueError("all blocks must share one shape")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "d_in", shape[0])
        object.__setattr__(self, "d_out", shape[1])

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def apply(self, a: Array) -> Array:
        a = as_matrix(a)
        if a.shape != (self.d_in, self.d_in):
            raise ValueError("observable has the wrong dimension")
        out = np.zeros((self.d_out, self.d_out), dtype=complex)
        for nu in self.blocks:
            out += dag(nu) @ a @ nu
        return out

    def unit_image(self) -> Array:
        """Xi(1) = sum_j nu_j* nu_j."""
        return self.apply(np.eye(self.d_in))

    def superop(self) -> Superoperator:
        if self.d_in != self.d_out:
            raise ValueError("superoperator form needs d_in == d_out")
        m = np.zeros((self.d_in ** 2,) * 2, dtype=complex)
        for nu in self.blocks:
            m += sandwich(dag(nu), nu)
        return Superoperator(self.d_in, m)

    def block_gram(self) -> Array:
        """Gram matrix G[i, j] = <vec(nu_i), vec(nu_j)> of the blocks."""
        v = np.stack([vectorize(b) for b in self.blocks])
        return np.conj(v) @ v.T

    def is_minimal(self, tol: float = 1e-10) -> bool:
        """Blocks linearly independent (full-rank Gram at relative tol)."""
        g = self.block_gram()
        scale = float(np.max(np.abs(np.diagonal(g))))
        if scale == 0.0:
            return False
        rank = int(np.linalg.matrix_rank(g, tol=tol * scale, hermitian=True))
        return rank == self.n_blocks


def choi(obj, d_in: int | None = None, d_out: int | None = None) -> Array:
    """Choi matrix C = sum_{ij} E_ij ⊗ Xi(E_ij) on C^{d_in} ⊗ C^{d_out}.

    Accepts a CpMapData (assembled from the blocks directly), a
    Superoperator, or a callable together with explicit dimensions.
    """
    if isinstance(obj, CpMapData):
        d_in, d_out = obj.d_in, obj.d_out
        c = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for nu in obj.blocks:
            w = vectorize(np.conj(nu))
            c += np.outer(w, np.conj(w))
        return c
    if isinstance(obj, Superoperator):
        fn = obj.apply
        d_in = d_out = obj.dim
    else:
        fn = obj
        if d_in is None or d_out is None:
            raise ValueError("callable maps need explicit d_in and d_out")
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            block = as_matrix(fn(basis_matrix(d_in, i, j)))
            c[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = block
    return c


def is_completely_positive(obj, tol: float = 1e-10, d_in=None, d_out=None) -> bool:
    """CP certification through the Choi matrix spectrum."""
    c = choi(obj, d_in=d_in, d_out=d_out)
    scale = 1.0 + frob(c)
    if herm_residual(c) > 1e-9 * scale:
        return False
    w = np.linalg.eigvalsh(0.5 * (c + dag(c)))
    return bool(w.min() >= -tol * scale)


def require_completely_positive(obj, tol: float = 1e-10, d_in=None, d_out=None) -> None:
    if not is_completely_positive(obj, tol=tol, d_in=d_in, d_out=d_out):
        raise NotCompletelyPositive("Choi matrix has a negative eigenvalue")


def stinespring_minimal(obj, d_in: int | None = None, d_out: int | None = None,
                        tol: float = 1e-10) -> CpMapData:
    """Minimal block presentation extracted from the Choi eigendecomposition.

    Eigenvectors with eigenvalue above tol * ||C|| become blocks
    nu = sqrt(lam) * conj(reshape(w, (d_in, d_out))), ordered by descending
    eigenvalue; each block's global phase is fixed so its largest entry is
    real positive.  Raises NotCompletelyPositive when the Choi matrix has an
    eigenvalue below -tol * ||C||.
    """
    if isinstance(obj, CpMapData):
        d_in, d_out = obj.d_in, obj.d_out
    elif isinstance(obj, Superoperator):
        d_in = d_out = obj.dim
    elif d_in is None or d_out is None:
        raise ValueError("callable maps need explicit d_in and d_out")
    c = choi(obj, d_in=d_in, d_out=d_out)
    scale = frob(c)
    if scale == 0.0:
        raise NotCompletelyPositive("zero map has no minimal presentation")
    if herm_residual(c) > 1e-9 * (1 + scale):
        raise NotCompletelyPositive("Choi matrix is not hermitian")
    eig = herm_eig(0.5 * (c + dag(c)), tol=1e-8 * (1 + scale))
    if eig.values.min() < -tol * scale:
        raise NotCompletelyPositive(
            f"Choi eigenvalue {eig.values.min():.3e} below -{tol:.0e} * ||C||")
    blocks = []
    for idx in np.argsort(eig.values)[::-1]:
        lam = eig.values[idx]
        if lam <= tol * scale:
            break
        w = eig.vectors[:, idx]
        blocks.append(fix_phase(np.sqrt(lam) * np.conj(devectorize(w, (d_in, d_out)))))
    return CpMapData(blocks=tuple(blocks))


def map_distance(a: CpMapData, b: CpMapData) -> float:
    """Frobenius distance of the Choi matrices (zero iff the maps agree)."""
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise ValueError("dimension mismatch")
    return frob(choi(a) - choi(b))


def dilation_equivalence(a: CpMapData, b: CpMapData, tol: float = 1e-8) -> Array:
    """Unitary U with b_i = sum_j U[i, j] a_j linking two minimal presentations.

    Both presentations must be minimal, share the block count and realize the
    same map; otherwise NotMinimal / NotEquivalent is raised.  U is solved by
    least squares on the vectorized blocks and then certified unitary.
    """
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise NotEquivalent("dimension mismatch")
    if not a.is_minimal() or not b.is_minimal():
        raise NotMinimal("dilation equivalence requires minimal presentations")
    if a.n_blocks != b.n_blocks:
        raise NotEquivalent("minimal presentations with different block counts")
    scale = 1.0 + frob(choi(a))
    if map_distance(a, b) > tol * scale:
        raise NotEquivalent("presentations realize different maps")
    va = np.stack([vectorize(x) for x in a.blocks])
    vb = np.stack([vectorize(x) for x in b.blocks])
    ut, *_ = np.linalg.lstsq(va.T, vb.T, rcond=None)
    u = ut.T
    n = a.n_blocks
    if frob(u @ dag(u) - np.eye(n)) > 1e-7 * (1 + n):
        raise NotEquivalent("block rotation exists but is not unitary")
    if frob(u @ va - vb) > tol * (1 + frob(vb)):
        raise NotEquivalent("no block rotation links the presentations")
    return u


def kadison_schwarz_residual(xi: CpMapData, a: Array) -> Array:
    """R = Xi(A*A) - Xi(A)* Xi(1)^{-1} Xi(A), positive semidefinite for CP Xi.

    Raises SingularUnit when Xi(1) has an eigenvalue below 1e-10.
    """
    a = as_matrix(a)
    unit = xi.unit_image()
    eig = herm_eig(unit, tol=1e-8 * (1 + frob(unit)))
    if eig.values.min() < 1e-10:
        raise SingularUnit("Xi(1) is singular; Kadison-Schwarz quotient undefined")
    unit_inv = eig.function(lambda x: 1.0 / x)
    xa = xi.apply(a)
    return xi.apply(dag(a) @ a) - dag(xa) @ unit_inv @ xa
