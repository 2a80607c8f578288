"""Classical Markov generators embedded in and restricted from quantum ones.

A classical generator on n states acts on observables f in C^n as
(m f)_j = sum_k m[j, k] f_k with nonnegative off-diagonal entries and zero
row sums.  A quantum generator M that preserves the commutative algebra of
an orthogonal projection family {P_j} restricts to such an m through

    m[j, k] = Tr(P_j M(P_k)) / Tr(P_j),

and every classical m lifts back to a Markov Lindblad presentation whose
restriction is m again.
"""

from __future__ import annotations

import numpy as np

from .lindblad import LindbladData
from .matrixcore import (
    Array,
    Superoperator,
    as_matrix,
    basis_matrix,
    check_projection_family,
    dag,
    frob,
    spectral_projections,
)


class NotPreserved(ValueError):
    pass


def is_classical_generator(m, tol: float = 1e-10) -> bool:
    """Real entries, nonnegative off-diagonal rates, zero row sums."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = 1.0 + float(np.max(np.abs(m))) if m.size else 1.0
    if np.iscomplexobj(m) and float(np.max(np.abs(m.imag))) > tol * scale:
        return False
    m = m.real.astype(float)
    off = m - np.diag(np.diagonal(m))
    if off.min() < -tol * scale:
        return False
    return bool(np.max(np.abs(m.sum(axis=1))) <= tol * scale)


def classical_dbc_residual(m, p) -> float:
    """max_ij |p_i m_ij - p_j m_ji| for a probability vector p."""
    m = np.asarray(m, dtype=float)
    p = np.asarray(p, dtype=float)
    w = p[:, None] * m
    return float(np.max(np.abs(w - w.T)))


def classical_dbc_check(m, p, tol: float = 1e-10) -> bool:
    scale = 1.0 + float(np.max(np.abs(m))) if np.asarray(m).size else 1.0
    return classical_dbc_residual(m, p) <= tol * scale


def stationary_distribution(m, tol: float = 1e-9) -> Array:
    """Probability vector p with p m = 0 (stationary for the predual flow)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    # smallest singular vector of m^T, normalized to a distribution
    _, s, vt = np.linalg.svd(m.T)
    if n > 1 and s[-2] <= tol * (1 + s[0]):
        raise ValueError("stationary distribution is not unique")
    p = vt[-1]
    if abs(p.sum()) < 1e-12:
        raise ValueError("null vector has zero mass; not a distribution")
    p = p / p.sum()
    if p.min() < -tol:
        raise ValueError("stationary vector has negative entries")
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


def _resolve_projections(projections) -> list[Array]:
    if isinstance(projections, np.ndarray) and projections.ndim == 2:
        # a hermitian operator: use its spectral projections
        return [p for _, p in spectral_projections(projections)]
    return [as_matrix(p) for p in projections]


def restrict_to_diagonal(m_sup: Superoperator, projections,
                         tol: float = 1e-9) -> Array:
    """Rate matrix of M on the commutative algebra of a projection family.

    Raises NotOrthogonal when the family is not an orthogonal resolution of
    the identity and NotPreserved when some M(P_k) leaks out of the span of
    the family (residual above tol relative to ||M(P_k)||).
    """
    projs = _resolve_projections(projections)
    check_projection_family(projs)
    n = len(projs)
    traces = np.array([np.trace(p).real for p in projs])
    m = np.zeros((n, n))
    for k, pk in enumerate(projs):
        image = m_sup.apply(pk)
        inside = np.zeros_like(image)
        for j, pj in enumerate(projs):
            coeff = np.trace(pj @ image) / traces[j]
            if abs(coeff.imag) > tol * (1.0 + frob(image)):
                raise NotPreserved("restriction produced complex rates")
            m[j, k] = coeff.real
            inside += coeff.real * pj
        if frob(image - inside) > tol * (1.0 + frob(image)):
            raise NotPreserved(
                f"M(P_{k}) leaks out of the projection algebra by "
                f"{frob(image - inside):.3e}")
    return m


def lift_classical(m, theta=None, basis: Array | None = None) -> LindbladData:
    """Markov Lindblad presentation restricting to the classical generator m.

    Jump blocks sqrt(m_ij) E_ji for each positive off-diagonal rate,
    Delta = -1/2 diag(m_jj) (positive since diagonal rates are negative),
    plus an optional commuting Hamiltonian diag(theta).  With ``basis`` a
    unitary u, everything is conjugated so the projections become
    u e_j e_j* u*.
    """
    m = np.asarray(m, dtype=float)
    if not is_classical_generator(m):
        raise ValueError("not a classical generator (signs or row sums)")
    n = m.shape[0]
    blocks = []
    for i in range(n):
        for j in range(n):
            if i != j and m[i, j] > 0.0:
                blocks.append(np.sqrt(m[i, j]) * basis_matrix(n, j, i))
    delta = -0.5 * np.diag(np.diagonal(m)).astype(complex)
    th = np.zeros((n, n), dtype=complex) if theta is None else np.diag(
        np.asarray(theta, dtype=float)).astype(complex)
    if basis is not None:
        u = as_matrix(basis)
        th = u @ th @ dag(u)
        delta = u @ delta @ dag(u)
        blocks = [u @ b @ dag(u) for b in blocks]
    return LindbladData(theta=th, delta=delta, nu=tuple(blocks))


def lift_projections(n: int, basis: Array | None = None) -> list[Array]:
    """The projection family used by lift_classical."""
    projs = [basis_matrix(n, j, j) for j in range(n)]
    if basis is not None:
        u = as_matrix(basis)
        projs = [u @ p @ dag(u) for p in projs]
    return projs


def random_reversible(n: int, rng: np.random.Generator):
    """Random irreducible classical generator with detailed balance.

    Returns (m, p): rates m and their reversible stationary distribution,
    built from a symmetric conductance matrix s through m_ij = s_ij / p_i.
    """
    p = rng.uniform(0.2, 1.0, size=n)
    p = p / p.sum()
    s = rng.uniform(0.1, 1.0, size=(n, n))
    s = 0.5 * (s + s.T)
    m = s / p[:, None]
    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, -m.sum(axis=1))
    return m, p
