"""Energy covariance, detailed balance, and the antiunitary block conjugation.

The module certifies three layers of structure for a Markov generator M on a
small system with hamiltonian K:

* K-invariance, tested through the superoperator commutator with the
  derivation D(A) = i[K, A];
* the jump-energy operator Y on the block index space, characterized by
  nu K = (K ⊗ 1 + 1 ⊗ Y) nu and solved by hermitian least squares;
* detailed balance with respect to a faithful state rho, under both the
  symmetrized inner product Tr(rho^{1/2} A* rho^{1/2} B) and the
  unsymmetrized one Tr(rho A* B);
* the quadratic balance condition linking the jump blocks to e^{-beta Y},
  and the antiunitary eps with eps^2 = 1, eps Y eps = -Y implementing the
  linear balance identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpmap import CpMapData, NotEquivalent, NotMinimal, dilation_equivalence
from .lindblad import LindbladData, build_generator, split_hamiltonian_dissipative
from .matrixcore import (
    Array,
    HermEig,
    as_matrix,
    basis_matrix,
    commutator_superop,
    dag,
    eig_clusters,
    expm_herm,
    frob,
    herm_eig,
    kron,
    require_hermitian,
    vectorize,
)


class NoSolution(ValueError):
    pass


class BalanceViolated(ValueError):
    pass


@dataclass(frozen=True)
class SmallSystem:
    """A hermitian K together with its eigenvalues and spectral projections."""

    k: Array
    eig: HermEig
    projections: tuple[tuple[float, Array], ...]

    @property
    def dim(self) -> int:
        return self.k.shape[0]

    @property
    def levels(self) -> tuple[float, ...]:
        return tuple(lam for lam, _ in self.projections)

    def bohr_frequencies(self, tol: float = 1e-10) -> tuple[float, ...]:
        """Sorted distinct differences of eigenvalues (including 0)."""
        diffs = sorted({round(a - b, 12) for a in self.levels for b in self.levels})
        out: list[float] = []
        for x in diffs:
            if not out or abs(x - out[-1]) > tol:
                out.append(float(x))
        return tuple(out)


def small_system(k: Array, tol: float = 1e-10) -> SmallSystem:
    k = require_hermitian(k, tol, what="system hamiltonian")
    eig = herm_eig(k, tol)
    pairs = []
    for cluster in eig_clusters(eig.values):
        vecs = eig.vectors[:, cluster]
        pairs.append((float(np.mean(eig.values[cluster])), vecs @ dag(vecs)))
    return SmallSystem(k=k, eig=eig, projections=tuple(pairs))


@dataclass(frozen=True)
class ThermalState:
    beta: float
    rho: Array

    def __post_init__(self):
        rho = require_hermitian(self.rho, what="state")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise ValueError("state must have unit trace")
        object.__setattr__(self, "rho", rho)

    def gibbs_residual(self, k: Array) -> float:
        return frob(self.rho - gibbs_state(k, self.beta).rho)


def gibbs_state(k: Array, beta: float) -> ThermalState:
    if not np.isfinite(beta):
        raise ValueError("gibbs_state needs a finite inverse temperature")
    w = expm_herm(as_matrix(k), -beta)
    return ThermalState(beta=float(beta), rho=w / np.trace(w).real)


@dataclass(frozen=True)
class JumpEnergy:
    """Hermitian Y on the block index space with nu K = (K⊗1 + 1⊗Y) nu."""

    y: Array
    residual: float


@dataclass(frozen=True)
class AntiunitaryMap:
    """w -> u_eps @ conj(w), conjugation taken in the fixed stored basis."""

    u_eps: Array
    beta: float
    intertwining_residual: float = np.nan  # linear balance identity
    involution_residual: float = np.nan  # eps^2 = 1
    y_flip_residual: float = np.nan      # eps Y eps = -Y
    conditioning: float = np.nan         # block Gram smallest/largest eigenvalue

    def apply(self, w: Array) -> Array:
        return self.u_eps @ np.conj(np.asarray(w, dtype=complex))


def is_k_invariant(m, sys, tol: float = 1e-9) -> bool:
    """True iff M commutes with the derivation D(A) = i[K, A]."""
    if isinstance(m, LindbladData):
        m = build_generator(m)
    k = sys.k if isinstance(sys, SmallSystem) else as_matrix(sys)
    der = commutator_superop(k)
    comm = m.matrix @ der.matrix - der.matrix @ m.matrix
    return bool(frob(comm) <= tol * (1.0 + m.norm()))


def _hermitian_basis(n: int) -> list[Array]:
    out = [basis_matrix(n, i, i) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            out.append(basis_matrix(n, i, j) + basis_matrix(n, j, i))
            out.append(1j * (basis_matrix(n, i, j) - basis_matrix(n, j, i)))
    return out


def covariance_residual(nu: CpMapData, k: Array, y: Array) -> float:
    """|| nu K - (K⊗1 + 1⊗Y) nu || over the stacked blocks (Frobenius)."""
    k = as_matrix(k)
    y = as_matrix(y)
    total = 0.0
    for i, block in enumerate(nu.blocks):
        lhs = block @ k - k @ block
        rhs = sum(y[i, j] * nu.blocks[j] for j in range(nu.n_blocks))
        total += frob(lhs - rhs) ** 2
    return float(np.sqrt(total))


def find_jump_energy(nu: CpMapData, sys, fail_tol: float = 1e-6) -> JumpEnergy:
    """Hermitian least-squares solve of [nu_i, K] = sum_j Y_ij nu_j.

    Requires a minimal block set (otherwise Y is not determined).  Raises
    NoSolution when the best hermitian Y leaves a residual above fail_tol
    relative to the natural scale ||K|| * max_j ||nu_j||.
    """
    k = sys.k if isinstance(sys, SmallSystem) else as_matrix(sys)
    if not nu.is_minimal():
        raise NotMinimal("jump energy needs linearly independent blocks")
    n = nu.n_blocks
    targets = [block @ k - k @ block for block in nu.blocks]
    basis = _hermitian_basis(n)
    cols = []
    for b in basis:
        stacked = np.concatenate([
            vectorize(sum(b[i, j] * nu.blocks[j] for j in range(n)))
            for i in range(n)])
        cols.append(np.concatenate([stacked.real, stacked.imag]))
    a_mat = np.stack(cols, axis=1)
    rhs = np.concatenate([vectorize(t) for t in targets])
    rhs = np.concatenate([rhs.real, rhs.imag])
    coeff, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    y = sum(c * b for c, b in zip(coeff, basis))
    y = 0.5 * (y + dag(y))  # exact hermitization of roundoff
    residual = covariance_residual(nu, k, y)
    scale = 1.0 + frob(k) * max(frob(b) for b in nu.blocks)
    if residual > fail_tol * scale:
        raise NoSolution(f"blocks are not K-covariant (residual {residual:.3e})")
    return JumpEnergy(y=y, residual=residual)


def gram_standard(rho: Array) -> Array:
    """Gram of (A|B) = Tr(rho^{1/2} A* rho^{1/2} B) over the matrix units."""
    r = _state_root(rho)
    return kron(r, r.T)


def gram_alt(rho: Array) -> Array:
    """Gram of (A|B) = Tr(rho A* B) over the matrix units."""
    rho = require_hermitian(rho, what="state")
    return kron(np.eye(rho.shape[0]), rho.T)


def _state_root(rho: Array) -> Array:
    rho = require_hermitian(rho, what="state")
    eig = herm_eig(rho)
    if eig.values.min() < 1e-12:
        raise ValueError("state is degenerate; the Gram form is singular")
    return eig.function(np.sqrt)


def dbc_residuals(m, state: ThermalState, kind: str = "standard") -> tuple[float, float]:
    """(dissipative self-adjointness, hamiltonian anti-self-adjointness).

    M is split as i[Theta,.] + M_d with the canonical Theta; the residuals
    measure G S_d - S_d* G and G S_h + S_h* G in the chosen Gram form,
    relative to the size of G S.
    """
    if isinstance(m, LindbladData):
        m = build_generator(m)
    if kind == "standard":
        g = gram_standard(state.rho)
    elif kind == "alt":
        g = gram_alt(state.rho)
    else:
        raise ValueError(f"unknown Gram kind {kind!r}")
    eig = herm_eig(state.rho)
    if eig.values.min() < 1e-12:
        raise ValueError("state is degenerate; detailed balance undefined")
    theta, m_d = split_hamiltonian_dissipative(m)
    s_d = m_d.matrix
    s_h = commutator_superop(theta).matrix
    r_d = frob(g @ s_d - dag(s_d) @ g) / (1.0 + frob(g @ s_d))
    r_h = frob(g @ s_h + dag(s_h) @ g) / (1.0 + frob(g @ s_h))
    return float(r_d), float(r_h)


def dbc_check_standard(m, state: ThermalState, tol: float = 1e-8) -> bool:
    r_d, r_h = dbc_residuals(m, state, kind="standard")
    return r_d <= tol and r_h <= tol


def dbc_check_alt(m, state: ThermalState, tol: float = 1e-8) -> bool:
    r_d, r_h = dbc_residuals(m, state, kind="alt")
    return r_d <= tol and r_h <= tol


def quadratic_balance_residual(nu: CpMapData, y: Array, beta: float) -> float:
    """max over matrix units A of the defect in the quadratic balance identity

        sum_j nu_j A nu_j*  =  sum_{ij} [e^{-beta Y}]_{ij} nu_i* A nu_j.
    """
    y = require_hermitian(as_matrix(y), what="jump energy")
    w = expm_herm(y, -beta)
    d = nu.d_in
    worst = 0.0
    for a in range(d):
        for b in range(d):
            unit = basis_matrix(d, a, b)
            lhs = sum(blk @ unit @ dag(blk) for blk in nu.blocks)
            rhs = np.zeros_like(lhs)
            for i, bi in enumerate(nu.blocks):
                for j, bj in enumerate(nu.blocks):
                    rhs += w[i, j] * (dag(bi) @ unit @ bj)
            worst = max(worst, frob(lhs - rhs))
    return float(worst)


def construct_epsilon(nu: CpMapData, y: Array, beta: float,
                      tol: float = 1e-8) -> AntiunitaryMap:
    """Antiunitary eps = U_eps . conj implementing the linear balance identity.

    Solves nu_j* = sum_l U[j, l] mu_l with mu the e^{-beta Y/2}-mixed blocks;
    the unitary exists exactly when the quadratic balance holds and the
    blocks are minimal, and then eps(w) = U* conj(w) satisfies the linear
    balance identity together with eps^2 = 1 and eps Y eps = -Y.
    """
    if not nu.is_minimal():
        raise NotMinimal("epsilon construction needs a minimal block set")
    y = require_hermitian(as_matrix(y), what="jump energy")
    scale = 1.0 + sum(frob(b) ** 2 for b in nu.blocks)
    balance = quadratic_balance_residual(nu, y, beta)
    if balance > tol * scale:
        raise BalanceViolated(
            f"quadratic balance residual {balance:.3e} exceeds {tol:.0e}")
    half = expm_herm(y, -beta / 2.0)
    n = nu.n_blocks
    mixed = tuple(sum(half[i, l] * nu.blocks[l] for l in range(n)) for i in range(n))
    adjoints = tuple(dag(b) for b in nu.blocks)
    try:
        u = dilation_equivalence(CpMapData(blocks=mixed), CpMapData(blocks=adjoints),
                                 tol=max(tol, 10 * balance / scale))
    except NotEquivalent as exc:
        raise BalanceViolated(f"no unitary block rotation exists: {exc}") from exc
    u_eps = dag(u)
    inv_res = frob(u_eps @ np.conj(u_eps) - np.eye(n))
    flip_res = frob(u_eps @ np.conj(y) @ np.conj(u_eps) + y)
    m3 = half @ u_eps
    intertwine = max(
        frob(nu.blocks[j] - sum(m3[k, j] * adjoints[k] for k in range(n)))
        for j in range(n))
    gram_eigs = np.linalg.eigvalsh(nu.block_gram())
    return AntiunitaryMap(
        u_eps=u_eps, beta=float(beta),
        intertwining_residual=float(intertwine),
        involution_residual=float(inv_res), y_flip_residual=float(flip_res),
        conditioning=float(gram_eigs.min() / gram_eigs.max()))


def random_covariant_blocks(sys: SmallSystem, rng: np.random.Generator,
                            n_blocks: int = 2, thermal_beta: float | None = None):
    """Random K-covariant block sets, optionally in thermal pairs.

    Each block lives in one Bohr sector (fixed energy transfer omega), so
    Y = diag(omega_1, ..., omega_n).  With ``thermal_beta`` set, blocks come
    in pairs (sqrt(1+n_be) B, sqrt(n_be) B*) on sectors (omega, -omega),
    which satisfies the quadratic balance identity exactly.

    Returns (CpMapData, Y matrix).
    """
    levels = sys.levels
    projs = [p for _, p in sys.projections]
    d = sys.dim
    sectors: dict[float, Array] = {}
    for a, ka in enumerate(levels):
        for b, kb in enumerate(levels):
            omega = ka - kb
            if abs(omega) < 1e-12:
                continue
            block = projs[b] @ (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) @ projs[a]
            key = round(omega, 10)
            sectors[key] = sectors.get(key, 0.0) + block
    positive = sorted(k for k in sectors if k > 0)
    if not positive:
        raise ValueError("K has no positive Bohr frequency")
    blocks: list[Array] = []
    energies: list[float] = []
    if thermal_beta is None:
        keys = list(sectors)
        rng.shuffle(keys)
        for key in keys[:n_blocks]:
            blocks.append(sectors[key])
            energies.append(key)
    else:
        for key in positive[:max(1, n_blocks // 2)]:
            occupation = 1.0 / np.expm1(thermal_beta * key)
            base = sectors[key]
            blocks.append(np.sqrt(1.0 + occupation) * base)
            energies.append(key)
            blocks.append(np.sqrt(occupation) * dag(base))
            energies.append(-key)
    return CpMapData(blocks=tuple(blocks)), np.diag(energies).astype(complex)
