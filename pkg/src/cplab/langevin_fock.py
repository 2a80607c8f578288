"""Truncated Fock spaces over discretized reservoir modes and regularized
generators of quantum Langevin dynamics.

The reservoir one-particle space is a finite energy grid, copied once per
noise channel.  All operators on system x Fock are assembled sparse; only
compressed system blocks come back dense.  Truncation (total excitation cap
N_max) plus the finite grid turn the singular coupling into an ordinary
self-adjoint matrix whose unitary group can be hit with expm_multiply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .cpmap import CpMapData
from .dilation_toy import ReservoirGrid
from .invariance_dbc import SmallSystem, covariance_residual
from .lindblad import LindbladData, evolve
from .matrixcore import Array, as_matrix, dag, expm, frob, require_hermitian


class FockTooLarge(ValueError):
    """Requested truncated Fock space exceeds the dimension cap."""


class PreconditionViolated(ValueError):
    """Input data fail the jump-energy balance needed by the operation."""


DIM_CAP = 20_000


# ---------------------------------------------------------------------------
# truncated Fock space

def _occupation_basis(modes: int, n_max: int) -> list[tuple[int, ...]]:
    # lexicographic by construction: first coordinate grows outermost
    states: list[tuple[int, ...]] = []

    def rec(prefix: list[int], left: int, budget: int) -> None:
        if left == 0:
            states.append(tuple(prefix))
            return
        for n in range(budget + 1):
            prefix.append(n)
            rec(prefix, left - 1, budget - n)
            prefix.pop()

    rec([], modes, n_max)
    states.sort()
    return states


@dataclass(frozen=True)
class TruncatedFock:
    """Bosonic Fock space over `modes` one-particle states, total occupation
    capped at n_max.

    basis holds the occupation tuples in lexicographic order; the vacuum is
    index 0.  Annihilators satisfy [a_i, a_j*] = delta_ij exactly on the
    states with total occupation <= n_max - 1; rows at the cap see the
    truncation boundary and are excluded from that identity.
    """

    modes: int
    n_max: int
    basis: tuple[tuple[int, ...], ...]
    _ann: tuple[sp.csr_matrix, ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def vacuum_index(self) -> int:
        return 0

    def annihilator(self, i: int) -> sp.csr_matrix:
        return self._ann[i]

    def creator(self, i: int) -> sp.csr_matrix:
        return self._ann[i].getH()

    def dgamma(self, h: Array) -> sp.csr_matrix:
        """Second quantization of a one-particle operator on the mode space.

        Diagonal h (the only case the generators below need) stays a diagonal
        matrix; a general hermitian h falls back to sum h_ij a_i* a_j.
        """
        h = np.asarray(h)
        if h.ndim == 1:
            h = np.diag(h)
        if h.shape != (self.modes, self.modes):
            raise ValueError("one-particle operator must be modes x modes")
        diag_part = np.diag(h)
        if np.count_nonzero(h - np.diag(diag_part)) == 0:
            entries = [sum(float(np.real(diag_part[i])) * n
                           for i, n in enumerate(s) if n)
                       for s in self.basis]
            return sp.diags(entries).tocsr()
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i in range(self.modes):
            for j in range(self.modes):
                if h[i, j] != 0:
                    out = out + h[i, j] * (self._ann[i].getH() @ self._ann[j])
        return out.tocsr()

    def number(self) -> sp.csr_matrix:
        return self.dgamma(np.ones(self.modes))


def build_fock(modes: int, n_max: int, dim_cap: int = DIM_CAP) -> TruncatedFock:
    """Enumerate the occupation basis and build all annihilators in one pass."""
    if modes < 1 or n_max < 1:
        raise ValueError("need at least one mode and n_max >= 1")
    dim = math.comb(modes + n_max, n_max)
    if dim > dim_cap:
        raise FockTooLarge(
            "truncated Fock dimension %d exceeds the cap %d" % (dim, dim_cap))
    basis = _occupation_basis(modes, n_max)
    index = {s: i for i, s in enumerate(basis)}
    rows: list[list[int]] = [[] for _ in range(modes)]
    cols: list[list[int]] = [[] for _ in range(modes)]
    vals: list[list[float]] = [[] for _ in range(modes)]
    for s, j in index.items():
        for i, n in enumerate(s):
            if n:
                lowered = list(s)
                lowered[i] -= 1
                rows[i].append(index[tuple(lowered)])
                cols[i].append(j)
                vals[i].append(math.sqrt(n))
    ann = tuple(sp.csr_matrix((vals[i], (rows[i], cols[i])),
                              shape=(dim, dim), dtype=float)
                for i in range(modes))
    return TruncatedFock(modes=modes, n_max=n_max, basis=tuple(basis), _ann=ann)


# ---------------------------------------------------------------------------
# Langevin generator

@dataclass(frozen=True)
class LangevinGenerator:
    """Self-adjoint Z on system x Fock whose unitary group dilates the
    Markov semigroup generated by (upsilon, nu).

    The three summands (hermitian part of upsilon, free reservoir energy,
    smeared linear coupling) are retained for diagnostics.
    """

    upsilon: Array
    nu: tuple[Array, ...]
    grid: ReservoirGrid
    fock: TruncatedFock
    z: sp.csr_matrix = field(repr=False)
    sys_part: sp.csr_matrix = field(repr=False)
    res_part: sp.csr_matrix = field(repr=False)
    coupling_part: sp.csr_matrix = field(repr=False)

    @property
    def d(self) -> int:
        return self.upsilon.shape[0]

    @property
    def dim(self) -> int:
        return self.d * self.fock.dim


def build_langevin_Z(upsilon, nu: Sequence[Array], grid: ReservoirGrid,
                     fock: TruncatedFock) -> LangevinGenerator:
    """Assemble Z = Re(upsilon) (x) 1 + 1 (x) dGamma(energies) + coupling.

    Each noise block nu_j is smeared uniformly over its copy of the grid
    with weight sqrt(dx)/sqrt(2 pi) per mode, mode order (channel, grid
    point) with the channel index major.  That matches the one-particle
    coupling convention of dilation_toy, so the one-excitation sector of Z
    reproduces the toy dilation matrix exactly.
    """
    upsilon = as_matrix(upsilon)
    d = upsilon.shape[0]
    blocks = tuple(as_matrix(b) for b in nu)
    if any(b.shape != (d, d) for b in blocks):
        raise ValueError("noise blocks must be square and match upsilon")
    pairing = 1j * (upsilon - dag(upsilon))
    total = sum((dag(b) @ b for b in blocks), np.zeros((d, d), dtype=complex))
    if frob(pairing - total) > 1e-8 * (1.0 + frob(pairing)):
        raise ValueError("noise blocks do not reproduce the dissipative part "
                         "of upsilon: i(ups - ups*) != sum nu_j* nu_j")
    n = grid.n
    if fock.modes != len(blocks) * n:
        raise ValueError("fock has %d modes but the coupling needs %d"
                         % (fock.modes, len(blocks) * n))
    i_f = sp.identity(fock.dim, format="csr")
    i_d = sp.identity(d, format="csr")
    herm = 0.5 * (upsilon + dag(upsilon))
    sys_part = sp.kron(sp.csr_matrix(herm), i_f, format="csr")
    energies = np.tile(grid.points, len(blocks))
    res_part = sp.kron(i_d, fock.dgamma(energies), format="csr")
    weight = math.sqrt(grid.dx) / math.sqrt(2.0 * math.pi)
    coupling = sp.csr_matrix((d * fock.dim, d * fock.dim), dtype=complex)
    for j, b in enumerate(blocks):
        a_j = sum(fock.annihilator(j * n + i) for i in range(n)) * weight
        coupling = (coupling
                    + sp.kron(sp.csr_matrix(b), a_j.getH(), format="csr")
                    + sp.kron(sp.csr_matrix(dag(b)), a_j, format="csr"))
    z = (sys_part + res_part + coupling).tocsr()
    hres = sp.linalg.norm(z - z.getH(), "fro")
    if hres > 1e-12 * (1.0 + sp.linalg.norm(z, "fro")):
        raise ValueError("assembled Z lost hermiticity: residual %.3e" % hres)
    return LangevinGenerator(upsilon=upsilon, nu=blocks, grid=grid, fock=fock,
                             z=z, sys_part=sys_part, res_part=res_part,
                             coupling_part=coupling.tocsr())


def _system_embedding(gen: LangevinGenerator) -> np.ndarray:
    imat = np.zeros((gen.dim, gen.d), dtype=complex)
    for s in range(gen.d):
        imat[s * gen.fock.dim + gen.fock.vacuum_index, s] = 1.0
    return imat


def langevin_reduction_check(gen: LangevinGenerator, t: float,
                             a_obs) -> tuple[float, float]:
    """Deviation of the compressed unitary group from the Markov objects.

    err_semigroup = || I* e^{-itZ} I - e^{-it upsilon} ||
    err_cp        = || I* e^{-itZ} (A (x) 1) e^{itZ} I - e^{tM}(A) ||

    with I the vacuum-sector embedding and M the generator built from
    (upsilon, nu).  Both errors vanish with t=0 or nu=0 and shrink as the
    grid is refined.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a_obs = as_matrix(a_obs)
    if a_obs.shape != (gen.d, gen.d):
        raise ValueError("observable must match the system dimension")
    imat = _system_embedding(gen)
    propagated = expm_multiply(1j * t * gen.z, imat)  # e^{+itZ} I, columns
    vac_rows = [s * gen.fock.dim + gen.fock.vacuum_index for s in range(gen.d)]
    compressed = dag(propagated[vac_rows, :])         # I* e^{-itZ} I
    err_semigroup = frob(compressed - expm(-1j * t * gen.upsilon))
    theta = -0.5 * (gen.upsilon + dag(gen.upsilon))
    delta = 0.5j * (gen.upsilon - dag(gen.upsilon))
    markov = LindbladData(theta=theta, delta=delta, nu=gen.nu)
    a_full = sp.kron(sp.csr_matrix(a_obs), sp.identity(gen.fock.dim))
    heis = dag(propagated) @ (a_full @ propagated)    # I* e^{-itZ} A e^{itZ} I
    err_cp = frob(heis - evolve(markov, t).apply(a_obs))
    return float(err_semigroup), float(err_cp)


def one_excitation_block(gen: LangevinGenerator) -> Array:
    """Dense restriction of Z to the vacuum + single-excitation sector.

    Index order: the d vacuum states first, then modes ascending with the
    system index fastest.  For a scalar system this is exactly the toy
    dilation ordering, and the block equals build_zr(...).z entry for entry.
    """
    fdim = gen.fock.dim
    index = {s: i for i, s in enumerate(gen.fock.basis)}
    single = []
    for i in range(gen.fock.modes):
        occ = tuple(1 if k == i else 0 for k in range(gen.fock.modes))
        single.append(index[occ])
    sel = [s * fdim + gen.fock.vacuum_index for s in range(gen.d)]
    sel += [s * fdim + f for f in single for s in range(gen.d)]
    return gen.z[np.ix_(sel, sel)].toarray()


# ---------------------------------------------------------------------------
# total energy

def total_energy(sys, y, gen: LangevinGenerator,
                 tol: float = 1e-10) -> sp.csr_matrix:
    """Conserved energy K (x) 1 + 1 (x) dGamma(Y per mode).

    Requires the jump-energy balance nu K = (K (x) 1 + 1 (x) Y) nu together
    with [Re(upsilon), K] = 0; when those hold at matrix level the
    commutator with Z vanishes identically, truncation included, because
    dGamma intertwines creators sector by sector.
    """
    k = sys.k if isinstance(sys, SmallSystem) else require_hermitian(as_matrix(sys))
    h = len(gen.nu)
    y = require_hermitian(as_matrix(y), what="jump energy")
    if y.shape != (h, h):
        raise ValueError("jump energy must be %d x %d" % (h, h))
    r_cov = covariance_residual(CpMapData(blocks=gen.nu), k, y)
    herm = 0.5 * (gen.upsilon + dag(gen.upsilon))
    r_com = frob(herm @ k - k @ herm)
    scale = 1.0 + frob(k) * (1.0 + max(frob(b) for b in gen.nu))
    if max(r_cov, r_com) > tol * scale:
        raise PreconditionViolated(
            "jump-energy balance fails: covariance residual %.3e, "
            "[Re(upsilon), K] residual %.3e (tolerance %.3e)"
            % (r_cov, r_com, tol * scale))
    per_mode = np.kron(y, np.eye(gen.grid.n))
    e_res = gen.fock.dgamma(per_mode)
    i_f = sp.identity(gen.fock.dim, format="csr")
    e = sp.kron(sp.csr_matrix(k), i_f, format="csr") \
        + sp.kron(sp.identity(k.shape[0]), e_res, format="csr")
    return e.tocsr()


def commutation_residual(e: sp.spmatrix, z: sp.spmatrix) -> float:
    """Frobenius norm of [E, Z], kept sparse throughout."""
    return float(sp.linalg.norm(e @ z - z @ e, "fro"))


# ---------------------------------------------------------------------------
# reference data sets for the refinement experiments

def scalar_decay_data() -> tuple[Array, tuple[Array, ...]]:
    """One-dimensional system, pure decay: upsilon = -i/2, nu = 1."""
    return np.array([[-0.5j]]), (np.array([[1.0 + 0j]]),)


def two_level_decay_data() -> tuple[Array, tuple[Array, ...]]:
    """Qubit with a level shift on the excited state and one decay channel."""
    upsilon = np.diag([0.0, 0.2 - 0.5j])
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    return upsilon, (lower,)
