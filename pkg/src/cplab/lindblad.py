"""Generators of completely positive semigroups in Lindblad form.

A generator is presented as

    M(A) = i[Theta, A] - {Delta, A} + sum_j nu_j* A nu_j

with Theta, Delta hermitian and square jump blocks nu_j, equivalently
M(A) = G A + A G* + Phi(A) with G = i Theta - Delta.  The semigroup
e^{tM} consists of unital (Markov) maps iff 2 Delta = sum_j nu_j* nu_j.

The canonical presentation (Tr Theta = 0, Tr nu_j = 0, minimal block set)
is recovered from the generator alone through the Haar twirl
T = integral of M(U*) U over the unitary group, for which a closed form in
the superoperator matrix exists; the presentation is unique up to a unitary
rotation of the blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .cpmap import CpMapData, NotMinimal, choi, dilation_equivalence
from .matrixcore import (
    Array,
    Superoperator,
    as_matrix,
    dag,
    devectorize,
    fix_phase,
    frob,
    haar_unitary,
    herm_eig,
    herm_residual,
    left_mult,
    require_hermitian,
    right_mult,
    sandwich,
)


class NotCpGenerator(ValueError):
    pass


@dataclass(frozen=True)
class LindbladData:
    """Presentation (Theta, Delta, blocks) of a Lindblad-form generator."""

    theta: Array
    delta: Array
    nu: tuple[Array, ...] = ()
    dim: int = field(init=False)

    def __post_init__(self):
        theta = require_hermitian(self.theta, what="theta")
        delta = require_hermitian(self.delta, what="delta")
        d = theta.shape[0]
        if delta.shape != (d, d):
            raise ValueError("theta and delta dimensions differ")
        nu = tuple(as_matrix(b) for b in self.nu)
        for b in nu:
            if b.shape != (d, d):
                raise ValueError("jump blocks must be square of the same dimension")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "dim", d)

    @property
    def g(self) -> Array:
        """G = i Theta - Delta, so that M(A) = G A + A G* + jump part."""
        return 1j * self.theta - self.delta

    def jump_map(self) -> CpMapData | None:
        return CpMapData(blocks=self.nu) if self.nu else None

    def apply(self, a: Array) -> Array:
        a = as_matrix(a)
        g = self.g
        out = g @ a + a @ dag(g)
        for nu in self.nu:
            out += dag(nu) @ a @ nu
        return out

    def markov_defect(self) -> float:
        """|| 2 Delta - sum_j nu_j* nu_j ||, zero for unital semigroups."""
        s = -2.0 * self.delta.astype(complex)
        for nu in self.nu:
            s += dag(nu) @ nu
        return frob(s)


def build_generator(data: LindbladData) -> Superoperator:
    d = data.dim
    g = data.g
    m = left_mult(g) + right_mult(dag(g))
    for nu in data.nu:
        m += sandwich(dag(nu), nu)
    return Superoperator(d, m)


def is_markov(data: LindbladData, tol: float = 1e-9) -> bool:
    return data.markov_defect() <= tol * (1.0 + frob(data.delta))


def evolve(obj, t: float) -> Superoperator:
    """The semigroup element e^{tM} as a superoperator."""
    m = build_generator(obj) if isinstance(obj, LindbladData) else obj
    return Superoperator(m.dim, scipy.linalg.expm(t * m.matrix))


def evolve_predual(obj, t: float) -> Superoperator:
    """e^{tM} transported to states: Tr(rho_t A) = Tr(rho e^{tM}(A))."""
    m = build_generator(obj) if isinstance(obj, LindbladData) else obj
    return Superoperator(m.dim, scipy.linalg.expm(t * m.predual().matrix))


def haar_twirl(m: Superoperator) -> Array:
    """Closed form of T = ∫ M(U*) U dU over the Haar measure.

    With S the superoperator matrix (row-major vec) the first-moment
    identity for Haar unitaries gives T[a, c] = (1/d) sum_b S[(a,b), (c,b)].
    For any presentation M(A) = G A + A G* + sum nu_j* A nu_j this equals
    G + (Tr G*/d) 1 + sum_j (Tr nu_j / d) nu_j*.
    """
    d = m.dim
    s4 = m.matrix.reshape(d, d, d, d)
    return np.einsum("abcb->ac", s4) / d


def haar_twirl_mc(m: Superoperator, n_samples: int, rng: np.random.Generator):
    """Monte-Carlo estimate of the twirl plus an aggregate standard error."""
    d = m.dim
    total = np.zeros((d, d), dtype=complex)
    total_sq = np.zeros((d, d))
    for _ in range(n_samples):
        u = haar_unitary(d, rng)
        term = m.apply(dag(u)) @ u
        total += term
        total_sq += np.abs(term) ** 2
    mean = total / n_samples
    var = total_sq / n_samples - np.abs(mean) ** 2
    stderr = float(np.sqrt(np.sum(var) / n_samples))
    return mean, stderr


def haar_average_check(m: Superoperator, n_samples: int = 10_000,
                       rng: np.random.Generator | None = None) -> dict:
    """Exact twirl, cross-checked against Monte-Carlo Haar sampling.

    Returns the closed form, the sampled estimate, the aggregate standard
    error and whether the two agree within three standard errors.
    """
    exact = haar_twirl(m)
    if rng is None:
        rng = np.random.default_rng(0)
    mc, stderr = haar_twirl_mc(m, n_samples, rng)
    deviation = frob(mc - exact)
    return {
        "exact": exact,
        "monte_carlo": mc,
        "stderr": stderr,
        "deviation": deviation,
        "ok": bool(deviation <= 3.0 * stderr + 1e-12),
    }


def shift_presentation(data: LindbladData, w) -> LindbladData:
    """Gauge move nu_j -> nu_j + w_j 1 leaving the generator invariant.

    The compensating change is G -> G - W - (|w|^2/2) 1 with
    W = sum_j w_j nu_j* built from the original blocks; Theta and Delta pick
    up the anti-hermitian and hermitian parts of W respectively.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    if w.size != len(data.nu):
        raise ValueError("one shift per block required")
    d = data.dim
    big_w = np.zeros((d, d), dtype=complex)
    for wj, nu in zip(w, data.nu):
        big_w += wj * dag(nu)
    g_new = data.g - big_w - 0.5 * float(np.sum(np.abs(w) ** 2)) * np.eye(d)
    theta = (g_new - dag(g_new)) / 2j
    delta = -(g_new + dag(g_new)) / 2.0
    blocks = tuple(nu + wj * np.eye(d) for wj, nu in zip(w, data.nu))
    return LindbladData(theta=theta, delta=delta, nu=blocks)


def canonical_form(obj, cp_tol: float = 1e-8, rank_tol: float = 1e-10) -> LindbladData:
    """Canonical presentation (traceless Theta, traceless independent blocks).

    Works from the generator alone: the Haar twirl determines
    G = T - (Tr T / 2d) 1 for the canonical presentation, the remainder
    Phi = M - (G . + . G*) must be completely positive (otherwise
    NotCpGenerator), and its Choi eigenvectors give the blocks.  A final
    exact gauge shift removes the residual block traces and each block's
    global phase is fixed.
    """
    m = build_generator(obj) if isinstance(obj, LindbladData) else obj
    d = m.dim
    t = haar_twirl(m)
    g0 = t - (np.trace(t) / (2 * d)) * np.eye(d)
    phi = Superoperator(d, m.matrix - left_mult(g0) - right_mult(dag(g0)))
    c = choi(phi)
    scale = frob(c)
    if herm_residual(c) > cp_tol * (1.0 + scale):
        raise NotCpGenerator("dissipative remainder is not hermiticity preserving")
    blocks: list[Array] = []
    if scale > 1e-12 * (1.0 + m.norm()):  # otherwise: pure-Hamiltonian roundoff
        eig = herm_eig(0.5 * (c + dag(c)), tol=cp_tol * (1.0 + scale))
        if eig.values.min() < -cp_tol * scale:
            raise NotCpGenerator(
                f"dissipative remainder has Choi eigenvalue {eig.values.min():.3e}")
        for idx in np.argsort(eig.values)[::-1]:
            lam = eig.values[idx]
            if lam <= rank_tol * scale:
                break
            vec = eig.vectors[:, idx]
            blocks.append(np.sqrt(lam) * np.conj(devectorize(vec, (d, d))))
    theta = (g0 - dag(g0)) / 2j
    delta = -(g0 + dag(g0)) / 2.0
    raw = LindbladData(theta=theta, delta=delta, nu=tuple(blocks))
    if blocks:
        w = np.array([-np.trace(b) / d for b in blocks])
        raw = shift_presentation(raw, w)
    theta = raw.theta - (np.trace(raw.theta) / d).real * np.eye(d)  # roundoff only
    return LindbladData(theta=theta, delta=raw.delta,
                        nu=tuple(fix_phase(b) for b in raw.nu))


def split_hamiltonian_dissipative(obj) -> tuple[Array, Superoperator]:
    """Split M = i[Theta, .] + M_d with the canonical (traceless) Theta."""
    m = build_generator(obj) if isinstance(obj, LindbladData) else obj
    data = canonical_form(m)
    deriv = Superoperator(m.dim, 1j * (left_mult(data.theta) - right_mult(data.theta)))
    return data.theta, m - deriv


def canonical_equivalence(a: LindbladData, b: LindbladData, tol: float = 1e-8) -> Array:
    """Unitary rotation linking the blocks of two canonical presentations."""
    ja, jb = a.jump_map(), b.jump_map()
    if ja is None or jb is None:
        raise NotMinimal("no jump blocks to rotate")
    return dilation_equivalence(ja, jb, tol=tol)


def presentation_distance(a: LindbladData, b: LindbladData) -> float:
    """Distance of the generated superoperators (presentation independent)."""
    return (build_generator(a) - build_generator(b)).norm()


def random_lindblad(d: int, n_blocks: int, rng: np.random.Generator,
                    markov: bool = True, scale: float = 1.0) -> LindbladData:
    """Random Lindblad presentation, Markov by construction when asked."""
    theta = 0.5 * scale * _ginibre_herm(d, rng)
    blocks = tuple(scale * _ginibre(d, rng) / np.sqrt(d) for _ in range(n_blocks))
    if markov:
        s = np.zeros((d, d), dtype=complex)
        for nu in blocks:
            s += dag(nu) @ nu
        delta = 0.5 * s
    else:
        z = _ginibre(d, rng)
        delta = 0.25 * (scale ** 2 / d) * (z @ dag(z))  # PSD, generically not nu*nu/2
    return LindbladData(theta=theta, delta=delta, nu=blocks)


def _ginibre(d: int, rng: np.random.Generator) -> Array:
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def _ginibre_herm(d: int, rng: np.random.Generator) -> Array:
    z = _ginibre(d, rng)
    return 0.5 * (z + dag(z))
