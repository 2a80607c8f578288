"""Small systems coupled to structured reservoirs near their Bohr frequencies.

A SpectralCouplingModel carries one coupling window per Bohr frequency of
the system Hamiltonian K: an interval around omega together with a sampled
matrix-valued profile v(x).  From that data the module assembles the Davies
generator (jump blocks at the resonant energies plus the full second-order
level shift, counter-resonant principal values included), builds thermal
couplings whose positive and negative branches balance at inverse
temperature beta, certifies the balance through cell-indicator residuals
and two-point trace identities, constructs the antiunitary reservoir
conjugation, and runs compressed weak-coupling experiments on truncated
Fock spaces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .cpmap import CpMapData
from .friedrichs_wcl import GridTooCoarse, _check_ladder, _pv_integral
from .invariance_dbc import AntiunitaryMap, JumpEnergy, SmallSystem, \
    covariance_residual, small_system
from .langevin_fock import DIM_CAP, build_fock
from .lindblad import LindbladData, build_generator, evolve
from .matrixcore import Array, Superoperator, as_matrix, basis_matrix, dag, \
    expm_herm, frob


class OrientationUnresolvable(ValueError):
    """Neither index orientation of the jump blocks satisfies covariance."""


class NotThermal(ValueError):
    """Coupling data do not satisfy the thermal balance condition."""


class BetaNonPositive(ValueError):
    """Inverse temperature must be positive."""


VFun = Callable[[float], Array]


# ---------------------------------------------------------------------------
# model data

@dataclass(frozen=True)
class BohrWindow:
    """Energy interval (a, b) around one Bohr frequency omega with a sampled
    coupling profile x -> array of shape (h_dim, d, d)."""

    omega: float
    a: float
    b: float
    h_dim: int
    vfun: VFun = field(repr=False)


def _sample_v(win: BohrWindow, x: float, d: int) -> Array:
    v = np.asarray(win.vfun(float(x)), dtype=complex)
    if v.shape != (win.h_dim, d, d):
        raise ValueError(
            "coupling at x=%g has shape %r, expected (%d, %d, %d)"
            % (x, v.shape, win.h_dim, d, d))
    if not np.all(np.isfinite(v)):
        raise ValueError("coupling not finite at x=%g" % x)
    return v


@dataclass(frozen=True)
class SpectralCouplingModel:
    sys: SmallSystem
    bohr: tuple[BohrWindow, ...]
    beta: float | None = None

    def __post_init__(self):
        sys = self.sys
        if not isinstance(sys, SmallSystem):
            sys = small_system(as_matrix(sys))
        windows = tuple(self.bohr)
        freqs = sys.bohr_frequencies()
        for win in windows:
            if not (win.a < win.omega < win.b):
                raise ValueError("omega=%g not interior to (%g, %g)"
                                 % (win.omega, win.a, win.b))
            if win.h_dim < 1:
                raise ValueError("window multiplicity must be >= 1")
            tol = 1e-9 * (1.0 + abs(win.omega))
            if min(abs(win.omega - w) for w in freqs) > tol:
                raise ValueError("window frequency %g is not a Bohr frequency"
                                 % win.omega)
            for w in freqs:
                if abs(w - win.omega) <= 1e-9 * (1.0 + abs(w)):
                    continue
                margin = 1e-9 * (1.0 + abs(w))
                if win.a - margin < w < win.b + margin:
                    raise ValueError(
                        "window (%g, %g) around omega=%g also covers the "
                        "Bohr frequency %g; shrink it" %
                        (win.a, win.b, win.omega, w))
            _sample_v(win, win.omega, sys.dim)
        by_left = sorted(windows, key=lambda w: w.a)
        for prev, nxt in zip(by_left, by_left[1:]):
            if nxt.a < prev.b:
                raise ValueError("windows (%g, %g) and (%g, %g) overlap"
                                 % (prev.a, prev.b, nxt.a, nxt.b))
        if self.beta is not None:
            if math.isnan(self.beta) or self.beta <= 0:
                raise BetaNonPositive("beta must be positive, got %r" % self.beta)
        object.__setattr__(self, "sys", sys)
        object.__setattr__(self, "bohr", windows)

    @property
    def dim(self) -> int:
        return self.sys.dim


def bohr_frequencies(sys) -> list[float]:
    """Sorted distinct eigenvalue differences of K, zero included."""
    if not isinstance(sys, SmallSystem):
        sys = small_system(as_matrix(sys))
    return list(sys.bohr_frequencies())


# ---------------------------------------------------------------------------
# Davies generator

@dataclass(frozen=True)
class DaviesData:
    """Weak-coupling-limit generator data for one spectral coupling model.

    orientation records which index order of the jump blocks satisfied the
    covariance identity nu K = (K x 1 + 1 x Y) nu with Y = omega per block.
    """

    upsilon: Array
    nu: CpMapData
    y: JumpEnergy
    m: Superoperator
    lind: LindbladData
    orientation: str

    def evolve(self, t: float, a_obs: Array) -> Array:
        return evolve(self.lind, t).apply(a_obs)


def _moment(w_of, omega: float, a: float, b: float, n: int) -> Array:
    """Integral of W(x)/(x - omega) over (a, b); principal value when the
    pole is interior.  Even midpoint counts keep the pole off the grid."""
    n = max(n + (n % 2), 16)
    if a < omega < b:
        return _pv_integral(w_of, omega, a, b, n)
    h = (b - a) / n
    xs = a + h * (np.arange(n) + 0.5)
    acc = w_of(xs[0]) * 0.0
    for x in xs:
        acc = acc + w_of(x) / (x - omega)
    return h * acc


def _moment_checked(w_of, omega: float, a: float, b: float, quad_n: int) -> Array:
    half = _moment(w_of, omega, a, b, max(quad_n // 2, 8))
    full = _moment(w_of, omega, a, b, max(quad_n, 16))
    if frob(full - half) > 1e-4 * (1.0 + frob(full)):
        raise GridTooCoarse(
            "level-shift quadrature still moving between %d and %d points "
            "near omega=%g; raise quad_n or smooth the profile"
            % (max(quad_n // 2, 8), max(quad_n, 16), omega))
    return full


def _level_lookup(projs, value: float):
    for lam, proj in projs:
        if abs(lam - value) <= 1e-8 * (1.0 + abs(value)):
            return proj
    return None


def davies_generator(model: SpectralCouplingModel, quad_n: int = 4000,
                     orient_tol: float = 1e-6) -> DaviesData:
    """Jump blocks, level shift and Markov generator of the reduced limit.

    The level shift sums over every Bohr frequency and every window: each
    sector omega collects -PV int W(x)/(x-omega) from all windows plus the
    on-shell -i pi W(omega) from the window containing omega.  Leaving the
    counter-resonant principal values out would bias coherence evolution at
    order one in the rescaled time, so they are not optional.
    """
    d = model.dim
    projs = model.sys.projections
    k = model.sys.k
    freqs = model.sys.bohr_frequencies()

    # snap each window to the exact Bohr frequency it was validated against,
    # otherwise 1e-9 slop in a user-supplied omega leaks into the identities
    snapped = {win: min(freqs, key=lambda w: abs(w - win.omega))
               for win in model.bohr}
    samples = {win: _sample_v(win, snapped[win], d) for win in model.bohr}
    vmax = max((frob(v) for v in samples.values()), default=0.0)

    lower: list[Array] = []
    raised: list[Array] = []
    energies: list[float] = []
    for win in model.bohr:
        v = samples[win]
        for s in range(win.h_dim):
            down = np.zeros((d, d), dtype=complex)
            up = np.zeros((d, d), dtype=complex)
            for ka, pa in projs:
                pb = _level_lookup(projs, ka - snapped[win])
                if pb is None:
                    continue
                down += pb @ v[s] @ pa
                up += pa @ v[s] @ pb
            keep = math.sqrt(2.0 * math.pi)
            if frob(down) > 1e-14 * (1.0 + vmax) or frob(up) > 1e-14 * (1.0 + vmax):
                lower.append(keep * down)
                raised.append(keep * up)
                energies.append(snapped[win])
    if not energies:
        lower = [np.zeros((d, d), dtype=complex)]
        raised = [np.zeros((d, d), dtype=complex)]
        energies = [0.0]
    y_mat = np.diag(energies).astype(complex)
    bmax = max(max(frob(b) for b in lower), max(frob(b) for b in raised))
    scale = (1.0 + frob(k)) * (1.0 + bmax)
    res_lower = covariance_residual(CpMapData(blocks=tuple(lower)), k, y_mat)
    res_raised = covariance_residual(CpMapData(blocks=tuple(raised)), k, y_mat)
    if res_lower <= orient_tol * scale:
        blocks, orientation, cov_res = tuple(lower), "lower", res_lower
    elif res_raised <= orient_tol * scale:
        blocks, orientation, cov_res = tuple(raised), "raise", res_raised
    else:
        raise OrientationUnresolvable(
            "covariance fails both ways: lowering residual %.3e, raising "
            "residual %.3e (tolerance %.3e)"
            % (res_lower, res_raised, orient_tol * scale))

    ups = np.zeros((d, d), dtype=complex)
    for omega in model.sys.bohr_frequencies():
        for ka, pa in projs:
            pb = _level_lookup(projs, ka - omega)
            if pb is None:
                continue
            shift = np.zeros((d, d), dtype=complex)
            onshell = np.zeros((d, d), dtype=complex)
            for win in model.bohr:
                def w_of(x, win=win, pb=pb):
                    v = _sample_v(win, x, d)
                    acc = np.zeros((d, d), dtype=complex)
                    for s in range(win.h_dim):
                        acc += dag(v[s]) @ pb @ v[s]
                    return acc
                shift = shift + _moment_checked(w_of, omega, win.a, win.b, quad_n)
                if win.a < omega < win.b:
                    onshell = onshell + math.pi * w_of(omega)
            ups = ups + pa @ (-shift - 1j * onshell) @ pa

    nu = CpMapData(blocks=blocks)
    theta = -0.5 * (ups + dag(ups))
    delta = 0.5j * (ups - dag(ups))
    lind = LindbladData(theta=theta, delta=delta, nu=blocks)
    guard = 1e-10 * (1.0 + frob(ups) + bmax ** 2) * (1.0 + frob(k))
    gap = frob(-1j * ups + 1j * dag(ups) + sum(dag(b) @ b for b in blocks))
    if gap > guard:
        raise ValueError("dissipative part does not match the jump blocks: "
                         "%.3e" % gap)
    if frob(ups @ k - k @ ups) > guard:
        raise ValueError("level shift fails to commute with K")
    if lind.markov_defect() > guard:
        raise ValueError("assembled generator is not Markov: %.3e"
                         % lind.markov_defect())
    return DaviesData(upsilon=ups, nu=nu,
                      y=JumpEnergy(y=y_mat, residual=float(cov_res)),
                      m=build_generator(lind), lind=lind,
                      orientation=orientation)


# ---------------------------------------------------------------------------
# thermal couplings

def make_thermal_coupling(sys, windows: Sequence[BohrWindow],
                          beta: float) -> SpectralCouplingModel:
    """Pair each positive-energy window with its mirror so the coupling is
    thermal at inverse temperature beta.

    The positive branch is reweighted by sqrt(1 + n_beta(x)) and the mirror
    window on (-b, -a) carries sqrt(n_beta(-x)) times the adjoint profile;
    the identity n = e^{-beta x}(1 + n) then makes the balance condition
    exact cell by cell.  beta = inf is the vacuum flag: the negative branch
    disappears and the positive branch keeps weight one.
    """
    if not isinstance(sys, SmallSystem):
        sys = small_system(as_matrix(sys))
    if beta is None or math.isnan(beta) or beta <= 0:
        raise BetaNonPositive("thermal coupling needs beta > 0, got %r" % beta)
    vacuum = math.isinf(beta)
    out: list[BohrWindow] = []
    for win in windows:
        if win.omega <= 0 or win.a <= 0:
            raise ValueError("base windows must sit at positive energies")

        def v_plus(x, base=win.vfun, beta=beta):
            occ = 0.0 if math.isinf(beta) else 1.0 / math.expm1(beta * x)
            return math.sqrt(1.0 + occ) * np.asarray(base(x), dtype=complex)

        out.append(BohrWindow(omega=win.omega, a=win.a, b=win.b,
                              h_dim=win.h_dim, vfun=v_plus))
        if not vacuum:
            def v_minus(x, base=win.vfun, beta=beta):
                occ = 1.0 / math.expm1(beta * (-x))
                arr = np.asarray(base(-x), dtype=complex)
                return math.sqrt(occ) * np.conj(np.swapaxes(arr, 1, 2))

            out.append(BohrWindow(omega=-win.omega, a=-win.b, b=-win.a,
                                  h_dim=win.h_dim, vfun=v_minus))
    return SpectralCouplingModel(sys=sys, bohr=tuple(out), beta=float(beta))


def _window_cells(model: SpectralCouplingModel, n_cells: int):
    """Midpoint cells (x, weight, stacked profile) over every window."""
    cells = []
    for win in model.bohr:
        h = (win.b - win.a) / n_cells
        for i in range(n_cells):
            x = win.a + h * (i + 0.5)
            cells.append((x, h, _sample_v(win, x, model.dim)))
    return cells


def _exp_factor(beta: float, x: float) -> float:
    arg = -beta * x
    if arg > 700.0:
        return math.inf
    return math.exp(arg)


def _required_beta(model: SpectralCouplingModel, beta) -> float:
    if beta is None:
        beta = model.beta
    if beta is None:
        raise ValueError("no inverse temperature given and the model has none")
    if math.isnan(beta) or beta <= 0:
        raise BetaNonPositive("beta must be positive, got %r" % beta)
    return float(beta)


def thermal_condition_residual(model: SpectralCouplingModel, beta=None,
                               n_cells: int = 8) -> float:
    """Worst defect of the balance condition over cell indicators.

    For the indicator f of a cell at energy x the condition compares the
    reflected-cell quadratic form sum w' V' A V'* against
    w e^{-beta x} V* A V; thermal couplings built by make_thermal_coupling
    satisfy it to rounding, a vacuum coupling at finite beta fails on the
    positive cells.
    """
    beta = _required_beta(model, beta)
    d = model.dim
    cells = _window_cells(model, n_cells)
    worst = 0.0
    units = [basis_matrix(d, i, j) for i in range(d) for j in range(d)]
    for x, w, v in cells:
        mirrored = [(x2, w2, v2) for (x2, w2, v2) in cells
                    if x - 0.5 * w <= -x2 < x + 0.5 * w]
        fac = _exp_factor(beta, x)
        for unit in units:
            lhs = np.zeros((d, d), dtype=complex)
            for _, w2, v2 in mirrored:
                for s in range(v2.shape[0]):
                    lhs += w2 * (v2[s] @ unit @ dag(v2[s]))
            rhs = np.zeros((d, d), dtype=complex)
            for s in range(v.shape[0]):
                rhs += dag(v[s]) @ unit @ v[s]
            if fac == math.inf:
                defect = math.inf if frob(rhs) > 0 else frob(lhs)
            else:
                defect = frob(lhs - w * fac * rhs)
            worst = max(worst, float(defect))
    return worst


def reservoir_conjugation(model: SpectralCouplingModel, beta=None,
                          n_cells: int = 8,
                          tol: float = 1e-8) -> AntiunitaryMap:
    """Antiunitary conjugation on the occupied reservoir cells.

    Restricted to the cells the coupling actually reaches, the map sends
    the mode at energy x to its mirror at -x with a phase chosen so that
    sqrt(w) V = sqrt(w') e^{-beta x'/2} U conj-transpose(V') holds; that is
    the coefficient form of the defining pairing identity.  Squaring to the
    identity and flipping the restricted energy follow when the coupling is
    genuinely thermal, and both residuals are reported.
    """
    beta = _required_beta(model, beta)
    balance = thermal_condition_residual(model, beta, n_cells)
    if balance > 1e-8:
        raise NotThermal("balance residual %.3e; conjugation undefined"
                         % balance)
    modes = []
    for x, w, v in _window_cells(model, n_cells):
        for s in range(v.shape[0]):
            modes.append((x, w, s, v[s]))
    vscale = max((frob(v) for _, _, _, v in modes), default=0.0)
    occupied = [i for i, (_, _, _, v) in enumerate(modes)
                if frob(v) > 1e-12 * (1.0 + vscale)]
    if not occupied:
        return AntiunitaryMap(u_eps=np.zeros((0, 0), dtype=complex),
                              beta=beta, intertwining_residual=0.0,
                              involution_residual=0.0, y_flip_residual=0.0,
                              conditioning=1.0)
    restricted = {g: r for r, g in enumerate(occupied)}
    n_r = len(occupied)
    partner = {}
    for g in occupied:
        x, w, s, _ = modes[g]
        hits = [g2 for g2 in occupied
                if modes[g2][2] == s
                and x - 0.5 * w <= -modes[g2][0] < x + 0.5 * w]
        if len(hits) != 1:
            raise NotThermal(
                "occupied cell at energy %g has %d mirror candidates"
                % (x, len(hits)))
        partner[g] = hits[0]
    if any(partner[partner[g]] != g for g in occupied):
        raise NotThermal("mirror pairing is not an involution")

    u = np.zeros((n_r, n_r), dtype=complex)
    worst_coeff = 0.0
    for g in occupied:
        x, w, s, v = modes[g]
        xq, wq, _, vq = modes[partner[g]]
        coeff = math.sqrt(wq / w) * _exp_factor(beta, -0.5 * x)
        target = coeff * dag(vq)
        inner = np.vdot(target, v)
        if abs(inner) <= 1e-14 * (1.0 + frob(target) * frob(v)):
            raise NotThermal("phase of the conjugation is undetermined at "
                             "energy %g" % x)
        theta = inner / abs(inner)
        worst_coeff = max(worst_coeff, frob(v - theta * target))
        u[restricted[partner[g]], restricted[g]] = theta
    if worst_coeff > tol * (1.0 + vscale):
        raise NotThermal("coefficient identity fails at %.3e" % worst_coeff)
    h_r = np.diag([modes[g][0] for g in occupied])
    inv_res = frob(u @ np.conj(u) - np.eye(n_r))
    flip_res = frob(u @ np.conj(h_r) @ np.conj(u) + h_r)
    return AntiunitaryMap(u_eps=u, beta=beta,
                          intertwining_residual=float(worst_coeff),
                          involution_residual=float(inv_res),
                          y_flip_residual=float(flip_res),
                          conditioning=1.0)


def kms_twopoint_check(model: SpectralCouplingModel, beta=None, t: float = 0.0,
                       d_ops=None, n_cells: int = 8):
    """Both trace formulas of the two-point function identity.

    lhs integrates the time-evolved correlation, rhs the analytically
    continued one; their difference vanishes exactly when the coupling is
    thermal at beta and is reported, never raised, so a vacuum model can be
    used as a control.
    """
    beta = _required_beta(model, beta)
    if math.isinf(beta):
        raise ValueError("two-point check needs finite beta")
    d = model.dim
    if d_ops is None:
        eye = np.eye(d, dtype=complex)
        d1, d1p, d2, d2p = eye, eye, eye, eye
    else:
        d1, d1p, d2, d2p = (as_matrix(x) for x in d_ops)
    k = model.sys.k
    ebk = expm_herm(k, -beta + 1j * t)
    emk = expm_herm(k, -1j * t)
    lhs = 0.0 + 0.0j
    rhs = 0.0 + 0.0j
    for x, w, v in _window_cells(model, n_cells):
        for s in range(v.shape[0]):
            vs = v[s]
            lhs += w * np.exp(-1j * t * x) * np.trace(
                ebk @ d1 @ dag(vs) @ d1p @ emk @ d2 @ vs @ d2p)
            rhs += w * np.exp((-beta + 1j * t) * x) * np.trace(
                d2 @ dag(vs) @ d2p @ ebk @ d1 @ vs @ d1p @ emk)
    return complex(lhs), complex(rhs), float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# reduced weak-coupling experiment on a truncated Fock space

def reduced_wcl_pf_experiment(model: SpectralCouplingModel,
                              lambdas: Sequence[float], t: float, a_obs,
                              n_cells: int = 8, n_max: int = 2,
                              dim_cap: int = DIM_CAP,
                              quad_n: int = 4000) -> list[dict]:
    """Compressed interaction-picture evolution against the Markov limit.

    e_lambda = || e^{itK/l^2} I* e^{-itH_l/l^2} (A x 1) e^{itH_l/l^2} I
                 e^{-itK/l^2}  -  e^{tM}(A) ||

    with H_l = K + reservoir + l * coupling on a truncated Fock space over
    the window cells.  The trend in lambda is the content; the floor is set
    by the cell count and the excitation cap, so keep tolerances loose.
    """
    lams = _check_ladder(lambdas)
    if t < 0:
        raise ValueError("t must be nonnegative")
    a_obs = as_matrix(a_obs)
    d = model.dim
    if a_obs.shape != (d, d):
        raise ValueError("observable must be %d x %d" % (d, d))
    davies = davies_generator(model, quad_n=quad_n)
    target = davies.evolve(t, a_obs)

    modes = []
    for x, w, v in _window_cells(model, n_cells):
        for s in range(v.shape[0]):
            modes.append((x, math.sqrt(w) * v[s]))
    fock = build_fock(len(modes), n_max, dim_cap)
    fdim = fock.dim
    k = model.sys.k
    i_f = sp.identity(fdim, format="csr")
    h_free = sp.kron(sp.csr_matrix(k), i_f, format="csr") + sp.kron(
        sp.identity(d), fock.dgamma(np.array([x for x, _ in modes])),
        format="csr")
    h_coupling = sp.csr_matrix((d * fdim, d * fdim), dtype=complex)
    for i, (_, b) in enumerate(modes):
        h_coupling = (h_coupling
                      + sp.kron(sp.csr_matrix(b), fock.creator(i), format="csr")
                      + sp.kron(sp.csr_matrix(dag(b)), fock.annihilator(i),
                                format="csr"))
    imat = np.zeros((d * fdim, d), dtype=complex)
    for s in range(d):
        imat[s * fdim + fock.vacuum_index, s] = 1.0
    a_full = sp.kron(sp.csr_matrix(a_obs), i_f)

    rows = []
    for lam in lams:
        tic = time.perf_counter()
        h = h_free + lam * h_coupling
        propagated = expm_multiply(1j * (t / lam ** 2) * h, imat)
        compressed = dag(propagated) @ (a_full @ propagated)
        kphase = expm_herm(k, 1j * t / lam ** 2)
        reduced = kphase @ compressed @ dag(kphase)
        rows.append({"lambda": lam,
                     "grid_n": len(modes),
                     "fock_dim": fdim,
                     "error": float(frob(reduced - target)),
                     "runtime_s": time.perf_counter() - tic})
    return rows


# ---------------------------------------------------------------------------
# reference models

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def two_level_vacuum_model(g: float = 0.1, eps: float = 1.0,
                           half_width: float = 0.5) -> SpectralCouplingModel:
    """Qubit K = diag(0, eps) with a flat coupling g sigma_x on one window
    around the transition energy; no temperature attached."""

    def vfun(x, g=g):
        return np.array([g * _SIGMA_X])

    win = BohrWindow(omega=eps, a=eps - half_width, b=eps + half_width,
                     h_dim=1, vfun=vfun)
    return SpectralCouplingModel(sys=small_system(np.diag([0.0, eps])),
                                 bohr=(win,), beta=None)


def two_level_thermal_model(g: float = 0.1, eps: float = 1.0,
                            beta: float = 1.0,
                            half_width: float = 0.45) -> SpectralCouplingModel:
    """Thermalized qubit coupling: the vacuum window plus its mirror with
    occupation weights at inverse temperature beta."""

    def vfun(x, g=g):
        return np.array([g * _SIGMA_X])

    base = BohrWindow(omega=eps, a=eps - half_width, b=eps + half_width,
                      h_dim=1, vfun=vfun)
    return make_thermal_coupling(small_system(np.diag([0.0, eps])), (base,),
                                 beta)
