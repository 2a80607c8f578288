"""Resonance models with one continuum band per system level.

A finite Hamiltonian K is coupled, with strength lam, to a band of modes
around each of its eigenvalues.  Two long-time experiments probe the small
coupling regime on the van Hove time scale t/lam^2:

* reduced: the compression of the evolution to the system converges to the
  contraction semigroup generated by the complex level shift (principal
  value energy displacement plus a Fermi golden rule width),
* extended: after an energy-window isometry that zooms each band into an
  unbounded translation-covariant one, the full unitary converges to the
  minimal dilation built by dilation_toy from the same level shift.

Both experiments discretize the bands; the grids are slaved to lam so the
discretization error stays below the weak-coupling error being measured.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .dilation_toy import (ContractionGenerator, ReservoirGrid, build_zr,
                           reservoir_grid)
from .invariance_dbc import SmallSystem, small_system
from .matrixcore import Array, dag, frob


class GridTooCoarse(ValueError):
    """A quadrature self-consistency check failed; refine the grid."""


class WindowOverflow(ValueError):
    """A scaled asymptotic grid does not fit inside its energy window."""


VFun = Callable[[float], Array]


@dataclass(frozen=True)
class CouplingWindow:
    """Energy band (a, b) around the system eigenvalue k.

    vfun(x) is the coupling profile: an (h_dim, d) matrix mapping the system
    into the band's internal mode space, continuous at x = k.
    """

    k: float
    a: float
    b: float
    h_dim: int
    vfun: VFun = field(repr=False)


@dataclass(frozen=True)
class FriedrichsModel:
    """System Hamiltonian plus one coupling window per distinct eigenvalue.

    Windows are listed in ascending eigenvalue order, matching
    sys.projections.  lam is the default coupling strength used by
    build_friedrichs; the experiments sweep their own ladders.
    """

    sys: SmallSystem
    windows: tuple[CouplingWindow, ...]
    lam: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("coupling strength must be nonnegative")
        levels = [ev for ev, _ in self.sys.projections]
        if len(self.windows) != len(levels):
            raise ValueError("need exactly one coupling window per distinct "
                             "eigenvalue of the system Hamiltonian")
        for win, ev in zip(self.windows, levels):
            if abs(win.k - ev) > 1e-9 * (1.0 + abs(ev)):
                raise ValueError("window reference energy %g does not match "
                                 "the eigenvalue %g" % (win.k, ev))
            if not (win.a < win.k < win.b):
                raise ValueError("eigenvalue %g must lie strictly inside its "
                                 "window (%g, %g)" % (win.k, win.a, win.b))
            vk = _sample(win, win.k, self.dim)
            if not np.all(np.isfinite(vk)):
                raise ValueError("coupling profile must be finite at x = k")
        ordered = sorted(self.windows, key=lambda w: w.a)
        for left, right in zip(ordered, ordered[1:]):
            if right.a < left.b:
                raise ValueError("coupling windows must be disjoint")

    @property
    def dim(self) -> int:
        return self.sys.dim

    @property
    def h_dim(self) -> int:
        return sum(w.h_dim for w in self.windows)


def _sample(win: CouplingWindow, x: float, d: int) -> Array:
    vm = np.asarray(win.vfun(float(x)), dtype=complex)
    if vm.shape != (win.h_dim, d):
        raise ValueError("coupling sample at x=%g has shape %r, expected %r"
                         % (x, vm.shape, (win.h_dim, d)))
    return vm


def flat_profile(matrix) -> VFun:
    """Coupling profile constant across the window."""
    rowm = np.atleast_2d(np.asarray(matrix, dtype=complex))

    def vfun(x: float) -> Array:
        return rowm

    return vfun


def lorentzian_profile(matrix, center: float, width: float) -> VFun:
    """|v(x)|^2 falls off like width^2 / ((x-center)^2 + width^2)."""
    rowm = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if width <= 0:
        raise ValueError("width must be positive")

    def vfun(x: float) -> Array:
        return rowm * (width / np.hypot(x - center, width))

    return vfun


# ---------------------------------------------------------------------------
# shipped example models

def scalar_flat_model(g: float = 0.1, half_width: float = 1.0,
                      lam: float = 1.0) -> FriedrichsModel:
    """One level at zero, flat coupling g on (-half_width, half_width).

    The level shift is exactly -i pi g^2: the principal value part cancels
    by symmetry.
    """
    sys = small_system(np.zeros((1, 1)))
    win = CouplingWindow(k=0.0, a=-half_width, b=half_width, h_dim=1,
                         vfun=flat_profile([[g]]))
    return FriedrichsModel(sys=sys, windows=(win,), lam=lam)


def offset_flat_model(g: float = 0.1, lam: float = 1.0) -> FriedrichsModel:
    """One level at zero, flat coupling g on the lopsided window (-1, 3).

    Closed form: level shift = -g^2 ln 3 - i pi g^2.
    """
    sys = small_system(np.zeros((1, 1)))
    win = CouplingWindow(k=0.0, a=-1.0, b=3.0, h_dim=1,
                         vfun=flat_profile([[g]]))
    return FriedrichsModel(sys=sys, windows=(win,), lam=lam)


def lorentzian_model(g: float = 0.1, width: float = 0.3,
                     lam: float = 1.0) -> FriedrichsModel:
    """One level at zero with a Lorentzian profile on a symmetric window."""
    sys = small_system(np.zeros((1, 1)))
    win = CouplingWindow(k=0.0, a=-1.0, b=1.0, h_dim=1,
                         vfun=lorentzian_profile([[g]], 0.0, width))
    return FriedrichsModel(sys=sys, windows=(win,), lam=lam)


def two_band_model(g0: float = 0.1, g1: float = 0.12, g_cross: float = 0.02,
                   lam: float = 1.0) -> FriedrichsModel:
    """K = diag(0, 1) with one band per level.

    The upper band also couples weakly to the lower level, so the sector
    decoupling of the limit is demonstrated rather than built in.  Keep
    g_cross small: the off-resonant second-order shift it induces lies
    outside the per-window truncation of level_shift.
    """
    sys = small_system(np.diag([0.0, 1.0]))
    w0 = CouplingWindow(k=0.0, a=-0.45, b=0.45, h_dim=1,
                        vfun=flat_profile([[g0, 0.0]]))
    w1 = CouplingWindow(k=1.0, a=0.55, b=1.45, h_dim=1,
                        vfun=flat_profile([[g_cross, g1]]))
    return FriedrichsModel(sys=sys, windows=(w0, w1), lam=lam)


# ---------------------------------------------------------------------------
# level shift

@dataclass(frozen=True)
class LevelShift:
    """d x d complex matrix commuting with K, with dissipative sign."""

    upsilon: Array


def _pv_integral(w_of, k: float, a: float, b: float, n: int) -> Array:
    """Principal value of W(x)/(x-k) over (a, b) by symmetric subtraction.

    Midpoint rule on the regular part (W(x) - W(k))/(x - k) plus the exact
    logarithmic moment of the constant part.  A midpoint can land exactly on
    the pole for unlucky (k, a, b, n) combinations; there the regular part
    is continued by its limit, the symmetric difference quotient across the
    pole, instead of dividing zero by zero.
    """
    wk = w_of(k)
    h = (b - a) / n
    xs = a + h * (np.arange(n) + 0.5)
    acc = np.zeros_like(wk)
    for x in xs:
        gap = x - k
        if abs(gap) < 1e-9 * h:
            acc = acc + (w_of(k + 0.5 * h) - w_of(k - 0.5 * h)) / h
        else:
            acc = acc + (w_of(x) - wk) / gap
    return h * acc + wk * np.log((b - k) / (k - a))


def level_shift(model: FriedrichsModel, quad_n: int = 4000) -> LevelShift:
    """Second-order complex energy displacement of each level.

    Per eigenvalue k the block is -PV integral of (v*v)(x)/(x-k) over the
    level's own window minus i pi (v*v)(k); blocks are reassembled through
    the spectral projections, so the result commutes with K by construction.
    Couplings that link a level to another level's window shift it at second
    order too, but lie outside this truncation: keep them small when
    quantitative agreement is wanted.

    The quadrature is validated by a halving test; GridTooCoarse means the
    profile varies too fast for quad_n points.
    """
    d = model.dim
    ups = np.zeros((d, d), dtype=complex)
    for win, (_, proj) in zip(model.windows, model.sys.projections):
        def w_of(x, win=win):
            vm = _sample(win, x, d)
            return dag(vm) @ vm

        pv_half = _pv_integral(w_of, win.k, win.a, win.b, max(quad_n // 2, 8))
        pv_full = _pv_integral(w_of, win.k, win.a, win.b, max(quad_n, 16))
        if frob(pv_full - pv_half) > 1e-4 * (1.0 + frob(pv_full)):
            raise GridTooCoarse(
                "principal-value quadrature still moving between %d and %d "
                "points; raise quad_n or smooth the coupling profile"
                % (max(quad_n // 2, 8), max(quad_n, 16)))
        block = -pv_full - 1j * np.pi * w_of(win.k)
        ups = ups + proj @ block @ proj
    return LevelShift(upsilon=ups)


def asymptotic_generator(model: FriedrichsModel,
                         quad_n: int = 4000) -> ContractionGenerator:
    """Level shift packaged with its resonant noise factor.

    The noise rows freeze each window's coupling at the resonant energy and
    project onto the level: nu = sqrt(2 pi) (+) v(k) 1_k.  The factorization
    identity i(ups - ups*) = nu* nu holds exactly because the principal
    value part of the level shift is hermitian.
    """
    ups = level_shift(model, quad_n=quad_n).upsilon
    blocks = []
    for win, (_, proj) in zip(model.windows, model.sys.projections):
        vk = _sample(win, win.k, model.dim)
        blocks.append(np.sqrt(2.0 * np.pi) * (vk @ proj))
    return ContractionGenerator(upsilon=ups, nu=np.vstack(blocks))


# ---------------------------------------------------------------------------
# discretized Hamiltonians

@dataclass(frozen=True)
class _WindowGrid:
    points: Array      # k + delta*j for j in [-m_minus, m_plus]
    m_minus: int
    m_plus: int
    delta: float


def _window_grid(win: CouplingWindow, delta: float) -> _WindowGrid:
    # half-cell margin keeps every quadrature cell strictly inside (a, b)
    mm = int(np.floor((win.k - win.a) / delta - 0.5))
    mp = int(np.floor((win.b - win.k) / delta - 0.5))
    if mm < 1 or mp < 1:
        raise GridTooCoarse("window (%g, %g) holds no grid cell at spacing %g"
                            % (win.a, win.b, delta))
    points = win.k + delta * np.arange(-mm, mp + 1)
    return _WindowGrid(points=points, m_minus=mm, m_plus=mp, delta=delta)


def _assemble(model: FriedrichsModel, lam: float,
              grids: Sequence[_WindowGrid]) -> Array:
    """Hermitian block matrix [[K, lam V*], [lam V, diag(band energies)]].

    Band layout: windows in eigenvalue order; inside a window the h_dim
    internal modes are contiguous runs over the window's grid points.  Row
    weights are sqrt(cell width), turning samples into quadrature columns.
    """
    d = model.dim
    nres = sum(w.h_dim * len(g.points) for w, g in zip(model.windows, grids))
    hmat = np.zeros((d + nres, d + nres), dtype=complex)
    hmat[:d, :d] = model.sys.k
    off = d
    for win, grid in zip(model.windows, grids):
        npts = len(grid.points)
        root_w = np.sqrt(grid.delta)
        vstack = np.stack([_sample(win, x, d) for x in grid.points])
        for mode in range(win.h_dim):
            rows = slice(off + mode * npts, off + (mode + 1) * npts)
            hmat[rows, rows] = np.diag(grid.points)
            hmat[rows, :d] = lam * root_w * vstack[:, mode, :]
        hmat[:d, off:off + win.h_dim * npts] = dag(
            hmat[off:off + win.h_dim * npts, :d])
        off += win.h_dim * npts
    return hmat


def _band_energies(model: FriedrichsModel,
                   grids: Sequence[_WindowGrid]) -> Array:
    return np.concatenate([np.tile(g.points, w.h_dim)
                           for w, g in zip(model.windows, grids)])


def build_friedrichs(model: FriedrichsModel, lam: float | None = None,
                     spacing: float | None = None) -> Array:
    """Discretized model Hamiltonian at coupling lam (default model.lam)."""
    lam = model.lam if lam is None else float(lam)
    if spacing is None:
        spacing = min(w.b - w.a for w in model.windows) / 201.0
    grids = [_window_grid(w, spacing) for w in model.windows]
    return _assemble(model, lam, grids)


def _k_phase(sys: SmallSystem, s: float) -> Array:
    """e^{i s K} assembled from the spectral projections."""
    return sum(np.exp(1j * s * ev) * proj for ev, proj in sys.projections)


def _evolve(hmat: Array, s: float) -> Array:
    w, v = np.linalg.eigh(hmat)
    return (v * np.exp(-1j * s * w)) @ dag(v)


# ---------------------------------------------------------------------------
# reduced experiment

def _reduced_pair(model: FriedrichsModel, t: float, lam: float,
                  spacing_scale: float) -> tuple[Array, int]:
    d = model.dim
    delta = spacing_scale * lam**4
    grids = [_window_grid(w, delta) for w in model.windows]
    hmat = _assemble(model, lam, grids)
    w, v = np.linalg.eigh(hmat)
    comp = (v[:d, :] * np.exp(-1j * w * t / lam**2)) @ dag(v[:d, :])
    return _k_phase(model.sys, t / lam**2) @ comp, hmat.shape[0] - d


def reduced_compression(model: FriedrichsModel, t: float, lam: float,
                        spacing_scale: float = 1.0) -> Array:
    """e^{itK/lam^2} I* e^{-itH_lam/lam^2} I on the system space.

    Band spacing spacing_scale * lam^4: the limit probes an O(lam^2) energy
    window around each level, so lam^-2 points across it keep the
    discretization error below the weak-coupling error.
    """
    return _reduced_pair(model, t, lam, spacing_scale)[0]


def _check_ladder(lambdas: Sequence[float]) -> list[float]:
    lams = [float(l) for l in lambdas]
    if not lams or any(l <= 0 for l in lams):
        raise ValueError("coupling ladder must be positive")
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("coupling ladder must be strictly descending")
    return lams


def reduced_wcl_experiment(model: FriedrichsModel, t: float,
                           lambdas: Sequence[float],
                           spacing_scale: float = 1.0,
                           quad_n: int = 4000) -> list[dict]:
    """Error of the compressed evolution against e^{-it ups} down a ladder.

    Rows: lambda, grid_n (total band points), error (Frobenius), runtime_s.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    lams = _check_ladder(lambdas)
    ups = level_shift(model, quad_n=quad_n).upsilon
    target = scipy.linalg.expm(-1j * t * ups)
    rows = []
    for lam in lams:
        tic = time.perf_counter()
        red, grid_n = _reduced_pair(model, t, lam, spacing_scale)
        rows.append({"lambda": lam,
                     "grid_n": grid_n,
                     "error": float(frob(red - target)),
                     "runtime_s": time.perf_counter() - tic})
    return rows


# ---------------------------------------------------------------------------
# window isometries and the extended experiment

def build_j_lambda(model: FriedrichsModel, grid: ReservoirGrid,
                   lam: float) -> Array:
    """Isometry from system + asymptotic band into the physical model.

    Asymptotic grid point u goes to physical energy k + lam^2 u; with row
    weights sqrt(cell) on both sides the required amplitude factor
    sqrt(lam^2 du / du) / lam equals one, so the matrix is an exact 0/1
    column injection and J*J = 1 holds to machine precision.
    """
    if lam <= 0:
        raise ValueError("scale must be positive")
    delta = lam**2 * grid.dx
    m = (grid.n - 1) // 2
    grids = [_window_grid(w, delta) for w in model.windows]
    for win, g in zip(model.windows, grids):
        if m > g.m_minus or m > g.m_plus:
            raise WindowOverflow(
                "scaled asymptotic span %.4g does not fit inside the window "
                "(%g, %g) around k=%g" % (lam**2 * grid.points[-1],
                                          win.a, win.b, win.k))
    d = model.dim
    n_phys = d + sum(w.h_dim * len(g.points)
                     for w, g in zip(model.windows, grids))
    jmat = np.zeros((n_phys, d + model.h_dim * grid.n))
    jmat[:d, :d] = np.eye(d)
    col = d
    off = d
    for win, g in zip(model.windows, grids):
        npts = len(g.points)
        for mode in range(win.h_dim):
            rows = off + mode * npts + (g.m_minus - m) + np.arange(grid.n)
            jmat[rows, col + np.arange(grid.n)] = 1.0
            col += grid.n
        off += win.h_dim * npts
    return jmat


def extended_wcl_experiment(model: FriedrichsModel, t: float, t0: float,
                            lambdas: Sequence[float], theta: float = 0.7,
                            du: float = 0.1, quad_n: int = 4000) -> list[dict]:
    """Full-evolution error against the minimal dilation down a ladder.

    Compares J* e^{itH0/lam^2} e^{-i(t-t0)H_lam/lam^2} e^{-it0 H0/lam^2} J
    with e^{it X} e^{-i(t-t0) Z} e^{-it0 X}, where Z is the dilation_toy
    generator of the level shift on the asymptotic grid and X its band
    energy (zero on the system).  The reference dynamics is removed at time
    t on the left and at time t0 on the right; only then do the fast
    e^{i s K/lam^2} phases cancel sector by sector, and t = t0 collapses
    both sides to J*J = 1 exactly.

    The asymptotic grid spans theta * (smallest window half-width) / lam^2
    at fixed spacing du, so the mapped grid covers a fixed fraction theta of
    each window; the leak past the covered fraction vanishes like lam^2.
    Rows: lambda, grid_n (physical band points), asym_n (dilation dimension),
    error, runtime_s.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    if not 0.0 < theta < 1.0:
        raise ValueError("covered fraction theta must lie in (0, 1)")
    if du <= 0:
        raise ValueError("asymptotic spacing must be positive")
    lams = _check_ladder(lambdas)
    gen = asymptotic_generator(model, quad_n=quad_n)
    d = model.dim
    w_min = min(min(w.k - w.a, w.b - w.k) for w in model.windows)
    rows = []
    for lam in lams:
        tic = time.perf_counter()
        m = int(round(theta * w_min / lam**2 / du))
        if m < 1:
            raise GridTooCoarse("asymptotic grid is empty; decrease du")
        grid = reservoir_grid((m + 0.5) * du, 2 * m + 1)
        jmat = build_j_lambda(model, grid, lam)
        delta = lam**2 * grid.dx
        grids = [_window_grid(w, delta) for w in model.windows]
        hmat = _assemble(model, lam, grids)
        band = _band_energies(model, grids)

        mid = _evolve(hmat, (t - t0) / lam**2)
        mid[:d, :] = _k_phase(model.sys, t / lam**2) @ mid[:d, :]
        mid[d:, :] *= np.exp(1j * band * t / lam**2)[:, None]
        mid[:, :d] = mid[:, :d] @ _k_phase(model.sys, -t0 / lam**2)
        mid[:, d:] *= np.exp(-1j * band * t0 / lam**2)[None, :]
        e_phys = jmat.T @ mid @ jmat

        dil = build_zr(gen, grid)
        mida = _evolve(dil.z, t - t0)
        zg = np.tile(grid.points, gen.h_dim)
        mida[d:, :] *= np.exp(1j * zg * t)[:, None]
        mida[:, d:] *= np.exp(-1j * zg * t0)[None, :]

        rows.append({"lambda": lam,
                     "grid_n": hmat.shape[0] - d,
                     "asym_n": dil.dim,
                     "error": float(frob(e_phys - mida)),
                     "runtime_s": time.perf_counter() - tic})
    return rows
