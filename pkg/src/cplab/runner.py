"""Batch front end: parse model files, dispatch to the module operations,
and assemble certification reports and convergence tables.

A model file is JSON with three top-level fields:

    {"schema": 1, "kind": "<kind>", "payload": {...}}

kind is one of lindblad, classical, friedrichs, pauli_fierz, toy_dilation,
langevin; the payload fields follow each module's serialization notes.
Complex matrices are nested arrays of [re, im] pairs, row-major; the
classical kind uses plain real arrays.

Every command returns a Report.  Its JSON form is byte-identical across
runs with the same file and seed: wall time and per-row runtimes never
enter report.json, they are only written to the CSV tables.  Unknown file
or payload fields, malformed literals, and kind/command mismatches raise
InputError (exit 2); numerical check failures and module errors exit 1.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical as mod_classical
from .cpmap import CpMapData, NotCompletelyPositive, dilation_equivalence, \
    map_distance, stinespring_minimal
from .dilation_toy import ContractionGenerator, build_zr, \
    contraction_generator, refinement_table, reservoir_grid
from .friedrichs_wcl import CouplingWindow, FriedrichsModel, GridTooCoarse, \
    WindowOverflow, build_j_lambda, extended_wcl_experiment, flat_profile, \
    level_shift, lorentzian_profile, reduced_wcl_experiment
from .invariance_dbc import NoSolution, ThermalState, construct_epsilon, \
    dbc_residuals, gibbs_state, is_k_invariant, \
    quadratic_balance_residual, small_system
from .langevin_fock import FockTooLarge, PreconditionViolated, build_fock, \
    build_langevin_Z, commutation_residual, langevin_reduction_check, \
    one_excitation_block, total_energy
from .lindblad import LindbladData, build_generator, canonical_form, \
    haar_average_check
from .matrixcore import NotHermitian, basis_matrix, dag, frob, herm_eig
from .pauli_fierz import BetaNonPositive, BohrWindow, \
    OrientationUnresolvable, SpectralCouplingModel, davies_generator, \
    make_thermal_coupling, reduced_wcl_pf_experiment

DEFAULT_SEED = 20260816
KINDS = ("lindblad", "classical", "friedrichs", "pauli_fierz",
         "toy_dilation", "langevin")

_TOY_LADDER = ((10.0, 401), (20.0, 801), (40.0, 1601))
_WCL_LAMBDAS = (0.5, 0.35, 0.25)
_PF_LAMBDAS = (0.6, 0.45)

# module exceptions that mean "the computation refused", not "bad input":
# the report records them and the run exits 1
_MODULE_ERRORS = (GridTooCoarse, WindowOverflow, FockTooLarge,
                  PreconditionViolated, OrientationUnresolvable,
                  BetaNonPositive, NotCompletelyPositive, NotHermitian,
                  NoSolution)


class InputError(ValueError):
    """Unreadable, malformed, or schema-violating model file (exit 2)."""


# ---------------------------------------------------------------------------
# report plumbing

@dataclass
class Check:
    name: str
    status: str  # pass | fail | skip
    residual: float | None = None
    tolerance: float | None = None
    detail: str | None = None


@dataclass
class Report:
    command: str
    model: str  # file basename, so reports do not depend on the run directory
    kind: str
    seed: int
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)
    certification: dict | None = None
    error: dict | None = None
    wall_time_s: float = 0.0

    def add(self, name, ok, residual=None, tolerance=None, detail=None):
        self.checks.append(Check(name=name, status="pass" if ok else "fail",
                                 residual=residual, tolerance=tolerance,
                                 detail=detail))

    def skip(self, name, detail=None):
        self.checks.append(Check(name=name, status="skip", detail=detail))

    def passed(self) -> bool:
        return self.error is None and all(c.status != "fail"
                                          for c in self.checks)

    def exit_code(self) -> int:
        return 0 if self.passed() else 1

    def to_json_dict(self) -> dict:
        tables = {
            name: [{k: v for k, v in row.items() if k != "runtime_s"}
                   for row in rows]
            for name, rows in self.tables.items()
        }
        out = {
            "command": self.command,
            "model": self.model,
            "kind": self.kind,
            "seed": self.seed,
            "checks": [{"name": c.name, "status": c.status,
                        "residual": c.residual, "tolerance": c.tolerance,
                        "detail": c.detail} for c in self.checks],
            "tables": tables,
            "error": self.error,
        }
        if self.certification is not None:
            out["certification"] = self.certification
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def write_outputs(report: Report, out_dir) -> list[Path]:
    """report.json plus one CSV per table (runtimes only in the CSVs)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.json"]
    written[0].write_text(report.to_json())
    if report.certification is not None:
        p = out / "certification.json"
        p.write_text(json.dumps(report.certification, indent=2,
                                sort_keys=True) + "\n")
        written.append(p)
    for name, rows in report.tables.items():
        if not rows:
            continue
        p = out / (name + ".csv")
        with open(p, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# model file parsing

def _num(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError("%s: expected a number, got %r" % (what, x))
    return float(x)


def _cmatrix(obj, what) -> np.ndarray:
    """Nested array of [re, im] pairs, row-major, rectangular."""
    if not isinstance(obj, list) or not obj:
        raise InputError("%s: malformed matrix literal" % what)
    rows = []
    width = None
    for row in obj:
        if not isinstance(row, list) or not row:
            raise InputError("%s: malformed matrix literal" % what)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError("%s: ragged matrix literal" % what)
        entries = []
        for cell in row:
            if not isinstance(cell, list) or len(cell) != 2:
                raise InputError(
                    "%s: entries must be [re, im] pairs" % what)
            entries.append(complex(_num(cell[0], what), _num(cell[1], what)))
        rows.append(entries)
    return np.array(rows, dtype=complex)


def _rmatrix(obj, what) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise InputError("%s: malformed real matrix" % what)
    width = None
    for row in obj:
        if not isinstance(row, list) or not row:
            raise InputError("%s: malformed real matrix" % what)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError("%s: ragged real matrix" % what)
        for cell in row:
            _num(cell, what)
    return np.array(obj, dtype=float)


def _rvector(obj, what) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise InputError("%s: malformed real vector" % what)
    return np.array([_num(x, what) for x in obj], dtype=float)


_PAYLOAD_FIELDS = {
    "lindblad": {"theta", "delta", "nu", "dim", "rho"},
    "classical": {"m", "p"},
    "friedrichs": {"K", "intervals", "lambda_schedule", "t", "t0"},
    "pauli_fierz": {"K", "bohr", "beta", "lambda_schedule", "t",
                    "observable", "rho", "n_max"},
    "toy_dilation": {"upsilon", "t", "ladder"},
    "langevin": {"upsilon", "nu", "grid", "n_max", "t", "observable", "y",
                 "dump_basis"},
}


def load_model_file(path) -> tuple[str, dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc))
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("%s: JSON parse error at line %d: %s"
                         % (path.name, exc.lineno, exc.msg))
    if not isinstance(raw, dict):
        raise InputError("%s: top level must be an object" % path.name)
    extra = set(raw) - {"schema", "kind", "payload"}
    if extra:
        raise InputError("%s: unknown top-level fields %s"
                         % (path.name, sorted(extra)))
    if raw.get("schema") != 1:
        raise InputError("%s: schema must be 1" % path.name)
    kind = raw.get("kind")
    if kind not in KINDS:
        raise InputError("%s: kind must be one of %s" % (path.name, KINDS))
    payload = raw.get("payload")
    if not isinstance(payload, dict):
        raise InputError("%s: payload must be an object" % path.name)
    unknown = set(payload) - _PAYLOAD_FIELDS[kind]
    if unknown:
        raise InputError("%s: unknown %s payload fields %s"
                         % (path.name, kind, sorted(unknown)))
    return kind, payload


def _require_kind(kind, allowed, command):
    if kind not in allowed:
        raise InputError("command %s needs a %s model file, got kind=%s"
                         % (command, " or ".join(allowed), kind))


# ---------------------------------------------------------------------------
# payload -> model objects

def _lindblad_from(payload) -> LindbladData:
    dim = payload.get("dim", 1)
    if not isinstance(dim, int) or dim < 1:
        raise InputError("lindblad dim must be a positive integer")
    theta = (_cmatrix(payload["theta"], "theta") if "theta" in payload
             else np.zeros((dim, dim), dtype=complex))
    delta = (_cmatrix(payload["delta"], "delta") if "delta" in payload
             else np.zeros_like(theta))
    nu = tuple(_cmatrix(b, "nu[%d]" % i)
               for i, b in enumerate(payload.get("nu", [])))
    return LindbladData(theta=theta, delta=delta, nu=nu)


def _parse_preset(text, k, level_index, d):
    parts = str(text).split()
    try:
        if parts[0] == "flat" and len(parts) == 2:
            row = np.zeros((1, d))
            row[0, level_index] = float(parts[1])
            return flat_profile(row)
        if parts[0] == "lorentzian" and len(parts) == 3:
            row = np.zeros((1, d))
            row[0, level_index] = float(parts[1])
            return lorentzian_profile(row, k, float(parts[2]))
    except (ValueError, IndexError):
        pass
    raise InputError('bad preset %r: use "flat g" or "lorentzian g width"'
                     % (text,))


def _interp_profile(samples, a, b):
    xs = np.linspace(a, b, len(samples))
    arrs = np.stack(samples)

    def vfun(x, xs=xs, arrs=arrs):
        if x <= xs[0]:
            return arrs[0]
        if x >= xs[-1]:
            return arrs[-1]
        j = min(int(np.searchsorted(xs, x, side="right")) - 1, len(xs) - 2)
        w = (x - xs[j]) / (xs[j + 1] - xs[j])
        return (1.0 - w) * arrs[j] + w * arrs[j + 1]

    return vfun


def _friedrichs_from(payload) -> FriedrichsModel:
    if "K" not in payload or "intervals" not in payload:
        raise InputError("friedrichs payload needs K and intervals")
    k = _cmatrix(payload["K"], "K")
    sys = small_system(k)
    d = sys.dim
    windows = []
    for i, item in enumerate(payload["intervals"]):
        if not isinstance(item, dict):
            raise InputError("intervals[%d] must be an object" % i)
        unknown = set(item) - {"k", "a", "b", "v_samples", "preset"}
        if unknown:
            raise InputError("intervals[%d]: unknown fields %s"
                             % (i, sorted(unknown)))
        try:
            kk = _num(item["k"], "intervals[%d].k" % i)
            a = _num(item["a"], "intervals[%d].a" % i)
            b = _num(item["b"], "intervals[%d].b" % i)
        except KeyError as exc:
            raise InputError("intervals[%d] missing field %s" % (i, exc))
        matches = [j for j, lev in enumerate(sys.levels)
                   if abs(lev - kk) <= 1e-9 * (1.0 + abs(lev))]
        if len(matches) != 1:
            raise InputError("intervals[%d].k=%g is not an eigenvalue of K"
                             % (i, kk))
        if "preset" in item and "v_samples" in item:
            raise InputError("intervals[%d]: give v_samples or preset, "
                             "not both" % i)
        if "preset" in item:
            vfun = _parse_preset(item["preset"], kk, matches[0], d)
            h_dim = 1
        elif "v_samples" in item:
            raw = item["v_samples"]
            if not isinstance(raw, list) or len(raw) < 2:
                raise InputError("intervals[%d].v_samples needs at least "
                                 "two samples" % i)
            samples = [_cmatrix(s, "intervals[%d].v_samples[%d]" % (i, j))
                       for j, s in enumerate(raw)]
            shape = samples[0].shape
            if any(s.shape != shape for s in samples) or shape[1] != d:
                raise InputError("intervals[%d].v_samples must share one "
                                 "(h_dim, %d) shape" % (i, d))
            vfun = _interp_profile(samples, a, b)
            h_dim = shape[0]
        else:
            raise InputError("intervals[%d] needs v_samples or preset" % i)
        windows.append(CouplingWindow(k=kk, a=a, b=b, h_dim=h_dim, vfun=vfun))
    windows.sort(key=lambda w: w.k)
    return FriedrichsModel(sys=sys, windows=tuple(windows))


def _parse_beta(raw):
    if raw is None:
        return None
    if raw == "inf":
        return math.inf
    return _num(raw, "beta")


def _pauli_fierz_from(payload) -> SpectralCouplingModel:
    if "K" not in payload or "bohr" not in payload:
        raise InputError("pauli_fierz payload needs K and bohr")
    k = _cmatrix(payload["K"], "K")
    sys = small_system(k)
    d = sys.dim
    windows = []
    for i, item in enumerate(payload["bohr"]):
        if not isinstance(item, dict):
            raise InputError("bohr[%d] must be an object" % i)
        unknown = set(item) - {"omega", "a", "b", "coupling"}
        if unknown:
            raise InputError("bohr[%d]: unknown fields %s"
                             % (i, sorted(unknown)))
        try:
            omega = _num(item["omega"], "bohr[%d].omega" % i)
            a = _num(item["a"], "bohr[%d].a" % i)
            b = _num(item["b"], "bohr[%d].b" % i)
            coupling = _cmatrix(item["coupling"], "bohr[%d].coupling" % i)
        except KeyError as exc:
            raise InputError("bohr[%d] missing field %s" % (i, exc))
        if coupling.shape != (d, d):
            raise InputError("bohr[%d].coupling must be %d x %d" % (i, d, d))
        stack = coupling[None, :, :]

        def vfun(x, stack=stack):
            return stack

        windows.append(BohrWindow(omega=omega, a=a, b=b, h_dim=1, vfun=vfun))
    beta = _parse_beta(payload.get("beta"))
    if beta is None:
        return SpectralCouplingModel(sys=sys, bohr=tuple(windows), beta=None)
    # a temperature in the file means: the listed windows are the bare
    # positive-energy couplings, and the thermal occupation weights plus the
    # mirror windows are part of the model construction
    return make_thermal_coupling(sys, windows, beta)


def _toy_ladder(payload, grid):
    if grid is not None:
        return (grid,)
    raw = payload.get("ladder")
    if raw is None:
        return _TOY_LADDER
    ladder = []
    for i, item in enumerate(raw):
        if not isinstance(item, list) or len(item) != 2:
            raise InputError("ladder[%d] must be [r, n]" % i)
        ladder.append((_num(item[0], "ladder[%d].r" % i), int(item[1])))
    if not ladder:
        raise InputError("ladder must not be empty")
    return tuple(ladder)


def _langevin_parts(payload, grid_flag, nmax_flag):
    if "upsilon" not in payload:
        raise InputError("langevin payload needs upsilon")
    ups = _cmatrix(payload["upsilon"], "upsilon")
    nu = tuple(_cmatrix(b, "nu[%d]" % i)
               for i, b in enumerate(payload.get("nu", [])))
    if not nu:
        nu = (np.zeros_like(ups),)
    raw_grid = payload.get("grid")
    if grid_flag is not None:
        r, n = grid_flag
    elif isinstance(raw_grid, dict) and set(raw_grid) <= {"r", "n"}:
        r, n = _num(raw_grid.get("r"), "grid.r"), raw_grid.get("n")
    else:
        raise InputError("langevin payload needs grid {r, n}")
    if not isinstance(n, int):
        raise InputError("grid.n must be an integer")
    n_max = nmax_flag if nmax_flag is not None else payload.get("n_max", 1)
    if not isinstance(n_max, int) or n_max < 1:
        raise InputError("n_max must be a positive integer")
    return ups, nu, reservoir_grid(r, n), n_max


# ---------------------------------------------------------------------------
# tolerances and shared check helpers

def _tol(tols, name, default):
    if tols and name in tols:
        return float(tols[name])
    return default


def _echo(command, model_name, seed, tols=None, lambdas=None, grid=None,
          nmax=None):
    parts = [command, "--model", model_name, "--seed", str(seed)]
    for name in sorted(tols or {}):
        parts += ["--tol", "%s=%s" % (name, tols[name])]
    if lambdas is not None:
        parts += ["--lambda-list", ",".join(str(x) for x in lambdas)]
    if grid is not None:
        parts += ["--grid", "%s,%s" % grid]
    if nmax is not None:
        parts += ["--nmax", str(nmax)]
    return " ".join(parts)


def _monotone_check(report, rows, key="error"):
    errs = [row[key] for row in rows]
    ok = all(x > y for x, y in zip(errs, errs[1:]))
    worst = max((y - x for x, y in zip(errs, errs[1:])), default=-math.inf)
    report.add("errors_strictly_decreasing", ok,
               residual=None if worst == -math.inf else worst,
               tolerance=0.0,
               detail="errors " + ", ".join("%.6g" % e for e in errs))


def _run(command, path, build, *, seed, tols=None, lambdas=None, grid=None,
         nmax=None):
    """Load the file, dispatch, and map module errors to a failed report."""
    kind, payload = load_model_file(path)
    report = Report(command=command, model=Path(path).name, kind=kind,
                    seed=seed)
    report.command = _echo(command, report.model, seed, tols, lambdas, grid,
                           nmax)
    tic = time.perf_counter()
    try:
        build(kind, payload, report)
    except InputError:
        raise
    except _MODULE_ERRORS as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
    except ValueError as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
    report.wall_time_s = time.perf_counter() - tic
    return report


# ---------------------------------------------------------------------------
# commands

def cmd_validate(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                 lambdas=None, grid=None, nmax=None) -> Report:
    """Type invariants and generator validity checks for any kind."""

    def build(kind, payload, report):
        if kind == "lindblad":
            _validate_lindblad(payload, report, seed, tols)
        elif kind == "classical":
            _validate_classical(payload, report, tols)
        elif kind == "friedrichs":
            _validate_friedrichs(payload, report, tols)
        elif kind == "pauli_fierz":
            _validate_pauli_fierz(payload, report, tols)
        elif kind == "toy_dilation":
            _validate_toy(payload, report, grid)
        elif kind == "langevin":
            _validate_langevin(payload, report, grid, nmax)

    report = _run("validate", path, build, seed=seed, tols=tols, grid=grid,
                  nmax=nmax)
    if out is not None:
        write_outputs(report, out)
    return report


def _validate_lindblad(payload, report, seed, tols):
    try:
        lind = _lindblad_from(payload)
    except NotHermitian as exc:
        report.add("hermitian_data", False, detail=str(exc))
        return
    report.add("hermitian_data", True)
    scale = 1.0 + frob(lind.delta) + sum(frob(b) ** 2 for b in lind.nu)
    tol = _tol(tols, "markov", 1e-9)
    defect = lind.markov_defect()
    report.add("markov_2delta_equals_nustar_nu", defect <= tol * scale,
               residual=defect, tolerance=tol * scale)
    m = build_generator(lind)
    unit = frob(m.apply(np.eye(lind.dim)))
    report.add("unital", unit <= 1e-10 * (1.0 + m.norm()),
               residual=unit, tolerance=1e-10 * (1.0 + m.norm()))
    # Monte-Carlo twirl cross-check: the one seeded diagnostic in the suite
    res = haar_average_check(m, n_samples=2000,
                             rng=np.random.default_rng(seed))
    report.add("haar_twirl_mc", res["ok"], residual=res["deviation"],
               tolerance=3.0 * res["stderr"])


def _validate_classical(payload, report, tols):
    if "m" not in payload:
        raise InputError("classical payload needs m")
    m = _rmatrix(payload["m"], "m")
    tol = _tol(tols, "classical", 1e-10)
    ok = mod_classical.is_classical_generator(m, tol=tol)
    rowsum = float(np.max(np.abs(m.sum(axis=1)))) if m.size else 0.0
    report.add("rate_matrix", ok, residual=rowsum,
               tolerance=tol * (1.0 + float(np.max(np.abs(m)))),
               detail="real, nonnegative off-diagonal, zero row sums")
    if not ok:
        return
    if "p" in payload:
        p = _rvector(payload["p"], "p")
        if p.shape != (m.shape[0],):
            raise InputError("p must have length %d" % m.shape[0])
        pos = bool(p.min() > 0.0)
        norm = abs(float(p.sum()) - 1.0)
        report.add("probability_vector", pos and norm <= 1e-10,
                   residual=norm, tolerance=1e-10)
        if pos:
            res = mod_classical.classical_dbc_residual(m, p)
            dtol = _tol(tols, "dbc", 1e-10)
            report.add("detailed_balance", res <= dtol, residual=res,
                       tolerance=dtol)
    else:
        p = mod_classical.stationary_distribution(m)
        report.tables["stationary"] = [
            {"state": i, "p": float(x)} for i, x in enumerate(p)]
        report.add("stationary_distribution", True)


def _validate_friedrichs(payload, report, tols):
    try:
        model = _friedrichs_from(payload)
    except InputError:
        raise
    except ValueError as exc:
        report.add("model_invariants", False, detail=str(exc))
        return
    report.add("model_invariants", True)
    ups = level_shift(model).upsilon
    gain = herm_eig((ups - dag(ups)) / 2j).values.max()
    tol = _tol(tols, "dissipative", 1e-10) * (1.0 + frob(ups))
    report.add("level_shift_dissipative", gain <= tol,
               residual=float(gain), tolerance=tol)


def _validate_pauli_fierz(payload, report, tols):
    try:
        model = _pauli_fierz_from(payload)
    except InputError:
        raise
    except ValueError as exc:
        report.add("model_invariants", False, detail=str(exc))
        return
    report.add("model_invariants", True)
    dd = davies_generator(model)
    tol = _tol(tols, "markov", 1e-9)
    defect = dd.lind.markov_defect()
    report.add("markov_2delta_equals_nustar_nu", defect <= tol,
               residual=defect, tolerance=tol)
    ctol = _tol(tols, "covariance", 1e-8)
    report.add("jump_energy_covariance", dd.y.residual <= ctol,
               residual=dd.y.residual, tolerance=ctol,
               detail="orientation " + dd.orientation)


def _validate_toy(payload, report, grid):
    if "upsilon" not in payload:
        raise InputError("toy_dilation payload needs upsilon")
    ups = _cmatrix(payload["upsilon"], "upsilon")
    try:
        contraction_generator(ups)
    except ValueError as exc:
        report.add("dissipative", False, detail=str(exc))
        return
    report.add("dissipative", True)
    for r, n in _toy_ladder(payload, grid):
        try:
            reservoir_grid(r, n)
        except ValueError as exc:
            report.add("grid_%g_%d" % (r, n), False, detail=str(exc))
            return
    report.add("grids_valid", True)


def _validate_langevin(payload, report, grid, nmax):
    ups, nu, rgrid, n_max = _langevin_parts(payload, grid, nmax)
    scale = 1.0 + frob(ups)
    pair = frob(1j * (ups - dag(ups)) - sum(dag(b) @ b for b in nu))
    report.add("noise_pairing", pair <= 1e-8 * scale, residual=float(pair),
               tolerance=1e-8 * scale,
               detail="i(ups - ups*) must equal the block quadratic form")
    if pair > 1e-8 * scale:
        return
    fock = build_fock(len(nu) * rgrid.n, n_max)
    gen = build_langevin_Z(ups, nu, rgrid, fock)
    report.add("generator_hermitian", True,
               detail="dim %d" % (gen.dim * ups.shape[0]))


def cmd_canonical(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                  lambdas=None, grid=None, nmax=None) -> Report:
    """Canonical (traceless) presentation of a Lindblad model."""

    def build(kind, payload, report):
        _require_kind(kind, ("lindblad",), "canonical")
        lind = _lindblad_from(payload)
        canon = canonical_form(lind)
        scale = 1.0 + frob(lind.theta) + frob(lind.delta)
        report.add("theta_traceless",
                   abs(np.trace(canon.theta)) <= 1e-10 * scale,
                   residual=float(abs(np.trace(canon.theta))),
                   tolerance=1e-10 * scale)
        worst = max((abs(np.trace(b)) for b in canon.nu), default=0.0)
        report.add("blocks_traceless", worst <= 1e-10 * scale,
                   residual=float(worst), tolerance=1e-10 * scale)
        gap = frob(build_generator(canon).matrix
                   - build_generator(lind).matrix)
        tol = _tol(tols, "round_trip", 1e-9) * (1.0 + frob(
            build_generator(lind).matrix))
        report.add("round_trip", gap <= tol, residual=float(gap),
                   tolerance=tol)
        report.tables["canonical_blocks"] = [
            {"block": i, "frobenius_norm": float(frob(b)),
             "trace_abs": float(abs(np.trace(b)))}
            for i, b in enumerate(canon.nu)]

    report = _run("canonical", path, build, seed=seed, tols=tols)
    if out is not None:
        write_outputs(report, out)
    return report


def cmd_stinespring(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                    lambdas=None, grid=None, nmax=None) -> Report:
    """Minimal presentation of the jump part of a Lindblad model.

    There is no standalone CP-map file kind, so the command consumes the
    noise blocks of a lindblad file as the CP map of interest.
    """

    def build(kind, payload, report):
        _require_kind(kind, ("lindblad",), "stinespring")
        lind = _lindblad_from(payload)
        if not lind.nu or all(frob(b) == 0.0 for b in lind.nu):
            report.skip("minimal_presentation", detail="zero jump part")
            return
        cp = CpMapData(blocks=lind.nu)
        minimal = stinespring_minimal(cp)
        tol = _tol(tols, "round_trip", 1e-10) * (1.0 + frob(
            np.sum([dag(b) @ b for b in cp.blocks], axis=0)))
        gap = map_distance(cp, minimal)
        report.add("round_trip", gap <= tol, residual=float(gap),
                   tolerance=tol)
        report.add("minimal_rank", minimal.is_minimal(),
                   detail="%d blocks" % minimal.n_blocks)
        if cp.is_minimal():
            u = dilation_equivalence(cp, minimal)
            res = float(frob(dag(u) @ u - np.eye(u.shape[0])))
            report.add("mixing_unitary", res <= 1e-8, residual=res,
                       tolerance=1e-8)
        else:
            report.skip("mixing_unitary",
                        detail="input presentation is not minimal")
        report.tables["blocks"] = [
            {"block": i, "frobenius_norm": float(frob(b))}
            for i, b in enumerate(minimal.blocks)]

    report = _run("stinespring", path, build, seed=seed, tols=tols)
    if out is not None:
        write_outputs(report, out)
    return report


def _state_from(payload, model_beta, k):
    if "rho" in payload:
        rho = _cmatrix(payload["rho"], "rho")
        return ThermalState(beta=math.nan, rho=rho)
    if model_beta is None or not math.isfinite(model_beta):
        raise InputError("dbc needs rho in the payload or a finite beta")
    return gibbs_state(k, model_beta)


def cmd_dbc(path, *, out=None, seed=DEFAULT_SEED, tols=None, lambdas=None,
            grid=None, nmax=None) -> Report:
    """Detailed balance of a generator against a given or thermal state."""

    def build(kind, payload, report):
        _require_kind(kind, ("lindblad", "pauli_fierz"), "dbc")
        if kind == "lindblad":
            lind = _lindblad_from(payload)
            m = build_generator(lind)
            state = _state_from(payload, None, None)
            sys = None
        else:
            model = _pauli_fierz_from(payload)
            dd = davies_generator(model)
            m = dd.m
            state = _state_from(payload, model.beta, model.sys.k)
            sys = model.sys
        if sys is not None:
            report.add("k_invariant", is_k_invariant(m, sys))
        stat = frob(m.predual().apply(state.rho))
        stol = _tol(tols, "stationary", 1e-8) * (1.0 + m.norm())
        report.add("stationary_state", stat <= stol, residual=float(stat),
                   tolerance=stol)
        dtol = _tol(tols, "dbc", 1e-8)
        for kind_name in ("standard", "alt"):
            r_d, r_h = dbc_residuals(m, state, kind=kind_name)
            worst = max(r_d, r_h)
            report.add("dbc_" + kind_name, worst <= dtol,
                       residual=float(worst), tolerance=dtol)

    report = _run("dbc", path, build, seed=seed, tols=tols)
    if out is not None:
        write_outputs(report, out)
    return report


def cmd_davies(path, *, out=None, seed=DEFAULT_SEED, tols=None, lambdas=None,
               grid=None, nmax=None) -> Report:
    """Weak-coupling generator plus the certification report."""

    def build(kind, payload, report):
        _require_kind(kind, ("pauli_fierz",), "davies")
        model = _pauli_fierz_from(payload)
        dd = davies_generator(model)
        beta = model.beta
        thermal = beta is not None and math.isfinite(beta)

        mtol = _tol(tols, "markov", 1e-9)
        markov_ok = dd.lind.markov_defect() <= mtol
        report.add("markov", markov_ok, residual=dd.lind.markov_defect(),
                   tolerance=mtol)
        kinv = is_k_invariant(dd.m, model.sys)
        report.add("k_invariant", kinv)
        ctol = _tol(tols, "covariance", 1e-8)
        report.add("jump_energy_covariance", dd.y.residual <= ctol,
                   residual=dd.y.residual, tolerance=ctol,
                   detail="orientation " + dd.orientation)

        cert = {"markov": bool(markov_ok), "k_invariant": bool(kinv),
                "dbc_standard": None, "dbc_alt": None,
                "condi2_residual": None, "epsilon_ok": None}
        if thermal:
            state = gibbs_state(model.sys.k, beta)
            dtol = _tol(tols, "dbc", 1e-8)
            for kind_name in ("standard", "alt"):
                r_d, r_h = dbc_residuals(dd.m, state, kind=kind_name)
                ok = max(r_d, r_h) <= dtol
                cert["dbc_" + kind_name] = bool(ok)
                report.add("dbc_" + kind_name, ok,
                           residual=float(max(r_d, r_h)), tolerance=dtol)
            c2tol = _tol(tols, "balance", 1e-8)
            c2 = quadratic_balance_residual(dd.nu, dd.y.y, beta)
            cert["condi2_residual"] = float(c2)
            report.add("quadratic_balance", c2 <= c2tol, residual=float(c2),
                       tolerance=c2tol)
            try:
                eps = construct_epsilon(dd.nu, dd.y.y, beta)
                eps_ok = max(eps.involution_residual, eps.y_flip_residual,
                             eps.intertwining_residual) <= 1e-8
            except ValueError:
                eps_ok = False
            cert["epsilon_ok"] = bool(eps_ok)
            report.add("epsilon_ok", eps_ok)
        else:
            for name in ("dbc_standard", "dbc_alt", "quadratic_balance",
                         "epsilon_ok"):
                report.skip(name, detail="no finite inverse temperature")
        report.certification = cert
        report.tables["jump_blocks"] = [
            {"block": i, "energy": float(np.real(dd.y.y[i, i])),
             "frobenius_norm": float(frob(b))}
            for i, b in enumerate(dd.nu.blocks)]

    report = _run("davies", path, build, seed=seed, tols=tols)
    if out is not None:
        write_outputs(report, out)
    return report


def cmd_wcl_reduced(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                    lambdas=None, grid=None, nmax=None) -> Report:
    """Reduced weak-coupling convergence table (friedrichs or pauli_fierz)."""

    def build(kind, payload, report):
        _require_kind(kind, ("friedrichs", "pauli_fierz"), "wcl-reduced")
        t = _num(payload.get("t", 1.0), "t")
        if kind == "friedrichs":
            model = _friedrichs_from(payload)
            lams = list(lambdas if lambdas is not None
                        else payload.get("lambda_schedule", _WCL_LAMBDAS))
            rows = reduced_wcl_experiment(model, t, lams)
        else:
            model = _pauli_fierz_from(payload)
            lams = list(lambdas if lambdas is not None
                        else payload.get("lambda_schedule", _PF_LAMBDAS))
            d = model.dim
            obs = (_cmatrix(payload["observable"], "observable")
                   if "observable" in payload
                   else basis_matrix(d, d - 1, d - 1))
            n_max = nmax if nmax is not None else payload.get("n_max", 2)
            rows = reduced_wcl_pf_experiment(model, lams, t, obs,
                                             n_max=n_max)
        report.tables["reduced"] = rows
        _monotone_check(report, rows)

    report = _run("wcl-reduced", path, build, seed=seed, tols=tols,
                  lambdas=lambdas, nmax=nmax)
    if out is not None:
        write_outputs(report, out)
    return report


def cmd_wcl_extended(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                     lambdas=None, grid=None, nmax=None) -> Report:
    """Extended weak-coupling convergence table with isometry residuals."""

    def build(kind, payload, report):
        _require_kind(kind, ("friedrichs",), "wcl-extended")
        model = _friedrichs_from(payload)
        t = _num(payload.get("t", 1.0), "t")
        t0 = _num(payload.get("t0", 0.0), "t0")
        lams = list(lambdas if lambdas is not None
                    else payload.get("lambda_schedule", _WCL_LAMBDAS))
        rows = extended_wcl_experiment(model, t, t0, lams)
        report.tables["extended"] = rows
        _monotone_check(report, rows)
        # embedding isometries on the same asymptotic grids as the rows
        theta, du = 0.7, 0.1
        w_min = min(min(w.k - w.a, w.b - w.k) for w in model.windows)
        iso_rows = []
        jtol = _tol(tols, "isometry", 1e-10)
        worst = 0.0
        for lam in sorted(lams, reverse=True):
            m = int(round(theta * w_min / lam ** 2 / du))
            g = reservoir_grid((m + 0.5) * du, 2 * m + 1)
            j = build_j_lambda(model, g, lam)
            res = float(frob(j.T @ j - np.eye(j.shape[1])))
            worst = max(worst, res)
            iso_rows.append({"lambda": lam, "j_residual": res})
        report.tables["isometry"] = iso_rows
        report.add("isometry_residuals", worst <= jtol, residual=worst,
                   tolerance=jtol)

    report = _run("wcl-extended", path, build, seed=seed, tols=tols,
                  lambdas=lambdas)
    if out is not None:
        write_outputs(report, out)
    return report


def cmd_toy_dilation(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                     lambdas=None, grid=None, nmax=None) -> Report:
    """Refinement table for the one-level unitary dilation."""

    def build(kind, payload, report):
        _require_kind(kind, ("toy_dilation",), "toy-dilation")
        if "upsilon" not in payload:
            raise InputError("toy_dilation payload needs upsilon")
        ups = _cmatrix(payload["upsilon"], "upsilon")
        t = _num(payload.get("t", 1.0), "t")
        ladder = _toy_ladder(payload, grid)
        rows = refinement_table(ups, t, ladder)
        report.tables["refinement"] = rows
        if len(rows) > 1:
            _monotone_check(report, rows)

    report = _run("toy-dilation", path, build, seed=seed, tols=tols,
                  grid=grid)
    if out is not None:
        write_outputs(report, out)
    return report


def cmd_langevin(path, *, out=None, seed=DEFAULT_SEED, tols=None,
                 lambdas=None, grid=None, nmax=None) -> Report:
    """Truncated-Fock reduction check, with optional energy and basis dump."""

    def build(kind, payload, report):
        _require_kind(kind, ("langevin",), "langevin")
        ups, nu, rgrid, n_max = _langevin_parts(payload, grid, nmax)
        t = _num(payload.get("t", 1.0), "t")
        d = ups.shape[0]
        obs = (_cmatrix(payload["observable"], "observable")
               if "observable" in payload else np.eye(d, dtype=complex))
        fock = build_fock(len(nu) * rgrid.n, n_max)
        gen = build_langevin_Z(ups, nu, rgrid, fock)
        err_semi, err_cp = langevin_reduction_check(gen, t, obs)
        report.tables["reduction"] = [{
            "t": t, "n_modes": fock.modes, "n_max": n_max,
            "fock_dim": fock.dim, "err_semigroup": float(err_semi),
            "err_cp": float(err_cp)}]
        # single-quantum sector must agree with the direct dilation built
        # from the same noise factorization; the orderings only coincide
        # for a scalar system
        if d == 1:
            block = one_excitation_block(gen)
            rowed = np.array([[b[0, 0]] for b in nu], dtype=complex)
            zref = build_zr(ContractionGenerator(upsilon=ups, nu=rowed),
                            rgrid).z
            res = float(frob(block - zref))
            otol = _tol(tols, "one_excitation", 1e-12) * (1.0 + frob(zref))
            report.add("one_excitation_matches_toy", res <= otol,
                       residual=res, tolerance=otol)
        else:
            report.skip("one_excitation_matches_toy",
                        detail="defined for scalar systems only")
        if "y" in payload:
            y = _cmatrix(payload["y"], "y")
            k = 0.5 * (ups + dag(ups))
            e = total_energy(k, y, gen)
            cres = float(commutation_residual(e, gen.z))
            etol = _tol(tols, "energy", 1e-10) * (1.0 + frob(k))
            report.add("energy_commutes", cres <= etol, residual=cres,
                       tolerance=etol)
        if payload.get("dump_basis"):
            report.tables["basis"] = [
                {"index": i, "occupation": "-".join(str(n) for n in occ)}
                for i, occ in enumerate(fock.basis)]

    report = _run("langevin", path, build, seed=seed, tols=tols, grid=grid,
                  nmax=nmax)
    if out is not None:
        write_outputs(report, out)
    return report


COMMANDS = {
    "validate": cmd_validate,
    "canonical": cmd_canonical,
    "stinespring": cmd_stinespring,
    "dbc": cmd_dbc,
    "davies": cmd_davies,
    "wcl-reduced": cmd_wcl_reduced,
    "wcl-extended": cmd_wcl_extended,
    "toy-dilation": cmd_toy_dilation,
    "langevin": cmd_langevin,
}
