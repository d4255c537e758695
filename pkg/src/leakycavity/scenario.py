"""Scenario files, sweep evaluation and the result table.

A scenario is a flat ``key = value`` file with the sections ``[geometry]``,
``[drive]``, ``[thermal]``, ``[sweep]`` and ``[output]``.  Lengths are in
meters, durations in seconds, frequencies in inverse meters (natural units
with c = 1).  Every sweep point is evaluated independently so the rows can
be computed by a process pool and re-ordered by index afterwards.
"""
from __future__ import annotations

import configparser
import contextlib
import csv
import enum
import functools
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np
import scipy.constants as const

from . import oracle, rwa
from .coupling import (RESONANCE_RTOL, DriveSpec, effective_params, find_resonant_partner)
from .design import geometry_for_eta, resonant_geometry
from .errors import ScenarioError, SpectralError
from .spectral import CavityGeometry, Dominance, lowest_mode, mirror_properties, spectrum

COLUMNS = ("sweep_param", "sweep_value", "omega_L", "omega_R", "eta", "Q", "xi", "chi",
           "regime", "beta", "n0_L", "n0_R", "duration", "n_L_rwa", "n_R_rwa",
           "n_L_oracle", "n_R_oracle")
SWEEP_PARAMS = ("gamma", "beta", "epsilon", "duration", "omega_drive")
SECTIONS = ("geometry", "drive", "thermal", "sweep", "output")

#: meters of light travel per second
SPEED_OF_LIGHT = const.c
#: hbar c / k_B in meter kelvin, so beta[m] = HBAR_C_OVER_KB / T[K]
HBAR_C_OVER_KB = const.hbar * const.c / const.k


class Engine(enum.Enum):
    RWA = "rwa"
    ORACLE = "oracle"
    BOTH = "both"

    @property
    def uses_rwa(self) -> bool:
        return self is not Engine.ORACLE

    @property
    def uses_oracle(self) -> bool:
        return self is not Engine.RWA


@dataclass(frozen=True)
class GeometrySpec:
    """Geometry as written in the scenario; resolved per sweep point.

    Exactly one of ``gamma``/``eta`` is set unless ``ideal``.  With
    ``tune_reservoir`` the reservoir length is solved so a reservoir mode
    sits at ``partner_ratio`` times the cavity frequency, and ``c`` (if
    given) only picks the nominal reservoir length.
    """

    a0: float
    b: float
    c: Optional[float]
    gamma: Optional[float] = None
    eta: Optional[float] = None
    k_perp: float = 0.0
    ideal: bool = False
    tune_reservoir: bool = False
    partner_ratio: float = 3.0

    @property
    def left_length(self) -> float:
        return self.b - self.a0


@dataclass(frozen=True)
class DriveConfig:
    epsilon: float
    omega_drive: Optional[float]  # None: resonant, 2 * Omega_L
    duration: float  # seconds


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"
    relative: bool = False

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class Scenario:
    geometry: GeometrySpec
    drive: DriveConfig
    beta: float = math.inf  # meters; inf is the vacuum
    engine: Engine = Engine.RWA
    sweep: Optional[SweepSpec] = None
    output_path: Optional[str] = None
    oracle_modes: int = 6
    oracle_steps_per_period: float = 40.0
    jobs: int = 1

    def __post_init__(self):
        if self.sweep is not None and self.sweep.param == "omega_drive" and not self.engine.uses_oracle:
            raise ScenarioError("sweep: omega_drive sweeps need engine = oracle or both "
                                "(the rwa engine rejects detuned drives)")

    def points(self) -> list[tuple[int, Optional[float]]]:
        if self.sweep is None:
            return [(0, None)]
        return list(enumerate(float(v) for v in self.sweep.values()))


@dataclass
class Row:
    index: int
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


class StageFailure(Exception):
    """A library error tagged with the module that raised it."""

    def __init__(self, module: str, error: BaseException):
        super().__init__(f"{module}: {error}")
        self.module = module
        self.error = error


@contextlib.contextmanager
def stage(module: str):
    try:
        yield
    except StageFailure:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise StageFailure(module, exc) from exc


# -- parsing ---------------------------------------------------------------

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _float(sec, key, default=None, required=False):
    raw = sec.get(key)
    if raw is None or raw.strip() == "":
        if required:
            raise ScenarioError(f"[{sec.name}] {key} is required")
        return default
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"[{sec.name}] {key} = {raw!r} is not a number") from None


def _bool(sec, key, default=False):
    raw = sec.get(key)
    if raw is None:
        return default
    v = raw.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ScenarioError(f"[{sec.name}] {key} = {raw!r} is not a boolean")


def _check_keys(sec, allowed):
    extra = sorted(set(sec.keys()) - set(allowed))
    if extra:
        raise ScenarioError(f"[{sec.name}] unknown key(s): {', '.join(extra)}")


def _parse_geometry(sec) -> GeometrySpec:
    _check_keys(sec, ("a0", "b", "c", "gamma", "eta", "k_perp", "ideal", "tune_reservoir",
                      "partner_ratio"))
    a0 = _float(sec, "a0", 0.0)
    b = _float(sec, "b", required=True)
    tune = _bool(sec, "tune_reservoir")
    c = _float(sec, "c", required=not tune)
    gamma, eta = _float(sec, "gamma"), _float(sec, "eta")
    ideal = _bool(sec, "ideal")
    if ideal:
        if gamma is not None or eta is not None:
            raise ScenarioError("[geometry] ideal = true excludes gamma and eta")
        if tune:
            raise ScenarioError("[geometry] ideal = true excludes tune_reservoir")
    elif (gamma is None) == (eta is None):
        raise ScenarioError("[geometry] give exactly one of gamma or eta (or ideal = true)")
    if gamma is not None and not gamma > 0:
        raise ScenarioError("[geometry] gamma must be positive")
    if eta is not None and not 0 < eta < 1:
        raise ScenarioError("[geometry] eta must lie in (0, 1)")
    if not b > a0 or (c is not None and not c > b):
        raise ScenarioError("[geometry] need a0 < b < c")
    k_perp = _float(sec, "k_perp", 0.0)
    if not (k_perp >= 0 and math.isfinite(k_perp)):
        raise ScenarioError("[geometry] k_perp must be finite and >= 0")
    ratio = _float(sec, "partner_ratio", 3.0)
    if not ratio > 1:
        raise ScenarioError("[geometry] partner_ratio must exceed 1")
    return GeometrySpec(a0, b, c, gamma, eta, k_perp, ideal, tune, ratio)


def _parse_drive(sec) -> DriveConfig:
    _check_keys(sec, ("epsilon", "omega_drive", "duration"))
    eps = _float(sec, "epsilon", required=True)
    if not 0 <= eps < 1:
        raise ScenarioError("[drive] epsilon must lie in [0, 1)")
    raw = (sec.get("omega_drive") or "resonant").strip().lower()
    omega = None if raw == "resonant" else _float(sec, "omega_drive")
    if omega is not None and not omega > 0:
        raise ScenarioError("[drive] omega_drive must be positive or 'resonant'")
    duration = _float(sec, "duration", required=True)
    if not duration >= 0:
        raise ScenarioError("[drive] duration must be >= 0")
    return DriveConfig(eps, omega, duration)


def _parse_thermal(sec) -> float:
    if sec is None:
        return math.inf
    _check_keys(sec, ("beta", "temperature", "vacuum"))
    vac = _bool(sec, "vacuum")
    beta, temp = _float(sec, "beta"), _float(sec, "temperature")
    given = sum(x is not None for x in (beta, temp)) + vac
    if given > 1:
        raise ScenarioError("[thermal] give only one of beta, temperature or vacuum")
    if temp is not None:
        if not temp >= 0:
            raise ScenarioError("[thermal] temperature must be >= 0")
        return math.inf if temp == 0 else HBAR_C_OVER_KB / temp
    if beta is not None:
        if not beta > 0:
            raise ScenarioError("[thermal] beta must be positive")
        return beta
    return math.inf


def _parse_sweep(sec) -> Optional[SweepSpec]:
    if sec is None:
        return None
    _check_keys(sec, ("param", "start", "stop", "points", "spacing", "relative"))
    param = (sec.get("param") or "").strip()
    if param not in SWEEP_PARAMS:
        raise ScenarioError(f"[sweep] param must be one of {', '.join(SWEEP_PARAMS)}")
    start, stop = _float(sec, "start", required=True), _float(sec, "stop", required=True)
    try:
        points = int(sec.get("points", "0"))
    except ValueError:
        raise ScenarioError("[sweep] points must be an integer") from None
    if points < 1:
        raise ScenarioError("[sweep] points must be >= 1 (an empty sweep has no rows)")
    spacing = (sec.get("spacing") or "linear").strip().lower()
    if spacing not in ("linear", "log"):
        raise ScenarioError("[sweep] spacing must be linear or log")
    if spacing == "log" and not (start > 0 and stop > 0):
        raise ScenarioError("[sweep] log spacing needs positive start and stop")
    relative = _bool(sec, "relative")
    if relative and param != "omega_drive":
        raise ScenarioError("[sweep] relative applies to omega_drive only")
    return SweepSpec(param, start, stop, points, spacing, relative)


def parse_scenario(text: str) -> Scenario:
    """Build a :class:`Scenario` from scenario-file text."""
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   interpolation=None, delimiters=("=",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ScenarioError(f"unknown section(s): {', '.join(unknown)}")
    for name in ("geometry", "drive"):
        if not cp.has_section(name):
            raise ScenarioError(f"missing section [{name}]")
    get = lambda n: cp[n] if cp.has_section(n) else None  # noqa: E731
    out = get("output")
    kw = {}
    if out is not None:
        _check_keys(out, ("path", "engine", "oracle_modes", "oracle_steps_per_period", "jobs"))
        if out.get("path"):
            kw["output_path"] = out["path"].strip()
        if out.get("engine"):
            kw["engine"] = parse_engine(out["engine"])
        try:
            if out.get("oracle_modes"):
                kw["oracle_modes"] = int(out["oracle_modes"])
            if out.get("jobs"):
                kw["jobs"] = int(out["jobs"])
        except ValueError:
            raise ScenarioError("[output] oracle_modes and jobs must be integers") from None
        spp = _float(out, "oracle_steps_per_period")
        if spp is not None:
            kw["oracle_steps_per_period"] = spp
    scn = Scenario(_parse_geometry(cp["geometry"]), _parse_drive(cp["drive"]),
                   _parse_thermal(get("thermal")), sweep=_parse_sweep(get("sweep")), **kw)
    validate(scn)
    return scn


def parse_engine(name: str) -> Engine:
    try:
        return Engine(name.strip().lower())
    except ValueError:
        raise ScenarioError(f"engine must be rwa, oracle or both, got {name!r}") from None


def validate(scn: Scenario) -> None:
    if scn.oracle_modes < 2:
        raise ScenarioError("[output] oracle_modes must be >= 2")
    if scn.oracle_steps_per_period < 1.0 / oracle.STEP_FRACTION:
        raise ScenarioError(f"[output] oracle_steps_per_period must be >= "
                            f"{1.0 / oracle.STEP_FRACTION:g}")
    if scn.jobs < 1:
        raise ScenarioError("[output] jobs must be >= 1")
    sw = scn.sweep
    if sw is None:
        return
    lo = min(sw.start, sw.stop)
    if sw.param == "gamma" and scn.geometry.ideal:
        raise ScenarioError("[sweep] gamma sweep needs a finite mirror (ideal = false)")
    if sw.param in ("gamma", "beta", "omega_drive") and not lo > 0:
        raise ScenarioError(f"[sweep] {sw.param} values must be positive")
    if sw.param in ("epsilon", "duration") and not lo >= 0:
        raise ScenarioError(f"[sweep] {sw.param} values must be >= 0")
    if sw.param == "epsilon" and not max(sw.start, sw.stop) < 1:
        raise ScenarioError("[sweep] epsilon values must be < 1")


def with_overrides(scn: Scenario, engine: Optional[Engine] = None,
                   output_path: Optional[str] = None, jobs: Optional[int] = None) -> Scenario:
    kw = {}
    if engine is not None:
        kw["engine"] = engine
    if output_path is not None:
        kw["output_path"] = output_path
    if jobs is not None:
        kw["jobs"] = jobs
    new = replace(scn, **kw)
    validate(new)
    return new


# -- evaluation ------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def resolve_geometry(spec: GeometrySpec, gamma: Optional[float] = None) -> CavityGeometry:
    """Concrete geometry, with ``gamma`` overriding ``spec.gamma``."""
    if spec.ideal:
        return CavityGeometry.ideal(spec.a0, spec.b, spec.c, spec.k_perp)
    nominal = None if spec.c is None else spec.c - spec.b
    if gamma is None:
        gamma = spec.gamma
    if spec.tune_reservoir:
        if gamma is None:
            return geometry_for_eta(spec.left_length, spec.k_perp, spec.eta, spec.partner_ratio,
                                    nominal, spec.a0)
        return resonant_geometry(spec.left_length, spec.k_perp, gamma, spec.partner_ratio,
                                 nominal, spec.a0)
    if gamma is None:
        gamma = _gamma_for_eta(spec)
    return CavityGeometry(spec.a0, spec.b, spec.c, gamma, spec.k_perp)


def _gamma_for_eta(spec: GeometrySpec, maxiter: int = 50) -> float:
    gamma = math.pi / (spec.left_length * spec.eta)
    for _ in range(maxiter):
        g = CavityGeometry(spec.a0, spec.b, spec.c, gamma, spec.k_perp)
        new = lowest_mode(_spectrum(g, 1.5 * math.pi / spec.left_length)).omega_x / spec.eta
        if abs(new - gamma) <= 1e-14 * gamma:
            return new
        gamma = new
    raise SpectralError("mirror strength for the requested eta did not converge")


def _spectrum(geom: CavityGeometry, omega_x_max: float):
    return spectrum(geom, omega_x_max)


def _omega_x_ceiling(geom: CavityGeometry, omega: float) -> float:
    return math.sqrt(max(omega * omega - geom.k_perp ** 2, 0.0)) + 1.0 / geom.left_length


def mode_set(geom: CavityGeometry, ratio: float, n_modes: int):
    """(spectrum, cavity mode, reservoir partner or None) for a resonant drive."""
    ideal_l = math.hypot(math.pi / geom.left_length, geom.k_perp)
    ceiling = _omega_x_ceiling(geom, 1.2 * ratio * ideal_l)
    spec = _spectrum(geom, ceiling)
    while len(spec) < n_modes + 2:
        ceiling *= 1.5
        spec = _spectrum(geom, ceiling)
    mode_l = lowest_mode(spec, Dominance.LEFT)
    partner = find_resonant_partner(spec, mode_l, (ratio - 1.0) * mode_l.omega0)
    return spec, mode_l, partner


def _sweep_value(scn: Scenario, value: Optional[float]):
    """Scenario inputs at one sweep point: (gamma override, epsilon, omega, T[s], beta)."""
    d = scn.drive
    gamma, eps, omega, dur, beta = None, d.epsilon, d.omega_drive, d.duration, scn.beta
    if scn.sweep is not None:
        p = scn.sweep.param
        if p == "gamma":
            gamma = value
        elif p == "epsilon":
            eps = value
        elif p == "duration":
            dur = value
        elif p == "beta":
            beta = value
        elif p == "omega_drive":
            omega = ("relative", value) if scn.sweep.relative else value
    return gamma, eps, omega, dur, beta


def evaluate_point(scn: Scenario, index: int, value: Optional[float]) -> Row:
    """One result row.  Errors are tagged with the module that failed."""
    gamma, eps, omega_in, dur_s, beta = _sweep_value(scn, value)
    with stage("spectral"):
        geom = resolve_geometry(scn.geometry, gamma)
        spec, mode_l, mode_r = mode_set(geom, scn.geometry.partner_ratio, scn.oracle_modes)
    resonant = 2.0 * mode_l.omega0
    if omega_in is None:
        omega = resonant
    elif isinstance(omega_in, tuple):
        omega = omega_in[1] * resonant
    else:
        omega = omega_in
    duration = dur_s * SPEED_OF_LIGHT
    with stage("coupling"):
        drive = DriveSpec(eps, omega, duration)
        on_resonance = abs(omega - resonant) <= RESONANCE_RTOL * resonant
        params = effective_params(geom, drive, mode_l, mode_r) if on_resonance else None
    with stage("rwa"):
        n0_l = rwa.bose_einstein(beta, mode_l.omega0)
        n0_r = rwa.bose_einstein(beta, mode_r.omega0) if mode_r is not None else None
        state = rwa.ThermalState(beta, n0_l, n0_r or 0.0)
    q = math.inf if geom.is_ideal else mirror_properties(geom.gamma, mode_l.omega_x).quality
    v = {
        "sweep_param": scn.sweep.param if scn.sweep else None,
        "sweep_value": value,
        "omega_L": mode_l.omega0,
        "omega_R": mode_r.omega0 if mode_r is not None else None,
        "eta": mode_l.eta_mu,
        "Q": q,
        "xi": params.xi if params else None,
        "chi": params.chi if params else None,
        "regime": rwa.classify(params.xi, params.chi).value if params else None,
        "beta": beta,
        "n0_L": n0_l,
        "n0_R": n0_r,
        "duration": dur_s,
        "n_L_rwa": None, "n_R_rwa": None, "n_L_oracle": None, "n_R_oracle": None,
    }
    if scn.engine.uses_rwa and params is not None:
        with stage("rwa"):
            res = rwa.response(rwa.build_generator(params), state, duration)
            v["n_L_rwa"] = res.n_L
            v["n_R_rwa"] = res.n_R if mode_r is not None else None
    if scn.engine.uses_oracle:
        with stage("oracle"):
            modes = oracle.select_modes(spec, mode_l, mode_r, scn.oracle_modes)
            coeffs = oracle.assemble_time_dependent_hamiltonian(geom, drive, modes)
            step = 2.0 * math.pi / coeffs.max_frequency() / scn.oracle_steps_per_period
            ts = oracle.integrate_transfer(coeffs, duration, step=step)
            n = oracle.particle_numbers(ts, state)
            v["n_L_oracle"] = float(n[0])
            v["n_R_oracle"] = float(n[1]) if mode_r is not None else None
    return Row(index, v)


def _evaluate_star(args):
    return evaluate_point(*args)


def run(scn: Scenario) -> list[Row]:
    """Evaluate every sweep point; rows come back ordered by sweep index."""
    tasks = [(scn, i, v) for i, v in scn.points()]
    if scn.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(scn.jobs, len(tasks))) as pool:
            rows = list(pool.map(_evaluate_star, tasks))
    else:
        rows = [_evaluate_star(t) for t in tasks]
    rows.sort(key=lambda r: r.index)
    return rows


# -- CSV -------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def format_csv(rows: Iterable[Row]) -> str:
    rows = list(rows)
    if not rows:
        raise ScenarioError("result table is empty")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.values[c]) for c in COLUMNS])
    return buf.getvalue()


def emit_csv(rows: Iterable[Row], path: str) -> None:
    text = format_csv(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


_TEXT_COLUMNS = {"sweep_param", "regime"}


def parse_csv(text: str) -> list[dict]:
    """Inverse of :func:`format_csv`: empty fields become None."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ScenarioError("unexpected CSV header")
    out = []
    for rec in reader:
        out.append({c: (None if s == "" else s if c in _TEXT_COLUMNS else float(s))
                    for c, s in zip(header, rec)})
    return out
