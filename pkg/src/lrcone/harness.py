"""Sweep the exact-dynamics oracle against the bound engine and report.

A sweep is described by a :class:`SweepConfig` (JSON). Each check returns a
:class:`Section` made of asserted :class:`Check` entries plus unasserted
records (fitted constants, exponents, ratios). Assertions always compare two
independently computed quantities; fitted exponents from measured data are
reported only.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import scipy
from scipy import stats

from lrcone import __version__
from lrcone.bounds import compare_bounds, epsilon_domain, theorem_envelope
from lrcone.dynamics import (
    CSV_HEADER,
    NORM_KINDS,
    EvolutionContext,
    LeakageCurve,
    connected_correlator,
    evolve,
    format_float,
    is_product_across,
    leakage_curve,
    product_state,
    site_commutator,
    truncation_error,
)
from lrcone.errors import ConfigError, DomainError
from lrcone.lattice import ENSEMBLES, PAULI, PowerLawHamiltonian, build_lattice, sample_hamiltonian, site_operator
from lrcone.pauli import op_norm, partial_trace_restrict

__all__ = [
    "CHECK_NAMES",
    "SweepConfig",
    "Check",
    "Section",
    "VerificationReport",
    "FrontFit",
    "fit_front",
    "fit_tail",
    "derive_seeds",
    "run_verification",
    "write_run",
]

DEFAULT_THETA = 0.1
THETA_SENSITIVITY = (0.05, 0.1, 0.2)
MIN_FIT_POINTS = 3


# --------------------------------------------------------------------------
# configuration


def _strictly_increasing(name, values):
    if len(values) == 0:
        raise ConfigError(f"{name} must be non-empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{name} must be strictly increasing, got {list(values)}")


@dataclass(frozen=True)
class SweepConfig:
    """Everything a verification run depends on; hashed to name the run directory."""

    lattice: dict
    alphas: tuple[float, ...] = (2.5,)
    ensemble: str = "ising_zz"
    seeds: tuple[int, ...] = (0,)
    root_seed: int | None = None
    n_samples: int | None = None
    hamiltonian: dict | None = None
    center: int = 0
    operator: str = "X"
    r_grid: tuple[float, ...] = (1.0,)
    t_grid: tuple[float, ...] = (0.5, 1.0)
    norm_kind: str = "operator"
    theta: float = DEFAULT_THETA
    fit_method: str = "loglog_lstsq"
    epsilon: float | None = None
    envelope_c: float = 1.0
    cap: float = 1e3
    stability: float = 0.5
    tol: float = 1e-9
    truncation_times: tuple[float, ...] = (0.5, 1.0)
    correlator_times: tuple[float, ...] = (0.5, 1.0)
    state: str = "zeros"
    checks: tuple[str, ...] | None = None
    name: str = "sweep"

    def __post_init__(self):
        lat = self.lattice
        if not isinstance(lat, dict) or set(lat) - {"d", "extents", "metric"}:
            raise ConfigError(f"lattice must be an object with keys d, extents, metric; got {lat!r}")
        for name in ("r_grid", "t_grid", "alphas", "truncation_times", "correlator_times"):
            _strictly_increasing(name, getattr(self, name))
        if not 0 < self.theta < 1:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if self.norm_kind not in NORM_KINDS:
            raise ConfigError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")
        if self.hamiltonian is None and self.ensemble not in ENSEMBLES:
            raise ConfigError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        if self.operator not in ("X", "Y", "Z"):
            raise ConfigError(f"operator must be a Pauli letter, got {self.operator!r}")
        if self.fit_method != "loglog_lstsq":
            raise ConfigError(f"unsupported fit method {self.fit_method!r}")
        if self.tol < 0 or self.cap <= 0:
            raise ConfigError("tol must be >= 0 and cap > 0")
        if (self.root_seed is None) != (self.n_samples is None):
            raise ConfigError("root_seed and n_samples go together")
        if self.checks is not None:
            unknown = set(self.checks) - set(CHECK_NAMES)
            if unknown:
                raise ConfigError(f"unknown checks {sorted(unknown)}; known: {list(CHECK_NAMES)}")
        if min(self.t_grid) < 0 or min(self.r_grid) <= 0:
            raise ConfigError("t_grid must be >= 0 and r_grid > 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "lattice" not in doc:
            raise ConfigError("config needs a 'lattice' entry")
        kw = dict(doc)
        for key in ("alphas", "seeds", "r_grid", "t_grid", "truncation_times", "correlator_times", "checks"):
            if kw.get(key) is not None:
                kw[key] = tuple(kw[key])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "SweepConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def sample_seeds(self) -> list[int]:
        if self.root_seed is not None:
            return derive_seeds(self.root_seed, self.n_samples)
        return list(self.seeds)


def derive_seeds(root_seed: int, count: int) -> list[int]:
    """Independent child seeds: 32-bit words of ``SeedSequence(root_seed).spawn(count)``."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(root_seed).spawn(count)]


# --------------------------------------------------------------------------
# report types


@dataclass
class Check:
    name: str
    passed: bool
    measured: Any
    reference: Any
    tolerance: Any

    def __post_init__(self):
        self.passed = bool(self.passed)
        for name in ("measured", "reference", "tolerance"):
            value = getattr(self, name)
            if isinstance(value, (np.floating, np.integer)):
                setattr(self, name, value.item())

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class Section:
    name: str
    checks: list[Check] = field(default_factory=list)
    records: dict = field(default_factory=dict)
    rows: list[list[str]] = field(default_factory=list)
    header: tuple[str, ...] = ()
    skipped: str | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "skipped": self.skipped,
            "checks": [c.to_dict() for c in self.checks],
            "records": self.records,
        }


@dataclass
class VerificationReport:
    config: SweepConfig
    sections: list[Section]
    environment: dict
    timestamp: float = field(default_factory=time.time)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.sections)

    @property
    def failures(self) -> list[str]:
        return [f"{s.name}:{c.name}" for s in self.sections for c in s.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "config_hash": self.config.digest(),
            "passed": self.passed,
            "failures": self.failures,
            "sections": [s.to_dict() for s in self.sections],
            "environment": self.environment,
            "timestamp": self.timestamp,
        }


def _environment(config: SweepConfig) -> dict:
    return {
        "lrcone": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seeds": config.sample_seeds(),
        "root_seed": config.root_seed,
    }


# --------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class FrontFit:
    slope: float
    intercept: float
    stderr: float
    crossings: dict  # r -> t*(r)
    excluded: list   # r values without a crossing


def _crossing(ts: np.ndarray, vals: np.ndarray, theta: float) -> float | None:
    hit = np.flatnonzero(vals >= theta)
    if hit.size == 0:
        return None
    k = int(hit[0])
    if k == 0:
        return float(ts[0])
    t0, t1, v0, v1 = ts[k - 1], ts[k], vals[k - 1], vals[k]
    if v0 > 0 and t0 > 0:
        # interpolate in log-log, exact for power laws
        s = (math.log(theta) - math.log(v0)) / (math.log(v1) - math.log(v0))
        return float(math.exp(math.log(t0) + s * (math.log(t1) - math.log(t0))))
    return float(t0 + (theta - v0) * (t1 - t0) / (v1 - v0))


def _linfit(x, y):
    res = stats.linregress(np.log(x), np.log(y))
    return float(res.slope), float(res.intercept), float(res.stderr)


def fit_front(curve: LeakageCurve, theta: float = DEFAULT_THETA) -> FrontFit:
    """Slope of log t*(r) against log r, t*(r) the earliest crossing of ``theta``.

    Radii whose curve never reaches ``theta`` are excluded and listed.
    """
    if not 0 < theta < 1:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    crossings, excluded = {}, []
    for a, r in enumerate(curve.r_grid):
        t_star = _crossing(np.asarray(curve.t_grid, dtype=float), np.asarray(curve.values[a]), theta)
        if t_star is None or t_star <= 0:
            excluded.append(float(r))
        else:
            crossings[float(r)] = t_star
    if len(crossings) < MIN_FIT_POINTS:
        raise DomainError(f"only {len(crossings)} radii cross theta={theta}; need {MIN_FIT_POINTS}")
    rs = np.array(list(crossings))
    slope, intercept, stderr = _linfit(rs, np.array(list(crossings.values())))
    return FrontFit(slope, intercept, stderr, crossings, excluded)


def fit_tail(r_grid: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """(slope, intercept, stderr) of log value against log r, over nonzero values."""
    r = np.asarray(r_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if np.count_nonzero(np.unique(r[keep])) < MIN_FIT_POINTS:
        raise DomainError(f"need {MIN_FIT_POINTS} distinct radii with nonzero values, got {np.count_nonzero(keep)}")
    return _linfit(r[keep], v[keep])


# --------------------------------------------------------------------------
# systems


@dataclass(frozen=True, eq=False)
class System:
    alpha: float
    seed: int | None
    hamiltonian: PowerLawHamiltonian
    ctx: EvolutionContext

    @property
    def lattice(self):
        return self.hamiltonian.lattice

    @property
    def key(self):
        return (self.alpha, -1 if self.seed is None else self.seed)


def build_systems(config: SweepConfig, pool: ThreadPoolExecutor) -> list[System]:
    if config.hamiltonian is not None:
        h = PowerLawHamiltonian.from_dict(config.hamiltonian)
        specs = [(h.alpha, h.seed, h)]
    else:
        lat = build_lattice(config.lattice["d"], config.lattice["extents"], config.lattice.get("metric", "euclidean"))
        specs = [(a, s, None) for a in config.alphas for s in config.sample_seeds()]

    def make(item):
        alpha, seed, h = item
        if h is None:
            h = sample_hamiltonian(lat, alpha, config.ensemble, seed)
        return System(alpha, seed, h, EvolutionContext.from_hamiltonian(h))

    systems = list(pool.map(make, specs))
    if not 0 <= config.center < systems[0].hamiltonian.n_qubits:
        raise ConfigError(f"center {config.center} is not a lattice site")
    return sorted(systems, key=lambda s: s.key)


def _operator(config: SweepConfig, n: int) -> np.ndarray:
    return site_operator(config.operator, config.center, n)


# --------------------------------------------------------------------------
# checks


def check_closed_form(config, systems, pool) -> Section:
    """2-site ZZ coupling: leakage |sin 2Jt| and exterior commutator 2|sin 2Jt|."""
    sec = Section("closed_form")
    sys0 = systems[0]
    h = sys0.hamiltonian
    zz = np.kron(PAULI["Z"], PAULI["Z"])
    if h.n_qubits != 2 or len(h.terms) != 1 or config.operator == "Z":
        sec.skipped = "needs a single ZZ-coupled pair and an X or Y operator"
        return sec
    for s in systems:
        m = s.hamiltonian.terms[0].matrix
        J = float(m[0, 0].real)
        if not np.allclose(m, J * zz, atol=1e-14):
            sec.skipped = "coupling is not of ZZ form"
            return sec
    worst_leak = worst_comm = 0.0
    ts = np.asarray(config.t_grid)
    for s in systems:
        J = float(s.hamiltonian.terms[0].matrix[0, 0].real)
        O = _operator(config, 2)
        curve = leakage_curve(s.ctx, O, config.center, [1.0], ts)
        other = 1 - config.center
        for b, t in enumerate(ts):
            ref = abs(math.sin(2 * J * t))
            Ot = evolve(s.ctx, O, t)
            comm = max(op_norm(site_commutator(Ot, l, other, 2)) for l in "XYZ")
            worst_leak = max(worst_leak, abs(curve.values[0, b] - ref))
            worst_comm = max(worst_comm, abs(comm - 2 * ref))
    sec.checks.append(Check("leakage_equals_abs_sin", worst_leak < config.tol, worst_leak, 0.0, config.tol))
    sec.checks.append(Check("commutator_equals_2abs_sin", worst_comm < config.tol, worst_comm, 0.0, config.tol))
    return sec


def _sandwich_one(args):
    config, s = args
    n = s.hamiltonian.n_qubits
    lat = s.lattice
    O = _operator(config, n)
    rows, worst, ratios = [], -math.inf, []
    for t in config.t_grid:
        curve = leakage_curve(s.ctx, O, config.center, config.r_grid, [t])
        Ot = evolve(s.ctx, O, t)
        comms = {}
        for j in range(n):
            dj = lat.dist(config.center, j)
            if dj == 0:
                continue
            comms[j] = max(op_norm(site_commutator(Ot, l, j, n)) for l in "XYZ")
        for a, r in enumerate(config.r_grid):
            leak = float(curve.values[a, 0])
            exterior = [c for j, c in comms.items() if lat.dist(config.center, j) >= r]
            if not exterior:
                continue
            sup = max(exterior)
            worst = max(worst, sup - 2 * leak)
            if sup > 0:
                ratios.append(leak / sup)
            rows.append([format_float(s.alpha), str(s.seed), format_float(r), format_float(t),
                         format_float(leak), format_float(sup)])
    return rows, worst, ratios


def check_sandwich(config, systems, pool) -> Section:
    """Upper arm ||[A, O(t)]|| <= 2 ||P_r O(t)|| for every exterior single-site Pauli."""
    sec = Section("sandwich", header=("alpha", "seed", "r", "t", "leakage", "sup_commutator"))
    worst, ratios = -math.inf, []
    for rows, w, rat in pool.map(_sandwich_one, [(config, s) for s in systems]):
        sec.rows.extend(rows)
        worst = max(worst, w)
        ratios.extend(rat)
    if worst == -math.inf:
        sec.skipped = "no grid radius has sites at or beyond it"
        return sec
    sec.checks.append(Check("upper_arm", worst <= config.tol, worst, 0.0, config.tol))
    sec.records["leakage_over_sup"] = {"min": min(ratios, default=None), "max": max(ratios, default=None)}
    return sec


def _refine(ts: Sequence[float]) -> list[float]:
    out = [ts[0]]
    for a, b in zip(ts, ts[1:]):
        out += [(a + b) / 2, b]
    return out


def _epsilon_for(config, alpha, d):
    return config.epsilon if config.epsilon is not None else epsilon_domain(alpha, d) / 2


def _dominance_one(args):
    config, s = args
    d = s.lattice.d
    eps = _epsilon_for(config, s.alpha, d)
    O = _operator(config, s.hamiltonian.n_qubits)
    out = {}
    for label, ts in (("base", list(config.t_grid)), ("refined", _refine(list(config.t_grid)))):
        curve = leakage_curve(s.ctx, O, config.center, config.r_grid, ts, config.norm_kind)
        best, n_valid = 0.0, 0
        for r, t, v, _ in curve.points():
            if t <= 0:
                continue
            env = theorem_envelope(r, t, s.alpha, d, eps, 1.0, 1.0, config.envelope_c)
            if not env.valid:
                continue
            n_valid += 1
            best = max(best, v / env.value)
        out[label] = (best, n_valid, curve)
    return eps, out


def check_dominance(config, systems, pool) -> Section:
    """Smallest C with measured leakage <= C * envelope shape over the valid region."""
    sec = Section("dominance", header=CSV_HEADER)
    per_system, base, refined, total_valid = [], 0.0, 0.0, 0
    for s, (eps, out) in zip(systems, pool.map(_dominance_one, [(config, s) for s in systems])):
        b, nv, curve = out["base"]
        rb = out["refined"][0]
        base, refined, total_valid = max(base, b), max(refined, rb), total_valid + nv
        per_system.append({"alpha": s.alpha, "seed": s.seed, "epsilon": eps, "C_fit": b, "C_fit_refined": rb})
        sec.rows.extend(curve.csv_rows())
    if total_valid == 0:
        raise DomainError("dominance check: no grid point lies inside the envelope's validity region")
    sec.records["per_system"] = per_system
    sec.records["C_fit"] = base
    sec.records["C_fit_refined"] = refined
    change = 0.0 if base == refined else (abs(refined / base - 1) if base > 0 else math.inf)
    sec.checks.append(Check("C_fit_finite", math.isfinite(base), base, None, None))
    sec.checks.append(Check("C_fit_below_cap", base <= config.cap, base, config.cap, None))
    sec.checks.append(Check("C_fit_stable_under_refinement", change <= config.stability, change, 0.0, config.stability))
    return sec


def _truncation_one(args):
    config, s = args
    lat = s.lattice
    r_star = lat.diameter
    radii = sorted(set(float(r) for r in config.r_grid if r <= r_star) | {r_star})
    A = PAULI[config.operator]
    table = {}
    for t in config.truncation_times:
        table[t] = [truncation_error(s.hamiltonian, A, config.center, r, t, s.ctx) for r in radii]
    return radii, table


def check_truncation(config, systems, pool) -> Section:
    """||A(t) - A_r(t)|| is nonincreasing in r and vanishes at r = r*."""
    sec = Section("truncation", header=("alpha", "seed", "t", "r", "truncation_error"))
    worst_rise, worst_end, slopes = -math.inf, 0.0, []
    mono_tol = 1e-10
    for s, (radii, table) in zip(systems, pool.map(_truncation_one, [(config, s) for s in systems])):
        beta_prime = None
        if 2 * s.lattice.d < s.alpha < 2 * s.lattice.d + 1:
            beta_prime = float(compare_bounds(s.alpha, s.lattice.d).rows["B1"]["beta_prime"])
        for t, errs in table.items():
            for r, e in zip(radii, errs):
                sec.rows.append([format_float(s.alpha), str(s.seed), format_float(t), format_float(r), format_float(e)])
            rises = [b - a for a, b in zip(errs, errs[1:])]
            worst_rise = max([worst_rise] + rises)
            worst_end = max(worst_end, errs[-1])
            try:
                slope, _, stderr = fit_tail(radii[:-1], errs[:-1])
            except DomainError:
                slope = stderr = None
            slopes.append({"alpha": s.alpha, "seed": s.seed, "t": t, "slope": slope, "stderr": stderr,
                           "reference_minus_beta_prime": None if beta_prime is None else -beta_prime})
    sec.records["slopes"] = slopes
    if worst_rise > -math.inf:
        sec.checks.append(Check("monotone_in_r", worst_rise <= mono_tol, worst_rise, 0.0, mono_tol))
    sec.checks.append(Check("zero_at_diameter", worst_end <= mono_tol, worst_end, 0.0, mono_tol))
    return sec


def _correlator_one(args):
    config, s = args
    n = s.hamiltonian.n_qubits
    lat = s.lattice
    x = config.center
    psi = product_state(n, config.state, seed=s.seed)
    A = _operator(config, n)
    rows, worst, ratio = [], -math.inf, 0.0
    shape = None
    if 2 * lat.d < s.alpha < 2 * lat.d + 1:
        row = compare_bounds(s.alpha, lat.d).rows["B1"]
        shape = (float(row["gamma"]), float(row["beta"]))
    for t in config.correlator_times:
        At = evolve(s.ctx, A, t)
        for y in range(n):
            r = lat.dist(x, y)
            if r == 0:
                continue
            B = site_operator(config.operator, y, n)
            ball_x = lat.ball(x, r / 2, open_ball=True)
            ball_y = lat.ball(y, r / 2, open_ball=True)
            if not is_product_across(psi, ball_y, n):
                raise DomainError(f"initial state is not a product across the ball around site {y}")
            C = connected_correlator(s.ctx, A, B, psi, t, product_region=ball_x)
            Bt = evolve(s.ctx, B, t)
            dA = op_norm(At - partial_trace_restrict(At, ball_x, n))
            dB = op_norm(Bt - partial_trace_restrict(Bt, ball_y, n))
            rhs = 2 * dA + 2 * dB
            worst = max(worst, abs(C) - rhs)
            rows.append([format_float(s.alpha), str(s.seed), str(y), format_float(r), format_float(t),
                         format_float(abs(C)), format_float(rhs)])
            if shape is not None and t > 0:
                gamma, beta = shape
                ratio = max(ratio, abs(C) / (2 ** (beta + 2) * t**gamma / r**beta))
    return rows, worst, ratio


def check_correlator(config, systems, pool) -> Section:
    """|C(r,t)| <= 2||A(t) - A~(t)|| + 2||B(t) - B~(t)|| with A~ the ball-restricted A(t)."""
    sec = Section("correlator", header=("alpha", "seed", "site_b", "r", "t", "abs_correlator", "chain_bound"))
    worst, c_fit = -math.inf, 0.0
    for rows, w, ratio in pool.map(_correlator_one, [(config, s) for s in systems]):
        sec.rows.extend(rows)
        worst, c_fit = max(worst, w), max(c_fit, ratio)
    sec.checks.append(Check("chaining_inequality", worst <= config.tol, worst, 0.0, config.tol))
    sec.records["envelope_c_fit"] = c_fit
    sec.records["restriction"] = "normalized partial trace onto the open ball dist < r/2, tensored with identity"
    return sec


def check_front(config, systems, pool) -> Section:
    """Report (never assert) light-front slopes of measured leakage."""
    sec = Section("front")
    O_by_n = {}
    fits = []
    for s in systems:
        n = s.hamiltonian.n_qubits
        O = O_by_n.setdefault(n, _operator(config, n))
        curve = leakage_curve(s.ctx, O, config.center, config.r_grid, config.t_grid, config.norm_kind)
        entry = {"alpha": s.alpha, "seed": s.seed}
        for theta in sorted(set(THETA_SENSITIVITY) | {config.theta}):
            try:
                f = fit_front(curve, theta)
                entry[f"theta={theta}"] = {"slope": f.slope, "stderr": f.stderr, "excluded_r": f.excluded}
            except DomainError as exc:
                entry[f"theta={theta}"] = {"slope": None, "reason": str(exc)}
        fits.append(entry)
    sec.records["fits"] = fits
    return sec


def check_tail(config, systems, pool) -> Section:
    """Report (never assert) fixed-time decay slopes of measured leakage."""
    sec = Section("tail")
    fits = []
    for s in systems:
        O = _operator(config, s.hamiltonian.n_qubits)
        curve = leakage_curve(s.ctx, O, config.center, config.r_grid, config.t_grid, config.norm_kind)
        for b, t in enumerate(curve.t_grid):
            try:
                slope, _, stderr = fit_tail(curve.r_grid, curve.values[:, b])
            except DomainError:
                continue
            fits.append({"alpha": s.alpha, "seed": s.seed, "t": float(t), "slope": slope, "stderr": stderr,
                         "reference": -(s.alpha - s.lattice.d)})
    sec.records["fits"] = fits
    return sec


def synthetic_front_curve(r_grid, t_grid, p, C=1.0) -> LeakageCurve:
    """min(1, C t / r^p): threshold crossing at t* = theta r^p / C."""
    r = np.asarray(r_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    values = np.minimum(1.0, C * t[None, :] / r[:, None] ** p)
    return LeakageCurve(0, r, t, values)


def check_synthetic(config, systems, pool) -> Section:
    """Planted exponents are recovered by the fitting code itself."""
    sec = Section("synthetic")
    rs = np.arange(1, 33, dtype=float)
    ts = np.logspace(-3, 2, 400)
    for p in (0.5, 1.0):
        f = fit_front(synthetic_front_curve(rs, ts, p), config.theta)
        sec.checks.append(Check(f"front_slope_p={p}", abs(f.slope - p) < 1e-6, f.slope, p, 1e-6))
    alpha, d = 2.5, 1
    tail = [theorem_envelope(r, 1.0, alpha, d, 0.1, C1=1e-300, C2=1.0).tail_term for r in rs]
    slope, _, _ = fit_tail(rs, tail)
    sec.checks.append(Check("tail_slope", abs(slope + (alpha - d)) < 1e-6, slope, -(alpha - d), 1e-6))
    return sec


CHECKS: dict[str, Callable] = {
    "closed_form": check_closed_form,
    "sandwich": check_sandwich,
    "dominance": check_dominance,
    "truncation": check_truncation,
    "correlator": check_correlator,
    "front": check_front,
    "tail": check_tail,
    "synthetic": check_synthetic,
}
CHECK_NAMES = tuple(CHECKS)


# --------------------------------------------------------------------------
# driver


def run_verification(config: SweepConfig, jobs: int = 1) -> VerificationReport:
    """Run the configured checks; results do not depend on ``jobs``."""
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    names = config.checks or CHECK_NAMES
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        systems = build_systems(config, pool)
        sections = [CHECKS[name](config, systems, pool) for name in names]
    return VerificationReport(config, sections, _environment(config))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_run(report: VerificationReport, out_dir: str | Path) -> Path:
    """Write CSVs and the JSON report into ``out_dir/<config hash>``.

    ``report.json`` holds the latest run; ``reports.jsonl`` gains one line
    per run and is never rewritten.
    """
    run_dir = Path(out_dir) / report.config.digest()
    run_dir.mkdir(parents=True, exist_ok=True)
    for sec in report.sections:
        if sec.rows:
            (run_dir / f"{sec.name}.csv").write_text(_csv_text(sec.header, sec.rows))
    doc = report.to_dict()
    (run_dir / "report.json").write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
    with open(run_dir / "reports.jsonl", "a") as fh:
        fh.write(json.dumps(doc, default=_json_default) + "\n")
    return run_dir


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
