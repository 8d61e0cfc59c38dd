"""Reproducible studies built on the solver and the functionals.

Every study takes an :class:`~fourthnls.config.ExperimentConfig` and returns
an :class:`ExperimentReport` whose verdicts are re-derivable from the numbers
recorded next to them.
"""
from __future__ import annotations

import json
import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .dynamics import BlowUpError, Trajectory, evolve, propagate_linear, rhs
from .functionals import (
    DiagnosticsRecord,
    diagnostics,
    energy,
    identity_band,
    interaction_action_bound,
    lemma1_sides,
    mass,
    morawetz_rate_identity,
    sobolev_norm,
    trapezoid,
)
from .oracles import DIRECT_SUM_LIMIT, riesz_bilinear_direct
from .random_fields import RandomFieldSpec, gaussian_bump, plane_wave, seeded_random_field
from .spectral import (
    ComplexField,
    FractionalDerivative,
    Grid,
    IOperator,
    apply_multiplier,
    band_mask,
    dealias,
    dealias_mask,
    make_grid,
    symbol_on_grid,
)
from .weights import SmoothPeriodicGaussianBump

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "Verdict",
    "ExperimentReport",
    "fit_loglog_slope",
    "compute_lambda",
    "scale_field",
    "scaling_exponents",
    "build_grid",
    "initial_field",
    "acl_increments",
    "run_conservation_study",
    "run_identity_check",
    "run_acl_sweep",
    "run_morawetz_study",
    "run_lemma1_check",
    "run_scattering_proxy",
    "run_evolution",
    "run_experiment",
]

REPORT_SCHEMA_VERSION = 1

MASS_DRIFT_TOL = 1e-11
ENERGY_DRIFT_TOL = 1e-5
RATIO_WINDOW = (3.2, 4.8)
IDENTITY_TOL_LOW_DIM = 1e-8
IDENTITY_TOL_HIGH_DIM = 1e-7
ACL_FLOOR = 1e-12
ACL_SLOPE_SLACK = 0.2
LEMMA1_SLACK = 1e-10
LEMMA1_EQUALITY_TOL = 1e-12
SCALE_RATIO_TOL = 0.05
SCALING_EXPONENT_TOL = 1e-10
ORACLE_TOL = 1e-9
# drifts below this are rounding noise, too small for a self-convergence ratio
ROUNDOFF_DRIFT = 1e-12


@dataclass
class Verdict:
    """``value <op> threshold``; non-binding verdicts are recorded but never fail a report."""

    name: str
    value: object
    op: str
    threshold: object
    binding: bool = True

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if self.op == "<=":
            return v is not None and v <= t
        if self.op == ">=":
            return v is not None and v >= t
        if self.op == "in":
            return v is not None and t[0] <= v <= t[1]
        if self.op == "is":
            return v is t or v == t
        raise ValueError(f"unknown verdict op {self.op!r}")

    def as_dict(self) -> dict:
        thr = list(self.threshold) if isinstance(self.threshold, tuple) else self.threshold
        return {
            "name": self.name,
            "value": self.value,
            "op": self.op,
            "threshold": thr,
            "binding": self.binding,
            "passed": self.passed,
        }


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    scalars: dict = dc_field(default_factory=dict)
    curves: dict = dc_field(default_factory=dict)
    fits: dict = dc_field(default_factory=dict)
    verdicts: list = dc_field(default_factory=list)
    steps: int = 0
    timing: dict = dc_field(default_factory=dict)
    error: Optional[str] = None
    schema_version: int = REPORT_SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return self.error is None and all(v.passed for v in self.verdicts if v.binding)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def add_verdict(self, name, value, op, threshold, binding=True) -> Verdict:
        v = Verdict(name, _plain(value), op, threshold, binding)
        self.verdicts.append(v)
        return v

    def add_curve(self, name: str, columns: Sequence[str], rows: Sequence[Sequence]):
        self.curves[name] = {"columns": list(columns), "rows": [[_plain(x) for x in r] for r in rows]}

    def as_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "passed": self.passed,
            "error": self.error,
            "scalars": {k: _plain(v) for k, v in self.scalars.items()},
            "fits": self.fits,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "steps": self.steps,
            "curves": self.curves,
        }
        if include_timing:
            d["timing"] = self.timing
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.as_dict(include_timing), indent=2, allow_nan=False) + "\n"


def _plain(x):
    """JSON-safe scalar: numpy -> Python; non-finite -> None."""
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _new_report(config: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(kind=config.kind, config=config.to_dict())


# ---------------------------------------------------------------------------
# Small numerical tools


def fit_loglog_slope(points: Sequence[tuple]) -> tuple[float, float, float]:
    """Least-squares line through ``(log x, log y)``: ``(slope, intercept, residual_norm)``."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("log-log fit needs positive x and y")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    if len(set(lx.tolist())) < 2:
        raise ValueError("need at least two distinct x values")
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    residual = float(np.linalg.norm(A @ np.array([slope, intercept]) - ly))
    return float(slope), float(intercept), residual


def compute_lambda(N: float, s: float, n: int) -> float:
    """Scaling factor ``lambda = N^((2 - s)/(s - (n/2 - 2)))`` that normalizes ``E(I u_0^lambda)``."""
    gap = s - (n / 2 - 2)
    if not gap > 0:
        raise ValueError(f"need s > n/2 - 2 = {n / 2 - 2}, got s = {s}")
    return float(N) ** ((2.0 - s) / gap)


def scale_field(field: ComplexField, lam: float) -> ComplexField:
    """``lambda^-2 u(x / lambda)`` on the box ``lambda L`` with the same point count."""
    g = field.grid
    grid = Grid(g.dim, g.points_per_axis, g.box_length * lam)
    return ComplexField(grid, field.physical() * lam**-2.0)


def _interaction_density(field: ComplexField) -> float:
    """``int | |grad|^{-(n-5)/4} u |^4 dx`` at one instant."""
    g = field.grid
    w = apply_multiplier(field, FractionalDerivative((5 - g.dim) / 4)).physical()
    return float(np.sum(np.abs(w) ** 4)) * g.cell_volume


def scaling_exponents(field: ComplexField, lam: float) -> dict:
    """Measured exponents ``log(Q(u^lambda)/Q(u)) / log(lambda)`` for static quantities.

    ``interaction_norm4`` includes the ``lambda^4`` dilation of a time
    interval; both it and ``rhs_product`` should equal ``2n - 9``.
    """
    scaled = scale_field(field, lam)
    lg = math.log(lam)

    def ex(a, b):
        return math.log(b / a) / lg

    m0, m1 = mass(field), mass(scaled)
    h0, h1 = sobolev_norm(field, 0.5) ** 2, sobolev_norm(scaled, 0.5) ** 2
    i0, i1 = _interaction_density(field), _interaction_density(scaled) * lam**4
    return {
        "mass": ex(m0, m1),
        "h_half_sq": ex(h0, h1),
        "interaction_norm4": ex(i0, i1),
        "rhs_product": ex(h0 * m0, h1 * m1),
    }


# ---------------------------------------------------------------------------
# Initial data


def build_grid(config: ExperimentConfig) -> Grid:
    return make_grid(config.n, config.P, config.L, require_power_of_two=config.kind != "lemma1")


def initial_field(config: ExperimentConfig, grid: Optional[Grid] = None, seed: Optional[int] = None) -> ComplexField:
    grid = grid or build_grid(config)
    d = config.data
    if d.kind == "zero":
        return grid.zeros()
    if d.kind == "planewave":
        return plane_wave(grid, d.amplitude, d.modes)
    if d.kind == "gaussian":
        return gaussian_bump(grid, d.amplitude, d.width, d.center, d.momentum or None)
    band = grid.points_per_axis // 2 - 1 if d.band is None else d.band
    spec = RandomFieldSpec(
        seed=d.seed if seed is None else seed,
        band=band,
        spectral_profile=d.profile,
        profile_width=d.profile_width,
        amplitude=d.amplitude,
        mean_free=d.mean_free,
    )
    return seeded_random_field(grid, spec)


def _prepared_initial(config: ExperimentConfig, grid: Grid) -> tuple[ComplexField, float]:
    """Initial field projected onto the dealiased band when the rule is on; returns removed mass."""
    u0 = initial_field(config, grid)
    if config.dealias == "half_rule":
        projected = dealias(u0)
        return projected, mass(u0) - mass(projected)
    return u0, 0.0


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


# ---------------------------------------------------------------------------
# Studies


def run_evolution(config: ExperimentConfig) -> tuple[ExperimentReport, Trajectory]:
    """Plain evolution with per-snapshot diagnostics (the ``run`` command)."""
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    u0, removed = _prepared_initial(config, grid)
    records: list[DiagnosticsRecord] = []

    def observe(t, f):
        rec = diagnostics(f, t, config.N, config.s)
        records.append(rec)
        return {}

    traj = evolve(u0, config.T, config.dt, config.stride, [observe], dealias_rule=config.dealias, nonlinear=config.nonlinear)
    for rec, tm in zip(records, traj.truncated_mass):
        rec.truncated_mass = tm
    report.add_curve("diagnostics", records[0].columns(), [r.row() for r in records])
    m0, m1 = records[0].mass, records[-1].mass
    report.scalars.update(
        initial_projection_mass=removed,
        mass_drift=_rel(m1, m0),
        mass_balance_drift=_rel(m1 + traj.truncated_mass[-1], m0),
        energy_drift=_rel(records[-1].energy, records[0].energy),
    )
    report.add_verdict("mass_balance_drift", report.scalars["mass_balance_drift"], "<=", MASS_DRIFT_TOL)
    report.steps = traj.steps
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report, traj


def _energy_mass_drift(u0: ComplexField, config: ExperimentConfig, dt: float) -> dict:
    nsteps = max(1, int(round(config.T / dt)))
    traj = evolve(u0, config.T, dt, nsteps, dealias_rule=config.dealias, nonlinear=config.nonlinear)
    first, last = traj.fields[0], traj.fields[-1]
    m0, m1 = mass(first), mass(last)
    e0, e1 = energy(first), energy(last)
    return {
        "mass_drift": _rel(m1, m0),
        "mass_balance_drift": _rel(m1 + traj.truncated_mass[-1], m0),
        "energy_drift": _rel(e1, e0),
        "truncated_mass": traj.truncated_mass[-1],
        "steps": traj.steps,
        "final": last,
    }


def run_conservation_study(config: ExperimentConfig) -> ExperimentReport:
    """Mass and energy drift over ``[0, T]`` plus the ``dt``-halving ratio of the energy drift."""
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    u0, removed = _prepared_initial(config, grid)
    try:
        coarse = _energy_mass_drift(u0, config, config.dt)
    except BlowUpError as exc:
        report.error = f"blow-up: {exc}"
        return report
    report.scalars.update(
        initial_projection_mass=removed,
        mass_drift=coarse["mass_drift"],
        mass_balance_drift=coarse["mass_balance_drift"],
        energy_drift=coarse["energy_drift"],
        truncated_mass=coarse["truncated_mass"],
    )
    report.steps = coarse["steps"]
    report.add_verdict("mass_drift", coarse["mass_drift"], "<=", MASS_DRIFT_TOL)
    report.add_verdict("mass_balance_drift", coarse["mass_balance_drift"], "<=", MASS_DRIFT_TOL)
    report.add_verdict("energy_drift", coarse["energy_drift"], "<=", ENERGY_DRIFT_TOL)
    if config.oracles.get("richardson", True):
        fine = _energy_mass_drift(u0, config, config.dt / 2)
        report.steps += fine["steps"]
        report.scalars["energy_drift_half_dt"] = fine["energy_drift"]
        report.add_curve(
            "drift_vs_dt",
            ["dt", "mass_drift", "energy_drift"],
            [[config.dt, coarse["mass_drift"], coarse["energy_drift"]], [config.dt / 2, fine["mass_drift"], fine["energy_drift"]]],
        )
        if coarse["energy_drift"] > ROUNDOFF_DRIFT and fine["energy_drift"] > 0:
            ratio = coarse["energy_drift"] / fine["energy_drift"]
            report.scalars["energy_drift_ratio"] = ratio
            report.add_verdict("energy_drift_ratio", ratio, "in", RATIO_WINDOW)
        else:
            report.scalars["energy_drift_ratio"] = None
            report.add_verdict("energy_drift_at_roundoff", coarse["energy_drift"], "<=", ROUNDOFF_DRIFT)
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report


def identity_weight(grid: Grid) -> SmoothPeriodicGaussianBump:
    """Periodic bump whose band keeps every product in the identity alias-free."""
    band = identity_band(grid)
    wband = max(1, min(band, grid.points_per_axis // 2 - 1 - 2 * band))
    return SmoothPeriodicGaussianBump(width=grid.box_length / 6, band=wband)


def _band_project(field: ComplexField, band: int) -> ComplexField:
    return ComplexField(field.grid, field.coefficients() * band_mask(field.grid, band), spectral=True)


def _identity_data(config: ExperimentConfig, grid: Grid, seed: int) -> ComplexField:
    band = identity_band(grid)
    d = config.data
    if d.kind == "random":
        if d.band is not None and d.band > band:
            from .functionals import BandLimitError

            raise BandLimitError(f"data band {d.band} exceeds P/6 = {band}")
        cfg = replace(config, data=replace(d, band=band if d.band is None else d.band))
        return initial_field(cfg, grid, seed=seed)
    u = initial_field(config, grid)
    if d.kind == "gaussian":
        # a Gaussian is not band-limited; use its band projection
        return ComplexField(grid, _band_project(u, band).physical())
    return u


def _identity_cell(config: ExperimentConfig, grid: Grid, seed: int) -> dict:
    weight = identity_weight(grid)
    band = identity_band(grid)
    u0 = _identity_data(config, grid, seed)
    res0 = morawetz_rate_identity(u0, weight)
    nsteps = int(round(config.T / config.dt))
    stride = max(1, nsteps // 10)
    traj = evolve(u0, config.T, config.dt, stride, dealias_rule="none", nonlinear=config.nonlinear)
    residuals = [res0.residual]
    leaked = 0.0
    total = mass(u0)
    for f in traj.fields[1:]:
        proj = _band_project(f, band)
        leaked = max(leaked, (mass(f) - mass(proj)) / total if total else 0.0)
        residuals.append(morawetz_rate_identity(proj, weight).residual)
    return {
        "seed": seed,
        "lhs0": res0.lhs,
        "rhs0": res0.rhs,
        "max_residual": max(residuals),
        "snapshots": len(residuals),
        "max_leaked_mass_fraction": leaked,
        "steps": traj.steps,
    }


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def run_identity_check(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Morawetz rate identity at ``t = 0`` and on ~10 evolved snapshots, for each seed.

    Evolved snapshots leave the band through the nonlinearity; they are
    projected back onto ``|m_axis| <= P/6`` before evaluation and the
    projected-out mass fraction is recorded.
    """
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    seeds = [config.data.seed + i for i in range(config.seeds)] if config.data.kind == "random" else [config.data.seed]
    cells = _map(lambda sd: _identity_cell(config, grid, sd), seeds, threads)
    cols = ["seed", "lhs0", "rhs0", "max_residual", "snapshots", "max_leaked_mass_fraction"]
    report.add_curve("residuals", cols, [[c[k] for k in cols] for c in cells])
    worst = max(c["max_residual"] for c in cells)
    tol = IDENTITY_TOL_HIGH_DIM if grid.dim >= 5 else IDENTITY_TOL_LOW_DIM
    report.scalars.update(max_residual=worst, band=identity_band(grid), weight_band=identity_weight(grid).band)
    report.add_verdict("max_residual", worst, "<=", tol)
    report.steps = sum(c["steps"] for c in cells)
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report


class _ACLObserver:
    """Per-snapshot ``E(Iu)`` and ``dE(Iu)/dt`` for a list of ``N``.

    The rate is ``Re int conj(I u_t) (|Iu|^2 Iu - I D(|u|^2 u))`` with
    ``u_t`` from the (dealiased) equation, evaluated through Parseval.
    """

    def __init__(self, grid: Grid, Ns: Sequence[float], s: float, dealias_rule: str, nonlinear: bool = True):
        self.grid = grid
        self.Ns = list(Ns)
        self.s = s
        self.rule = dealias_rule
        self.nonlinear = nonlinear
        self.energy = {N: [] for N in self.Ns}
        self.rate = {N: [] for N in self.Ns}
        self.interaction = []

    def __call__(self, t, field):
        g = self.grid
        u = field.physical()
        c = np.fft.fftn(u) / g.size
        k4 = g.radius_squared**2
        cub = np.fft.fftn(np.abs(u) ** 2 * u) / g.size if self.nonlinear else np.zeros_like(c)
        if self.rule == "half_rule":
            cub = cub * dealias_mask(g)
        ut = 1j * (k4 * c + cub)
        V, h = g.volume, g.cell_volume
        for N in self.Ns:
            m = symbol_on_grid(g, IOperator(N, self.s))
            Iu = np.fft.ifftn(m * c) * g.size
            quartic = np.abs(Iu) ** 2
            B = np.fft.fftn(quartic * Iu) / g.size - m * cub
            self.rate[N].append(V * float(np.real(np.sum(np.conj(m * ut) * B))))
            self.energy[N].append(0.5 * V * float(np.sum(np.abs(m * c) ** 2 * k4)) + 0.25 * h * float(np.sum(quartic**2)))
        self.interaction.append(_interaction_density(field))
        return {}


def acl_increments(observer: _ACLObserver, times: Sequence[float]) -> dict:
    """``D(N) = max_t |int_0^t dE(Iu)/dt|`` (trapezoid) and the direct ``max_t |E(Iu)(t) - E(Iu)(0)|``."""
    times = np.asarray(times, dtype=float)
    out = {}
    for N in observer.Ns:
        rate = np.asarray(observer.rate[N])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(times))])
        e = np.asarray(observer.energy[N])
        out[N] = {"increment": float(np.max(np.abs(cum))), "direct": float(np.max(np.abs(e - e[0]))), "E0": float(e[0])}
    return out


def _is_dyadic(N: float) -> bool:
    return N >= 1 and float(N).is_integer() and (int(N) & (int(N) - 1)) == 0


def run_acl_sweep(config: ExperimentConfig) -> ExperimentReport:
    """Decay of the modified-energy increment ``D(N)`` in ``N`` and its log-log slope.

    ``D(N)`` integrates the exact rate of ``E(Iu)`` along the computed
    trajectory; the direct difference of ``E(Iu)`` is recorded as well but
    also carries the integrator's own energy error.
    """
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    Ns = [float(N) for N in config.N]
    if len(Ns) < 4:
        raise ValueError("the sweep needs at least four values of N")
    for N in Ns:
        if not _is_dyadic(N):
            raise ValueError(f"N = {N} is not dyadic")
        if N >= grid.max_radius:
            raise ValueError(f"N = {N} is not below the lattice radius {grid.max_radius:.6g}")
    u0, removed = _prepared_initial(config, grid)
    obs = _ACLObserver(grid, Ns, config.s, config.dealias, config.nonlinear)
    try:
        traj = evolve(u0, config.T, config.dt, 1, [obs], dealias_rule=config.dealias, nonlinear=config.nonlinear, keep_fields=False)
    except BlowUpError as exc:
        report.error = f"blow-up: {exc}"
        return report
    inc = acl_increments(obs, traj.times)
    rows = [[N, inc[N]["increment"], inc[N]["direct"], inc[N]["E0"]] for N in Ns]
    report.add_curve("increments", ["N", "D_increment", "D_direct", "E_I0"], rows)
    D = [inc[N]["increment"] for N in Ns]
    m_norm = trapezoid(obs.interaction, traj.times) ** 0.25
    n = grid.dim
    target = -min(1.0, (8 - n) / 2) + ACL_SLOPE_SLACK
    report.scalars.update(
        initial_projection_mass=removed,
        interaction_norm=m_norm,
        slope_threshold=target,
        max_increment=max(D),
    )
    above = [(N, d) for N, d in zip(Ns, D) if d >= ACL_FLOOR]
    all_below = not above
    slope = None
    if len(above) >= 2:
        slope, intercept, resid = fit_loglog_slope(above)
        report.fits["increment_vs_N"] = {"slope": slope, "intercept": intercept, "residual": resid, "points": len(above)}
    elif len(above) == 1:
        # a single increment above the floor followed only by sub-floor values: the
        # fit uses the floor as a stand-in, which understates the decay
        pts = [(N, max(d, ACL_FLOOR)) for N, d in zip(Ns, D)]
        slope, intercept, resid = fit_loglog_slope(pts)
        report.fits["increment_vs_N"] = {"slope": slope, "intercept": intercept, "residual": resid, "points": len(pts)}
    report.scalars["slope"] = slope
    report.scalars["all_below_floor"] = all_below
    if all_below:
        report.add_verdict("all_increments_below_floor", max(D), "<=", ACL_FLOOR)
    else:
        report.add_verdict("increment_slope", slope, "<=", target)
    mono = max((D[i + 1] - D[i] for i in range(len(D) - 1)), default=0.0)
    report.add_verdict("increment_nonincreasing_excess", mono, "<=", ACL_FLOOR, binding=False)
    report.steps = traj.steps
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report


class _MorawetzObserver:
    def __init__(self, with_action: bool = True):
        self.with_action = with_action
        self.density = []
        self.rhs = []
        self.action = []

    def __call__(self, t, field):
        self.density.append(_interaction_density(field))
        if self.with_action:
            action, prod = interaction_action_bound(field)
            self.action.append(action)
            self.rhs.append(prod)
        else:
            self.rhs.append(sobolev_norm(field, 0.5) ** 2 * sobolev_norm(field, 0.0) ** 2)
        return {}


def _morawetz_run(u0: ComplexField, config: ExperimentConfig, lam: float) -> dict:
    obs = _MorawetzObserver()
    scale = lam**4
    traj = evolve(
        u0,
        config.T * scale,
        config.dt * scale,
        config.stride,
        [obs],
        dealias_rule=config.dealias,
        nonlinear=config.nonlinear,
        keep_fields=False,
    )
    lhs4 = trapezoid(obs.density, traj.times)
    rhs = max(obs.rhs)
    ratio = lhs4 / rhs if rhs > 0 else None
    consts = [abs(a) / p for a, p in zip(obs.action, obs.rhs) if p > 0]
    return {
        "lambda": lam,
        "lhs4": lhs4,
        "rhs": rhs,
        "ratio": ratio,
        "action_max": max(abs(a) for a in obs.action),
        "action_constant": max(consts) if consts else None,
        "steps": traj.steps,
    }


def run_morawetz_study(config: ExperimentConfig) -> ExperimentReport:
    """Interaction-norm ratio, its invariance under the equation's scaling, and the action bound.

    Rescaled runs use ``lambda^-2 u_0(x/lambda)`` on the box ``lambda L`` with
    ``T`` and ``dt`` multiplied by ``lambda^4``.  For ``n < 5`` only the
    static scaling exponents are checked.
    """
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    u0, _ = _prepared_initial(config, grid)
    n = grid.dim
    expected = 2 * n - 9
    static_rows = []
    zero = mass(u0) == 0
    if not zero:
        for lam in config.lambdas:
            ex = scaling_exponents(u0, lam)
            static_rows.append([lam, ex["mass"], ex["h_half_sq"], ex["interaction_norm4"], ex["rhs_product"]])
            report.add_verdict(f"exponent_interaction_lambda{lam:g}", abs(ex["interaction_norm4"] - expected), "<=", SCALING_EXPONENT_TOL)
            report.add_verdict(f"exponent_rhs_lambda{lam:g}", abs(ex["rhs_product"] - expected), "<=", SCALING_EXPONENT_TOL)
            report.add_verdict(f"exponent_mass_lambda{lam:g}", abs(ex["mass"] - (n - 4)), "<=", SCALING_EXPONENT_TOL)
            report.add_verdict(f"exponent_h_half_lambda{lam:g}", abs(ex["h_half_sq"] - (n - 5)), "<=", SCALING_EXPONENT_TOL)
        report.add_curve("static_exponents", ["lambda", "mass", "h_half_sq", "interaction_norm4", "rhs_product"], static_rows)
    report.scalars["expected_exponent"] = expected
    if n < 5:
        report.timing["wall_clock_s"] = _time.perf_counter() - t0
        return report

    try:
        runs = [_morawetz_run(u0, config, 1.0)]
        for lam in config.lambdas:
            runs.append(_morawetz_run(scale_field(u0, lam), config, lam))
    except BlowUpError as exc:
        report.error = f"blow-up: {exc}"
        return report
    cols = ["lambda", "lhs4", "rhs", "ratio", "action_max", "action_constant"]
    report.add_curve("scaling_runs", cols, [[r[c] for c in cols] for r in runs])
    base = runs[0]
    report.scalars.update(lhs4=base["lhs4"], rhs=base["rhs"], ratio=base["ratio"], action_constant=base["action_constant"])
    if base["ratio"] is None:
        report.scalars["ratio_note"] = "undefined: zero data"
    else:
        for r in runs[1:]:
            change = abs(r["ratio"] / base["ratio"] - 1.0)
            report.add_verdict(f"ratio_change_lambda{r['lambda']:g}", change, "<=", SCALE_RATIO_TOL)
        if base["action_constant"] is not None:
            for r in runs[1:]:
                c = r["action_constant"]
                change = abs(c / base["action_constant"] - 1.0) if base["action_constant"] > 0 else abs(c)
                report.add_verdict(f"action_constant_change_lambda{r['lambda']:g}", change, "<=", SCALE_RATIO_TOL)
    report.steps = sum(r["steps"] for r in runs)
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report


def run_lemma1_check(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """``|| |grad|^{-(n-5)/4} g ||_{L^4}^2 <= || |grad|^{-(n-5)/2} |g|^2 ||_{L^2}`` on seeded mean-free fields."""
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    n = grid.dim
    if n not in (5, 6, 7):
        raise ValueError("lemma1 check needs n in {5, 6, 7}")
    d = config.data
    band = grid.points_per_axis // 2 - 1 if d.band is None else d.band

    use_oracle = config.oracles.get("double_sum", False) and grid.size <= DIRECT_SUM_LIMIT

    def cell(seed):
        spec = RandomFieldSpec(seed, band, d.profile, d.profile_width, d.amplitude, mean_free=True)
        g = seeded_random_field(grid, spec)
        lhs, rhs_ = lemma1_sides(g)
        dev = None
        if use_oracle:
            direct = riesz_bilinear_direct(g)
            dev = abs(rhs_**2 - direct) / direct if direct else abs(rhs_**2)
        return seed, lhs, rhs_, dev

    seeds = [d.seed + i for i in range(config.seeds)]
    cells = _map(cell, seeds, threads)
    rows = [[sd, lhs, r, (lhs / r if r > 0 else None)] for sd, lhs, r, _ in cells]
    report.add_curve("sides", ["seed", "lhs", "rhs", "ratio"], rows)
    if use_oracle:
        dev = max(c[3] for c in cells)
        report.scalars["double_sum_deviation"] = dev
        report.add_verdict("double_sum_deviation", dev, "<=", ORACLE_TOL)
    elif config.oracles.get("double_sum", False):
        report.scalars["double_sum_deviation"] = None
        report.scalars["double_sum_note"] = f"skipped: grid exceeds {DIRECT_SUM_LIMIT} points"
    ratios = [r[3] for r in rows if r[3] is not None]
    worst = max(ratios) if ratios else 0.0
    report.scalars.update(max_ratio=worst, violations=sum(1 for r in rows if r[1] > r[2] * (1 + LEMMA1_SLACK)))
    if n == 5:
        dev = max((abs(r[1] - r[2]) / r[2] for r in rows if r[2] > 0), default=0.0)
        report.scalars["max_equality_deviation"] = dev
        report.add_verdict("equality_deviation", dev, "<=", LEMMA1_EQUALITY_TOL)
    else:
        report.add_verdict("max_lhs_over_rhs", worst, "<=", 1 + LEMMA1_SLACK)
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report


class _DuhamelObserver:
    """Trapezoid accumulation of ``int_0^t exp(-i tau Delta^2) D(|u|^2 u)(tau) dtau`` in spectral space."""

    def __init__(self, grid: Grid, dealias_rule: str, nonlinear: bool):
        self.grid = grid
        self.rule = dealias_rule
        self.nonlinear = nonlinear
        self.total = np.zeros(grid.shape, dtype=np.complex128)
        self.prev = None
        self.prev_t = None

    def __call__(self, t, field):
        g = self.grid
        if self.nonlinear:
            u = field.physical()
            cub = np.fft.fftn(np.abs(u) ** 2 * u) / g.size
            if self.rule == "half_rule":
                cub = cub * dealias_mask(g)
            cur = np.exp(-1j * t * g.radius_squared**2) * cub
        else:
            cur = np.zeros(g.shape, dtype=np.complex128)
        if self.prev is not None:
            self.total += 0.5 * (t - self.prev_t) * (cur + self.prev)
        self.prev, self.prev_t = cur, t
        return {}


def _duhamel_residual(u0: ComplexField, config: ExperimentConfig, dt: float):
    g = u0.grid
    duh = _DuhamelObserver(g, config.dealias, config.nonlinear)
    traj = evolve(u0, config.T, dt, 1, [duh], dealias_rule=config.dealias, nonlinear=config.nonlinear, keep_fields=False)
    vT = propagate_linear(traj.fields[-1], -traj.times[-1]).coefficients()
    v_duh = u0.coefficients() + 1j * duh.total
    diff = ComplexField(g, vT - v_duh, spectral=True)
    scale = sobolev_norm(u0, 0.0)
    return sobolev_norm(diff, 0.0) / scale if scale else 0.0, traj


def run_scattering_proxy(config: ExperimentConfig) -> ExperimentReport:
    """Cauchy increments of ``v(t) = exp(-it Delta^2) u(t)`` and a Duhamel cross-check.

    ``v`` obeys ``v_t = i exp(-it Delta^2)(|u|^2 u)``, so
    ``v(T) = u_0 + i int_0^T exp(-i tau Delta^2) D(|u|^2 u)(tau) dtau``.
    """
    t0 = _time.perf_counter()
    report = _new_report(config)
    grid = build_grid(config)
    u0, _ = _prepared_initial(config, grid)
    nsteps = int(round(config.T / config.dt))
    stride = max(1, nsteps // (config.ladder - 1))
    try:
        traj = evolve(u0, config.T, config.dt, stride, dealias_rule=config.dealias, nonlinear=config.nonlinear)
    except BlowUpError as exc:
        report.error = f"blow-up: {exc}"
        return report
    vs = [propagate_linear(f, -t) for t, f in zip(traj.times, traj.fields)]
    s = config.s
    rows = []
    incs = []
    for i in range(1, len(vs)):
        d = ComplexField(grid, vs[i].coefficients() - vs[i - 1].coefficients(), spectral=True)
        inc = sobolev_norm(d, s, homogeneous=False)
        incs.append(inc)
        rows.append([traj.times[i - 1], traj.times[i], inc])
    report.add_curve("cauchy_increments", ["t_start", "t_end", "increment_Hs"], rows)
    norm0 = sobolev_norm(u0, s, homogeneous=False)
    shrinking = all(incs[i + 1] <= incs[i] for i in range(len(incs) - 1))
    report.scalars.update(increments_shrinking=shrinking, max_increment=max(incs, default=0.0), data_Hs=norm0)
    report.add_verdict("increments_shrinking", shrinking, "is", True, binding=False)
    if not config.nonlinear:
        rel = max(incs, default=0.0) / norm0 if norm0 else 0.0
        report.add_verdict("free_flow_v_constant", rel, "<=", 1e-12)
    steps = traj.steps
    if config.oracles.get("duhamel", True):
        r1, t1 = _duhamel_residual(u0, config, config.dt)
        steps += t1.steps
        report.scalars["duhamel_residual"] = r1
        if config.oracles.get("richardson", True):
            r2, t2 = _duhamel_residual(u0, config, config.dt / 2)
            steps += t2.steps
            report.scalars["duhamel_residual_half_dt"] = r2
            if r1 > ROUNDOFF_DRIFT and r2 > 0:
                report.scalars["duhamel_ratio"] = r1 / r2
                report.add_verdict("duhamel_ratio", r1 / r2, "in", RATIO_WINDOW)
            else:
                report.add_verdict("duhamel_residual_at_roundoff", r1, "<=", ROUNDOFF_DRIFT)
    report.steps = steps
    report.timing["wall_clock_s"] = _time.perf_counter() - t0
    return report


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    kind = config.kind
    if kind == "run":
        return run_evolution(config)[0]
    if kind == "conserve":
        return run_conservation_study(config)
    if kind == "identity-check":
        return run_identity_check(config, threads)
    if kind == "acl-sweep":
        return run_acl_sweep(config)
    if kind == "morawetz":
        return run_morawetz_study(config)
    if kind == "lemma1":
        return run_lemma1_check(config, threads)
    if kind == "scatter-proxy":
        return run_scattering_proxy(config)
    raise ValueError(f"unknown experiment kind {kind!r}")
