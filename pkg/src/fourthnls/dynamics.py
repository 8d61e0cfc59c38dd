"""Time evolution of ``i u_t + Delta^2 u + |u|^2 u = 0`` on the periodic box.

Rearranged as ``u_t = i (Delta^2 u + |u|^2 u)``.  Both sub-flows are solved
exactly: the linear one multiplies mode ``k`` by ``exp(i t |k|^4)`` and the
nonlinear one keeps ``|u|`` fixed pointwise, so ``u -> exp(i t |u|^2) u``.
The Strang composition of the two is second order and each half is an
isometry of the discrete L^2 norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .spectral import ComplexField, Grid, dealias_mask

__all__ = [
    "BlowUpError",
    "SimState",
    "Trajectory",
    "rhs",
    "propagate_linear",
    "step_strang",
    "evolve",
    "BLOWUP_FACTOR",
]

#: Blow-up is declared when ``max|u|`` exceeds this multiple of its initial value.
BLOWUP_FACTOR = 1e6

DEALIAS_RULES = ("none", "half_rule")


class BlowUpError(FloatingPointError):
    """Non-finite values or runaway amplitude during evolution.

    ``state`` is the last good state; ``trajectory`` (when raised from
    :func:`evolve`) holds the snapshots recorded so far.
    """

    def __init__(self, message, state=None, trajectory=None):
        super().__init__(message)
        self.state = state
        self.trajectory = trajectory


@dataclass(frozen=True)
class SimState:
    field: ComplexField
    time: float = 0.0
    step_count: int = 0
    dt: float = 1e-3
    dealias_rule: str = "half_rule"
    nonlinear: bool = True
    truncated_mass: float = 0.0
    """Cumulative mass removed by dealiasing projections."""

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.dealias_rule not in DEALIAS_RULES:
            raise ValueError(f"unknown dealias rule {self.dealias_rule!r}")
        if self.field.spectral:
            object.__setattr__(self, "field", ComplexField(self.field.grid, self.field.physical()))


@dataclass
class Trajectory:
    """Snapshots ``(time, field)`` plus one diagnostics dict per snapshot."""

    grid: Grid
    times: list = dc_field(default_factory=list)
    fields: list = dc_field(default_factory=list)
    diagnostics: list = dc_field(default_factory=list)
    truncated_mass: list = dc_field(default_factory=list)
    dt: float | None = None
    steps: int = 0

    def append(self, time: float, field: ComplexField, truncated_mass: float = 0.0, diag: dict | None = None):
        if self.times and not time > self.times[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        if diag is not None and self.diagnostics and set(diag) != set(self.diagnostics[0]):
            raise ValueError("diagnostics keys must be uniform across snapshots")
        self.times.append(float(time))
        self.fields.append(field)
        self.truncated_mass.append(float(truncated_mass))
        if diag is not None:
            self.diagnostics.append(diag)

    def __len__(self):
        return len(self.times)

    @property
    def snapshots(self):
        return list(zip(self.times, self.fields))

    @classmethod
    def from_fields(cls, times: Sequence[float], fields: Sequence[ComplexField]) -> "Trajectory":
        traj = cls(fields[0].grid)
        for t, f in zip(times, fields):
            traj.append(t, f)
        return traj


def _biharmonic_symbol(grid: Grid) -> np.ndarray:
    return grid.radius_squared**2


def _project(grid: Grid, u: np.ndarray, rule: str) -> tuple[np.ndarray, float]:
    """Apply the dealiasing projection; returns (field, mass removed)."""
    if rule == "none":
        return u, 0.0
    coef = np.fft.fftn(u) / grid.size
    mask = dealias_mask(grid)
    removed = 0.5 * grid.volume * float(np.sum(np.abs(coef[~mask]) ** 2))
    coef[~mask] = 0
    return np.fft.ifftn(coef) * grid.size, removed


@np.errstate(over="ignore", invalid="ignore")
def rhs(field: ComplexField, dealias_rule: str = "none", nonlinear: bool = True) -> ComplexField:
    """``u_t = i (Delta^2 u + D[|u|^2 u])`` with exact spectral biharmonic."""
    grid = field.grid
    u = field.physical()
    coef = np.fft.fftn(u) / grid.size
    lin = coef * _biharmonic_symbol(grid)
    if nonlinear:
        cubic = np.fft.fftn(np.abs(u) ** 2 * u) / grid.size
        if dealias_rule == "half_rule":
            cubic = cubic * dealias_mask(grid)
        elif dealias_rule != "none":
            raise ValueError(f"unknown dealias rule {dealias_rule!r}")
        lin = lin + cubic
    out = 1j * np.fft.ifftn(lin) * grid.size
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite time derivative (blow-up at this resolution)")
    return ComplexField(grid, out)


def propagate_linear(field: ComplexField, t: float) -> ComplexField:
    """Free flow ``exp(i t Delta^2)``: mode ``k`` picks up ``exp(i t |k|^4)``."""
    grid = field.grid
    coef = field.coefficients() * np.exp(1j * t * _biharmonic_symbol(grid))
    out = ComplexField(grid, coef, spectral=True)
    return out if field.spectral else ComplexField(grid, out.physical())


def _nonlinear_flow(u: np.ndarray, t: float) -> np.ndarray:
    return np.exp(1j * t * (u.real**2 + u.imag**2)) * u


@np.errstate(over="ignore", invalid="ignore")
def step_strang(state: SimState) -> SimState:
    """One Strang step: half nonlinear, full linear, half nonlinear, then dealias."""
    grid = state.field.grid
    dt = state.dt
    u = state.field.values
    if state.nonlinear:
        u = _nonlinear_flow(u, 0.5 * dt)
    coef = np.fft.fftn(u) * np.exp(1j * dt * _biharmonic_symbol(grid))
    u = np.fft.ifftn(coef)
    if state.nonlinear:
        u = _nonlinear_flow(u, 0.5 * dt)
    u, removed = _project(grid, u, state.dealias_rule)
    if not np.all(np.isfinite(u)):
        raise BlowUpError(f"non-finite field after step {state.step_count + 1}", state=state)
    steps = state.step_count + 1
    return replace(
        state,
        field=ComplexField(grid, u),
        step_count=steps,
        time=steps * dt,
        truncated_mass=state.truncated_mass + removed,
    )


Observer = Callable[[float, ComplexField], dict]


def evolve(
    initial_field: ComplexField,
    T: float,
    dt: float,
    snapshot_stride: int = 1,
    observers: Optional[Sequence[Observer]] = None,
    *,
    dealias_rule: str = "half_rule",
    nonlinear: bool = True,
    t0: float = 0.0,
    keep_fields: bool = True,
) -> Trajectory:
    """Integrate from ``t0`` to ``t0 + T`` with fixed step ``dt``.

    Snapshots are taken every ``snapshot_stride`` steps and at the final
    time.  Each observer is called as ``observer(time, field)`` and must
    return a dict; the merged dicts form the snapshot's diagnostics.
    With ``keep_fields=False`` only the first and last snapshot fields are
    retained (the others are ``None``), which bounds memory on large grids.
    """
    if not T > 0 or not dt > 0:
        raise ValueError("T and dt must be positive")
    ratio = T / dt
    nsteps = int(round(ratio))
    if nsteps < 1 or abs(ratio - nsteps) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"T/dt = {ratio!r} is not an integer")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    observers = list(observers or [])
    grid = initial_field.grid
    state = SimState(initial_field, 0.0, 0, dt, dealias_rule, nonlinear)
    initial_max = float(np.max(np.abs(state.field.values)))
    limit = BLOWUP_FACTOR * initial_max if initial_max > 0 else math.inf

    traj = Trajectory(grid, dt=dt)

    def record(st: SimState):
        diag = None
        if observers:
            diag = {}
            for obs in observers:
                diag.update(obs(t0 + st.time, st.field))
        if not keep_fields and len(traj.fields) > 1:
            traj.fields[-1] = None
        traj.append(t0 + st.time, st.field, st.truncated_mass, diag)
        traj.steps = st.step_count

    record(state)
    for i in range(1, nsteps + 1):
        try:
            new = step_strang(state)
        except BlowUpError as exc:
            raise BlowUpError(str(exc), state=state, trajectory=traj) from exc
        if float(np.max(np.abs(new.field.values))) > limit:
            raise BlowUpError(f"amplitude exceeded {BLOWUP_FACTOR:g} x initial at step {i}", state=state, trajectory=traj)
        state = new
        if i % snapshot_stride == 0 or i == nsteps:
            record(state)
    return traj
