"""Scalar functionals of the fourth-order NLS and the identities they satisfy.

All integrals are grid quadratures with weight ``(L/P)^n``; all derivatives
are spectral.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .dynamics import Trajectory, rhs
from .spectral import (
    BiharmonicBessel,
    ComplexField,
    FractionalDerivative,
    Grid,
    IOperator,
    LittlewoodPaleyBand,
    apply_multiplier,
    band_mask,
    lp_levels,
    symbol_on_grid,
)
from .weights import RegularizedRadial, minimum_image

__all__ = [
    "mass",
    "energy",
    "modified_energy",
    "sobolev_norm",
    "gradient",
    "brackets",
    "morawetz_action",
    "MorawetzIdentity",
    "morawetz_rate_identity",
    "BandLimitError",
    "riesz_bilinear",
    "interaction_norm",
    "interaction_action_bound",
    "minimum_image_kernel",
    "InadmissiblePairError",
    "check_biharmonic_pair",
    "z_norm",
    "lemma1_sides",
    "DiagnosticsRecord",
    "diagnostics",
    "diagnostics_csv",
    "trapezoid",
]

RESIDUAL_FLOOR = 1e-300


def trapezoid(values: Sequence[float], times: Sequence[float]) -> float:
    return float(np.trapezoid(np.asarray(values, dtype=float), np.asarray(times, dtype=float)))


def _quad(grid: Grid, density: np.ndarray) -> float:
    return float(np.sum(density)) * grid.cell_volume


def _spectral_l2sq(grid: Grid, coef: np.ndarray, symbol: np.ndarray | None = None) -> float:
    w = np.abs(coef) ** 2
    if symbol is not None:
        w = w * symbol**2
    return grid.volume * float(np.sum(w))


def mass(field: ComplexField) -> float:
    """``M(u) = 1/2 int |u|^2``."""
    u = field.physical()
    return 0.5 * _quad(field.grid, np.abs(u) ** 2)


def energy(field: ComplexField) -> float:
    """``E(u) = int 1/2 |Delta u|^2 + 1/4 |u|^4``."""
    grid = field.grid
    u = field.physical()
    kinetic = _spectral_l2sq(grid, field.coefficients(), grid.radius_squared)
    return 0.5 * kinetic + 0.25 * _quad(grid, np.abs(u) ** 4)


def modified_energy(field: ComplexField, N: float, s: float) -> float:
    """``E(Iu)`` for the smoothing multiplier ``m_N`` with regularity ``s``."""
    return energy(apply_multiplier(field, IOperator(N, s)))


def sobolev_norm(field: ComplexField, s: float, homogeneous: bool = True) -> float:
    """``||u||_{H^s}`` (symbol ``(1+|k|^2)^(s/2)``) or ``||u||_{Hdot^s}`` (``|k|^s``).

    For homogeneous norms with ``s < 0`` the zero mode is excluded.
    """
    grid = field.grid
    if homogeneous:
        sym = symbol_on_grid(grid, FractionalDerivative(s))
    else:
        sym = (1.0 + grid.radius_squared) ** (s / 2)
    return math.sqrt(_spectral_l2sq(grid, field.coefficients(), sym))


def gradient(field: ComplexField) -> list[np.ndarray]:
    grid = field.grid
    coef = field.coefficients()
    return [np.fft.ifftn(1j * k * coef) * grid.size for k in grid.derivative_wavenumbers]


def brackets(f: ComplexField, g: ComplexField) -> tuple[np.ndarray, np.ndarray]:
    """Mass bracket ``Im(f conj g)`` and momentum bracket ``Re(f grad conj g - g grad conj f)``.

    The momentum bracket has shape ``(n,) + grid.shape``.
    """
    if f.grid != g.grid:
        raise ValueError("brackets need fields on the same grid")
    fu, gu = f.physical(), g.physical()
    grad_g = gradient(g)
    grad_f = gradient(f)
    m = np.imag(fu * np.conj(gu))
    p = np.array([np.real(fu * np.conj(dg) - gu * np.conj(df)) for dg, df in zip(grad_g, grad_f)])
    return m, p


def _momentum_density(u: np.ndarray, du: list) -> list:
    return [np.imag(np.conj(u) * d) for d in du]


def morawetz_action(field: ComplexField, weight) -> float:
    """``M_a = 2 int d_j a Im(conj(u) d_j u)``."""
    grid = field.grid
    u = field.physical()
    der = weight.derivatives(grid)
    du = gradient(field)
    p = _momentum_density(u, du)
    return 2.0 * _quad(grid, sum(der.grad[j] * p[j] for j in range(grid.dim)))


class MorawetzIdentity(NamedTuple):
    lhs: float
    rhs: float
    residual: float


class BandLimitError(ValueError):
    """Input is not band-limited enough for the exact discrete identity."""


def _check_band(grid: Grid, coef: np.ndarray, band: int, what: str, tol: float = 1e-12):
    outside = np.abs(coef[~band_mask(grid, band)])
    scale = float(np.max(np.abs(coef))) if coef.size else 0.0
    if outside.size and scale > 0 and float(np.max(outside)) > tol * scale:
        raise BandLimitError(f"{what} has spectral content beyond |m_axis| <= {band}")


def identity_band(grid: Grid) -> int:
    """Largest per-axis mode index admitted by the Morawetz identity check (``P/6``)."""
    return grid.points_per_axis // 6


def morawetz_rate_identity(field: ComplexField, weight) -> MorawetzIdentity:
    """Both sides of the variation-rate identity for ``M_a`` at one instant.

    ``lhs = 2 int d_j a d_t Im(conj(u) d_j u)`` with ``u_t`` taken from
    :func:`rhs` (no dealiasing).  ``rhs`` is the term-by-term expression::

        2 int ( 2 d_jk Delta a d_j u d_k conj(u) - 1/2 Delta^3 a |u|^2
                - 4 d_jk a d_ik u d_ij conj(u) + Delta^2 a |grad u|^2
                - d_j a {|u|^2 u, u}_p^j )

    The field must be band-limited to ``|m_axis| <= P/6`` and the weight
    must be a periodic trigonometric polynomial.
    """
    grid = field.grid
    n = grid.dim
    if not getattr(weight, "periodic", False):
        raise ValueError("the rate identity is exact only for periodic weights")
    band = identity_band(grid)
    coef = field.coefficients()
    _check_band(grid, coef, band, "field")
    wcoef = weight.coefficients(grid)
    wband = int(np.max(np.where(np.abs(wcoef) > 0, grid.max_abs_mode(), 0)))
    if wband + 2 * band >= grid.points_per_axis // 2:
        raise BandLimitError(f"weight band {wband} too wide for field band {band} on P={grid.points_per_axis}")

    der = weight.derivatives(grid)
    u = field.physical()
    k = grid.wavenumbers

    def phys(c):
        return np.fft.ifftn(c) * grid.size

    kd = grid.derivative_wavenumbers
    du = [phys(1j * kd[j] * coef) for j in range(n)]
    ddu = [[None] * n for _ in range(n)]
    for j in range(n):
        for l in range(j, n):
            ddu[j][l] = ddu[l][j] = phys(-k[j] * k[l] * coef)

    ut = rhs(field, dealias_rule="none")
    ut_coef = ut.coefficients()
    dut = [phys(1j * kd[j] * ut_coef) for j in range(n)]
    ut = ut.physical()
    dens = sum(der.grad[j] * np.imag(np.conj(ut) * du[j] + np.conj(u) * dut[j]) for j in range(n))
    lhs = 2.0 * _quad(grid, dens)

    rho = np.abs(u) ** 2
    cubic = ComplexField(grid, rho * u)
    dcubic = gradient(cubic)
    cu = cubic.values
    t1 = sum(2.0 * der.hess_lap[j][l] * np.real(du[j] * np.conj(du[l])) for j in range(n) for l in range(n))
    t2 = -0.5 * der.trilap * rho
    t3 = -4.0 * sum(
        der.hess[j][l] * np.real(ddu[i][l] * np.conj(ddu[i][j])) for i in range(n) for j in range(n) for l in range(n)
    )
    t4 = der.bilap * sum(np.abs(d) ** 2 for d in du)
    t5 = -sum(der.grad[j] * np.real(cu * np.conj(du[j]) - u * np.conj(dcubic[j])) for j in range(n))
    rhs_val = 2.0 * _quad(grid, t1 + t2 + t3 + t4 + t5)
    residual = abs(lhs - rhs_val) / (abs(lhs) + abs(rhs_val) + RESIDUAL_FLOOR)
    return MorawetzIdentity(lhs, rhs_val, residual)


def _riesz_order(n: int) -> float:
    """Order ``(5 - n)/4`` of the operator in the interaction norm."""
    return (5 - n) / 4


def riesz_bilinear(field: ComplexField, *, return_mean: bool = False):
    """``|| |grad|^{-(n-5)/2} (|u|^2) ||_{L^2}^2``.

    For ``n = 5`` this is ``||u||_{L^4}^4``.  For ``n >= 6`` the zero mode of
    ``|u|^2`` is excluded; with ``return_mean`` its unweighted contribution
    ``L^n |rho_0|^2`` is returned as a second value.
    """
    grid = field.grid
    n = grid.dim
    if n < 5:
        raise ValueError(f"riesz_bilinear needs n >= 5, got n = {n}")
    rho = ComplexField(grid, np.abs(field.physical()) ** 2)
    rc = rho.coefficients()
    mean_part = grid.volume * abs(rc[(0,) * n]) ** 2
    if n == 5:
        value = _quad(grid, rho.values.real**2)
    else:
        sym = symbol_on_grid(grid, FractionalDerivative(-(n - 5) / 2))
        value = _spectral_l2sq(grid, rc, sym)
    return (value, mean_part) if return_mean else value


def lemma1_sides(field: ComplexField) -> tuple[float, float]:
    """``(|| |grad|^{-(n-5)/4} g ||_{L^4}^2, || |grad|^{-(n-5)/2} |g|^2 ||_{L^2})``."""
    grid = field.grid
    g = apply_multiplier(field, FractionalDerivative(_riesz_order(grid.dim))).physical()
    lhs = math.sqrt(_quad(grid, np.abs(g) ** 4))
    return lhs, math.sqrt(riesz_bilinear(field))


def interaction_norm(trajectory: Trajectory) -> float:
    """``|| |grad|^{-(n-5)/4} u ||_{L^4_t L^4_x}`` by trapezoid rule over the snapshots."""
    if len(trajectory) < 2:
        raise ValueError("interaction_norm needs a trajectory with at least two snapshots")
    grid = trajectory.grid
    spec = FractionalDerivative(_riesz_order(grid.dim))
    vals = [_quad(grid, np.abs(apply_multiplier(f, spec).physical()) ** 4) for f in trajectory.fields]
    return trapezoid(vals, trajectory.times) ** 0.25


def minimum_image_kernel(grid: Grid) -> np.ndarray:
    """``K(z) = z/|z|`` on grid offsets wrapped to ``[-L/2, L/2)``, ``K(0) = 0``; shape ``(n,) + grid.shape``."""
    z = minimum_image(grid, [0.0] * grid.dim)
    r = np.sqrt(sum(zi * zi for zi in z))
    safe = np.where(r > 0, r, 1.0)
    return np.array([np.where(r > 0, zi / safe, 0.0) for zi in z])


def _reflect(a: np.ndarray) -> np.ndarray:
    """``a(-z)`` for an array indexed by grid offsets."""
    out = a
    for ax in range(a.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def interaction_action_bound(field: ComplexField) -> tuple[float, float]:
    """Interaction Morawetz action for ``a = |x - y|`` and ``||u||_{Hdot^1/2}^2 ||u||_{L^2}^2``.

    The action ``2 int [p . (K * rho) + rho (Kt * p)]`` uses the momentum
    density ``p = Im(conj(u) grad u)``, ``rho = |u|^2`` and the minimum-image
    kernel ``K(z) = z/|z|`` with ``Kt(z) = K(-z)``; convolutions are
    circular, via FFT.
    """
    grid = field.grid
    u = field.physical()
    rho = np.abs(u) ** 2
    p = _momentum_density(u, gradient(field))
    K = minimum_image_kernel(grid)
    h = grid.cell_volume
    rho_hat = np.fft.fftn(rho)
    total = 0.0
    for j in range(grid.dim):
        kj_hat = np.fft.fftn(K[j])
        ktj_hat = np.fft.fftn(_reflect(K[j]))
        k_rho = np.fft.ifftn(kj_hat * rho_hat).real * h
        kt_p = np.fft.ifftn(ktj_hat * np.fft.fftn(p[j])).real * h
        total += float(np.sum(p[j] * k_rho + rho * kt_p))
    action = 2.0 * total * h
    rhs_product = sobolev_norm(field, 0.5) ** 2 * sobolev_norm(field, 0.0) ** 2
    return action, rhs_product


class InadmissiblePairError(ValueError):
    pass


def check_biharmonic_pair(n: int, gamma: float, rho: float, tol: float = 1e-12) -> None:
    """Raise unless ``4/gamma = n (1/2 - 1/rho)`` with ``gamma, rho >= 2``."""
    if gamma < 2 or rho < 2:
        raise InadmissiblePairError(f"pair ({gamma}, {rho}) violates gamma, rho >= 2")
    if gamma == 2 and math.isinf(rho) and n == 4:
        raise InadmissiblePairError("pair (2, inf) is excluded in dimension 4")
    lhs = 4.0 / gamma
    rhs_ = n * (0.5 - 1.0 / rho)
    if abs(lhs - rhs_) > tol:
        raise InadmissiblePairError(
            f"pair ({gamma}, {rho}) violates 4/gamma = n(1/2 - 1/rho): {lhs!r} != {rhs_!r} (n = {n})"
        )


def _lp_norm(grid: Grid, f: np.ndarray, r: float) -> float:
    a = np.abs(f)
    if math.isinf(r):
        return float(np.max(a))
    return _quad(grid, a**r) ** (1.0 / r)


def z_norm(trajectory: Trajectory, N: float, s: float, pairs: Sequence[tuple]) -> float:
    """Dyadic space-time norm ``max_pairs (sum_M ||P_M <Delta> I u||_{L^q_t L^r_x}^2)^(1/2)``.

    Sharp Littlewood-Paley blocks, ``<Delta>`` is ``(1 + |xi|^4)^(1/2)``,
    time integrals by trapezoid rule and ``q = inf`` as a max over snapshots.
    """
    grid = trajectory.grid
    pairs = [(float(q), float(r)) for q, r in pairs]
    for q, r in pairs:
        check_biharmonic_pair(grid.dim, q, r)
    if not len(trajectory):
        raise ValueError("empty trajectory")
    sym = symbol_on_grid(grid, BiharmonicBessel()) * symbol_on_grid(grid, IOperator(N, s))
    levels = lp_levels(grid)
    masks = [symbol_on_grid(grid, LittlewoodPaleyBand(M)) for M in levels]
    # norms[p][M][t]
    norms = np.zeros((len(pairs), len(levels), len(trajectory)))
    for t, f in enumerate(trajectory.fields):
        c = f.coefficients() * sym
        for b, mask in enumerate(masks):
            block = np.fft.ifftn(c * mask) * grid.size
            for pi, (_, r) in enumerate(pairs):
                norms[pi, b, t] = _lp_norm(grid, block, r)
    best = 0.0
    for pi, (q, _) in enumerate(pairs):
        total = 0.0
        for b in range(len(levels)):
            series = norms[pi, b]
            if math.isinf(q):
                tn = float(np.max(series))
            else:
                tn = trapezoid(series**q, trajectory.times) ** (1.0 / q)
            total += tn * tn
        best = max(best, math.sqrt(total))
    return best


@dataclass
class DiagnosticsRecord:
    time: float
    mass: float
    energy: float
    modified_energy: dict = dc_field(default_factory=dict)
    h_half_norm: float = 0.0
    hs_norm: float = 0.0
    morawetz_action: float = 0.0
    pointwise_max: float = 0.0
    truncated_mass: float = 0.0

    def columns(self) -> list[str]:
        return (
            ["time", "mass", "energy"]
            + [f"modified_energy_N{N:g}" for N in self.modified_energy]
            + ["h_half_norm", "hs_norm", "morawetz_action", "pointwise_max", "truncated_mass"]
        )

    def row(self) -> list[float]:
        return (
            [self.time, self.mass, self.energy]
            + list(self.modified_energy.values())
            + [self.h_half_norm, self.hs_norm, self.morawetz_action, self.pointwise_max, self.truncated_mass]
        )

    def as_dict(self) -> dict:
        return dict(zip(self.columns(), self.row()))


def diagnostics(
    field: ComplexField,
    time: float = 0.0,
    N_list: Sequence[float] = (),
    s: float = 1.0,
    weight=None,
    truncated_mass: float = 0.0,
) -> DiagnosticsRecord:
    """Evaluate every per-snapshot functional.  The default weight is ``RegularizedRadial(L/P)``."""
    grid = field.grid
    if weight is None:
        weight = RegularizedRadial(grid.spacing)
    return DiagnosticsRecord(
        time=float(time),
        mass=mass(field),
        energy=energy(field),
        modified_energy={float(N): modified_energy(field, N, s) for N in N_list},
        h_half_norm=sobolev_norm(field, 0.5),
        hs_norm=sobolev_norm(field, s, homogeneous=False),
        morawetz_action=morawetz_action(field, weight),
        pointwise_max=float(np.max(np.abs(field.physical()))),
        truncated_mass=float(truncated_mass),
    )


def diagnostics_csv(records: Sequence[DiagnosticsRecord]) -> str:
    """One row per snapshot; columns as :meth:`DiagnosticsRecord.columns`."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if records:
        w.writerow(records[0].columns())
        for rec in records:
            w.writerow([repr(float(v)) for v in rec.row()])
    return buf.getvalue()
