"""Periodic grids, the discrete Fourier transform and radial Fourier multipliers.

Conventions
-----------
A grid of ``P`` points per axis on the box ``[0, L)^n`` samples a field at
``x_j = j L / P``.  The forward transform carries the ``1/P^n`` factor, so a
field is recovered as ``u(x) = sum_k uhat_k exp(i k.x)`` with ``k`` on the
lattice ``(2 pi / L) * {-P/2, ..., P/2 - 1}^n``.  Parseval then reads::

    sum_x |u(x)|^2 (L/P)^n = L^n sum_k |uhat_k|^2

Coefficient arrays are kept in numpy's FFT ordering (zero mode first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Union

import numpy as np

__all__ = [
    "MAX_POINTS",
    "Grid",
    "ComplexField",
    "RepresentationError",
    "make_grid",
    "to_spectral",
    "to_physical",
    "FractionalDerivative",
    "BesselPotential",
    "BiharmonicBessel",
    "RieszPotential",
    "LittlewoodPaleyBand",
    "LowPass",
    "IOperator",
    "MultiplierSpec",
    "symbol_value",
    "symbol_on_grid",
    "apply_multiplier",
    "lp_levels",
    "lp_project",
    "lp_partition",
    "dealias_mask",
    "dealias",
    "band_mask",
]

#: Default memory budget, in grid points (a complex128 field of this size is 256 MiB).
MAX_POINTS = 2**24


def _is_power_of_two(p: int) -> bool:
    return p > 0 and (p & (p - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, L)^dim``.

    Immutable; derived arrays are computed lazily and cached on the instance.
    """

    dim: int
    points_per_axis: int
    box_length: float

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.box_length**self.dim

    @cached_property
    def mode_indices(self) -> np.ndarray:
        """Integer mode numbers along one axis, in FFT order."""
        p = self.points_per_axis
        return np.fft.fftfreq(p, 1.0 / p).astype(np.int64)

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        return (2.0 * np.pi / self.box_length) * self.mode_indices

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Sparse (broadcastable) wavenumber arrays, one per axis."""
        return tuple(np.meshgrid(*([self.axis_wavenumbers] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def derivative_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """As :attr:`wavenumbers` but with the unpaired Nyquist entry set to 0.

        Used for odd-order derivatives so that they map real fields to real fields.
        """
        k = self.axis_wavenumbers.copy()
        if self.points_per_axis % 2 == 0:
            k[self.points_per_axis // 2] = 0.0
        return tuple(np.meshgrid(*([k] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Sparse (broadcastable) physical coordinates, one per axis."""
        x = np.arange(self.points_per_axis) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def radius_squared(self) -> np.ndarray:
        k2 = sum(k * k for k in self.wavenumbers)
        k2 = np.broadcast_to(k2, self.shape).copy()
        k2.setflags(write=False)
        return k2

    @cached_property
    def radius(self) -> np.ndarray:
        r = np.sqrt(self.radius_squared)
        r.setflags(write=False)
        return r

    @property
    def max_radius(self) -> float:
        """Largest ``|k|`` on the lattice (the corner mode)."""
        return float(math.sqrt(self.dim) * (self.points_per_axis // 2) * 2.0 * np.pi / self.box_length)

    def max_abs_mode(self) -> np.ndarray:
        """Per-point ``max_axis |m_axis|`` over the integer lattice."""
        m = np.abs(self.mode_indices)
        out = np.zeros(self.shape, dtype=np.int64)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.points_per_axis
            out = np.maximum(out, m.reshape(shape))
        return out

    def zeros(self) -> "ComplexField":
        return ComplexField(self, np.zeros(self.shape, dtype=np.complex128))


def make_grid(
    dim: int,
    points_per_axis: int,
    box_length: float,
    *,
    require_power_of_two: bool = True,
    max_points: int = MAX_POINTS,
) -> Grid:
    """Build a :class:`Grid`.

    ``require_power_of_two=False`` admits any even ``points_per_axis >= 4``
    (used for the ``6^7`` inequality checks).
    """
    if not isinstance(dim, (int, np.integer)) or not 1 <= dim <= 7:
        raise ValueError(f"dim must be an integer in 1..7, got {dim!r}")
    p = int(points_per_axis)
    if p != points_per_axis or p < 4:
        raise ValueError(f"points_per_axis must be an integer >= 4, got {points_per_axis!r}")
    if require_power_of_two and not _is_power_of_two(p):
        raise ValueError(f"points_per_axis must be a power of two, got {p}")
    if p % 2:
        raise ValueError(f"points_per_axis must be even, got {p}")
    if not box_length > 0 or not math.isfinite(box_length):
        raise ValueError(f"box_length must be positive and finite, got {box_length!r}")
    if p**dim > max_points:
        raise MemoryError(f"grid {p}^{dim} = {p**dim} points exceeds the budget of {max_points} points")
    return Grid(int(dim), p, float(box_length))


class RepresentationError(ValueError):
    """Field is in the wrong (physical/spectral) representation for the call."""


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a grid, tagged physical or spectral.

    ``values`` has shape ``grid.shape``; in the spectral representation it
    holds the normalized coefficients ``uhat_k`` in FFT order.
    """

    grid: Grid
    values: np.ndarray
    spectral: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            if v.size != self.grid.size:
                raise ValueError(f"values of size {v.size} do not match grid of {self.grid.size} points")
            v = v.reshape(self.grid.shape)
        object.__setattr__(self, "values", v)

    def physical(self) -> np.ndarray:
        """Physical samples (transforming if needed)."""
        if self.spectral:
            return np.fft.ifftn(self.values) * self.grid.size
        return self.values

    def coefficients(self) -> np.ndarray:
        """Normalized spectral coefficients (transforming if needed)."""
        if self.spectral:
            return self.values
        return np.fft.fftn(self.values) / self.grid.size

    def with_values(self, values: np.ndarray, spectral: bool | None = None) -> "ComplexField":
        return ComplexField(self.grid, values, self.spectral if spectral is None else spectral)


def to_spectral(field: ComplexField) -> ComplexField:
    if field.spectral:
        raise RepresentationError("field is already spectral")
    return ComplexField(field.grid, field.coefficients(), spectral=True)


def to_physical(field: ComplexField) -> ComplexField:
    if not field.spectral:
        raise RepresentationError("field is already physical")
    return ComplexField(field.grid, field.physical(), spectral=False)


# ---------------------------------------------------------------------------
# Radial multipliers


def _radii(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    return r


def _dyadic(M) -> int:
    m = int(M)
    if m != M or not _is_power_of_two(m):
        raise ValueError(f"dyadic frequency must be a power of two >= 1, got {M!r}")
    return m


@dataclass(frozen=True)
class FractionalDerivative:
    """``|xi|^s``; for ``s < 0`` the zero mode maps to 0."""

    s: float

    def symbol(self, r):
        r = _radii(r)
        if self.s == 0:
            return np.ones_like(r)
        if self.s > 0:
            return r**self.s
        out = np.zeros_like(r)
        nz = r > 0
        out[nz] = r[nz] ** self.s
        return out


@dataclass(frozen=True)
class BesselPotential:
    """``(1 + |xi|^2)^(s/2)``."""

    s: float

    def symbol(self, r):
        r = _radii(r)
        return (1.0 + r * r) ** (self.s / 2)


@dataclass(frozen=True)
class BiharmonicBessel:
    """``(1 + |xi|^4)^(s/4)``; the default ``s = 2`` is the ``<Delta>`` symbol."""

    s: float = 2.0

    def symbol(self, r):
        r = _radii(r)
        return (1.0 + r**4) ** (self.s / 4)


@dataclass(frozen=True)
class RieszPotential:
    """``|xi|^(-alpha)``, with the zero mode mapped to 0."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"RieszPotential needs alpha > 0, got {self.alpha!r}")

    def symbol(self, r):
        return FractionalDerivative(-self.alpha).symbol(r)


@dataclass(frozen=True)
class LittlewoodPaleyBand:
    """Sharp dyadic annulus ``M <= |xi| < 2M``; ``M = 1`` is the block ``|xi| < 2``."""

    M: int

    def __post_init__(self):
        object.__setattr__(self, "M", _dyadic(self.M))

    def symbol(self, r):
        r = _radii(r)
        lower = 0.0 if self.M == 1 else float(self.M)
        return ((r >= lower) & (r < 2.0 * self.M)).astype(float)


@dataclass(frozen=True)
class LowPass:
    """Sum of the sharp blocks up to ``M``: ``|xi| < 2M``."""

    M: int

    def __post_init__(self):
        object.__setattr__(self, "M", _dyadic(self.M))

    def symbol(self, r):
        r = _radii(r)
        return (r < 2.0 * self.M).astype(float)


def _smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class IOperator:
    """The smoothing multiplier ``m_N``.

    ``m_N(r) = 1`` for ``r <= N`` and ``(N/r)^(2-s)`` for ``r >= 2N``; in
    between the exponent is blended by a quintic smoothstep in ``log2(r/N)``.
    """

    N: float
    s: float

    def __post_init__(self):
        if not self.N >= 1:
            raise ValueError(f"IOperator needs N >= 1, got {self.N!r}")
        if not 0 < self.s < 2:
            raise ValueError(f"IOperator needs 0 < s < 2, got {self.s!r}")

    def symbol(self, r):
        r = _radii(r)
        out = np.ones_like(r)
        hi = r > self.N
        if np.any(hi):
            rho = r[hi] / self.N
            blend = _smoothstep5(np.log2(rho))
            out[hi] = np.exp(-(2.0 - self.s) * blend * np.log(rho))
        return out


MultiplierSpec = Union[
    FractionalDerivative, BesselPotential, BiharmonicBessel, RieszPotential, LittlewoodPaleyBand, LowPass, IOperator
]


def symbol_value(spec: MultiplierSpec, r):
    """Evaluate the radial symbol of ``spec`` at radius (or radii) ``r``."""
    out = spec.symbol(r)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=64)
def symbol_on_grid(grid: Grid, spec: MultiplierSpec) -> np.ndarray:
    """Symbol sampled on the grid's frequency lattice (read-only, cached)."""
    sig = np.asarray(spec.symbol(grid.radius), dtype=float)
    sig.setflags(write=False)
    return sig


def apply_multiplier(field: ComplexField, spec: MultiplierSpec, *, return_discarded: bool = False):
    """Multiply every spectral coefficient by ``sigma(|k|)``.

    The result keeps the input representation.  With ``return_discarded``
    the mass (``1/2 |uhat_0|^2 L^n``) of a zero mode annihilated by the
    symbol is returned alongside the field.
    """
    coef = field.coefficients()
    sig = symbol_on_grid(field.grid, spec)
    if np.all(sig == 1.0):
        # identity on this lattice: return the input untouched, not a round-tripped copy
        return (field, 0.0) if return_discarded else field
    out = ComplexField(field.grid, coef * sig, spectral=True)
    if not field.spectral:
        out = to_physical(out)
    if return_discarded:
        zero = (0,) * field.grid.dim
        discarded = 0.5 * abs(coef[zero]) ** 2 * field.grid.volume if sig[zero] == 0 else 0.0
        return out, discarded
    return out


def lp_levels(grid: Grid) -> list[int]:
    """Dyadic levels ``1, 2, 4, ...`` whose blocks cover the lattice."""
    levels = [1]
    while 2.0 * levels[-1] <= grid.max_radius:
        levels.append(2 * levels[-1])
    return levels


def lp_project(field: ComplexField, M: int) -> ComplexField:
    return apply_multiplier(field, LittlewoodPaleyBand(M))


def lp_partition(field: ComplexField) -> list[ComplexField]:
    """Sharp Littlewood-Paley blocks ``[P_1 u, P_2 u, P_4 u, ...]``; they sum to ``u``."""
    return [lp_project(field, M) for M in lp_levels(field.grid)]


@lru_cache(maxsize=16)
def band_mask(grid: Grid, band: int) -> np.ndarray:
    """Boolean mask of modes with every ``|m_axis| <= band``."""
    mask = grid.max_abs_mode() <= band
    mask.setflags(write=False)
    return mask


def dealias_mask(grid: Grid) -> np.ndarray:
    """Modes kept by the half rule: every ``|m_axis| <= P/4``."""
    return band_mask(grid, grid.points_per_axis // 4)


def dealias(field: ComplexField, rule: str = "half_rule") -> ComplexField:
    if rule == "none":
        return field
    if rule != "half_rule":
        raise ValueError(f"unknown dealias rule {rule!r}")
    out = ComplexField(field.grid, field.coefficients() * dealias_mask(field.grid), spectral=True)
    return out if field.spectral else to_physical(out)
