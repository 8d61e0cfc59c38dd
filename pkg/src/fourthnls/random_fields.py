"""Deterministic initial data: plane waves, Gaussian bumps, seeded random fields.

Random fields use numpy's counter-based ``Philox`` bit generator keyed by the
seed.  Only ``Generator.random`` (53-bit uniform doubles) is drawn, two
arrays of the full grid shape in C order, and complex Gaussian coefficients
are formed explicitly as ``sqrt(-2 log(1 - U1)) * exp(2 pi i U2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .spectral import ComplexField, Grid, band_mask

__all__ = ["RandomFieldSpec", "seeded_random_field", "plane_wave", "gaussian_bump"]


@dataclass(frozen=True)
class RandomFieldSpec:
    """Band-limited random field.

    ``band`` is the largest per-axis mode index kept.  The ``gaussian``
    profile weights mode ``m`` by ``exp(-|m|^2 / (2 width^2))``.  The field is
    scaled so that its root-mean-square modulus equals ``amplitude``.
    """

    seed: int
    band: int
    spectral_profile: str = "flat"
    profile_width: float = 1.0
    amplitude: float = 1.0
    mean_free: bool = True

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.spectral_profile not in ("flat", "gaussian"):
            raise ValueError(f"unknown spectral profile {self.spectral_profile!r}")
        if self.band < 0:
            raise ValueError("band must be nonnegative")


def seeded_random_field(grid: Grid, spec: RandomFieldSpec) -> ComplexField:
    """Draw the field described by ``spec``; the result is in spectral representation."""
    if spec.band > grid.points_per_axis // 2 - 1:
        raise ValueError(f"band {spec.band} exceeds P/2 - 1 = {grid.points_per_axis // 2 - 1}")
    rng = np.random.Generator(np.random.Philox(key=int(spec.seed)))
    u1 = rng.random(grid.shape)
    u2 = rng.random(grid.shape)
    coef = np.sqrt(-2.0 * np.log1p(-u1)) * np.exp(2j * np.pi * u2)
    coef = coef * band_mask(grid, spec.band)
    if spec.spectral_profile == "gaussian":
        m2 = sum(np.asarray(mi, dtype=float) ** 2 for mi in np.meshgrid(*([grid.mode_indices] * grid.dim), indexing="ij", sparse=True))
        coef = coef * np.exp(-m2 / (2.0 * spec.profile_width**2))
    if spec.mean_free:
        coef[(0,) * grid.dim] = 0.0
    rms = np.sqrt(np.sum(np.abs(coef) ** 2))
    if spec.amplitude == 0 or rms == 0:
        return grid.zeros()
    coef = coef * (spec.amplitude / rms)
    # returned in spectral form so the drawn coefficients (and an exact zero mean) are kept
    return ComplexField(grid, coef, spectral=True)


def plane_wave(grid: Grid, amplitude: float, modes: Sequence[int]) -> ComplexField:
    """``A exp(i k.x)`` with ``k = 2 pi m / L`` for integer mode vector ``m``."""
    modes = list(modes) + [0] * (grid.dim - len(modes))
    k = [2.0 * np.pi * m / grid.box_length for m in modes[: grid.dim]]
    phase = sum(kj * xj for kj, xj in zip(k, grid.coordinates))
    return ComplexField(grid, amplitude * np.exp(1j * np.broadcast_to(phase, grid.shape)))


def gaussian_bump(
    grid: Grid,
    amplitude: float,
    width: float,
    center: Optional[Sequence[float]] = None,
    momentum: Optional[Sequence[int]] = None,
) -> ComplexField:
    """``A exp(-|x - c|^2 / (2 w^2))``, optionally times ``exp(i k.x)`` for integer ``momentum``.

    The box-centered default keeps the bump away from the periodic boundary.
    """
    L = grid.box_length
    if center is None:
        center = [L / 2] * grid.dim
    r2 = sum((x - c) ** 2 for x, c in zip(grid.coordinates, center))
    u = amplitude * np.exp(-np.broadcast_to(r2, grid.shape) / (2.0 * width**2))
    u = u.astype(np.complex128)
    if momentum is not None and any(momentum):
        u = u * plane_wave(grid, 1.0, momentum).values
    return ComplexField(grid, u)
