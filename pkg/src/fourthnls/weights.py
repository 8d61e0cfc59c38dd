"""Real weights ``a(x)`` for Morawetz-type functionals and their derivatives.

Two kinds are provided.  :class:`SmoothPeriodicGaussianBump` is a periodic
Gaussian truncated to a trigonometric polynomial, differentiated spectrally,
which makes discrete integration by parts exact.  :class:`RegularizedRadial`
is ``sqrt(|x - x0|^2 + eps^2)`` with closed-form derivatives (minimum-image
displacement on the torus).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .spectral import Grid, band_mask

__all__ = ["WeightDerivatives", "SmoothPeriodicGaussianBump", "RegularizedRadial", "minimum_image"]


@dataclass
class WeightDerivatives:
    """All derivatives of ``a`` needed by the Morawetz rate identity.

    ``grad[j]``, ``hess[j][k]`` and ``hess_lap[j][k]`` (``d_jk Delta a``)
    are nested lists of arrays with the grid's shape.
    """

    a: np.ndarray
    grad: list
    hess: list
    lap: np.ndarray
    hess_lap: list
    bilap: np.ndarray
    trilap: np.ndarray


def minimum_image(grid: Grid, center: Optional[Sequence[float]] = None) -> list[np.ndarray]:
    """Displacements ``x - center`` wrapped into ``[-L/2, L/2)`` per axis (full arrays)."""
    L = grid.box_length
    if center is None:
        center = [L / 2] * grid.dim
    out = []
    for x, c in zip(grid.coordinates, center):
        d = np.mod(x - c + L / 2, L) - L / 2
        out.append(np.broadcast_to(d, grid.shape))
    return out


@dataclass(frozen=True)
class SmoothPeriodicGaussianBump:
    """``exp(-|x - center|^2 / (2 width^2))``, periodized and band-limited.

    Coefficients with any ``|m_axis| > band`` are dropped, so the weight is
    an exact trigonometric polynomial.  ``band=None`` keeps every mode below
    the Nyquist index.
    """

    width: float
    center: Optional[tuple] = None
    band: Optional[int] = None

    periodic = True

    def coefficients(self, grid: Grid) -> np.ndarray:
        d = minimum_image(grid, self.center)
        a = np.exp(-sum(di * di for di in d) / (2.0 * self.width**2))
        coef = np.fft.fftn(a) / grid.size
        band = grid.points_per_axis // 2 - 1 if self.band is None else self.band
        return coef * band_mask(grid, band)

    def derivatives(self, grid: Grid) -> WeightDerivatives:
        return _bump_derivatives(self, grid)


def _symmetric(n, entry):
    out = [[None] * n for _ in range(n)]
    for j in range(n):
        for l in range(j, n):
            out[j][l] = out[l][j] = entry(j, l)
    return out


@lru_cache(maxsize=8)
def _bump_derivatives(weight: SmoothPeriodicGaussianBump, grid: Grid) -> WeightDerivatives:
    coef = weight.coefficients(grid)
    k = [np.broadcast_to(kj, grid.shape) for kj in grid.wavenumbers]
    kd = grid.derivative_wavenumbers
    k2 = grid.radius_squared
    n = grid.dim

    def phys(c):
        return (np.fft.ifftn(c) * grid.size).real

    lap_c = -k2 * coef
    return WeightDerivatives(
        a=phys(coef),
        grad=[phys(1j * kd[j] * coef) for j in range(n)],
        hess=_symmetric(n, lambda j, l: phys(-k[j] * k[l] * coef)),
        lap=phys(lap_c),
        hess_lap=_symmetric(n, lambda j, l: phys(-k[j] * k[l] * lap_c)),
        bilap=phys(k2 * k2 * coef),
        trilap=phys(-(k2**3) * coef),
    )


# Functions of q = |x|^2 stored as {(m, p): c} meaning sum c * q^m * (q + e)^p.


def _dq(terms: dict) -> dict:
    out: dict = {}
    for (m, p), c in terms.items():
        if m:
            out[(m - 1, p)] = out.get((m - 1, p), 0.0) + c * m
        if p:
            out[(m, p - 1)] = out.get((m, p - 1), 0.0) + c * p
    return {key: c for key, c in out.items() if c != 0}


def _radial_laplacian(terms: dict, n: int) -> dict:
    """For F(q), Delta F = 2 n F'(q) + 4 q F''(q)."""
    d1 = _dq(terms)
    d2 = _dq(d1)
    out = {key: 2.0 * n * c for key, c in d1.items()}
    for (m, p), c in d2.items():
        out[(m + 1, p)] = out.get((m + 1, p), 0.0) + 4.0 * c
    return {key: c for key, c in out.items() if c != 0}


def _evaluate(terms: dict, q: np.ndarray, e: float) -> np.ndarray:
    out = np.zeros_like(q)
    for (m, p), c in terms.items():
        out += c * q**m * (q + e) ** p
    return out


@dataclass(frozen=True)
class RegularizedRadial:
    """``a_eps(x) = sqrt(|x - x0|^2 + eps^2)``, a smoothed ``|x - x0|``."""

    epsilon: float
    center: Optional[tuple] = None

    periodic = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def derivatives(self, grid: Grid) -> WeightDerivatives:
        n = grid.dim
        e = self.epsilon**2
        d = minimum_image(grid, self.center)
        q = sum(di * di for di in d)
        F = {(0, 0.5): 1.0}
        G = _radial_laplacian(F, n)
        G2 = _radial_laplacian(G, n)
        G3 = _radial_laplacian(G2, n)
        F1, F2 = _dq(F), _dq(_dq(F))
        G1, G22 = _dq(G), _dq(_dq(G))
        f1, f2 = _evaluate(F1, q, e), _evaluate(F2, q, e)
        g1, g2 = _evaluate(G1, q, e), _evaluate(G22, q, e)

        def second(first, sec):
            return [[(2.0 * first if j == l else 0.0) + 4.0 * d[j] * d[l] * sec for l in range(n)] for j in range(n)]

        return WeightDerivatives(
            a=_evaluate(F, q, e),
            grad=[2.0 * d[j] * f1 for j in range(n)],
            hess=second(f1, f2),
            lap=_evaluate(G, q, e),
            hess_lap=second(g1, g2),
            bilap=_evaluate(G2, q, e),
            trilap=_evaluate(G3, q, e),
        )
