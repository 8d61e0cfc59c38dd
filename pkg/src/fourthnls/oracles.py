"""Independent reference computations used to cross-check the fast paths.

Nothing here goes through the FFT-based operators of :mod:`fourthnls.spectral`:
kernels are summed from explicit cosine series, convolutions are direct
double sums over grid points, and derivatives are finite differences.  All
routines are ``O(P^{2n})`` or worse and meant for tiny grids.
"""
from __future__ import annotations

import itertools

import numpy as np

from .spectral import ComplexField, Grid, IOperator

__all__ = [
    "DIRECT_SUM_LIMIT",
    "riesz_kernel_direct",
    "riesz_bilinear_direct",
    "interaction_action_direct",
    "fd_bilaplacian",
    "multiplier_constants",
    "multiplier_ratios_on_grid",
]

#: Largest grid (number of points) the double-sum oracles accept.
DIRECT_SUM_LIMIT = 4**6

# central second-difference weights, orders 2..8 (offsets 0, 1, 2, ...)
_D2 = {
    2: [-2.0, 1.0],
    4: [-5 / 2, 4 / 3, -1 / 12],
    6: [-49 / 18, 3 / 2, -3 / 20, 1 / 90],
    8: [-205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560],
}


def _check_size(grid: Grid):
    if grid.size > DIRECT_SUM_LIMIT:
        raise ValueError(f"grid has {grid.size} points; double sums are limited to {DIRECT_SUM_LIMIT}")


def _lattice(grid: Grid) -> np.ndarray:
    """All wave vectors of the grid, shape ``(P^n, n)``."""
    m = np.fft.fftfreq(grid.points_per_axis, 1.0 / grid.points_per_axis)
    k = 2.0 * np.pi * m / grid.box_length
    return np.array(list(itertools.product(k, repeat=grid.dim)))


def _points(grid: Grid) -> np.ndarray:
    x = np.arange(grid.points_per_axis) * grid.spacing
    return np.array(list(itertools.product(x, repeat=grid.dim)))


def riesz_kernel_direct(grid: Grid, order: float) -> np.ndarray:
    """``G(z) = L^-n sum_{k != 0} |k|^-order cos(k.z)`` at every grid offset ``z`` (flattened, C order)."""
    k = _lattice(grid)
    kr = np.sqrt(np.sum(k * k, axis=1))
    nz = kr > 0
    k, weights = k[nz], kr[nz] ** (-order)
    z = _points(grid)
    G = np.empty(len(z))
    for i, zi in enumerate(z):
        G[i] = np.sum(weights * np.cos(k @ zi))
    return G / grid.volume


def _offset_index(grid: Grid) -> np.ndarray:
    """``idx[a, b]`` = flat index of the offset ``x_a - x_b`` (mod P per axis)."""
    P, n = grid.points_per_axis, grid.dim
    ij = np.array(list(itertools.product(range(P), repeat=n)))
    diff = (ij[:, None, :] - ij[None, :, :]) % P
    strides = P ** np.arange(n - 1, -1, -1)
    return diff @ strides


def riesz_bilinear_direct(field: ComplexField) -> float:
    """``sum_{x,y} |u(x)|^2 |u(y)|^2 G(x - y) h^{2n}`` with ``G`` the periodized kernel of ``|grad|^{-(n-5)}``.

    For ``n = 5`` the kernel is the lattice delta and the sum is ``||u||_{L^4}^4``.
    """
    grid = field.grid
    _check_size(grid)
    n = grid.dim
    if n < 5:
        raise ValueError("needs n >= 5")
    rho = (np.abs(field.physical()) ** 2).ravel()
    h = grid.cell_volume
    if n == 5:
        return float(np.sum(rho * rho) * h)
    G = riesz_kernel_direct(grid, n - 5)
    idx = _offset_index(grid)
    return float(rho @ G[idx] @ rho) * h * h


def _fd_gradient(grid: Grid, u: np.ndarray) -> list:
    """Eighth-order central first differences."""
    c = [4 / 5, -1 / 5, 4 / 105, -1 / 280]
    out = []
    for ax in range(grid.dim):
        d = sum(cj * (np.roll(u, -(j + 1), axis=ax) - np.roll(u, j + 1, axis=ax)) for j, cj in enumerate(c))
        out.append(d / grid.spacing)
    return out


def interaction_action_direct(field: ComplexField, momentum=None) -> float:
    """``2 sum_{x,y} [p(x).K(x-y) rho(y) + rho(x) K(y-x).p(y)] h^{2n}`` with ``K(z) = z/|z|``.

    Displacements are wrapped to ``[-L/2, L/2)`` from the coordinates.  The
    momentum density ``p = Im(conj(u) grad u)`` may be supplied; otherwise it
    is formed with eighth-order finite differences.
    """
    grid = field.grid
    _check_size(grid)
    u = field.physical()
    if momentum is None:
        momentum = [np.imag(np.conj(u) * d) for d in _fd_gradient(grid, u)]
    p = np.array([np.asarray(pj).ravel() for pj in momentum])
    rho = (np.abs(u) ** 2).ravel()
    x = _points(grid)
    L = grid.box_length
    total = 0.0
    def kernel(z):
        z = np.mod(z + L / 2, L) - L / 2
        r = np.sqrt(np.sum(z * z, axis=1))
        return np.where(r[:, None] > 0, z / np.where(r > 0, r, 1.0)[:, None], 0.0)

    for a in range(len(x)):
        # the wrap is not odd at offsets of exactly L/2, so both directions are formed
        forward = kernel(x[a] - x)
        backward = kernel(x - x[a])
        total += float(p[:, a] @ (forward.T @ rho)) + rho[a] * float(np.sum(backward * p.T))
    return 2.0 * total * grid.cell_volume**2


def fd_bilaplacian(field: ComplexField, order: int = 8) -> np.ndarray:
    """``Delta^2 u`` by applying a central finite-difference Laplacian twice."""
    if order not in _D2:
        raise ValueError(f"order must be one of {sorted(_D2)}")
    grid = field.grid
    w = _D2[order]
    h2 = grid.spacing**2

    def lap(v):
        out = grid.dim * w[0] * v
        for ax in range(grid.dim):
            for j, wj in enumerate(w[1:], start=1):
                out = out + wj * (np.roll(v, j, axis=ax) + np.roll(v, -j, axis=ax))
        return out / h2

    return lap(lap(field.physical()))


def _scan_radii(N: float, r_max: float, samples: int) -> np.ndarray:
    lin = np.linspace(0.0, 4.0 * N, samples)
    log = np.geomspace(1e-3, r_max, samples)
    return np.unique(np.concatenate([lin, log, [N, 2.0 * N, r_max]]))


def multiplier_constants(N: float, s: float, r_max: float | None = None, samples: int = 20001) -> tuple[float, float]:
    """Best constants on a 1-D radius scan over ``[0, r_max]`` (default ``10^4 N``).

    ``C  = sup m^2 (1+r^2)^2 / (N^{2(2-s)} (1+r^2)^s)``
    ``C' = sup (1+r^2)^s / (m^2 (1+r^4))``
    """
    r_max = 1e4 * N if r_max is None else r_max
    r = _scan_radii(N, r_max, samples)
    C, Cp = _ratios(N, s, r)
    return float(np.max(C)), float(np.max(Cp))


def _ratios(N: float, s: float, r: np.ndarray):
    m = IOperator(N, s).symbol(r)
    one_r2 = 1.0 + r * r
    C = m * m * one_r2 ** (2.0 - s) / N ** (2.0 * (2.0 - s))
    Cp = one_r2**s / (m * m * (1.0 + r**4))
    return C, Cp


def multiplier_ratios_on_grid(grid: Grid, N: float, s: float) -> tuple[float, float]:
    """Largest values of the two ratios of :func:`multiplier_constants` over the grid's radii."""
    r = np.unique(grid.radius.ravel())
    C, Cp = _ratios(N, s, r)
    return float(np.max(C)), float(np.max(Cp))

