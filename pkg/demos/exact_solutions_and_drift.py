"""Plane waves, the free propagator, and how the splitting error scales with dt.

Run with ``python demos/exact_solutions_and_drift.py``.
"""
import numpy as np

from fourthnls import energy, evolve, gaussian_bump, make_grid, mass, plane_wave, propagate_linear
from fourthnls.spectral import dealias

TWO_PI = 2.0 * np.pi

# A plane wave only picks up a phase: both sub-flows act on it exactly.
grid = make_grid(2, 16, TWO_PI)
A, modes = 0.7, (1, 2)
u0 = plane_wave(grid, A, modes)
traj = evolve(u0, 1.0, 1e-3, 1000, dealias_rule="none")
k4 = float(sum(m * m for m in modes)) ** 2
exact = u0.physical() * np.exp(1j * (k4 + A * A) * traj.times[-1])
print(f"plane wave after {traj.steps} steps: max error {np.max(np.abs(traj.fields[-1].physical() - exact)):.2e}")

# The free propagator is unitary: forward then backward is the identity.
u = gaussian_bump(make_grid(3, 16, TWO_PI), 1.0, 0.8)
back = propagate_linear(propagate_linear(u, 0.37), -0.37)
print(f"free round trip: max error {np.max(np.abs(back.physical() - u.physical())):.2e}")

# Mass is conserved to roundoff; energy drift shrinks like dt^2.
grid = make_grid(2, 64, 20.0)
u0 = dealias(gaussian_bump(grid, 1.0, 2.5))
m0, e0 = mass(u0), energy(u0)
print("\n    dt        mass drift    energy drift")
prev = None
for dt in (0.04, 0.02, 0.01, 0.005):
    nsteps = int(round(1.0 / dt))
    last = evolve(u0, 1.0, dt, nsteps).fields[-1]
    dm = abs(mass(last) - m0) / m0
    de = abs(energy(last) - e0) / e0
    ratio = "" if prev is None else f"   ratio {prev / de:.3f}"
    print(f"  {dt:<8g}  {dm:.2e}      {de:.2e}{ratio}")
    prev = de
