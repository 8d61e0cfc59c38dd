"""Pseudospectral laboratory for the defocusing cubic fourth-order NLS
``i u_t + Delta^2 u + |u|^2 u = 0`` on a periodic box."""

from .spectral import (
    BesselPotential,
    BiharmonicBessel,
    ComplexField,
    FractionalDerivative,
    Grid,
    IOperator,
    LittlewoodPaleyBand,
    LowPass,
    RieszPotential,
    apply_multiplier,
    dealias,
    lp_partition,
    lp_project,
    make_grid,
    symbol_value,
    to_physical,
    to_spectral,
)
from .dynamics import BlowUpError, SimState, Trajectory, evolve, propagate_linear, rhs, step_strang
from .functionals import (
    energy,
    interaction_action_bound,
    interaction_norm,
    mass,
    modified_energy,
    morawetz_action,
    morawetz_rate_identity,
    riesz_bilinear,
    sobolev_norm,
    z_norm,
)
from .random_fields import RandomFieldSpec, gaussian_bump, plane_wave, seeded_random_field
from .weights import RegularizedRadial, SmoothPeriodicGaussianBump

__version__ = "0.1.0"
