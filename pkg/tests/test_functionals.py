import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fourthnls import (
    BiharmonicBessel,
    ComplexField,
    IOperator,
    RegularizedRadial,
    SmoothPeriodicGaussianBump,
    Trajectory,
    apply_multiplier,
    energy,
    evolve,
    gaussian_bump,
    interaction_action_bound,
    interaction_norm,
    make_grid,
    mass,
    modified_energy,
    morawetz_action,
    morawetz_rate_identity,
    plane_wave,
    riesz_bilinear,
    sobolev_norm,
    z_norm,
)
from fourthnls.functionals import (
    BandLimitError,
    InadmissiblePairError,
    brackets,
    check_biharmonic_pair,
    diagnostics,
    diagnostics_csv,
    identity_band,
    lemma1_sides,
    minimum_image_kernel,
)
from fourthnls.oracles import interaction_action_direct, riesz_bilinear_direct
from conftest import TWO_PI, random_field


def band_limited_bump(grid, band, momentum=None):
    u = gaussian_bump(grid, 1.0, grid.box_length / 8, momentum=momentum)
    c = u.coefficients() * (grid.max_abs_mode() <= band)
    return ComplexField(grid, np.fft.ifftn(c) * grid.size)


def identity_weight(grid):
    band = identity_band(grid)
    return SmoothPeriodicGaussianBump(grid.box_length / 6, band=grid.points_per_axis // 2 - 1 - 2 * band)


class TestMass:
    def test_plane_wave(self):
        g = make_grid(1, 16, TWO_PI)
        assert mass(plane_wave(g, 2.0, [1])) == pytest.approx(4 * math.pi, rel=1e-14)

    def test_zero(self):
        assert mass(make_grid(3, 4, 1.0).zeros()) == 0.0

    @given(seed=st.integers(0, 2**32))
    @settings(max_examples=25, deadline=None)
    def test_parseval(self, seed):
        u = random_field(2, 16, seed=seed, mean_free=False)
        spectral = 0.5 * u.grid.volume * np.sum(np.abs(u.coefficients()) ** 2)
        assert mass(u) == pytest.approx(spectral, rel=1e-12)


class TestEnergy:
    def test_plane_wave(self):
        g = make_grid(2, 16, TWO_PI)
        assert energy(plane_wave(g, 1.0, [1, 0])) == pytest.approx(0.75 * 4 * math.pi**2, rel=1e-13)

    def test_zero(self):
        assert energy(make_grid(2, 8, 1.0).zeros()) == 0.0

    def test_gaussian_refinement_oracle(self):
        coarse = energy(gaussian_bump(make_grid(2, 64, 30.0), 1.0, 2.5))
        fine = energy(gaussian_bump(make_grid(2, 128, 30.0), 1.0, 2.5))
        assert abs(coarse - fine) / fine <= 1e-8

    @given(seed=st.integers(0, 2**32))
    @settings(max_examples=20, deadline=None)
    def test_nonnegative(self, seed):
        assert energy(random_field(2, 8, seed=seed)) >= 0


class TestModifiedEnergy:
    def test_identity_above_lattice(self):
        u = random_field(2, 16, seed=1)
        assert modified_energy(u, u.grid.max_radius, 0.5) == energy(u)

    def test_band_limited_below_N(self):
        u = random_field(2, 32, seed=2, band=3)
        assert modified_energy(u, 8, 1.0) == pytest.approx(energy(u), rel=1e-12)

    def test_zero(self):
        assert modified_energy(make_grid(1, 8, 1.0).zeros(), 2, 1.0) == 0.0

    def test_smaller_than_energy_when_cut(self):
        u = random_field(2, 32, seed=3)
        assert modified_energy(u, 2, 1.0) < energy(u)


class TestSobolev:
    def test_single_mode_half_derivative(self):
        g = make_grid(2, 16, TWO_PI)
        assert sobolev_norm(plane_wave(g, 1.0, [1, 0]), 0.5) ** 2 == pytest.approx(TWO_PI**2, rel=1e-13)
        g3 = make_grid(1, 16, TWO_PI)
        assert sobolev_norm(plane_wave(g3, 1.0, [3]), 0.5) ** 2 == pytest.approx(3 * TWO_PI, rel=1e-13)

    def test_l2(self):
        u = random_field(3, 8, seed=4)
        assert sobolev_norm(u, 0.0) == pytest.approx(math.sqrt(2 * mass(u)), rel=1e-12)
        assert sobolev_norm(u, 0.0, homogeneous=False) == pytest.approx(math.sqrt(2 * mass(u)), rel=1e-12)

    def test_two_derivatives(self):
        u = random_field(2, 16, seed=5)
        g = u.grid
        lap = np.fft.ifftn(-g.radius_squared * u.coefficients()) * g.size
        direct = math.sqrt(np.sum(np.abs(lap) ** 2) * g.cell_volume)
        assert sobolev_norm(u, 2.0) == pytest.approx(direct, rel=1e-12)

    def test_negative_order_excludes_mean(self):
        g = make_grid(1, 8, TWO_PI)
        u = ComplexField(g, np.ones(g.shape, complex))
        assert sobolev_norm(u, -1.0) == 0.0


class TestBrackets:
    def test_mass_bracket_of_self(self):
        u = random_field(2, 8, seed=6)
        m, _ = brackets(u, u)
        assert np.max(np.abs(m)) < 1e-15

    def test_momentum_bracket_real(self):
        g = make_grid(2, 16, TWO_PI)
        u = gaussian_bump(g, 1.0, 1.0)
        _, p = brackets(u, u)
        assert p.shape == (2, 16, 16)
        assert np.max(np.abs(p)) < 1e-13

    def test_linearity(self):
        f, h = random_field(2, 8, seed=7), random_field(2, 8, seed=8)
        m1, _ = brackets(ComplexField(f.grid, 2.5 * f.values), h)
        m0, _ = brackets(f, h)
        np.testing.assert_allclose(m1, 2.5 * m0, atol=1e-14)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            brackets(random_field(1, 8), random_field(1, 16))


class TestMorawetzAction:
    def test_real_field(self):
        g = make_grid(2, 32, 20.0)
        assert morawetz_action(gaussian_bump(g, 1.0, 2.0), RegularizedRadial(0.5)) == pytest.approx(0.0, abs=1e-13)

    def test_zero(self):
        g = make_grid(2, 8, 1.0)
        assert morawetz_action(g.zeros(), SmoothPeriodicGaussianBump(0.2)) == 0.0

    def test_plane_wave_periodic_weight(self):
        g = make_grid(2, 16, TWO_PI)
        assert abs(morawetz_action(plane_wave(g, 1.0, [2, 1]), SmoothPeriodicGaussianBump(1.0))) < 1e-12

    def test_moving_bump_has_signed_action(self):
        g = make_grid(1, 64, 20.0)
        w = RegularizedRadial(0.1, center=(5.0,))
        # bump right of the weight's center moving right: outgoing, positive action
        u = gaussian_bump(g, 1.0, 1.0, center=(10.0,), momentum=(3,))
        assert morawetz_action(u, w) > 0


class TestMorawetzRateIdentity:
    def test_zero(self):
        g = make_grid(2, 32, TWO_PI)
        res = morawetz_rate_identity(g.zeros(), identity_weight(g))
        assert res.lhs == 0 and res.rhs == 0 and res.residual == 0

    @pytest.mark.parametrize("dim,P", [(1, 64), (2, 32), (3, 16)])
    def test_real_bump(self, dim, P):
        g = make_grid(dim, P, TWO_PI)
        u = band_limited_bump(g, identity_band(g))
        assert morawetz_rate_identity(u, identity_weight(g)).residual <= 1e-8

    def test_moving_bump_nontrivial(self):
        g = make_grid(2, 32, TWO_PI)
        u = band_limited_bump(g, identity_band(g), momentum=(1, 0))
        res = morawetz_rate_identity(u, identity_weight(g))
        assert abs(res.lhs) > 1e-3
        assert res.residual <= 1e-8

    def test_random_seeds(self):
        g = make_grid(2, 32, TWO_PI)
        for seed in range(20):
            u = random_field(2, 32, seed=seed, band=identity_band(g), amplitude=1.5)
            assert morawetz_rate_identity(u, identity_weight(g)).residual <= 1e-8

    def test_band_violation(self):
        u = random_field(2, 32, seed=1)
        with pytest.raises(BandLimitError):
            morawetz_rate_identity(u, identity_weight(u.grid))

    def test_weight_too_wide(self):
        g = make_grid(2, 32, TWO_PI)
        u = random_field(2, 32, band=identity_band(g))
        with pytest.raises(BandLimitError):
            morawetz_rate_identity(u, SmoothPeriodicGaussianBump(1.0))

    def test_needs_periodic_weight(self):
        g = make_grid(2, 32, TWO_PI)
        u = random_field(2, 32, band=identity_band(g))
        with pytest.raises(ValueError):
            morawetz_rate_identity(u, RegularizedRadial(0.1))


class TestRieszBilinear:
    def test_dimension_five_is_l4(self):
        u = random_field(5, 4, seed=1, band=1)
        direct = np.sum(np.abs(u.values) ** 4) * u.grid.cell_volume
        assert riesz_bilinear(u) == pytest.approx(direct, rel=1e-13)

    def test_zero(self):
        assert riesz_bilinear(make_grid(6, 4, 1.0).zeros()) == 0.0

    def test_matches_double_sum(self):
        u = random_field(6, 4, seed=11, band=1)
        assert abs(riesz_bilinear(u) - riesz_bilinear_direct(u)) / riesz_bilinear(u) <= 1e-10

    def test_mean_reported_separately(self):
        u = random_field(6, 4, seed=2, band=1)
        value, mean = riesz_bilinear(u, return_mean=True)
        rho0 = np.mean(np.abs(u.values) ** 2)
        assert mean == pytest.approx(u.grid.volume * rho0**2, rel=1e-12)
        assert value == riesz_bilinear(u)

    def test_low_dimension_rejected(self):
        with pytest.raises(ValueError):
            riesz_bilinear(random_field(4, 4))

    def test_lemma_sides_equal_in_five_dimensions(self):
        u = random_field(5, 8, seed=3)
        lhs, rhs = lemma1_sides(u)
        assert abs(lhs - rhs) / rhs <= 1e-12


class TestInteraction:
    def test_zero_trajectory(self):
        g = make_grid(5, 4, TWO_PI)
        assert interaction_norm(Trajectory.from_fields([0, 1], [g.zeros(), g.zeros()])) == 0.0

    def test_constant_in_time(self):
        u = random_field(5, 4, seed=5, band=1)
        traj = Trajectory.from_fields([0.0, 0.5, 1.0], [u, u, u])
        l4 = (np.sum(np.abs(u.values) ** 4) * u.grid.cell_volume) ** 0.25
        assert interaction_norm(traj) == pytest.approx(l4, rel=1e-13)

    def test_needs_two_snapshots(self):
        u = random_field(5, 4, band=1)
        with pytest.raises(ValueError):
            interaction_norm(Trajectory.from_fields([0.0], [u]))

    def test_action_real_field(self):
        g = make_grid(5, 4, TWO_PI)
        u = ComplexField(g, random_field(5, 4, seed=2, band=1).values.real + 0j)
        action, prod = interaction_action_bound(u)
        assert abs(action) <= 1e-14 * prod

    def test_action_zero(self):
        assert interaction_action_bound(make_grid(5, 4, 1.0).zeros()) == (0.0, 0.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_action_matches_double_sum(self, seed):
        from fourthnls.functionals import _momentum_density, gradient

        u = random_field(5, 4, seed=seed, band=1)
        p = _momentum_density(u.physical(), gradient(u))
        action, _ = interaction_action_bound(u)
        direct = interaction_action_direct(u, momentum=p)
        assert abs(action - direct) / abs(direct) <= 1e-9

    def test_action_momentum_oracle_on_smooth_data(self):
        # finite-difference momentum on a resolved bump
        g = make_grid(2, 64, 24.0)
        moving = gaussian_bump(g, 1.0, 1.5, center=(9.0, 12.0), momentum=(1, 0))
        u = ComplexField(g, moving.values + gaussian_bump(g, 1.0, 1.5, center=(15.0, 12.0)).values)
        action, _ = interaction_action_bound(u)
        from fourthnls.oracles import DIRECT_SUM_LIMIT

        assert g.size <= DIRECT_SUM_LIMIT
        # limited by the eighth-order differences at h = 0.375, not by the convolution
        assert abs(action - interaction_action_direct(u)) / abs(action) <= 1e-5

    def test_rhs_product(self):
        u = random_field(5, 4, seed=3, band=1)
        _, prod = interaction_action_bound(u)
        assert prod == pytest.approx(sobolev_norm(u, 0.5) ** 2 * sobolev_norm(u, 0.0) ** 2, rel=1e-14)

    def test_kernel_unit_length(self):
        K = minimum_image_kernel(make_grid(3, 8, 2.0))
        r = np.sqrt(np.sum(K**2, axis=0))
        assert r.flat[0] == 0.0
        np.testing.assert_allclose(r.ravel()[1:], 1.0, rtol=1e-14)


class TestZNorm:
    def test_infinity_two_pair(self):
        # under the free flow every block norm is constant in time, so the
        # sum of per-block maxima equals the maximum of the total
        u = random_field(2, 16, seed=4)
        traj = evolve(u, 0.1, 0.05, nonlinear=False, dealias_rule="none")
        N, s = 2.0, 1.0
        expected = max(
            sobolev_norm(apply_multiplier(apply_multiplier(f, IOperator(N, s)), BiharmonicBessel()), 0.0) for f in traj.fields
        )
        assert z_norm(traj, N, s, [(math.inf, 2)]) == pytest.approx(expected, rel=1e-12)

    def test_dominates_pointwise_maximum(self):
        u = random_field(2, 16, seed=4, amplitude=3.0)
        traj = evolve(u, 0.1, 0.05)
        N, s = 2.0, 1.0
        pointwise = max(
            sobolev_norm(apply_multiplier(apply_multiplier(f, IOperator(N, s)), BiharmonicBessel()), 0.0) for f in traj.fields
        )
        assert z_norm(traj, N, s, [(math.inf, 2)]) >= pointwise * (1 - 1e-14)

    def test_zero(self):
        g = make_grid(2, 8, 1.0)
        traj = Trajectory.from_fields([0, 1], [g.zeros(), g.zeros()])
        assert z_norm(traj, 2, 1.0, [(math.inf, 2), (8, 4)]) == 0.0

    def test_plane_wave_above_lattice(self):
        g = make_grid(2, 16, TWO_PI)
        u = plane_wave(g, 0.5, [2, 1])
        traj = Trajectory.from_fields([0.0], [u])
        expected = math.sqrt(1 + 25.0) * sobolev_norm(u, 0.0)
        assert z_norm(traj, g.max_radius, 1.0, [(math.inf, 2)]) == pytest.approx(expected, rel=1e-12)

    def test_h2_norm_identity(self):
        u = random_field(3, 8, seed=9)
        traj = Trajectory.from_fields([0.0], [u])
        lap = sobolev_norm(u, 2.0)
        assert z_norm(traj, u.grid.max_radius, 1.0, [(math.inf, 2)]) == pytest.approx(
            math.sqrt(sobolev_norm(u, 0.0) ** 2 + lap**2), rel=1e-12
        )

    def test_inadmissible(self):
        g = make_grid(2, 8, 1.0)
        traj = Trajectory.from_fields([0.0], [g.zeros()])
        with pytest.raises(InadmissiblePairError, match="4/gamma"):
            z_norm(traj, 2, 1.0, [(3, 4)])

    def test_pair_check(self):
        check_biharmonic_pair(5, 4, 10 / 3)
        check_biharmonic_pair(2, 8, 4)
        with pytest.raises(InadmissiblePairError):
            check_biharmonic_pair(2, 1, 4)


class TestDiagnostics:
    def test_record_and_csv(self):
        u = random_field(2, 16, seed=1)
        rec = diagnostics(u, 0.5, [2, 4], 1.0)
        assert rec.columns()[:3] == ["time", "mass", "energy"]
        assert rec.columns()[3:5] == ["modified_energy_N2", "modified_energy_N4"]
        assert len(rec.row()) == len(rec.columns())
        assert all(np.isfinite(rec.row()))
        assert rec.mass > 0
        text = diagnostics_csv([rec, rec])
        lines = text.strip().split("\n")
        assert len(lines) == 3
        assert lines[0].split(",") == rec.columns()
        assert float(lines[1].split(",")[1]) == rec.mass
