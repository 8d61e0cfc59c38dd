import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fourthnls import gaussian_bump, make_grid, mass
from fourthnls.config import DataSpec, ExperimentConfig
from fourthnls.experiments import (
    ExperimentReport,
    Verdict,
    acl_increments,
    build_grid,
    compute_lambda,
    fit_loglog_slope,
    initial_field,
    run_acl_sweep,
    run_conservation_study,
    run_evolution,
    run_experiment,
    run_identity_check,
    run_lemma1_check,
    run_morawetz_study,
    run_scattering_proxy,
    scale_field,
    scaling_exponents,
)
from fourthnls.experiments import _ACLObserver
from fourthnls.functionals import BandLimitError
from conftest import TWO_PI, random_field


def config(kind, n, P, L=TWO_PI, **kw):
    data = kw.pop("data", DataSpec())
    return ExperimentConfig(kind=kind, n=n, P=P, L=L, data=data, **kw)


class TestVerdict:
    @pytest.mark.parametrize(
        "value, op, threshold, passed",
        [
            (1.0, "<=", 1.0, True),
            (1.1, "<=", 1.0, False),
            (2.0, ">=", 1.0, True),
            (4.0, "in", (3.2, 4.8), True),
            (5.0, "in", (3.2, 4.8), False),
            (True, "is", True, True),
            (math.nan, "<=", 1.0, False),
            (None, "<=", 1.0, False),
        ],
    )
    def test_ops(self, value, op, threshold, passed):
        assert Verdict("x", value, op, threshold).passed is passed

    def test_non_binding_does_not_fail_report(self):
        r = ExperimentReport(kind="run", config={})
        r.add_verdict("soft", 2.0, "<=", 1.0, binding=False)
        r.add_verdict("hard", 0.0, "<=", 1.0)
        assert r.passed
        r.add_verdict("hard2", 2.0, "<=", 1.0)
        assert not r.passed

    def test_error_fails_report(self):
        r = ExperimentReport(kind="run", config={})
        r.error = "blow-up: x"
        assert not r.passed

    def test_lookup(self):
        r = ExperimentReport(kind="run", config={})
        r.add_verdict("a", 0.0, "<=", 1.0)
        assert r.verdict("a").value == 0.0
        with pytest.raises(KeyError):
            r.verdict("b")

    def test_json_drops_timing_on_request(self):
        r = ExperimentReport(kind="run", config={})
        r.timing["wall_clock_s"] = 1.0
        assert "timing" in json.loads(r.to_json())
        assert "timing" not in json.loads(r.to_json(include_timing=False))


class TestFitLogLogSlope:
    def test_exact_power(self):
        slope, _, resid = fit_loglog_slope([(1, 1), (10, 0.1), (100, 0.01)])
        assert slope == pytest.approx(-1.0, abs=1e-14)
        assert resid == pytest.approx(0.0, abs=1e-14)

    def test_constant(self):
        slope, _, _ = fit_loglog_slope([(1, 3), (2, 3), (4, 3)])
        assert slope == pytest.approx(0.0, abs=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-4, 4), st.floats(0.1, 10))
    def test_recovers_exponent(self, p, c):
        pts = [(x, c * x**p) for x in (1.0, 2.0, 4.0, 8.0)]
        assert fit_loglog_slope(pts)[0] == pytest.approx(p, abs=1e-12)

    @pytest.mark.parametrize("pts", [[(1, 1)], [(1, 0), (2, 1)], [(-1, 1), (2, 1)], [(2, 1), (2, 3)]])
    def test_invalid(self, pts):
        with pytest.raises(ValueError):
            fit_loglog_slope(pts)


class TestScaling:
    def test_lambda(self):
        assert compute_lambda(16, 1.0, 5) == pytest.approx(256.0, rel=1e-14)

    @pytest.mark.parametrize("s, n", [(0.5, 5), (1.0, 6), (1.5, 7)])
    def test_lambda_requires_gap(self, s, n):
        with pytest.raises(ValueError):
            compute_lambda(4, s, n)

    def test_identity_scaling(self):
        u = random_field(2, 16, seed=1)
        v = scale_field(u, 1.0)
        assert np.array_equal(v.physical(), u.physical())
        assert v.grid == u.grid

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 7), st.floats(0.25, 8.0))
    def test_mass_exponent(self, n, lam):
        P = 4 if n > 3 else 8
        u = random_field(n, P, seed=n, band=1)
        assert mass(scale_field(u, lam)) == pytest.approx(lam ** (n - 4) * mass(u), rel=1e-12)

    @pytest.mark.parametrize("n", [5, 6, 7])
    def test_static_exponents(self, n):
        u = random_field(n, 4, seed=3, band=1)
        ex = scaling_exponents(u, 2.0)
        assert ex["mass"] == pytest.approx(n - 4, abs=1e-10)
        assert ex["h_half_sq"] == pytest.approx(n - 5, abs=1e-10)
        assert ex["interaction_norm4"] == pytest.approx(2 * n - 9, abs=1e-10)
        assert ex["rhs_product"] == pytest.approx(2 * n - 9, abs=1e-10)


class TestInitialData:
    def test_gaussian(self):
        c = config("run", 2, 16, data=DataSpec(kind="gaussian", width=0.7))
        u = initial_field(c)
        expected = gaussian_bump(make_grid(2, 16, TWO_PI), 1.0, 0.7)
        assert np.array_equal(u.physical(), expected.physical())

    def test_random_seed_override(self):
        c = config("run", 1, 16, data=DataSpec(kind="random", seed=3))
        a, b = initial_field(c, seed=4), initial_field(c.with_seed(4))
        assert np.array_equal(a.physical(), b.physical())

    def test_zero(self):
        c = config("run", 1, 8, data=DataSpec(kind="zero"))
        assert mass(initial_field(c)) == 0.0

    def test_lemma1_grid_allows_six(self):
        assert build_grid(config("lemma1", 7, 6)).points_per_axis == 6


class TestEvolutionAndConservation:
    def test_run_plane_wave(self):
        c = config("run", 1, 16, data=DataSpec(kind="planewave", modes=(1,)), T=0.1, dt=0.01, stride=5)
        report, traj = run_evolution(c)
        assert report.passed
        table = report.curves["diagnostics"]
        assert len(table["rows"]) == 3
        assert "mass" in table["columns"]

    def test_conservation_plane_wave(self):
        # plane waves are exact fixed points of both sub-flows: drifts at roundoff
        c = config("conserve", 1, 32, data=DataSpec(kind="planewave", amplitude=0.5, modes=(2,)), T=0.2, dt=0.01)
        r = run_conservation_study(c)
        assert r.passed
        assert r.scalars["energy_drift"] <= 1e-12
        assert "energy_drift_at_roundoff" in [v.name for v in r.verdicts]

    def test_zero_data_drifts_zero(self):
        c = config("conserve", 2, 16, data=DataSpec(kind="zero"), T=0.1, dt=0.01)
        r = run_conservation_study(c)
        assert r.scalars["mass_drift"] == 0.0 and r.scalars["energy_drift"] == 0.0
        assert r.passed

    def test_gaussian_small(self):
        c = config("conserve", 1, 64, L=20.0, data=DataSpec(kind="gaussian", width=2.0), T=0.5, dt=0.01)
        r = run_conservation_study(c)
        assert r.verdict("mass_drift").passed
        assert r.verdict("energy_drift").passed
        assert 3.2 <= r.scalars["energy_drift_ratio"] <= 4.8

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    def test_blow_up_is_reported(self):
        c = config("conserve", 1, 16, data=DataSpec(kind="gaussian", amplitude=1e200), T=0.1, dt=0.01)
        r = run_conservation_study(c)
        assert r.error.startswith("blow-up")
        assert not r.passed


class TestIdentityCheck:
    def test_zero_data(self):
        c = config("identity-check", 2, 32, data=DataSpec(kind="zero"), T=0.01, dt=0.001)
        r = run_identity_check(c)
        assert r.scalars["max_residual"] == 0.0
        assert r.passed

    def test_random_low_dimension(self):
        c = config("identity-check", 2, 32, data=DataSpec(kind="random", seed=5), seeds=3, T=0.01, dt=0.001)
        r = run_identity_check(c)
        assert r.passed, r.scalars
        assert [row[0] for row in r.curves["residuals"]["rows"]] == [5, 6, 7]

    def test_band_too_wide(self):
        c = config("identity-check", 2, 32, data=DataSpec(kind="random", band=10), T=0.01, dt=0.001)
        with pytest.raises(BandLimitError):
            run_identity_check(c)

    def test_threads_match_serial(self):
        c = config("identity-check", 1, 32, data=DataSpec(kind="random"), seeds=4, T=0.01, dt=0.001)
        a = run_identity_check(c, threads=1).as_dict(include_timing=False)
        b = run_identity_check(c, threads=2).as_dict(include_timing=False)
        assert a == b


class TestACLSweep:
    def base(self, **kw):
        kw.setdefault("data", DataSpec(kind="gaussian", width=1.0))
        kw.setdefault("dt", 0.01)
        return config("acl-sweep", 2, 32, N=(1.0, 2.0, 4.0, 8.0), T=0.05, **kw)

    def test_zero_data(self):
        r = run_acl_sweep(self.base(data=DataSpec(kind="zero")))
        assert r.scalars["max_increment"] == 0.0
        assert r.verdict("all_increments_below_floor").passed

    def test_increments_decay(self):
        r = run_acl_sweep(self.base())
        rows = r.curves["increments"]["rows"]
        D = [row[1] for row in rows]
        assert D[-1] < D[0]
        assert "increment_vs_N" in r.fits

    def test_rate_integral_converges_under_free_flow(self):
        # the free flow is exact, so the direct difference is exact and the trapezoid gap is O(dt^2)
        gaps = []
        for dt in (0.01, 0.005):
            r = run_acl_sweep(self.base(nonlinear=False, dt=dt))
            gaps.append(max(abs(row[1] - row[2]) for row in r.curves["increments"]["rows"]))
        assert 3.2 <= gaps[0] / gaps[1] <= 4.8

    @pytest.mark.parametrize("Ns", [(2.0, 3.0, 4.0, 8.0), (2.0, 4.0, 8.0, 64.0), (2.0, 4.0, 8.0)])
    def test_preconditions(self, Ns):
        with pytest.raises(ValueError):
            run_acl_sweep(config("acl-sweep", 2, 32, N=Ns, T=0.02, dt=0.01))

    def test_increment_above_lattice_is_zero(self):
        # once N exceeds every lattice radius I is the identity and E(Iu) = E(u) is conserved by the exact rate
        g = make_grid(1, 16, TWO_PI)
        u = gaussian_bump(g, 1.0, 1.0)
        obs = _ACLObserver(g, [64.0], 1.0, "none")
        obs(0.0, u)
        obs(0.01, u)
        inc = acl_increments(obs, [0.0, 0.01])
        assert inc[64.0]["increment"] <= 1e-12 * abs(inc[64.0]["E0"])


class TestMorawetzStudy:
    def test_low_dimension_static_only(self):
        c = config("morawetz", 2, 16, data=DataSpec(kind="gaussian"))
        r = run_morawetz_study(c)
        assert r.passed
        assert r.scalars["expected_exponent"] == -5
        assert "scaling_runs" not in r.curves

    def test_zero_data(self):
        c = config("morawetz", 5, 4, data=DataSpec(kind="zero"), T=0.02, dt=0.01, lambdas=(2.0,))
        r = run_morawetz_study(c)
        assert r.scalars["ratio_note"].startswith("undefined")

    def test_small_five_dimensional(self):
        c = config("morawetz", 5, 8, data=DataSpec(kind="gaussian", width=1.0), T=0.02, dt=0.01, lambdas=(2.0,))
        r = run_morawetz_study(c)
        assert r.passed, [v.as_dict() for v in r.verdicts if not v.passed]
        assert r.verdict("ratio_change_lambda2").value <= 1e-10


class TestBilinearInequalityCheck:
    def test_five_dimensional_equality(self):
        c = config("lemma1", 5, 4, data=DataSpec(kind="random", band=1), seeds=3)
        r = run_lemma1_check(c)
        assert r.verdict("equality_deviation").passed

    def test_zero_amplitude(self):
        c = config("lemma1", 6, 4, data=DataSpec(kind="random", band=1, amplitude=0.0), seeds=2)
        r = run_lemma1_check(c)
        assert r.scalars["max_ratio"] == 0.0

    def test_double_sum_oracle(self):
        c = config("lemma1", 6, 4, data=DataSpec(kind="random", band=1), seeds=2, oracles={"double_sum": True})
        r = run_lemma1_check(c)
        assert r.verdict("double_sum_deviation").passed

    def test_double_sum_skipped_on_large_grid(self):
        c = config("lemma1", 7, 4, data=DataSpec(kind="random", band=1), seeds=1, oracles={"double_sum": True})
        r = run_lemma1_check(c)
        assert r.scalars["double_sum_note"].startswith("skipped")

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            run_lemma1_check(config("lemma1", 4, 4, data=DataSpec(kind="random", band=1)))


class TestScatteringProxy:
    def test_linear_flow(self):
        c = config("scatter-proxy", 2, 16, data=DataSpec(kind="gaussian"), T=0.1, dt=0.01, ladder=6, nonlinear=False)
        r = run_scattering_proxy(c)
        assert r.verdict("free_flow_v_constant").passed
        assert r.verdict("duhamel_residual_at_roundoff").passed
        assert len(r.curves["cauchy_increments"]["rows"]) == 5

    def test_duhamel_second_order(self):
        c = config("scatter-proxy", 1, 64, L=20.0, data=DataSpec(kind="gaussian", width=2.0), T=0.5, dt=0.01)
        r = run_scattering_proxy(c)
        assert r.verdict("duhamel_ratio").passed, r.scalars


class TestReproducibility:
    def test_identical_json(self):
        c = config("conserve", 2, 16, data=DataSpec(kind="random", seed=17), T=0.05, dt=0.01)
        a = run_experiment(c).to_json(include_timing=False)
        b = run_experiment(c).to_json(include_timing=False)
        assert a == b

    def test_config_echo_reruns(self):
        c = config("acl-sweep", 2, 16, data=DataSpec(kind="random", seed=2), N=(1.0, 2.0, 4.0, 8.0), T=0.02, dt=0.01)
        first = run_experiment(c)
        echoed = ExperimentConfig.from_dict(json.loads(first.to_json())["config"])
        assert echoed == c
        assert run_experiment(echoed).to_json(include_timing=False) == first.to_json(include_timing=False)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            run_experiment(config("nope", 1, 8))
