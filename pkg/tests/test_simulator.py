import numpy as np
import pytest

from cryophase.constitutive import ModelParams
from cryophase.errors import NonConvergence, ValidationError
from cryophase.grid import Field, Grid, norm_L2
from cryophase.scenarios import scenario_config
from cryophase.simulator import (
    CouplingSpec,
    SimConfig,
    convergence_study,
    run,
    sweep_epsilon,
)


def small_config(**overrides):
    base = dict(
        grid=Grid(1, (1.0,), (33,)),
        params=ModelParams(),
        dt=0.005,
        t_end=0.1,
        theta0="theta_c - 0.3 + 0.6*step(x - 0.5)",
        beta0="1",
        output_cadence=0.05,
    )
    base.update(overrides)
    return SimConfig(**base)


class TestValidation:
    def test_dt_exceeding_horizon(self):
        with pytest.raises(ValidationError):
            small_config(dt=1.0, t_end=0.1).validate()

    def test_non_divisible_horizon(self):
        with pytest.raises(ValidationError):
            small_config(dt=0.003).validate()

    def test_cadence_must_align(self):
        with pytest.raises(ValidationError):
            small_config(output_cadence=0.0071).validate()

    def test_beta0_bounds_checked_on_load(self):
        cfg = small_config(beta0="1.5")
        with pytest.raises(ValidationError):
            cfg.initial_fields()

    def test_unknown_expression_name(self):
        cfg = small_config(theta0="theta_c + q")
        with pytest.raises(ValidationError):
            cfg.initial_fields()

    def test_coupling_mode_names(self):
        with pytest.raises(ValidationError):
            CouplingSpec(mode="semi")


class TestSteadyState:
    def test_exactly_stationary(self):
        cfg = small_config(theta0="theta_c", beta0="0.5", dt=0.001, t_end=0.05,
                           output_cadence=0.05)
        res = run(cfg)
        assert np.array_equal(res.theta.values,
                              np.full(cfg.grid.shape, 2.17))
        assert np.array_equal(res.beta.values, np.full(cfg.grid.shape, 0.5))
        assert np.array_equal(res.xi.values, np.zeros(cfg.grid.shape))
        assert np.all(res.ledger.column("conservation_residual") == 0.0)


class TestScalarOracle:
    def test_uniform_superheating_recurrence(self):
        # theta above the transition, no normal fluid: beta grows by the
        # clamp recurrence, theta drops by local conservation
        params = ModelParams()
        cfg = small_config(theta0="theta_c + 1", beta0="0",
                           dt=0.01, t_end=0.5, output_cadence=0.1)
        res = run(cfg)
        t, b = params.theta_c + 1.0, 0.0
        for _ in range(50):
            g = (t - params.theta_c) / params.theta_c
            b_new = min(1.0, max(0.0, b + 0.01 * g))
            t -= b_new - b
            b = b_new
        assert res.beta.values[0] == pytest.approx(b, abs=1e-12)
        assert res.theta.values[0] == pytest.approx(t, abs=1e-12)
        assert np.ptp(res.beta.values) == 0.0
        betas = [s.beta.values[0] for s in res.snapshots]
        assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))
        thetas = [s.theta.values[0] for s in res.snapshots]
        assert all(t2 <= t1 for t1, t2 in zip(thetas, thetas[1:]))


class TestSupercoolingScenario:
    def test_qualitative_front_behaviour(self):
        # early-time window: the dip in beta is confined near the cold
        # half; deep warm nodes stay pinned at exactly one (xi > 0)
        cfg = scenario_config("supercooling")
        cfg.t_end = 0.01
        cfg.output_cadence = 0.01
        res = run(cfg)
        x = cfg.grid.meshgrid()[0]
        beta = res.beta.values
        assert np.all((beta >= 0.0) & (beta <= 1.0))
        assert np.min(beta[x < 0.45]) < 1.0 - 1e-4
        assert np.all(beta[x > 0.7] == 1.0)
        assert np.any(res.xi.values > 0.0)
        cons = res.ledger.column("conservation_residual")
        scale = abs(cfg.params.theta_c) + 1.0
        assert np.max(np.abs(cons)) <= 1e-9 * scale

    def test_snapshot_count_matches_cadence(self):
        cfg = small_config()
        res = run(cfg)
        assert len(res.snapshots) == 3   # t = 0, 0.05, 0.1
        assert [s.t for s in res.snapshots] == pytest.approx([0.0, 0.05, 0.1])


class TestDeterminism:
    def test_bitwise_repeatability(self):
        cfg = small_config()
        a = run(cfg)
        b = run(cfg)
        assert np.array_equal(a.theta.values, b.theta.values)
        assert np.array_equal(a.beta.values, b.beta.values)
        assert a.ledger.rows == b.ledger.rows


class TestTwoDimensional:
    def test_quarter_plane_quench(self):
        cfg = SimConfig(
            grid=Grid(2, (1.0, 1.0), (9, 11)),
            params=ModelParams(),
            dt=0.005,
            t_end=0.05,
            theta0="theta_c - 0.3 + 0.6*step(x - 0.5)*step(y - 0.5)",
            beta0="1",
            output_cadence=0.05,
        )
        res = run(cfg)
        beta = res.beta.values
        assert beta.shape == (9, 11)
        assert np.all((beta >= 0.0) & (beta <= 1.0))
        cons = res.ledger.column("conservation_residual")
        assert np.max(np.abs(cons)) <= 1e-10
        slack = res.ledger.column("energy_lhs") - res.ledger.column("energy_rhs")
        assert np.all(slack <= 1e-8 * res.ledger.column("energy_scale"))
        rerun = run(cfg)
        assert np.array_equal(rerun.theta.values, res.theta.values)


class TestCouplingModes:
    def test_iterated_tightens_to_staggered_as_dt_shrinks(self):
        gaps = []
        dts = (0.004, 0.002, 0.001)
        for dt in dts:
            stag = run(small_config(dt=dt, t_end=0.04, output_cadence=0.04))
            iter_cfg = small_config(
                dt=dt, t_end=0.04, output_cadence=0.04,
                coupling=CouplingSpec(mode="iterated", max_outer=50,
                                      outer_tol=1e-12))
            itr = run(iter_cfg)
            gaps.append(norm_L2(Field(stag.config.grid,
                                      stag.theta.values - itr.theta.values)))
        rate = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
        assert rate >= 0.9

    def test_outer_nonconvergence_dumps_state(self):
        cfg = small_config(
            coupling=CouplingSpec(mode="iterated", max_outer=1,
                                  outer_tol=1e-16))
        with pytest.raises(NonConvergence) as err:
            run(cfg)
        assert "state dumped to" in str(err.value)
        assert "step 1" in str(err.value)


class TestLedger:
    def test_inequalities_hold_on_scenarios(self):
        for name in ("quench", "supercooling"):
            cfg = scenario_config(name)
            cfg.t_end = 0.2
            res = run(cfg)
            led = res.ledger
            energy_slack = led.column("energy_lhs") - led.column("energy_rhs")
            assert np.all(energy_slack <= 1e-8 * led.column("energy_scale"))
            apriori_slack = led.column("apriori_lhs") - led.column("apriori_rhs")
            assert np.all(apriori_slack <= 1e-8 * led.column("apriori_scale"))
            assert np.all(led.column("complementarity_residual") <= 1e-8)
            for col in ("betat_sq_inc", "grad_beta_l2", "lap_beta_sq_inc",
                        "theta_l2", "beta_grad_theta_sq_inc",
                        "grad_theta_p_inc", "eps_grad_theta_sq_inc", "xi_l2"):
                vals = led.column(col)
                assert np.all(np.isfinite(vals)) and np.all(vals >= 0.0)

    def test_accumulations_bounded_under_dt_refinement(self):
        cfg1 = small_config(dt=0.005, t_end=0.2, output_cadence=0.1)
        cfg2 = small_config(dt=0.0025, t_end=0.2, output_cadence=0.1)
        r1, r2 = run(cfg1), run(cfg2)
        for col in ("betat_sq_inc", "beta_grad_theta_sq_inc",
                    "grad_theta_p_inc", "lap_beta_sq_inc"):
            a1 = r1.ledger.accumulate(col)
            a2 = r2.ledger.accumulate(col)
            if a1 > 1e-14 or a2 > 1e-14:
                assert a2 <= 2.0 * a1 + 1e-12


class TestSweepEpsilon:
    def test_steady_state_all_zero_gaps(self):
        cfg = small_config(theta0="theta_c", beta0="0.5", dt=0.005, t_end=0.05,
                           output_cadence=0.05)
        rep = sweep_epsilon(cfg, [1e-1, 1e-2])
        assert rep.theta_gaps == (0.0, 0.0)
        assert rep.beta_gaps == (0.0, 0.0)
        assert rep.monotone

    def test_validation(self):
        cfg = small_config()
        with pytest.raises(ValidationError):
            sweep_epsilon(cfg, [0.0])
        with pytest.raises(ValidationError):
            sweep_epsilon(cfg, [1e-3, 1e-2])
        with pytest.raises(ValidationError):
            sweep_epsilon(cfg, [])

    def test_member_failure_carries_partial_report(self, monkeypatch):
        import cryophase.simulator as sim

        real_run = sim.run

        def flaky(config):
            if config.params.epsilon == 1e-2:
                raise NonConvergence("Picard iteration", 60, 1.0)
            return real_run(config)

        monkeypatch.setattr(sim, "run", flaky)
        cfg = small_config(theta0="theta_c", beta0="0.5", dt=0.005,
                           t_end=0.05, output_cadence=0.05)
        with pytest.raises(NonConvergence) as err:
            sim.sweep_epsilon(cfg, [1e-1, 1e-2, 1e-3])
        assert "partial theta gaps" in str(err.value)
        assert "eps=0.1" in str(err.value)


class TestConvergenceStudy:
    def test_steady_state_zero_differences(self):
        cfg = small_config(theta0="theta_c", beta0="0.5", dt=0.008, t_end=0.04,
                           output_cadence=0.04,
                           grid=Grid(1, (1.0,), (9,)))
        rep = convergence_study(cfg, levels=(1, 2, 4))
        assert all(d == 0.0 for d in rep.theta_diffs)
        assert all(r == float("inf") for r in rep.theta_rates)

    def test_supercooling_positive_rate(self):
        cfg = small_config(grid=Grid(1, (1.0,), (17,)), dt=0.01, t_end=0.05,
                           output_cadence=0.05)
        rep = convergence_study(cfg, levels=(1, 2, 4, 8))
        assert len(rep.theta_diffs) == 3
        assert rep.theta_rates[-1] > 0.0

    def test_validation(self):
        cfg = small_config()
        with pytest.raises(ValidationError):
            convergence_study(cfg, levels=(1, 2))
        with pytest.raises(ValidationError):
            convergence_study(cfg, levels=(1, 2, 3))   # 3 does not nest in itself... 2 does not divide 3
        with pytest.raises(ValidationError):
            convergence_study(cfg, levels=(2, 1, 4))
