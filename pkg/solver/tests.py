import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core_utils.exceptions import BlowUpError, CFLViolation, ConfigurationError, DomainError
from semigroup.torus import torus_propagate
from spectral.fields import SpectralField, sample, transform_inverse
from spectral.grid import Grid
from spectral.operators import l2_norm, vector_sobolev_norm
from stability.profiles import linear, linear_plus_sine

from .config import InitialCondition, Mode, SimConfig
from .diagnostics import csv_columns, energy_estimate_monitor
from .dynamics import PerturbationDynamics
from .simulation import Simulation, run, run_3d, step_3d
from .state import SimState


def small_config(**overrides):
    options = {
        "points": 32,
        "t_end": 1.0,
        "initial": InitialCondition(epsilon=1e-3, band=6),
        "diagnostic_stride": 5,
        "energy_index": 4.0,
    }
    options.update(overrides)
    return SimConfig(**options)


class ConfigTests(SimpleTestCase):
    def test_rejects_bad_grid_and_times(self):
        with self.assertRaises(ConfigurationError):
            small_config(points=100)
        with self.assertRaises(ConfigurationError):
            small_config(t_end=0.0)
        with self.assertRaises(ConfigurationError):
            small_config(cfl_safety=1.5)

    def test_initial_amplitude_is_epsilon_in_h4(self):
        config = small_config()
        rho = config.initial.build(config.grid, seed=3)
        self.assertAlmostEqual(vector_sobolev_norm((rho,), 4.0), 1e-3, delta=1e-15)

    def test_seed_determinism(self):
        config = small_config()
        a = config.initial.build(config.grid, 9)
        b = config.initial.build(config.grid, 9)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)

    def test_explicit_modes(self):
        initial = InitialCondition(kind="modes", epsilon=1.0, norm_index=0.0, modes=(Mode((1, 0)),))
        rho = initial.build(Grid(2, 16), 0)
        values = transform_inverse(rho)
        self.assertAlmostEqual(values.max(), 1.0 / math.sqrt(2.0) / math.pi, places=12)


class RhsTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 32)
        self.dynamics = PerturbationDynamics(self.grid, linear(1.0))

    def test_zero_field(self):
        out = self.dynamics.rhs(SpectralField.zeros(self.grid))
        self.assertEqual(np.abs(out.coefficients).max(), 0.0)

    def test_functions_of_y_are_equilibria(self):
        out = self.dynamics.rhs(sample(self.grid, lambda x, y: 1e-2 * np.cos(3 * y)))
        self.assertLess(np.abs(out.coefficients).max(), 1e-16)

    def test_single_harmonic(self):
        rho = sample(self.grid, lambda x, y: 1e-3 * np.sin(x))
        out = self.dynamics.rhs(rho)
        np.testing.assert_allclose(transform_inverse(out), -transform_inverse(rho), atol=1e-15)

    def test_mean_mode_is_zero(self):
        rho = small_config().initial.build(self.grid, 1) * 100.0
        self.assertEqual(self.dynamics.rhs(rho).coefficients[0, 0], 0.0)

    def test_tilde_tendency_identity(self):
        dynamics = PerturbationDynamics(self.grid, linear_plus_sine(2.0))
        rho = small_config().initial.build(self.grid, 5) * 50.0
        self.assertLess(dynamics.tilde_tendency_residual(rho), 1e-12 * max(1.0, l2_norm(rho)) ** 2)


class StepTests(SimpleTestCase):
    def test_linear_step_matches_exact_propagator(self):
        simulation = Simulation(small_config(nonlinear=False, profile=linear(1.5)))
        state = simulation.initial_state()
        advanced = simulation.step(state, 0.1)
        exact = torus_propagate(state.rho, 0.1, rate=1.5)
        self.assertLess(l2_norm(advanced.rho - exact), 1e-12 * l2_norm(state.rho))

    def test_linear_run_matches_exact_semigroup(self):
        config = small_config(nonlinear=False, profile=linear(1.5), t_end=10.0, dt=0.1, energy_index=None)
        result = run(config)
        exact = torus_propagate(Simulation(config).initial_state().rho, 10.0, rate=1.5)
        self.assertAlmostEqual(result.state.t, 10.0, places=12)
        self.assertLess(l2_norm(result.state.rho - exact), 1e-10 * l2_norm(exact))

    def test_equilibrium_is_preserved(self):
        simulation = Simulation(small_config())
        rho = sample(simulation.grid, lambda x, y: 1e-2 * np.sin(2 * y))
        state = SimState(0.0, rho)
        for _ in range(10):
            previous = state
            state = simulation.step(state, 0.05)
            self.assertLess(np.abs(state.rho.coefficients - previous.rho.coefficients).max(), 1e-13)

    def test_mean_is_conserved(self):
        simulation = Simulation(small_config(initial=InitialCondition(epsilon=0.05, band=6)))
        state = simulation.initial_state()
        state = SimState(0.0, state.rho + sample(simulation.grid, lambda x, y: 0.3 + 0 * x))
        mean = state.rho.mean
        for _ in range(20):
            state = simulation.step(state)
        self.assertLess(abs(state.rho.mean - mean), 1e-12)

    def test_time_reversal(self):
        simulation = Simulation(small_config(initial=InitialCondition(epsilon=0.05, band=6)))
        state = simulation.initial_state()
        dt = 0.05
        back = simulation.step(simulation.step(state, dt), -dt)
        self.assertLess(l2_norm(back.rho - state.rho), 10 * dt ** 5 * l2_norm(state.rho))

    def test_cfl_violation(self):
        simulation = Simulation(small_config(points=16, initial=InitialCondition(epsilon=10.0, band=4)))
        with self.assertRaises(CFLViolation) as ctx:
            simulation.step(simulation.initial_state(), 100.0)
        self.assertLess(ctx.exception.advised_dt, 100.0)

    def test_non_finite_state_blows_up(self):
        simulation = Simulation(small_config())
        coefficients = np.zeros(simulation.grid.shape, dtype=complex)
        coefficients[1, 1] = np.nan
        with self.assertRaises(BlowUpError):
            simulation.step(SimState(0.0, SpectralField(simulation.grid, coefficients)), 0.01)


class RunTests(SimpleTestCase):
    def test_zero_amplitude_is_constant(self):
        result = run(small_config(initial=InitialCondition(epsilon=0.0)))
        for entry in result.records:
            self.assertEqual(entry.norms["4"], 0.0)
            self.assertEqual(entry.velocity_l2, 0.0)

    def test_records_follow_stride_and_schema(self):
        config = small_config(dt=0.05)
        result = run(config)
        self.assertEqual([r.step for r in result.records], [0, 5, 10, 15, 20])
        self.assertEqual(list(result.records[0].to_row()), csv_columns(config))
        self.assertEqual(result.summary.termination, "t_end")
        self.assertLess(result.summary.mean_drift, 1e-12)

    def test_unstable_stratification_grows(self):
        initial = InitialCondition(
            kind="modes", epsilon=1e-3, modes=(Mode((1, 0)), Mode((1, 1), 0.5), Mode((2, 1), 0.25))
        )
        config = small_config(points=16, profile=linear(-1.0), initial=initial, t_end=8.0, diagnostic_stride=1, energy_index=None)
        result = run(config)
        start = result.records[0].velocity_l2
        tenfold = [entry.t for entry in result.records if entry.velocity_l2 >= 10.0 * start]
        self.assertTrue(tenfold)
        self.assertLess(tenfold[0], 20.0)
        # the (1, 0) mode grows like e^t
        self.assertGreater(result.records[-1].velocity_l2, 100.0 * start)

    def test_stable_profile_damps_oscillating_part(self):
        config = small_config(profile=linear_plus_sine(2.0), t_end=30.0, diagnostic_stride=10000, energy_index=None)
        result = run(config)
        first, last = result.records[0], result.records[-1]
        self.assertLess(last.bar_norm, first.bar_norm)
        self.assertLessEqual(last.tilde_norm, 2e-3)
        self.assertLess(last.dx_rho_l2, first.dx_rho_l2)

    def test_cfl_violation_keeps_partial_series(self):
        config = small_config(
            points=16, initial=InitialCondition(epsilon=1000.0, band=4), dt=1.0, t_end=2.0, energy_index=None
        )
        with self.assertRaises(CFLViolation) as ctx:
            run(config)
        error = ctx.exception
        self.assertEqual([entry.step for entry in error.records], [0])
        self.assertEqual(error.summary.termination, "cfl-violation")
        self.assertEqual(error.summary.steps, 0)
        self.assertEqual(error.summary.error["type"], "CFLViolation")

    def test_resume_is_bit_exact(self):
        config = small_config(t_end=0.5, checkpoint_stride=4, energy_index=None)
        with tempfile.TemporaryDirectory() as tmp:
            full = Simulation(config, checkpoint_dir=Path(tmp)).run()
            self.assertIn("checkpoint_00000004.ipmf", full.summary.checkpoints)
            resumed_sim = Simulation(config)
            state = resumed_sim.resume(Path(tmp) / "checkpoint_00000004.ipmf")
            self.assertEqual(state.step, 4)
            resumed = resumed_sim.run(state)
        self.assertEqual(resumed.state.step, full.state.step)
        self.assertEqual(resumed.state.t, full.state.t)
        self.assertEqual(resumed.state.rho.coefficients.tobytes(), full.state.rho.coefficients.tobytes())

    def test_bar_fit_in_summary(self):
        config = small_config(profile=linear(1.0), t_end=20.0, dt=0.25, diagnostic_stride=4, fit_window=(2.0, 20.0), energy_index=None)
        summary = run(config).summary
        self.assertIsNotNone(summary.bar_fit)
        self.assertLess(summary.bar_fit["exponent"], 0.0)


class EnergyLedgerTests(SimpleTestCase):
    def test_equilibrium_terms_vanish(self):
        grid = Grid(2, 32)
        dynamics = PerturbationDynamics(grid, linear(1.0))
        state = SimState(0.0, sample(grid, lambda x, y: 1e-2 * np.cos(y)))
        ledger = energy_estimate_monitor(state, 4.0, dynamics)
        self.assertLess(abs(ledger.rate), 1e-15)
        self.assertLess(ledger.gradient_term + ledger.coupling_term + ledger.dissipation_term, 1e-15)

    def test_linear_run_rate_is_exact_dissipation(self):
        simulation = Simulation(small_config(nonlinear=False))
        state = simulation.initial_state()
        ledger = energy_estimate_monitor(state, 4.0, simulation.dynamics, simulation.integrator, 1e-4)
        self.assertLessEqual(ledger.rate, 0.0)
        self.assertAlmostEqual(ledger.rate / ledger.linear_dissipation, 1.0, delta=1e-12)
        self.assertAlmostEqual(ledger.rate_step / ledger.rate, 1.0, delta=1e-2)
        self.assertEqual(ledger.C_min, 0.0)

    def test_index_below_four_rejected(self):
        simulation = Simulation(small_config())
        with self.assertRaises(DomainError):
            energy_estimate_monitor(simulation.initial_state(), 3.0, simulation.dynamics)


class ThreeDimensionalTests(SimpleTestCase):
    def config(self, **overrides):
        options = {"dimension": 3, "points": 16, "initial": InitialCondition(epsilon=1e-3, band=4), "energy_index": None}
        options.update(overrides)
        return small_config(**options)

    def test_functions_of_z_are_stationary(self):
        simulation = Simulation(self.config())
        state = SimState(0.0, sample(simulation.grid, lambda x, y, z: 1e-2 * np.sin(z)))
        advanced = step_3d(simulation, state, 0.1)
        self.assertLess(np.abs(advanced.rho.coefficients - state.rho.coefficients).max(), 1e-13)

    def test_linear_decay_per_mode(self):
        config = self.config(nonlinear=False, t_end=2.0, dt=0.1)
        result = run_3d(config)
        exact = torus_propagate(Simulation(config).initial_state().rho, 2.0)
        self.assertLess(l2_norm(result.state.rho - exact), 1e-10 * l2_norm(exact))

    def test_nonlinear_run_conserves_mean(self):
        result = run_3d(self.config(t_end=1.0))
        self.assertLess(result.summary.mean_drift, 1e-12)
        self.assertEqual(len(result.records[0].velocity_h3), 3)

    def test_dimension_guard(self):
        with self.assertRaises(ConfigurationError):
            run_3d(small_config())
