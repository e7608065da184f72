import math

import numpy as np
from django.test import SimpleTestCase

from core_utils.exceptions import ConfigurationError, DomainError, PreconditionError, StabilityError
from oracles.fitting import fit_power_law
from spectral.fields import random_field, sample, transform_inverse
from spectral.grid import Grid
from spectral.multipliers import dealias
from spectral.operators import bar_tilde_split, l2_norm

from .perturbed import PerturbationCoefficient, PerturbedEvolution, perturbed_propagate, perturbed_trajectory
from .sharpness import sharpness_concentrated, sharpness_radial
from .torus import VELOCITY_LOSS_BOUND, torus_propagate, uniform_bound_constants, velocity_decay_series
from .whole_space import RadialAngularSpec, box_emulation, gaussian_profile, radial_ratio_exact, whole_space_norm


class TorusPropagatorTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 32)
        self.rng = np.random.default_rng(21)

    def test_sin_x_decays_at_rate_one(self):
        rho = sample(self.grid, lambda x, y: np.sin(x))
        out = torus_propagate(rho, 3.0)
        np.testing.assert_allclose(transform_inverse(out), math.exp(-3.0) * transform_inverse(rho), atol=1e-14)

    def test_mixed_mode_rate(self):
        rho = sample(self.grid, lambda x, y: np.sin(x + 2 * y))
        out = torus_propagate(rho, 5.0)
        np.testing.assert_allclose(transform_inverse(out), math.exp(-1.0) * transform_inverse(rho), atol=1e-14)

    def test_x_independent_modes_are_frozen(self):
        rho = sample(self.grid, lambda x, y: np.sin(4 * y) + 2.0)
        out = torus_propagate(rho, 1e6)
        np.testing.assert_array_equal(out.coefficients, rho.coefficients)

    def test_semigroup_property(self):
        rho = random_field(self.grid, self.rng, slope=1.0)
        composed = torus_propagate(torus_propagate(rho, 1.25), 2.5)
        direct = torus_propagate(rho, 3.75)
        self.assertLess(np.abs(composed.coefficients - direct.coefficients).max(), 1e-14)

    def test_negative_time_rejected(self):
        with self.assertRaises(DomainError):
            torus_propagate(sample(self.grid, lambda x, y: np.sin(x)), -1.0)

    def test_uniform_bounds_below_pointwise_constants(self):
        rho = random_field(self.grid, self.rng, slope=1.0)
        # sup over A in [0, 1] of A^k e^{-A² t} (t+1)^{k/2} is 1 for k <= 2
        report = uniform_bound_constants(rho, np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 30)]))
        for value in report.constants.values():
            self.assertLessEqual(value, 1.0 + 1e-12)
        self.assertAlmostEqual(report.constants[0], 1.0, delta=1e-6)

    def test_velocity_decay_loses_two_derivatives(self):
        times = np.concatenate([[0.0], np.geomspace(1e-1, 1e4, 40)])
        fields = [
            random_field(self.grid, self.rng, slope=1.0),
            random_field(Grid(3, 16), self.rng, slope=1.0),
        ]
        for rho in fields:
            for s in (0.0, 1.0):
                rows = velocity_decay_series(rho, times, s)
                self.assertLessEqual(max(row["scaled_loss_ratio"] for row in rows), VELOCITY_LOSS_BOUND)
                self.assertLess(rows[-1]["velocity_norm"], rows[0]["velocity_norm"])

    def test_velocity_loss_ratio_of_single_mode(self):
        # |k|² = 17 and |k_1|/|k| = 1/√17
        rho = sample(self.grid, lambda x, y: np.sin(x + 4 * y))
        (row,) = velocity_decay_series(rho, [16.0])
        self.assertAlmostEqual(row["scaled_loss_ratio"], 17.0 * math.exp(-16.0 / 17.0) / (math.sqrt(17.0) * 18.0), places=12)


class WholeSpaceTests(SimpleTestCase):
    def test_radial_ratio_matches_bessel_closed_form(self):
        spec = gaussian_profile()
        base = whole_space_norm(spec, 0.0).value
        for weight in ("identity", "R1", "R1squared"):
            for t in (0.0, 1.0, 37.0, 1e3):
                estimate = whole_space_norm(spec, t, weight)
                self.assertTrue(estimate.converged)
                self.assertAlmostEqual(estimate.value / base, radial_ratio_exact(t, weight), delta=1e-9)

    def test_fitted_exponents(self):
        times = np.geomspace(1e2, 1e5, 16)
        for weight, expected in (("identity", -0.25), ("R1", -0.75), ("R1squared", -1.25)):
            spec = gaussian_profile(anisotropy=0.3)
            values = [whole_space_norm(spec, t, weight).value for t in times]
            fit = fit_power_law(times, values)
            self.assertAlmostEqual(fit.exponent, expected, delta=0.02 if weight == "identity" else 0.03)

    def test_riesz_weight_is_smaller(self):
        spec = gaussian_profile(anisotropy=-0.5)
        for t in (0.0, 2.0, 500.0):
            self.assertLessEqual(whole_space_norm(spec, t, "R1").value, whole_space_norm(spec, t).value)

    def test_lambda_power_on_gaussian(self):
        # ∫ r^2 e^{-r²} r dr · 2π = π
        estimate = whole_space_norm(gaussian_profile(), 0.0, lambda_power=1)
        self.assertAlmostEqual(estimate.value, math.sqrt(math.pi), places=10)

    def test_three_dimensional_rate(self):
        times = np.geomspace(1e2, 1e4, 10)
        spec = gaussian_profile(dimension=3)
        values = [whole_space_norm(spec, t).value for t in times]
        self.assertAlmostEqual(fit_power_law(times, values).exponent, -0.5, delta=0.02)

    def test_heavy_tail_rejected(self):
        spec = RadialAngularSpec(profile=lambda r, theta: 1.0 / (1.0 + r ** 2) + 0 * theta, r_max=5.0)
        with self.assertRaises(ConfigurationError):
            whole_space_norm(spec, 1.0)

    def test_unknown_weight(self):
        with self.assertRaises(ConfigurationError):
            whole_space_norm(gaussian_profile(), 1.0, "R2")


class BoxEmulationTests(SimpleTestCase):
    def setUp(self):
        self.profile = gaussian_profile()

    def test_initial_ratio_is_one(self):
        emulation = box_emulation(self.profile, [0.0], 40.0)
        self.assertAlmostEqual(emulation.ratios[0], 1.0, places=14)
        self.assertEqual(emulation.points, 128)

    def test_large_box_matches_whole_space(self):
        emulation = box_emulation(self.profile, [1.0, 10.0], 320.0)
        for t, ratio in zip(emulation.times, emulation.ratios):
            self.assertAlmostEqual(ratio / radial_ratio_exact(t), 1.0, delta=0.02)

    def test_small_box_levels_off(self):
        small = box_emulation(self.profile, [100.0], 20.0).ratios[0]
        large = box_emulation(self.profile, [100.0], 320.0).ratios[0]
        self.assertGreater(small, 1.5 * large)
        self.assertAlmostEqual(large / radial_ratio_exact(100.0), 1.0, delta=0.15)

    def test_rejected_inputs(self):
        with self.assertRaises(ConfigurationError):
            box_emulation(gaussian_profile(dimension=3), [1.0], 40.0)
        with self.assertRaises(ConfigurationError):
            box_emulation(self.profile, [1.0], 5000.0)
        with self.assertRaises(DomainError):
            box_emulation(self.profile, [-1.0], 40.0)


class SharpnessTests(SimpleTestCase):
    def test_radial_scaled_ratio_approaches_constant(self):
        radial = lambda r: np.exp(-0.5 * r ** 2)
        report = sharpness_radial(radial, 1e4, r_max=10.0)
        self.assertAlmostEqual(report.scaled, (2 * math.pi) ** -0.25, delta=1e-3)

    def test_concentrated_family_floor(self):
        for t in np.geomspace(1.0, 1e4, 25):
            report = sharpness_concentrated(t)
            self.assertGreaterEqual(report.value, report.floor - 1e-14)
            self.assertGreaterEqual(report.value, 0.3)
            self.assertGreaterEqual(report.value ** 2, math.exp(-2))

    def test_concentrated_at_zero_is_one(self):
        self.assertAlmostEqual(sharpness_concentrated(0.0).value, 1.0, places=14)


class PerturbedEvolutionTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 32)
        self.rng = np.random.default_rng(8)
        rho = random_field(self.grid, self.rng, slope=3.0)
        bar, _ = bar_tilde_split(rho)
        self.rho = bar
        self.small = PerturbationCoefficient(lambda y, t: 0.05 * np.sin(y), name="0.05 sin y")

    def test_zero_coefficient_matches_exact_semigroup(self):
        zero = PerturbationCoefficient(lambda y, t: 0.0 * y, name="zero")
        evolution = PerturbedEvolution(self.grid, zero, dt=0.01)
        rho0 = dealias(self.rho)
        samples = list(np.arange(1.0, 11.0))
        seen = []
        for t, rho in evolution.trajectory(rho0, 10.0, samples):
            exact = torus_propagate(rho0, t)
            self.assertLess(l2_norm(rho - exact), 1e-8 * l2_norm(rho0))
            seen.append(t)
        self.assertEqual(seen, [0.0, *samples])

    def test_oversized_step_is_rejected(self):
        zero = PerturbationCoefficient(lambda y, t: 0.0 * y, name="zero")
        rho = sample(self.grid, lambda x, y: np.sin(x))
        # RK4 amplifies the rate-one mode by 1.375 at dt = 3
        with self.assertRaises(StabilityError) as caught:
            perturbed_propagate(rho, zero, 3.0, dt=3.0)
        self.assertGreater(caught.exception.growth, 1.3)
        self.assertIn("dt <= 1.5", str(caught.exception))

    def test_certificate_of_sine(self):
        self.assertAlmostEqual(self.small.certificate(self.grid), 0.05, places=12)

    def test_large_coefficient_rejected(self):
        with self.assertRaises(PreconditionError):
            PerturbedEvolution(self.grid, PerturbationCoefficient(lambda y, t: 0.1 * np.sin(y)))

    def test_nonzero_mean_rejected(self):
        evolution = PerturbedEvolution(self.grid, self.small)
        with self.assertRaises(PreconditionError):
            next(evolution.trajectory(self.rho + sample(self.grid, lambda x, y: np.cos(y)), 1.0))

    def test_mean_preserved_and_norm_non_increasing(self):
        rows = perturbed_trajectory(self.rho, self.small, list(np.arange(1.0, 41.0)))
        norms = [row["l2_norm"] for row in rows]
        for before, after in zip(norms, norms[1:]):
            self.assertLessEqual(after, before * (1 + 1e-6))
        self.assertLess(max(row["horizontal_mean"] for row in rows), 1e-12)
        self.assertLess(norms[-1], norms[0])
