import math

import numpy as np
from django.test import SimpleTestCase

from core_utils.exceptions import DomainError
from spectral.fields import random_field, sample
from spectral.grid import Grid

from .conditions import profile_conditions
from .forms import quadratic_form
from .profiles import from_samples, linear, linear_plus_sine
from .stationary import classify_stationary, energy_identity_check, stationarity_residual


class ProfileTests(SimpleTestCase):
    def test_linear_plus_sine_derivatives(self):
        profile = linear_plus_sine(2.0)
        y = np.linspace(-math.pi, math.pi, 9)
        np.testing.assert_allclose(profile.slope(y), 2.0 + np.cos(y), atol=1e-15)
        np.testing.assert_allclose(profile.derivative(y, 3), -np.cos(y), atol=1e-15)
        np.testing.assert_allclose(profile.derivative(y, 21), np.cos(y), atol=1e-15)

    def test_order_above_21_rejected(self):
        with self.assertRaises(DomainError):
            linear(1.0).derivative(0.0, 22)

    def test_samples_match_analytic(self):
        y = -math.pi + 2 * math.pi / 64 * np.arange(64)
        sampled = from_samples(2.0, np.sin(y))
        analytic = linear_plus_sine(2.0)
        points = np.linspace(-3.0, 3.0, 13)
        for order in (0, 1, 3, 7):
            np.testing.assert_allclose(sampled.derivative(points, order), analytic.derivative(points, order), atol=1e-10)


class ConditionTests(SimpleTestCase):
    def test_linear_profile(self):
        report = profile_conditions(linear(1.0))
        self.assertTrue(report.admissible)
        self.assertEqual(report.c, 1.0)
        self.assertEqual(report.third_derivative_positive_part, 0.0)

    def test_linear_plus_sine(self):
        report = profile_conditions(linear_plus_sine(2.0))
        self.assertTrue(report.admissible)
        self.assertAlmostEqual(report.c, 1.0, places=12)
        self.assertAlmostEqual(report.third_derivative_positive_part, 1.0, places=12)
        self.assertAlmostEqual(report.curvature_threshold, math.pi ** 2 / 2, places=12)

    def test_small_slope_fails_monotonicity(self):
        report = profile_conditions(linear_plus_sine(0.5))
        self.assertFalse(report.monotone)
        self.assertAlmostEqual(report.c, -0.5, places=12)
        self.assertFalse(report.admissible)

    def test_monotone_in_K(self):
        previous = None
        for K in (1.1, 1.5, 2.0, 4.0):
            report = profile_conditions(linear_plus_sine(K))
            flags = (report.monotone, report.curvature)
            if previous is not None:
                self.assertTrue(all(b or not a for a, b in zip(previous, flags)))
            previous = flags

    def test_report_serializes(self):
        data = profile_conditions(linear(1.0)).to_dict()
        self.assertTrue(data["admissible"])
        self.assertEqual(len(data["derivative_norms"]), 22)


class QuadraticFormTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 32)
        self.rng = np.random.default_rng(17)

    def test_linear_profile_is_exact(self):
        profile = linear(3.0)
        for _ in range(20):
            g = random_field(self.grid, self.rng, slope=2.0)
            report = quadratic_form(profile, g)
            self.assertEqual(report.bound, "gradient")
            self.assertLessEqual(abs(report.margin), 1e-12 * abs(report.Q))

    def test_linear_plus_sine_margin_positive(self):
        profile = linear_plus_sine(2.0)
        for _ in range(100):
            g = random_field(self.grid, self.rng, slope=2.0)
            report = quadratic_form(profile, g)
            self.assertEqual(report.bound, "curvature")
            self.assertTrue(report.hypotheses_met)
            self.assertGreaterEqual(report.margin, 0.0)

    def test_x_independent_g(self):
        report = quadratic_form(linear_plus_sine(2.0), sample(self.grid, lambda x, y: np.sin(3 * y)))
        self.assertLess(abs(report.Q), 1e-13)
        self.assertLess(abs(report.gradient_bound), 1e-25)
        self.assertLess(abs(report.curvature_bound), 1e-25)

    def test_unstable_profile_flagged(self):
        report = quadratic_form(linear(-1.0), random_field(self.grid, self.rng))
        self.assertFalse(report.hypotheses_met)
        self.assertLess(report.Q, 0.0)

    def test_negative_curvature_coefficient_flagged(self):
        # Ω′ = 1 + 0.4 cos(8y) stays positive while Ω‴₊ = 25.6 outweighs K
        profile = linear_plus_sine(1.0, amplitude=0.05, frequency=8)
        report = quadratic_form(profile, random_field(self.grid, self.rng, slope=2.0))
        self.assertEqual(report.bound, "curvature")
        self.assertAlmostEqual(report.K, 0.6, places=12)
        self.assertAlmostEqual(report.third_derivative_positive_part, 25.6, places=10)
        self.assertAlmostEqual(report.curvature_coefficient, 0.6 - 25.6 / (2 * math.pi ** 2), places=10)
        self.assertLess(report.curvature_coefficient, 0.0)
        self.assertFalse(report.hypotheses_met)

    def test_positive_curvature_coefficient_met(self):
        report = quadratic_form(linear_plus_sine(2.0), random_field(self.grid, self.rng, slope=2.0))
        self.assertAlmostEqual(report.curvature_coefficient, 1.0 - 1.0 / (2 * math.pi ** 2), places=12)
        self.assertTrue(report.hypotheses_met)

    def test_three_dimensional_form(self):
        grid = Grid(3, 16)
        profile = linear(2.0)
        g = random_field(grid, self.rng, slope=2.0)
        report = quadratic_form(profile, g)
        self.assertLessEqual(abs(report.margin), 1e-12 * abs(report.Q))


class StationaryTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 32)

    def test_functions_of_y_are_stationary(self):
        rho = sample(self.grid, lambda x, y: np.sin(y))
        self.assertLessEqual(stationarity_residual(rho), 1e-13)
        self.assertEqual(classify_stationary(rho).classification, "stratified")

    def test_single_harmonic_is_degenerate(self):
        rho = sample(self.grid, lambda x, y: np.sin(x))
        self.assertLessEqual(stationarity_residual(rho), 1e-13)
        self.assertEqual(classify_stationary(rho).classification, "degenerate-stationary")

    def test_mixed_field_is_not_stationary(self):
        rho = sample(self.grid, lambda x, y: np.sin(x + y) + np.sin(y))
        self.assertGreater(stationarity_residual(rho), 1e-3)
        self.assertEqual(classify_stationary(rho).classification, "non-stationary")

    def test_energy_identity_examples(self):
        lhs, rhs = energy_identity_check(sample(self.grid, lambda x, y: np.sin(y)))
        self.assertLess(abs(lhs) + abs(rhs), 1e-13)
        lhs, rhs = energy_identity_check(sample(self.grid, lambda x, y: np.sin(x)))
        self.assertAlmostEqual(lhs, 2 * math.pi ** 2, places=11)
        self.assertAlmostEqual(rhs, 2 * math.pi ** 2, places=11)

    def test_energy_identity_random(self):
        rng = np.random.default_rng(4)
        for grid in (self.grid, Grid(3, 8)):
            rho = random_field(grid, rng, slope=0.0)
            lhs, rhs = energy_identity_check(rho)
            self.assertLessEqual(abs(lhs - rhs), 1e-12 * (1 + abs(rhs)))
