import math

import numpy as np
from django.test import SimpleTestCase

from core_utils.exceptions import DomainError, FitError

from .fitting import fit_power_law
from .lemmas import (
    convolution_bound,
    convolution_integral,
    gronwall_closed_form,
    gronwall_ode,
    log_grid,
    pointwise_bound_constant,
    verify_all,
)
from .quadrature import angular_integral, laplace_constant


class AngularIntegralTests(SimpleTestCase):
    def test_values_at_zero(self):
        self.assertAlmostEqual(angular_integral(0, 0.0), 2 * math.pi, places=13)
        self.assertAlmostEqual(angular_integral(2, 0.0), math.pi, places=13)

    def test_matches_bessel_closed_form(self):
        # ∫₀^{2π} e^{-t cos²θ} dθ = 2π e^{-t/2} I₀(t/2)
        from scipy.special import ive

        for t in (0.5, 3.0, 250.0, 1e5):
            self.assertAlmostEqual(angular_integral(0, t) / (2 * math.pi * ive(0, t / 2)), 1.0, delta=1e-9)

    def test_laplace_rate_and_constant(self):
        times = np.geomspace(1e2, 1e6, 12)
        for k in (0, 1, 2):
            values = [angular_integral(k, t) for t in times]
            self.assertAlmostEqual(fit_power_law(times, values).exponent, -(1 + k) / 2, delta=0.02)
            constant = values[-1] * times[-1] ** ((k + 1) / 2)
            self.assertAlmostEqual(constant / laplace_constant(k), 1.0, delta=0.05)

    def test_decreasing_in_t_and_k(self):
        for t in (0.0, 1.0, 10.0, 1e3):
            row = [angular_integral(k, t) for k in range(5)]
            self.assertEqual(row, sorted(row, reverse=True))
        column = [angular_integral(1, t) for t in (0.0, 0.1, 1.0, 10.0, 100.0)]
        self.assertEqual(column, sorted(column, reverse=True))

    def test_negative_time(self):
        with self.assertRaises(DomainError):
            angular_integral(0, -1.0)


class PointwiseBoundTests(SimpleTestCase):
    def test_known_constants(self):
        # sup attained on A = 1 at t = max(0, k/2 - 1)
        for k in (1, 2, 3, 4):
            expected = 1.0 if k <= 2 else (k / 2) ** (k / 2) * math.exp(1 - k / 2)
            self.assertAlmostEqual(pointwise_bound_constant(k, 1e4).sup_ratio, expected, delta=1e-8)

    def test_t_zero_slice(self):
        self.assertEqual(pointwise_bound_constant(2, 0.0).sup_ratio, 1.0)

    def test_saturation(self):
        first = pointwise_bound_constant(2, 1e3).sup_ratio
        second = pointwise_bound_constant(2, 1e6).sup_ratio
        self.assertAlmostEqual(first / second, 1.0, delta=0.01)

    def test_k_must_be_positive(self):
        with self.assertRaises(DomainError):
            pointwise_bound_constant(0, 10.0)


class ConvolutionBoundTests(SimpleTestCase):
    def test_zero_time(self):
        self.assertEqual(convolution_integral(0.25, 0.25, 0.0), 0.0)

    def test_delta_zero_like_limit(self):
        # with δ → 0 the integral is (1 - (t+1)^{-η})/η; check the exact η = 1 case at small δ
        t = 50.0
        value = convolution_integral(1e-12, 1.0, t)
        self.assertAlmostEqual(value, 1.0 - 1.0 / (t + 1.0), delta=1e-9)

    def test_grids_are_nested(self):
        short = set(log_grid(1e3))
        self.assertTrue(short <= set(log_grid(1e4)))

    def test_monotone_in_t_max_and_finite(self):
        for delta, eta in ((0.25, 0.25), (1.0, 0.5)):
            short = convolution_bound(delta, eta, 1e3)
            full = convolution_bound(delta, eta, 1e4)
            self.assertGreaterEqual(full.sup_ratio, short.sup_ratio)
            self.assertTrue(math.isfinite(full.extras["extrapolated_sup"]))
            self.assertLess(full.extras["contraction"], 1.0)

    def test_quarter_quarter_limit(self):
        # the ratio tends to 1/η from below
        report = convolution_bound(0.25, 0.25, 1e4)
        self.assertLess(report.sup_ratio, 4.0)
        self.assertAlmostEqual(report.extras["extrapolated_sup"], 4.0, delta=0.2)

    def test_saturation_change_over_tenfold_t_max(self):
        for delta, eta in ((0.25, 0.25), (1.0, 0.5), (1.25, 1.0)):
            short = convolution_bound(delta, eta, 1e3)
            full = convolution_bound(delta, eta, 1e4)
            expected = (full.sup_ratio - short.sup_ratio) / short.sup_ratio
            self.assertAlmostEqual(full.extras["saturation_change"], expected, places=12)
        # the δ = η = 1/4 ratio is still climbing towards 4 at t = 10⁴
        self.assertGreater(convolution_bound(0.25, 0.25, 1e4).extras["saturation_change"], 0.02)

    def test_log_case_bounded(self):
        report = convolution_bound(1.0, 0.5, 1e4)
        self.assertLess(report.sup_ratio, 3.0)

    def test_parameters_must_be_positive(self):
        with self.assertRaises(DomainError):
            convolution_bound(0.0, 1.0, 10.0)


class GronwallTests(SimpleTestCase):
    def test_closed_form_without_forcing(self):
        trajectory = gronwall_ode(2.0, 0.0, 1e4)
        exact = gronwall_closed_form(2.0, trajectory.times)
        self.assertLess(np.max(np.abs(trajectory.values - exact) / exact), 1e-8)

    def test_zero_solution(self):
        trajectory = gronwall_ode(0.0, 0.0, 100.0)
        self.assertFalse(np.any(trajectory.values))
        self.assertEqual(trajectory.report.sup_ratio, 0.0)

    def test_forced_solution_decays_like_inverse_square(self):
        trajectory = gronwall_ode(1.0, 1.0, 1e4, power=2.0)
        self.assertAlmostEqual(trajectory.report.extras["late_exponent"], -2.0, delta=0.1)
        short = gronwall_ode(1.0, 1.0, 1e3, power=2.0).report
        self.assertAlmostEqual(trajectory.report.sup_ratio / short.sup_ratio, 1.0, delta=0.02)


class FitPowerLawTests(SimpleTestCase):
    def setUp(self):
        self.times = np.geomspace(1.0, 1e4, 20)

    def test_pure_power_laws(self):
        fit = fit_power_law(self.times, (self.times + 1) ** -0.25)
        self.assertAlmostEqual(fit.exponent, -0.25, delta=1e-6)
        fit = fit_power_law(self.times, 5 * (self.times + 1) ** -1.25)
        self.assertAlmostEqual(fit.exponent, -1.25, delta=1e-10)
        self.assertAlmostEqual(fit.constant, 5.0, delta=1e-4)
        self.assertAlmostEqual(fit.quality, 1.0, places=12)

    def test_window_selects_samples(self):
        fit = fit_power_law(self.times, (self.times + 1) ** -0.5, window=(10.0, 1e3))
        self.assertGreaterEqual(fit.window[0], 10.0)
        self.assertLessEqual(fit.window[1], 1e3)

    def test_nonpositive_values_listed(self):
        values = (self.times + 1) ** -1.0
        values[[3, 7]] = [0.0, -1.0]
        with self.assertRaises(FitError) as ctx:
            fit_power_law(self.times, values)
        self.assertEqual(ctx.exception.indices, [3, 7])

    def test_too_few_samples(self):
        with self.assertRaises(FitError):
            fit_power_law(self.times[:5], self.times[:5])


class VerifyAllTests(SimpleTestCase):
    def test_reduced_grid_passes(self):
        verdicts = verify_all(t_max=1e3, deltas=(0.25, 1.0), etas=(0.5,))
        failed = [(v.lemma, v.parameters) for v in verdicts if not v.passed]
        self.assertEqual(failed, [])
        lemmas = {v.lemma for v in verdicts}
        self.assertEqual(
            lemmas, {"angular_integral", "pointwise_bound", "convolution_bound", "gronwall_closed_form", "gronwall"}
        )
        for verdict in verdicts:
            if verdict.lemma == "convolution_bound":
                self.assertEqual(verdict.measured["saturation_tolerance"], 0.02)
                self.assertIn("saturation_change", verdict.measured)
                self.assertEqual(verdict.note == "saturated", verdict.measured["saturation_change"] <= 0.02)
