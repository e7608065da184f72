import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core_utils.exceptions import ConfigurationError, DomainError, NonFiniteSymbolError

from .checkpoint import decode_field, encode_field, read_checkpoint, write_checkpoint
from .fields import SpectralField, l2_inner, random_field, sample, transform_forward, transform_inverse
from .grid import Grid
from .multipliers import (
    FourierMultiplier,
    apply_multiplier,
    identity,
    riesz,
    semigroup,
)
from .operators import (
    bar_tilde_split,
    divergence_defect,
    grad_linf,
    l2_norm,
    sobolev_norm,
    velocity_from_density_2d,
    velocity_from_density_3d,
)


def physical_l2(field):
    return math.sqrt(field.grid.cell_volume * np.sum(transform_inverse(field) ** 2))


class GridTests(SimpleTestCase):
    def test_rejects_non_power_of_two(self):
        with self.assertRaisesMessage(ConfigurationError, "power of two"):
            Grid(2, 100)

    def test_rejects_small_and_bad_dimension(self):
        with self.assertRaises(ConfigurationError):
            Grid(2, 4)
        with self.assertRaises(ConfigurationError):
            Grid(4, 16)

    def test_integer_wavenumbers(self):
        grid = Grid(2, 16)
        k = grid.wavevector[0][:, 0]
        self.assertTrue(np.all(k == np.round(k)))
        self.assertEqual(k.min(), -8)
        self.assertEqual(k.max(), 7)

    def test_dealias_mask_keeps_below_one_third(self):
        grid = Grid(2, 32)
        self.assertTrue(grid.dealias_mask[10, 10])
        self.assertFalse(grid.dealias_mask[11, 0])
        self.assertFalse(grid.dealias_mask[0, 32 - 11])


class TransformTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 16)
        self.rng = np.random.default_rng(1234)

    def test_constant_has_only_mean_mode(self):
        field = transform_forward(np.ones(self.grid.shape), self.grid)
        self.assertAlmostEqual(field.coefficients[0, 0].real, 1.0, places=14)
        rest = field.coefficients.copy()
        rest[0, 0] = 0
        self.assertLess(np.abs(rest).max(), 1e-14)

    def test_sine_occupies_plus_minus_one(self):
        field = sample(self.grid, lambda x, y: np.sin(x))
        support = {tuple(i) for i in np.argwhere(np.abs(field.coefficients) > 1e-12)}
        self.assertEqual(support, {(1, 0), (15, 0)})
        self.assertAlmostEqual(field.coefficients[1, 0], -0.5j, places=13)

    def test_round_trip(self):
        values = self.rng.standard_normal(self.grid.shape)
        back = transform_inverse(transform_forward(values, self.grid))
        self.assertLess(np.abs(back - values).max() / np.abs(values).max(), 1e-12)

    def test_parseval_on_random_fields(self):
        for _ in range(100):
            values = self.rng.standard_normal(self.grid.shape)
            field = transform_forward(values, self.grid)
            physical = math.sqrt(self.grid.cell_volume * np.sum(values ** 2))
            self.assertAlmostEqual(l2_norm(field) / physical, 1.0, delta=1e-12)

    def test_hermitian_symmetry(self):
        field = transform_forward(self.rng.standard_normal(self.grid.shape), self.grid)
        self.assertLess(field.hermitian_defect(), 1e-14)

    def test_shape_mismatch_is_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            transform_forward(np.zeros((16, 8)), self.grid)

    def test_fields_are_immutable(self):
        field = SpectralField.zeros(self.grid)
        with self.assertRaises(ValueError):
            field.coefficients[0, 0] = 1.0

    def test_random_field_is_band_limited_and_mean_free(self):
        field = random_field(Grid(2, 32), self.rng, band=6)
        self.assertEqual(field.coefficients[0, 0], 0)
        self.assertEqual(np.abs(field.coefficients[10, 0]), 0)
        self.assertLess(field.hermitian_defect(), 1e-14)


class MultiplierTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 16)
        self.rng = np.random.default_rng(7)

    def test_identity_returns_input(self):
        field = random_field(self.grid, self.rng, zero_mean=False)
        out = apply_multiplier(field, identity())
        np.testing.assert_array_equal(out.coefficients, field.coefficients)

    def test_r1_kills_x_independent_modes(self):
        field = sample(self.grid, lambda x, y: np.sin(y))
        out = apply_multiplier(field, riesz(0))
        self.assertLess(np.abs(out.coefficients).max(), 1e-15)

    def test_r1_squared_on_sin_x(self):
        field = sample(self.grid, lambda x, y: np.sin(x))
        out = apply_multiplier(field, riesz(0) * riesz(0))
        np.testing.assert_allclose(transform_inverse(out), -transform_inverse(field), atol=1e-13)

    def test_linearity(self):
        f = random_field(self.grid, self.rng)
        g = random_field(self.grid, self.rng)
        m = riesz(1)
        lhs = apply_multiplier(f * 2.0 + g * -3.0, m)
        rhs = apply_multiplier(f, m) * 2.0 + apply_multiplier(g, m) * -3.0
        self.assertLess(np.abs(lhs.coefficients - rhs.coefficients).max(), 1e-13)

    def test_commutes_with_transforms(self):
        f = random_field(self.grid, self.rng)
        m = semigroup(1.5)
        direct = apply_multiplier(f, m)
        through_physical = apply_multiplier(transform_forward(transform_inverse(f), self.grid), m)
        self.assertLess(np.abs(direct.coefficients - through_physical.coefficients).max(), 1e-13)

    def test_non_finite_symbol_names_wavevector(self):
        blowing = FourierMultiplier("bad", lambda k, k_sq: 1.0 / k[0])
        with self.assertRaises(NonFiniteSymbolError) as ctx:
            apply_multiplier(SpectralField.zeros(self.grid), blowing)
        self.assertEqual(ctx.exception.wavevector[0], 0.0)


class NormTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 16)

    def test_zero_field(self):
        for s in (0, 1, 3.5, 10):
            self.assertEqual(sobolev_norm(SpectralField.zeros(self.grid), s), 0.0)

    def test_sine_values(self):
        field = sample(self.grid, lambda x, y: np.sin(x))
        self.assertAlmostEqual(sobolev_norm(field, 0), math.sqrt(2 * math.pi ** 2), places=12)
        self.assertAlmostEqual(sobolev_norm(field, 1), math.sqrt(2) * math.sqrt(2 * math.pi ** 2), places=12)

    def test_monotone_in_s(self):
        field = random_field(self.grid, np.random.default_rng(3), slope=1.0)
        norms = [sobolev_norm(field, s) for s in (0, 0.5, 1, 2, 4)]
        self.assertEqual(norms, sorted(norms))
        self.assertAlmostEqual(norms[0], physical_l2(field), places=12)

    def test_negative_index_rejected(self):
        with self.assertRaises(DomainError):
            sobolev_norm(SpectralField.zeros(self.grid), -1)


class VelocityTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 16)
        self.grid3 = Grid(3, 8)
        self.rng = np.random.default_rng(11)

    def test_x_independent_density_has_no_velocity(self):
        u1, u2 = velocity_from_density_2d(sample(self.grid, lambda x, y: np.cos(3 * y) + y ** 0))
        self.assertLess(np.abs(u1.coefficients).max(), 1e-15)
        self.assertLess(np.abs(u2.coefficients).max(), 1e-15)

    def test_sin_x(self):
        rho = sample(self.grid, lambda x, y: np.sin(x))
        u1, u2 = velocity_from_density_2d(rho)
        self.assertLess(np.abs(transform_inverse(u1)).max(), 1e-14)
        np.testing.assert_allclose(transform_inverse(u2), transform_inverse(rho), atol=1e-14)

    def test_cos_x_plus_y(self):
        rho = sample(self.grid, lambda x, y: np.cos(x + y))
        u1, u2 = velocity_from_density_2d(rho)
        np.testing.assert_allclose(transform_inverse(u1), -0.5 * transform_inverse(rho), atol=1e-14)
        np.testing.assert_allclose(transform_inverse(u2), 0.5 * transform_inverse(rho), atol=1e-14)

    def test_three_dimensional_examples(self):
        u = velocity_from_density_3d(sample(self.grid3, lambda x, y, z: np.sin(2 * z)))
        self.assertTrue(all(np.abs(c.coefficients).max() < 1e-15 for c in u))
        rho = sample(self.grid3, lambda x, y, z: np.sin(x))
        u1, u2, u3 = velocity_from_density_3d(rho)
        np.testing.assert_allclose(transform_inverse(u3), transform_inverse(rho), atol=1e-14)
        self.assertLess(np.abs(u1.coefficients).max() + np.abs(u2.coefficients).max(), 1e-15)
        rho = sample(self.grid3, lambda x, y, z: np.cos(x + z))
        u1, _, u3 = velocity_from_density_3d(rho)
        np.testing.assert_allclose(transform_inverse(u1), -0.5 * transform_inverse(rho), atol=1e-14)
        np.testing.assert_allclose(transform_inverse(u3), 0.5 * transform_inverse(rho), atol=1e-14)

    def test_divergence_free_and_energy_identity(self):
        for grid in (self.grid, self.grid3):
            for _ in range(100):
                rho = transform_forward(self.rng.standard_normal(grid.shape), grid)
                u = velocity_from_density_2d(rho) if grid.dimension == 2 else velocity_from_density_3d(rho)
                self.assertLessEqual(divergence_defect(u), 1e-13 * l2_norm(rho))
                lhs = l2_inner(u[-1], rho)
                rhs = sum(l2_inner(c, c) for c in u)
                self.assertLessEqual(abs(lhs - rhs), 1e-12 * abs(rhs))

    def test_interpolation_inequality(self):
        for _ in range(100):
            rho = transform_forward(self.rng.standard_normal(self.grid.shape), self.grid)
            u1, u2 = velocity_from_density_2d(rho)
            self.assertLessEqual(l2_norm(u1) ** 2, l2_norm(rho) * l2_norm(u2) + 1e-12)


class SplitAndGradientTests(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(2, 16)

    def test_split_examples(self):
        rho = sample(self.grid, lambda x, y: np.sin(y) + np.sin(x + y))
        bar, tilde = bar_tilde_split(rho)
        np.testing.assert_allclose(transform_inverse(tilde), np.sin(self.grid.coordinates[1]), atol=1e-14)
        np.testing.assert_allclose(
            transform_inverse(bar), np.sin(self.grid.coordinates[0] + self.grid.coordinates[1]), atol=1e-14
        )
        np.testing.assert_array_equal((bar + tilde).coefficients, rho.coefficients)

    def test_three_dimensional_tilde_depends_on_z_only(self):
        grid = Grid(3, 8)
        rho = transform_forward(np.random.default_rng(2).standard_normal(grid.shape), grid)
        _, tilde = bar_tilde_split(rho)
        values = transform_inverse(tilde)
        self.assertLess(np.abs(values - values[:1, :1, :]).max(), 1e-13)

    def test_grad_linf(self):
        self.assertEqual(grad_linf(transform_forward(np.full(self.grid.shape, 4.0), self.grid)), 0.0)
        self.assertAlmostEqual(grad_linf(sample(self.grid, lambda x, y: np.sin(x))), 1.0, places=12)
        self.assertAlmostEqual(grad_linf(sample(self.grid, lambda x, y: np.sin(2 * y))), 2.0, places=12)


class CheckpointTests(SimpleTestCase):
    def test_bit_exact_round_trip(self):
        grid = Grid(3, 8, length=4 * math.pi)
        field = random_field(grid, np.random.default_rng(5), slope=0.5)
        restored, metadata = decode_field(encode_field(field, {"t": 1.25, "step": 3}))
        self.assertEqual(restored.grid, grid)
        self.assertEqual(metadata, {"t": 1.25, "step": 3})
        self.assertEqual(restored.coefficients.tobytes(), field.coefficients.tobytes())

    def test_file_round_trip_and_truncation(self):
        field = random_field(Grid(2, 8), np.random.default_rng(6))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_checkpoint(Path(tmp) / "rho.ipmf", field)
            restored, _ = read_checkpoint(path)
            self.assertEqual(restored.coefficients.tobytes(), field.coefficients.tobytes())
            path.write_bytes(path.read_bytes()[:-8])
            with self.assertRaises(ConfigurationError):
                read_checkpoint(path)
