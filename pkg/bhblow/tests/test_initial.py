import math
import unittest

import numpy as np

from bhblow import ParameterError, ResolutionError
from bhblow.grid import SpectralGrid, derivative, interp
from bhblow.initial import (
    AuditCheck,
    DataSpec,
    audit_u0,
    build_u0,
    plateau_cutoff,
    smooth_step,
)


class CutoffTestCase(unittest.TestCase):
    def test_smooth_step(self):
        t = np.linspace(-1.0, 2.0, 301)
        values = smooth_step(t)
        self.assertTrue(np.all(np.diff(values) >= -1e-15))
        self.assertTrue(np.all(values[t <= 0.0] == 0.0))
        self.assertTrue(np.all(values[t >= 1.0] == 1.0))
        self.assertAlmostEqual(smooth_step(0.3) + smooth_step(0.7), 1.0, places=14)

    def test_plateau(self):
        # The step runs in sqrt|x|, so its midpoint sits at ((sqrt(a) + sqrt(b)) / 2)^2.
        middle = (0.5 * (math.sqrt(0.5) + 1.0)) ** 2
        x = np.array([-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, middle, 1.0, 3.0])
        values = plateau_cutoff(x, 0.5, 1.0)
        np.testing.assert_array_equal(values[[0, 1, 7, 8]], 0.0)
        np.testing.assert_array_equal(values[[2, 3, 4, 5]], 1.0)
        self.assertAlmostEqual(values[6], 0.5, places=14)

    def test_step_slope(self):
        t = np.linspace(0.0, 1.0, 20001)
        slope = np.gradient(smooth_step(t), t)
        self.assertLess(np.max(slope), 1.1 + 1e-6)
        self.assertGreater(np.max(slope), 1.09)
        self.assertGreater(np.max(np.gradient(smooth_step(t, 0.5), t)), 1.9)
        self.assertRaises(ParameterError, smooth_step, 0.5, 0.0)


class DataSpecTestCase(unittest.TestCase):
    def test_defaults(self):
        spec = DataSpec(0.01)
        self.assertEqual(spec.t0, -0.01)
        self.assertAlmostEqual(spec.length_scale, 1e-3, places=15)
        self.assertEqual(spec.to_dict()["M"], 50.0)
        self.assertEqual(DataSpec(0.5, family="two-mode").t0, 0.0)

    def test_invalid(self):
        self.assertRaises(ParameterError, DataSpec, 0.0)
        self.assertRaises(ParameterError, DataSpec, 0.2)
        self.assertRaises(ParameterError, DataSpec, 0.1, M=10.0)
        self.assertRaises(ParameterError, DataSpec, 0.1, nu=0.0)
        self.assertRaises(ParameterError, DataSpec, 0.1, cutoff_inner=1.0, cutoff_outer=0.5)
        self.assertRaises(ParameterError, DataSpec, 0.1, cutoff_inner=0.2)
        self.assertRaises(ParameterError, DataSpec, 0.1, perturbation=0.9)
        self.assertRaises(ParameterError, DataSpec, 0.1, family="gaussian")
        self.assertRaises(ParameterError, DataSpec, 1.5, family="two-mode")

    def test_grid_checks(self):
        spec = DataSpec(0.1)
        self.assertRaises(ParameterError, spec.validate, SpectralGrid(32768, 2.0))
        spec.validate(SpectralGrid(16, 4.0))


class BuildTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.grid = SpectralGrid(8192, 4.0)
        cls.spec = DataSpec(0.1)
        cls.u0 = build_u0(cls.spec, cls.grid)

    def test_slope_at_origin(self):
        slope = interp(derivative(self.u0, 1), 0.0)
        self.assertAlmostEqual(slope, -10.0, delta=1e-6)
        third = interp(derivative(self.u0, 3), 0.0)
        self.assertAlmostEqual(third / 6e4, 1.0, delta=1e-6)

    def test_support(self):
        outside = np.abs(self.grid.nodes) >= 1.0
        np.testing.assert_array_equal(self.u0.samples[outside], 0.0)

    def test_audit_passes(self):
        report = audit_u0(self.u0, self.spec)
        self.assertTrue(report.passed, report.failures)
        self.assertGreater(report["amplitude"].margin, 0.0)
        self.assertIn("self_similar_slope_l2", report.to_dict())

    def test_audit_self_similar_bounds(self):
        report = audit_u0(self.u0, self.spec)
        for name in (
            "middle_deviation",
            "middle_deviation_slope",
            "middle_curvature",
            "middle_third",
            "far_slope",
            "far_curvature",
            "near_fourth_deviation",
            "third_at_origin",
        ):
            self.assertTrue(report[name].passed, name)
        # |u_x| <= 2 on |x| >= 1/2 holds with room to spare.
        self.assertGreater(report["start_far_slope"].margin, 0.05)
        self.assertLess(report["middle_deviation"].measured, 1e-6)

    def test_audit_early_cutoff(self):
        spec = DataSpec(0.1, cutoff_inner=0.35)
        report = audit_u0(build_u0(spec, self.grid), spec)
        self.assertFalse(report.passed)
        self.assertIn("middle_deviation_slope", report.failures)

    def test_kappa_shift(self):
        spec = DataSpec(0.1, kappa0=0.25)
        u0 = build_u0(spec, self.grid)
        np.testing.assert_allclose(u0.samples, self.u0.samples + 0.25, atol=1e-15)
        self.assertTrue(audit_u0(u0, spec)["support"].passed)

    def test_perturbation(self):
        spec = DataSpec(0.1, perturbation=0.05, seed=3)
        first = build_u0(spec, self.grid)
        second = build_u0(spec, self.grid)
        np.testing.assert_array_equal(first.samples, second.samples)
        difference = np.max(np.abs(first.samples - self.u0.samples))
        self.assertAlmostEqual(difference, 0.05, places=12)
        other = build_u0(DataSpec(0.1, perturbation=0.05, seed=4), self.grid)
        self.assertFalse(np.array_equal(first.samples, other.samples))

    def test_under_resolved(self):
        with self.assertRaises(ResolutionError) as ctx:
            build_u0(self.spec, SpectralGrid(1024, 4.0))
        self.assertAlmostEqual(ctx.exception.max_trustworthy, 0.1**1.5 / 8.0)

    def test_two_mode(self):
        spec = DataSpec(0.3, family="two-mode")
        grid = SpectralGrid(256, math.pi)
        u0 = build_u0(spec, grid)
        x = grid.nodes
        expected = 0.3 * (2.0 * np.cos(x) + np.cos(2.0 * (x + 2.0 * math.pi**2)))
        np.testing.assert_allclose(u0.samples, expected, atol=1e-15)
        self.assertRaises(ParameterError, build_u0, spec, SpectralGrid(256, 3.0))


class AuditCheckTestCase(unittest.TestCase):
    def test_margin(self):
        check = AuditCheck("x", 1.0, 4.0)
        self.assertEqual(check.margin, 0.75)
        self.assertTrue(check.passed)
        self.assertFalse(AuditCheck("y", 5.0, 4.0).passed)
        self.assertFalse(AuditCheck("z", 0.0, 1.0, margin=-1.0).passed)
