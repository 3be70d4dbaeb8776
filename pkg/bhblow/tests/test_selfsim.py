import math
import unittest

import numpy as np

from bhblow import ParameterError, ResolutionError
from bhblow.evolve import TimeSeries
from bhblow.grid import SpectralGrid
from bhblow.profile import bar_u, bar_u_derivs, rescaled
from bhblow.selfsim import (
    SelfSimilarFrame,
    SpeedField,
    build_track,
    convergence_to_profile,
    cusp_exponent,
    estimate_x_star,
    extract_frame,
    fit_cusp_exponent,
    frame_speed,
    lagrangian_check,
    modulation_residuals,
    predicted_rates,
    steady_speed,
)
from bhblow.tests.samples import burgers_run, scaled_profile


def bump(X):
    inside = np.abs(X) < 1.0
    safe = np.where(inside, 1.0 - X * X, 1.0)
    return np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)


def synthetic_frames(deltas, nu_hats=None, s_values=None, spacings=None):
    X = np.linspace(-12.0, 12.0, 241)
    if nu_hats is None:
        nu_hats = [6.0] * len(deltas)
    if s_values is None:
        s_values = [float(k) for k in range(len(deltas))]
    if spacings is None:
        spacings = [1e-6] * len(deltas)
    return [
        SelfSimilarFrame(
            s=s, m=math.exp(s), dx=dx, nu_hat=nu, X=X, U=rescaled(6.0, X) + delta * bump(X)
        )
        for s, nu, delta, dx in zip(s_values, nu_hats, deltas, spacings)
    ]


class PredictedRatesTestCase(unittest.TestCase):
    def test_modes(self):
        self.assertEqual(predicted_rates("burgers_only", 2.0, 0.5, 4.0, 3.0, 6.0), (0.5, 0.0))
        self.assertEqual(predicted_rates("full", 2.0, 0.5, 4.0, 3.0, 6.0), (0.0, 1.0))
        xi_dot, tau_dot = predicted_rates("linear_only", 2.0, 0.5, 4.0, 3.0, 6.0)
        self.assertTrue(math.isnan(xi_dot))
        self.assertTrue(math.isnan(tau_dot))


class ExtractFrameTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.grid = SpectralGrid(8192, 4.0)
        cls.state = scaled_profile(cls.grid, 0.1)
        cls.frame = extract_frame(cls.state)

    def test_exact_profile(self):
        frame = self.frame
        self.assertAlmostEqual(frame.m, 10.0, delta=1e-8)
        self.assertAlmostEqual(frame.s, math.log(10.0), delta=1e-8)
        self.assertLess(max(frame.constraint_residuals), 1e-8)
        self.assertAlmostEqual(frame.nu_hat, 6.0, delta=1e-6)
        self.assertLess(frame.window_sup_dist, 1e-8)
        self.assertAlmostEqual(frame.cap, 0.5 / 0.1**1.5, delta=1e-3)

    def test_samples(self):
        frame = self.frame
        self.assertEqual(len(frame.X), 513)
        self.assertEqual(frame.X[256], 0.0)
        inside = np.abs(frame.X) <= 10.0
        slope = bar_u_derivs(frame.X[inside], 1)[1]
        np.testing.assert_allclose(frame.derivs[1][inside], slope, atol=1e-7)
        np.testing.assert_allclose(frame.U[inside], bar_u(frame.X[inside]), atol=1e-8)
        self.assertEqual(len(frame.rows()), 513)

    def test_sup_distance(self):
        self.assertTrue(math.isnan(self.frame.sup_distance(10.0, nu=0.0)))
        self.assertGreater(self.frame.sup_distance(10.0, nu=7.0), 1e-3)

    def test_window_too_wide(self):
        with self.assertRaises(ResolutionError) as ctx:
            extract_frame(self.state, window=20.0)
        self.assertAlmostEqual(ctx.exception.max_trustworthy, 0.5 / 0.1**1.5, delta=1e-3)

    def test_under_resolved(self):
        state = scaled_profile(SpectralGrid(512, 4.0), 0.1)
        with self.assertRaises(ResolutionError) as ctx:
            extract_frame(state)
        self.assertEqual(ctx.exception.max_trustworthy, 0.0)


class ConvergenceTestCase(unittest.TestCase):
    def test_monotone(self):
        report = convergence_to_profile(synthetic_frames([1e-2, 5e-3, 2e-3, 1e-3]))
        self.assertTrue(report.monotone)
        np.testing.assert_allclose(report.sup_dist, [1e-2, 5e-3, 2e-3, 1e-3], rtol=1e-12)
        self.assertIsNone(report.nu_ok)
        self.assertEqual(report.nu_error, 0.0)

    def test_growing_distance(self):
        report = convergence_to_profile(synthetic_frames([1e-3, 2e-3, 5e-3, 1e-2]))
        self.assertFalse(report.monotone)

    def test_nu_hat(self):
        frames = synthetic_frames([1e-3] * 4, nu_hats=[5.0, 5.5, 5.9, 6.05])
        report = convergence_to_profile(frames, epsilon=1e-4)
        np.testing.assert_allclose(report.increments, [0.5, 0.4, 0.15], atol=1e-12)
        self.assertTrue(report.nu_ok)
        frames = synthetic_frames([1e-3] * 4, nu_hats=[5.0, 6.0, 6.5, 6.5])
        self.assertFalse(convergence_to_profile(frames, epsilon=1e-4).nu_ok)
        self.assertIn("sup_dist", report.to_dict())

    def test_unresolved_frames_ignored(self):
        deltas = [1e-2, 5e-3, 2e-3, 1e-3, 5e-2, 8e-2]
        nu_hats = [6.0] * 4 + [9.0, 12.0]
        # m^(-3/2) = e^(-6) at s = 4 is below 16 spacings of 1e-3.
        spacings = [1e-6] * 4 + [1e-3] * 2
        frames = synthetic_frames(deltas, nu_hats, spacings=spacings)
        report = convergence_to_profile(frames, epsilon=1e-4)
        self.assertEqual(report.resolved.tolist(), [True] * 4 + [False] * 2)
        self.assertEqual(len(report.sup_dist), 6)
        self.assertTrue(report.monotone)
        self.assertEqual(report.nu_error, 0.0)
        self.assertTrue(report.nu_ok)
        everything = convergence_to_profile(synthetic_frames(deltas, nu_hats))
        self.assertFalse(everything.monotone)
        self.assertAlmostEqual(everything.nu_error, 6.0, places=12)
        few = synthetic_frames(deltas, nu_hats, spacings=[1e-6] * 3 + [1e-3] * 3)
        self.assertRaises(ParameterError, convergence_to_profile, few)

    def test_preconditions(self):
        self.assertRaises(ParameterError, convergence_to_profile, synthetic_frames([1e-3] * 3))
        frames = synthetic_frames([1e-3] * 4, s_values=[0.0, 0.5, 1.0, 1.5])
        self.assertRaises(ParameterError, convergence_to_profile, frames)


class CuspTestCase(unittest.TestCase):
    def test_fit_errors(self):
        x = np.linspace(-0.2, 0.2, 8)
        ux = -np.abs(x) ** (-2.0 / 3.0)
        self.assertRaises(ParameterError, fit_cusp_exponent, x, ux, 0.0, 0.1, 0.01)
        self.assertRaises(ResolutionError, fit_cusp_exponent, x, ux, 0.0, 0.01, 0.1)

    def test_fit_offset(self):
        x = np.linspace(0.0005, 1.0005, 1001)
        fit = fit_cusp_exponent(x, -np.abs(x - 0.4) ** -0.5, 0.4, 0.01, 0.3)
        self.assertAlmostEqual(fit.exponent, -0.5, places=8)
        self.assertIsNone(fit.far_ok)

    def test_profile_cusp(self):
        state = scaled_profile(SpectralGrid(32768, 2.0), 0.0125)
        fit = cusp_exponent(state, 0.0, w_lo=0.05, w_hi=0.3)
        self.assertLess(abs(fit.exponent + 2.0 / 3.0), 0.05)
        self.assertGreater(fit.r2, 0.99)
        self.assertGreaterEqual(fit.far_max, 0.0)
        self.assertIn("far_ok", fit.to_dict())


class TrackTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        result = burgers_run()
        cls.series = result.series
        cls.snapshots = result.snapshots
        cls.track = build_track(result.series, result.snapshots, "burgers_only")
        cls.frames = [
            extract_frame(state, entry) for state, entry in zip(cls.snapshots, cls.track)
        ]

    def test_track(self):
        self.assertEqual(len(self.track), len(self.snapshots))
        tau = self.track.column("tau")
        self.assertLess(np.max(np.abs(tau)), 1e-5)
        self.assertLess(np.max(np.abs(self.track.column("dtau_dt"))), 1e-4)
        np.testing.assert_array_equal(self.track.column("tau_dot"), 0.0)
        self.assertEqual(len(self.track.rows()[0]), len(self.track.COLUMNS))

    def test_residuals(self):
        report = modulation_residuals(self.track)
        self.assertTrue(report.tau_bound_holds)
        self.assertLess(np.max(report.tau_residual), 1e-4)
        self.assertEqual(len(report.rows()), len(self.track))
        self.assertRaises(ParameterError, modulation_residuals, self.track.entries[:4])

    def test_frames_stay_on_profile(self):
        for frame in self.frames:
            self.assertLess(frame.window_sup_dist, 1e-4)
            self.assertAlmostEqual(frame.nu_hat, 6.0, delta=1e-3)

    def test_frame_speed(self):
        V = frame_speed(self.frames, self.track)
        s_lo, s_hi = V.s_range
        self.assertLess(s_lo, s_hi)
        steady = steady_speed()
        for s in (s_lo, 0.5 * (s_lo + s_hi), s_hi):
            self.assertAlmostEqual(float(V(0.0, s)), 0.0, delta=1e-6)
            self.assertAlmostEqual(float(V(1.0, s)), float(steady(1.0, s)), delta=1e-4)
        self.assertGreater(V.limit(s_lo), 10.0)
        self.assertRaises(ParameterError, frame_speed, self.frames[:-1], self.track)


class XStarTestCase(unittest.TestCase):
    def test_linear_drift(self):
        t = np.linspace(0.0, 0.99, 500)
        zeros = np.zeros_like(t)
        columns = {"t": t, "m": 1.0 / (1.0 - t), "xi": 0.3 + 0.1 * t, "kappa": zeros}
        columns.update(l2=zeros + 1.0, linf=zeros + 1.0, dt=zeros)
        series = TimeSeries.from_columns(columns)
        self.assertAlmostEqual(estimate_x_star(series, 1.0), 0.4, places=10)

    def test_single_record(self):
        series = TimeSeries()
        series.append(0.0, 1.0, 0.25, 0.0, 1.0, 1.0, 0.0)
        self.assertEqual(estimate_x_star(series, 1.0), 0.25)


class LagrangianTestCase(unittest.TestCase):
    def test_steady_flow(self):
        V = steady_speed()
        self.assertEqual(float(V(0.0, 0.0)), 0.0)
        self.assertAlmostEqual(float(V(1.0, 0.0)), float(bar_u(1.0)) + 1.5, places=14)
        report = lagrangian_check(V, [-2.0, -0.5, 0.05, 0.5, 2.0], 0.0, 3.0, 50.0)
        self.assertTrue(report.passed)
        self.assertEqual(report.truncated, [])
        seeds = report.to_dict()["seeds"]
        self.assertIsNone(seeds[2]["lower_margin"])
        for seed in (seeds[0], seeds[3], seeds[4]):
            self.assertGreater(seed["lower_margin"], 0.0)
        self.assertGreater(seeds[3]["X_end"], 0.5 * math.exp(1.0))
        self.assertLess(seeds[0]["X_end"], -2.0)

    def test_truncation(self):
        V = SpeedField(lambda X, s: 1.5 * X, lambda s: 1.0, (0.0, 3.0))
        report = lagrangian_check(V, [0.5], 0.0, 3.0, 50.0)
        self.assertEqual(report.truncated, [0.5])
        check = report.checks[0]
        self.assertLess(check.s[-1], 3.0)
        self.assertLessEqual(abs(check.path[-1]), 1.0)
        self.assertTrue(check.passed)
