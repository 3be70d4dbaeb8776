import math
import unittest

import numpy as np

from bhblow import ParameterError
from bhblow.evolve import TimeSeries
from bhblow.grid import Field, SpectralGrid, derivative
from bhblow.selfsim import extract_frame
from bhblow.tests.samples import band_limited, burgers_run, scaled_profile
from bhblow.verify import (
    LEDGER,
    BootstrapConfig,
    BootstrapEntry,
    BootstrapReport,
    check_blowup_rate_bound,
    check_bootstrap,
    check_interpolation,
)


def blowup_series(Tstar=1.0):
    t = np.linspace(0.0, 0.99, 500) * Tstar
    zeros = np.zeros_like(t)
    columns = {"t": t, "m": 1.0 / (Tstar - t), "xi": zeros, "kappa": zeros}
    columns.update(l2=zeros + 1.0, linf=zeros + 1.0, dt=zeros)
    return TimeSeries.from_columns(columns)


class LedgerTestCase(unittest.TestCase):
    def test_identifiers(self):
        identifiers = [name for name, _, _ in LEDGER]
        self.assertEqual(len(identifiers), 22)
        self.assertEqual(len(set(identifiers)), 22)
        regions = {region for _, region, _ in LEDGER}
        self.assertEqual(
            regions, {"near", "at-0", "middle", "far", "global-norm", "modulation"}
        )
        self.assertEqual(identifiers[0], "near.dev")
        self.assertEqual(identifiers[-1], "modulation.xi")

    def test_labels(self):
        labels = {name: label for name, _, label in LEDGER}
        self.assertEqual(len(set(labels.values())), 22)
        self.assertEqual(labels["near.dev"], "eq:tildeUnear0")
        self.assertEqual(labels["near.dev_xxxx"], "eq:4xtildeUnear0")
        self.assertEqual(labels["origin.u_xxx"], "eq:3xUat0")
        self.assertEqual(labels["middle.dev_x"], "eq:1xtildeUmiddle")
        self.assertEqual(labels["middle.u"], "eq:Umiddle")
        self.assertEqual(labels["far.u_xxx"], "eq:3xUfar")
        self.assertEqual(labels["global.l2_u_xxxxx"], "eq:5xUL2")
        self.assertEqual(labels["global.slope_extremum"], "cor:1xULinfty")
        self.assertEqual(labels["modulation.tau"], "eq:taubound")
        self.assertEqual(labels["modulation.xi"], "eq:xibound")
        entry = BootstrapReport(BootstrapConfig(50.0, 0.1))["far.u_x"]
        self.assertEqual(entry.to_dict()["label"], "eq:1xUfar")

    def test_config(self):
        self.assertRaises(ParameterError, BootstrapConfig, 1.0, 0.1)
        self.assertRaises(ParameterError, BootstrapConfig, 5.0, 0.1)
        self.assertRaises(ParameterError, BootstrapConfig, 50.0, 0.2)
        self.assertRaises(ParameterError, BootstrapConfig, 50.0, 0.0)
        cfg = BootstrapConfig(50.0, 0.1)
        self.assertAlmostEqual(cfg.l, math.log(50.0) ** -2, places=15)
        self.assertEqual(cfg.L_of_s(0.0), 0.5)

    def test_entry(self):
        entry = BootstrapEntry("near.dev", "near")
        self.assertEqual(entry.status, "unchecked")
        entry.update(np.array([0.5, 0.2, 0.9]), np.array([-1.0, 0.1, 1.0]), 2.0)
        self.assertEqual(entry.status, "pass")
        self.assertEqual((entry.margin, entry.X, entry.s), (0.2, 0.1, 2.0))
        entry.update(np.array([]), np.array([]), 3.0)
        self.assertEqual(entry.checked, 1)
        entry.update(-0.1, 0.0, 3.0)
        self.assertEqual(entry.status, "fail")
        self.assertEqual(entry.to_dict()["frames_checked"], 2)


class BootstrapFrameTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cfg = BootstrapConfig(50.0, 0.1)
        state = scaled_profile(SpectralGrid(8192, 4.0), 0.1)
        cls.frame = extract_frame(state)
        cls.report = check_bootstrap([cls.frame], None, cls.cfg)

    def test_profile_frame_passes(self):
        for name, region, _ in LEDGER:
            if region in ("near", "at-0", "middle"):
                self.assertEqual(self.report[name].status, "pass", name)
        for name in ("global.l2_u_x", "global.l2_u_xxxxx", "global.amplitude"):
            self.assertEqual(self.report[name].status, "pass", name)
        self.assertEqual(self.report["global.slope_extremum"].status, "pass")

    def test_far_items_pass(self):
        for name in ("far.u_x", "far.u_xx", "far.u_xxx"):
            self.assertEqual(self.report[name].status, "pass", name)
        # |u_x| stays below 2 across the cutoff annulus.
        self.assertGreater(self.report["far.u_x"].margin, 0.05)

    def test_slope_extremum_normalized(self):
        frame = self.frame
        expected = min(
            1.0 - frame.slope_off_origin,
            (1e-6 - frame.constraint_residuals[1]) / 1e-6,
        )
        margin = self.report["global.slope_extremum"].margin
        self.assertAlmostEqual(margin, expected, places=12)
        self.assertGreater(margin, 0.0)
        self.assertLessEqual(margin, 1.0)

    def test_modulation_unchecked(self):
        unchecked = self.report.unchecked
        self.assertEqual(set(unchecked), {"modulation.tau", "modulation.xi"})
        self.assertEqual(unchecked["modulation.tau"], "no frame or track entry available")
        self.assertEqual(sum(self.report.counts().values()), 22)

    def test_serialization(self):
        data = self.report.to_dict()
        self.assertEqual(data["M"], 50.0)
        self.assertEqual(list(data["inequalities"]), self.report.identifiers)
        self.assertEqual(len(self.report.rows()), 22)
        self.assertEqual(len(self.report.rows()[0]), len(self.report.COLUMNS))

    def test_high_orders_skipped_on_coarse_grid(self):
        state = scaled_profile(SpectralGrid(2048, 4.0), 0.1)
        report = check_bootstrap([extract_frame(state)], None, self.cfg)
        for name in ("near.dev_xxxx", "global.l2_u_xxxxx"):
            self.assertEqual(report[name].status, "unchecked")
            self.assertIn("grid spacings", report[name].reason)


class BootstrapTrackTestCase(unittest.TestCase):
    def setUp(self):
        self.cfg = BootstrapConfig(50.0, 0.1)
        self.entry = {"s": 3.0, "dtau_dt": 0.01, "tau": 0.001, "dxi_dt": 1.0, "xi": 0.1}

    def test_pass(self):
        report = check_bootstrap([], [self.entry], self.cfg, Tstar=0.001)
        self.assertEqual(report["modulation.tau"].status, "pass")
        self.assertEqual(report["modulation.xi"].status, "pass")
        self.assertEqual(report["near.dev"].status, "unchecked")

    def test_fail(self):
        report = check_bootstrap([], [dict(self.entry, tau=0.1)], self.cfg)
        self.assertEqual(report["modulation.tau"].status, "fail")
        report = check_bootstrap([], [self.entry], self.cfg, Tstar=0.5)
        self.assertEqual(report["modulation.tau"].status, "fail")
        report = check_bootstrap([], [dict(self.entry, xi=20.0)], self.cfg)
        self.assertEqual(report["modulation.xi"].status, "fail")
        self.assertEqual(report.counts()["fail"], 1)


class InterpolationInequalityTestCase(unittest.TestCase):
    def setUp(self):
        self.grid = SpectralGrid(64, math.pi)

    def test_single_mode_is_sharp(self):
        report = check_interpolation(Field.from_function(self.grid, lambda x: np.sin(3.0 * x)))
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.worst, 0.0, delta=1e-12)
        self.assertEqual(set(report.to_dict()), {"order_2", "order_3", "order_4"})

    def test_random_field(self):
        f = band_limited(self.grid, 20, seed=11)
        report = check_interpolation([derivative(f, j) for j in range(1, 6)])
        self.assertTrue(report.passed)
        self.assertGreater(report.worst, 0.0)

    def test_wrong_length(self):
        f = band_limited(self.grid, 20, seed=11)
        derivs = [derivative(f, j) for j in range(1, 5)]
        self.assertRaises(ParameterError, check_interpolation, derivs)


class RateBoundTestCase(unittest.TestCase):
    def test_exact_rate(self):
        report = check_blowup_rate_bound(blowup_series(), 1.0)
        self.assertTrue(report.passed)
        np.testing.assert_allclose(report.product, 1.0, rtol=1e-12)
        self.assertIsNone(report.h5_slope)
        self.assertIsNone(report.h5_trend_ok)

    def test_wrong_Tstar(self):
        self.assertFalse(check_blowup_rate_bound(blowup_series(), 1.5).passed)
        self.assertRaises(ParameterError, check_blowup_rate_bound, blowup_series(), -1.0)

    def test_h5_growth(self):
        result = burgers_run()
        report = check_blowup_rate_bound(result.series, 0.0, result.snapshots)
        self.assertTrue(report.passed)
        self.assertLess(report.h5_slope, -0.8)
        self.assertTrue(report.h5_trend_ok)
        self.assertAlmostEqual(report.to_dict()["product_min"], 1.0, delta=1e-3)
