import os
import tempfile
import unittest

import numpy as np

from bhblow import ParameterError
from bhblow.util.snapshot import (
    HEADER,
    pack_snapshot,
    read_snapshot,
    unpack_snapshot,
    write_snapshot,
)


class UtilSnapshotTestCase(unittest.TestCase):
    def test_pack_unpack(self):
        samples = np.array([0.0, -1.5, 2.25, 1e-300, -0.0])
        blob = pack_snapshot(samples, 3.5, -0.125)
        self.assertEqual(len(blob), HEADER.size + 8 * samples.size)
        self.assertEqual(blob[:4], b"BHF1")
        values, half_width, t = unpack_snapshot(blob)
        np.testing.assert_array_equal(values, samples)
        self.assertEqual(half_width, 3.5)
        self.assertEqual(t, -0.125)

    def test_unpack_errors(self):
        blob = pack_snapshot([1.0, 2.0], 1.0, 0.0)
        self.assertRaises(ParameterError, unpack_snapshot, blob[:10])
        self.assertRaises(ParameterError, unpack_snapshot, blob[:-1])
        self.assertRaises(ParameterError, unpack_snapshot, b"XXXX" + blob[4:])

    def test_file_roundtrip(self):
        samples = np.linspace(-1.0, 1.0, 16)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "u.bhf")
            write_snapshot(path, samples, np.pi, 0.5)
            values, half_width, t = read_snapshot(path)
        np.testing.assert_array_equal(values, samples)
        self.assertEqual(half_width, np.pi)
        self.assertEqual(t, 0.5)
