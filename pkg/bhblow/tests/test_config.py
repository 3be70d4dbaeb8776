import json
import math
import os
import tempfile
import unittest

from bhblow import ConfigError
from bhblow.config import PRESETS, RunConfig, load_config


class PresetTestCase(unittest.TestCase):
    def test_all_presets_load(self):
        for name in PRESETS:
            config = load_config(name)
            self.assertEqual(config.name, name)
            self.assertEqual(RunConfig.from_dict(config.to_dict()), config)
            raw = json.loads(json.dumps(config.to_dict()))
            self.assertEqual(RunConfig.from_dict(raw), config)

    def test_linear_oracle(self):
        config = load_config("linear-oracle")
        self.assertEqual(config.mode, "linear_only")
        self.assertEqual(config.step_control().t_end, 2.0 * math.pi)
        self.assertEqual(config.data_spec().family, "two-mode")
        self.assertEqual(config.spectral_grid().half_width, math.pi)

    def test_defaults(self):
        config = load_config({})
        self.assertEqual(config.name, "profile-full")
        self.assertEqual(config.step_control().m_stop, math.inf)
        self.assertEqual(config.bootstrap_M, 50.0)
        self.assertIs(load_config(config), config)


class ValidationTestCase(unittest.TestCase):
    def assertBlames(self, raw, field):
        with self.assertRaises(ConfigError) as ctx:
            RunConfig.from_dict(raw)
        self.assertEqual(ctx.exception.field, field)
        self.assertTrue(str(ctx.exception).startswith(field))

    def test_dotted_paths(self):
        self.assertBlames({"data": {"epsilon": 0.3}}, "data.epsilon")
        self.assertBlames({"data": {"seed": 1.5}}, "data.seed")
        self.assertBlames({"data": {"family": "gaussian"}}, "data.family")
        self.assertBlames({"grid": {"n": 15}}, "grid.n")
        self.assertBlames({"grid": {"n": "big"}}, "grid.n")
        self.assertBlames({"step": {"cfl": -1.0}}, "step.cfl")
        self.assertBlames({"verify": {"M": 5.0}}, "verify.M")
        self.assertBlames({"verify": {"lagrangian_seeds": [0.5, "x"]}}, "verify.lagrangian_seeds[1]")
        self.assertBlames({"mode": "viscous"}, "mode")
        self.assertBlames({"snapshot_ratio": 1.0}, "snapshot_ratio")
        self.assertBlames({"window": 0.0}, "window")

    def test_unknown_fields(self):
        self.assertBlames({"colour": "red"}, "colour")
        self.assertBlames({"grid": {"size": 64}}, "grid")
        self.assertBlames({"grid": [64]}, "grid")

    def test_resolution(self):
        self.assertBlames({"grid": {"n": 1024}}, "grid.n")
        two_mode = {"data": {"family": "two-mode", "epsilon": 0.3}, "grid": {"n": 64}}
        self.assertBlames(two_mode, "grid.half_width")

    def test_not_an_object(self):
        self.assertRaises(ConfigError, RunConfig.from_dict, [1, 2])


class LoadConfigTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmpdir.cleanup)

    def write(self, name, text):
        path = os.path.join(self.tmpdir.name, name)
        with open(path, "w") as fp:
            fp.write(text)
        return path

    def test_from_file(self):
        path = self.write("run.json", json.dumps({"name": "filed", "mode": "burgers_only"}))
        config = load_config(path)
        self.assertEqual(config.name, "filed")
        self.assertEqual(config.mode, "burgers_only")

    def test_bad_json(self):
        path = self.write("bad.json", "{not json")
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertEqual(ctx.exception.field, path)

    def test_missing_file(self):
        path = os.path.join(self.tmpdir.name, "missing.json")
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertEqual(ctx.exception.field, path)


class RunConfigTestCase(unittest.TestCase):
    def test_replace(self):
        config = load_config("full-coarse")
        other = config.replace(**{"data.epsilon": 0.05, "name": "smaller"})
        self.assertEqual(other.data["epsilon"], 0.05)
        self.assertEqual(other.name, "smaller")
        self.assertEqual(config.data["epsilon"], 0.1)
        self.assertNotEqual(config, other)
        with self.assertRaises(ConfigError) as ctx:
            config.replace(**{"data.epsilon": 0.5})
        self.assertEqual(ctx.exception.field, "data.epsilon")

    def test_output_dir(self):
        config = load_config("full-coarse")
        self.assertEqual(config.output_dir(), os.path.join("runs", "full-coarse"))
        self.assertEqual(config.output_dir("elsewhere"), "elsewhere")
        self.assertEqual(load_config({"output": "out"}).output_dir(), "out")
