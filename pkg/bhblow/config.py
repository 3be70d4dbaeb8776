"""
Run configuration: one JSON document per experiment.
"""
import copy
import json
import math
import os

from bhblow import ConfigError, ParameterError, ResolutionError
from bhblow.evolve import MODES, StepControl
from bhblow.grid import SpectralGrid
from bhblow.initial import POINTS_PER_SCALE, DataSpec

__all__ = ["PRESETS", "RunConfig", "load_config"]

GRID_FIELDS = {"n": 8192, "half_width": 4.0}
DATA_FIELDS = {
    "family": "profile",
    "epsilon": 0.1,
    "M": 50.0,
    "cutoff_inner": 0.5,
    "cutoff_outer": 1.0,
    "kappa0": 0.0,
    "nu": 6.0,
    "perturbation": 0.0,
    "seed": 0,
}
STEP_FIELDS = {
    "cfl": 0.3,
    "slope_factor": 0.2,
    "m_stop": None,
    "resolution_guard": 8,
    "scale_guard": 4.0,
    "dt_max": 1e-2,
    "max_steps": 1000000,
    "t_end": None,
}
VERIFY_FIELDS = {
    "M": None,
    "lagrangian_seeds": [-2.0, -0.5, 0.05, 0.5, 2.0],
    "lagrangian_span": 1.0,
}
SECTIONS = {
    "grid": GRID_FIELDS,
    "data": DATA_FIELDS,
    "step": STEP_FIELDS,
    "verify": VERIFY_FIELDS,
}
TOP_FIELDS = {
    "name": None,
    "mode": "full",
    "snapshot_ratio": 1.25,
    "window": 10.0,
    "output": None,
}

PRESETS = {
    "burgers-oracle": {
        "name": "burgers-oracle",
        "mode": "burgers_only",
        "grid": {"n": 131072, "half_width": 8.0},
        "data": {"epsilon": 0.01},
    },
    "linear-oracle": {
        "name": "linear-oracle",
        "mode": "linear_only",
        "grid": {"n": 4096, "half_width": math.pi},
        "data": {"family": "two-mode", "epsilon": 0.5},
        "step": {"t_end": 2.0 * math.pi, "dt_max": 1e-3},
    },
    "full": {
        "name": "full",
        "grid": {"n": 524288, "half_width": 2.0},
        "data": {"epsilon": 0.01, "cutoff_inner": 0.25, "cutoff_outer": 0.5},
    },
    "full-coarse": {
        "name": "full-coarse",
        "grid": {"n": 32768, "half_width": 4.0},
        "data": {"epsilon": 0.1},
    },
    "small-amplitude": {
        "name": "small-amplitude",
        "grid": {"n": 2048, "half_width": math.pi},
        "data": {"family": "two-mode", "epsilon": 0.3},
    },
}


def _number(value, path, integer=False, optional=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", path)
    if integer:
        if int(value) != value:
            raise ConfigError("expected an integer", path)
        return int(value)
    return float(value)


def _section(raw, name, fields):
    values = raw.get(name, {})
    if not isinstance(values, dict):
        raise ConfigError("expected an object", name)
    unknown = set(values) - set(fields)
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}'", name)
    result = copy.deepcopy(fields)
    result.update(values)
    return result


def _blame(section, values, exc):
    """
    Return the dotted path of the field whose value a ParameterError names,
    or the section itself if no field matches.
    """
    for key, value in values.items():
        if value is not None and not isinstance(value, (list, str)):
            if exc.value == value:
                return f"{section}.{key}"
    return section


class RunConfig:
    """
    A validated experiment configuration. Build it with from_dict(), which
    raises ConfigError naming the offending field.
    """

    def __init__(self, name, grid, data, step, verify, mode, snapshot_ratio, window, output):
        self.name = name
        self.grid = grid
        self.data = data
        self.step = step
        self.verify = verify
        self.mode = mode
        self.snapshot_ratio = snapshot_ratio
        self.window = window
        self.output = output

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - set(SECTIONS) - set(TOP_FIELDS)
        if unknown:
            raise ConfigError("unknown field", sorted(unknown)[0])
        top = dict(TOP_FIELDS)
        top.update({k: v for k, v in raw.items() if k in TOP_FIELDS})
        sections = {name: _section(raw, name, fields) for name, fields in SECTIONS.items()}

        grid = sections["grid"]
        grid["n"] = _number(grid["n"], "grid.n", integer=True)
        grid["half_width"] = _number(grid["half_width"], "grid.half_width")

        data = sections["data"]
        if data["family"] not in ("profile", "two-mode"):
            raise ConfigError(f"unknown family {data['family']!r}", "data.family")
        for key in DATA_FIELDS:
            if key != "family":
                data[key] = _number(data[key], f"data.{key}", integer=key == "seed")

        step = sections["step"]
        for key in STEP_FIELDS:
            step[key] = _number(
                step[key],
                f"step.{key}",
                integer=key in ("resolution_guard", "max_steps"),
                optional=key in ("m_stop", "t_end"),
            )

        verify = sections["verify"]
        verify["M"] = _number(verify["M"], "verify.M", optional=True)
        verify["lagrangian_span"] = _number(verify["lagrangian_span"], "verify.lagrangian_span")
        seeds = verify["lagrangian_seeds"]
        if not isinstance(seeds, list):
            raise ConfigError("expected a list of numbers", "verify.lagrangian_seeds")
        verify["lagrangian_seeds"] = [
            _number(seed, f"verify.lagrangian_seeds[{idx}]") for idx, seed in enumerate(seeds)
        ]

        if top["mode"] not in MODES:
            raise ConfigError(f"unknown mode {top['mode']!r}", "mode")
        name = top["name"] or f"{data['family']}-{top['mode']}"
        if not isinstance(name, str):
            raise ConfigError("expected a string", "name")
        output = top["output"]
        if output is not None and not isinstance(output, str):
            raise ConfigError("expected a path", "output")
        ratio = _number(top["snapshot_ratio"], "snapshot_ratio")
        if not ratio > 1.0:
            raise ConfigError("must exceed one", "snapshot_ratio")
        window = _number(top["window"], "window")
        if not window > 0:
            raise ConfigError("must be positive", "window")

        config = cls(name, grid, data, step, verify, top["mode"], ratio, window, output)
        config.validate()
        return config

    def validate(self):
        """
        Build the domain objects once so that their own checks run on the
        configured values.
        """
        try:
            grid = self.spectral_grid()
        except ParameterError as exc:
            raise ConfigError(str(exc), _blame("grid", self.grid, exc)) from exc
        try:
            spec = self.data_spec()
            spec.validate(grid if spec.family == "profile" else None)
        except ParameterError as exc:
            raise ConfigError(str(exc), _blame("data", self.data, exc)) from exc
        try:
            self.step_control()
        except ParameterError as exc:
            raise ConfigError(str(exc), _blame("step", self.step, exc)) from exc
        if spec.family == "profile" and grid.dx > spec.length_scale / POINTS_PER_SCALE:
            raise ConfigError(
                str(
                    ResolutionError(
                        f"dx={grid.dx:.3g} does not resolve eps^(3/2) with"
                        f" {POINTS_PER_SCALE} points",
                        spec.length_scale / POINTS_PER_SCALE,
                    )
                ),
                "grid.n",
            )
        if spec.family == "two-mode" and not math.isclose(
            grid.half_width, math.pi, rel_tol=1e-12
        ):
            raise ConfigError("the two-mode family needs half_width = pi", "grid.half_width")
        if self.verify["M"] is not None and not self.verify["M"] > math.e**math.sqrt(5):
            raise ConfigError("M must give (log M)^-2 < 1/5", "verify.M")
        if not self.verify["lagrangian_span"] > 0:
            raise ConfigError("must be positive", "verify.lagrangian_span")

    def spectral_grid(self):
        return SpectralGrid(self.grid["n"], self.grid["half_width"])

    def data_spec(self):
        return DataSpec(**self.data)

    def step_control(self):
        values = {k: v for k, v in self.step.items() if v is not None}
        return StepControl(**values)

    @property
    def bootstrap_M(self):
        if self.verify["M"] is not None:
            return self.verify["M"]
        return self.data["M"]

    def output_dir(self, override=None):
        if override is not None:
            return override
        if self.output is not None:
            return self.output
        return os.path.join("runs", self.name)

    def replace(self, **changes):
        """
        Return a validated copy with dotted fields replaced, for example
        replace(**{"data.epsilon": 0.03}).
        """
        raw = self.to_dict()
        for path, value in changes.items():
            target = raw
            *parents, key = path.split(".")
            for parent in parents:
                target = target[parent]
            target[key] = value
        return RunConfig.from_dict(raw)

    def to_dict(self):
        return {
            "name": self.name,
            "grid": dict(self.grid),
            "data": dict(self.data),
            "step": dict(self.step),
            "verify": copy.deepcopy(self.verify),
            "mode": self.mode,
            "snapshot_ratio": self.snapshot_ratio,
            "window": self.window,
            "output": self.output,
        }

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"<RunConfig {self.name} mode={self.mode}>"


def load_config(source):
    """
    Load a configuration from a preset name, a JSON file path or a
    dictionary.
    """
    if isinstance(source, RunConfig):
        return source
    if isinstance(source, dict):
        return RunConfig.from_dict(source)
    if source in PRESETS:
        return RunConfig.from_dict(copy.deepcopy(PRESETS[source]))
    try:
        with open(source) as fp:
            raw = json.load(fp)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", source) from exc
    except ValueError as exc:
        raise ConfigError(f"invalid JSON: {exc}", source) from exc
    return RunConfig.from_dict(raw)
