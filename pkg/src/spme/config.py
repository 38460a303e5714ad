"""Line-oriented run configuration: `section.key = value` documents.

Every key is declared in a schema with its type, default and range
check; unknown keys are rejected and all validation errors are reported
together.  Parsing and serialization round-trip exactly.
"""

from dataclasses import dataclass

import numpy as np

from .basis import OperatorSpec
from .model import Nonlinearity
from .noise import NoiseSpec
from .solver import SimConfig


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _parse_bool(s):
    if s.lower() in ("true", "yes", "1"):
        return True
    if s.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _parse_str_list(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _Key:
    def __init__(self, parse, default, check=None, message=None):
        self.parse = parse
        self.default = default
        self.check = check
        self.message = message

    def validate(self, name, value, errors):
        if self.check is not None and not self.check(value):
            errors.append(f"{name}: {self.message or 'out of range'}")


SCHEMA = {
    "operator.n_modes": _Key(int, 64, lambda v: v >= 1, "must be positive"),
    "operator.grid_size": _Key(int, 512, lambda v: v >= 4, "must be at least 4"),
    "model.r": _Key(float, 3.0, lambda v: v > 1, "r must exceed 1"),
    "model.psi": _Key(
        str,
        "odd_power",
        lambda v: v in ("odd_power", "linear_plus_odd_power"),
        "unknown psi kind",
    ),
    "model.alpha": _Key(float, 0.0, np.isfinite, "must be finite"),
    "model.gamma": _Key(float, 1.0, np.isfinite, "must be finite"),
    "model.phi": _Key(
        str,
        "zero",
        lambda v: v in ("zero", "scaled_identity", "bounded_lipschitz"),
        "unknown phi kind",
    ),
    "model.beta": _Key(float, 0.0, np.isfinite, "must be finite"),
    "noise.profile": _Key(
        str,
        "zero",
        lambda v: v in ("zero", "diagonal_power", "explicit_diagonal"),
        "unknown noise profile",
    ),
    "noise.c": _Key(float, 0.0, lambda v: v >= 0, "must be nonnegative"),
    "noise.a": _Key(float, 0.0, lambda v: v >= 0, "must be nonnegative"),
    "noise.q": _Key(_parse_float_list, ()),
    "noise.seed": _Key(int, 0, lambda v: 0 <= v < 2**64, "must fit in 64 bits"),
    "sim.dt": _Key(float, 1e-4, lambda v: v > 0, "must be positive"),
    "sim.t_end": _Key(float, 1.0, lambda v: v > 0, "must be positive"),
    "sim.scheme": _Key(
        str,
        "tamed_em",
        lambda v: v in ("explicit_em", "tamed_em"),
        "unknown scheme",
    ),
    "sim.record_every": _Key(int, 100, lambda v: v >= 1, "must be positive"),
    "sim.initial": _Key(
        str, "e1", lambda v: v in ("zero", "e1", "band"), "unknown preset"
    ),
    "sim.initial_scale": _Key(float, 1.0, np.isfinite, "must be finite"),
    "sim.initial_y": _Key(
        str, "e1", lambda v: v in ("zero", "e1", "band"), "unknown preset"
    ),
    "sim.initial_y_scale": _Key(float, -1.0, np.isfinite, "must be finite"),
    "sim.gate_override": _Key(_parse_bool, False),
    "ensemble.n_traj": _Key(int, 100, lambda v: v >= 2, "need at least 2"),
    "ensemble.burn_in": _Key(float, 1.0, lambda v: v >= 0, "must be nonnegative"),
    "ensemble.sample_times": _Key(_parse_float_list, ()),
    "ensemble.fit_window": _Key(
        _parse_float_list,
        (),
        lambda v: len(v) in (0, 2) and (len(v) < 2 or 0 < v[0] < v[1]),
        "need two increasing positive times",
    ),
    "ensemble.initials": _Key(_parse_str_list, ("zero", "e1")),
    "ensemble.functionals": _Key(_parse_str_list, ("tanh_h_norm",)),
}


@dataclass(frozen=True)
class RunConfig:
    values: tuple  # sorted (key, value) pairs
    applied_defaults: tuple = ()

    def __getitem__(self, key):
        return dict(self.values)[key]

    def with_value(self, key, value):
        d = dict(self.values)
        if key not in SCHEMA:
            raise KeyError(key)
        d[key] = value
        return RunConfig(values=tuple(sorted(d.items())), applied_defaults=self.applied_defaults)


def parse_config(text):
    """Parse a config document; every offending line/key is reported."""
    raw = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'section.key = value'")
            continue
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            raw[key] = SCHEMA[key].parse(value)
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
    values = {}
    defaults = []
    for key, spec in SCHEMA.items():
        if key in raw:
            values[key] = raw[key]
        else:
            values[key] = spec.default
            defaults.append(key)
    for key, spec in SCHEMA.items():
        if key in raw:
            spec.validate(key, values[key], errors)
    if not errors and values["sim.dt"] > values["sim.t_end"]:
        errors.append("sim.dt: must not exceed sim.t_end")
    if errors:
        raise ConfigError(errors)
    return RunConfig(
        values=tuple(sorted(values.items())), applied_defaults=tuple(sorted(defaults))
    )


def serialize_config(config):
    """Deterministic text form; parse_config inverts it exactly."""
    lines = [f"{key} = {_fmt(value)}" for key, value in config.values]
    return "\n".join(lines) + "\n"


def parse_initial(label):
    """Parse an initial-data label like 'e1', 'zero' or '10*e1'."""
    if "*" in label:
        scale, _, preset = label.partition("*")
        return preset.strip(), float(scale)
    return label, 1.0


def build_operator(config):
    return OperatorSpec(
        n_modes=config["operator.n_modes"], grid_size=config["operator.grid_size"]
    )


def build_model(config):
    kind = config["model.psi"]
    return Nonlinearity(
        r=config["model.r"],
        psi_kind=kind,
        alpha=config["model.alpha"] if kind == "linear_plus_odd_power" else 0.0,
        gamma=config["model.gamma"],
        phi_kind=config["model.phi"],
        beta=config["model.beta"],
    )


def build_noise(config, seed_override=None):
    seed = config["noise.seed"] if seed_override is None else seed_override
    return NoiseSpec(
        profile=config["noise.profile"],
        c=config["noise.c"],
        a=config["noise.a"],
        q=np.asarray(config["noise.q"], dtype=float)
        if config["noise.profile"] == "explicit_diagonal"
        else None,
        master_seed=seed,
    )


def build_sim(config, seed_override=None):
    return SimConfig(
        operator=build_operator(config),
        model=build_model(config),
        noise=build_noise(config, seed_override),
        dt=config["sim.dt"],
        t_end=config["sim.t_end"],
        scheme=config["sim.scheme"],
        record_every=config["sim.record_every"],
        initial=config["sim.initial"],
        initial_scale=config["sim.initial_scale"],
        gate_override=config["sim.gate_override"],
    )


def default_sample_times(config):
    t_end = config["sim.t_end"]
    dt = config["sim.dt"]
    lo = max(10 * dt, 0.02 * t_end)
    return tuple(np.geomspace(lo, t_end, 16))
