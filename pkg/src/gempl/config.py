"""
Run configuration: a small TOML document plus ``key=value`` overrides.

    command = "threshold"          # optional when given on the command line
    output = "out"                 # optional

    [params]
    m = 2e-6
    Q_p = 1e10

    [sweep]                        # only for the ``sweep`` command
    command = "simulate"
    parameter = "B_p"
    start = 1e-6
    stop = 2e-6
    count = 11
    scale = "linear"               # or "log"

Every command has a fixed parameter table with defaults; unknown keys are
rejected. Length parameters may be given in inches with an ``_in`` suffix
(``length_in = 1.284``), converted at exactly 0.0254 m/in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import tomli
import tomli_w

from gempl.errors import ConfigError

__all__ = ["COMMANDS", "SCHEMAS", "LENGTH_KEYS", "SweepSpec", "RunConfig", "parse_config", "parse_override", "dump_config"]

INCH = 0.0254
TWO_PI = 2.0 * math.pi

_SEPARATED = {
    "m": 2e-6,
    "f_p": 20e9,
    "f_s": 10e9,
    "f_i": 10e9,
    "Q_p": 1e10,
    "Q_s": 1e10,
    "Q_i": 1e10,
    "L_eff": 0.03,
    "A_eff": 9e-4,
}

# None marks an optional parameter without a default
SCHEMAS: dict[str, dict] = {
    "modes": {"length": 1.284 * INCH, "diameter": 1.02 * INCH, "mode": "TE112"},
    "spectrum": {
        "f0": 11.5e9,
        "coupling": 400e6,
        "Q_S": 500.0,
        "Q_p": 500.0,
        "amp_S": 1.0,
        "amp_p": 1.0,
        "points": 4001,
        "f_min": None,
        "f_max": None,
    },
    "ab-phase": {
        "radius": 0.1,
        "shell_thickness": 1e-4,
        "mass_per_length": 1.0,
        "angular_velocity": TWO_PI,
        "loop_radius": 0.2,
        "sample_count": 4096,
        "species": "electron",
        "magnetic_flux": 0.0,
        "ring_radius": 0.01,
        "fluxoid_n": 0,
    },
    "threshold": {
        **_SEPARATED,
        "U_p": None,
        "f_mech": 4e8,
        "f_stokes": 1.13e10,
        "Q_stokes": 1e10,
        "Q_mech": 1e5,
    },
    "simulate": {
        **_SEPARATED,
        "pump_fraction": 1.1,
        "B_p": None,
        "phi_p": 0.0,
        "phi_i": 0.0,
        "phi_s": math.pi / 2,
        "bi0": 1e-12,
        "eps0": None,
        "t_end": 10.0,
        "dt": None,
        "sample_every": 10,
    },
}

COMMANDS = ("modes", "spectrum", "ab-phase", "threshold", "simulate", "sweep")

LENGTH_KEYS = {"length", "diameter", "radius", "shell_thickness", "loop_radius", "ring_radius", "L_eff"}

_SWEEP_KEYS = {"command", "parameter", "start", "stop", "count", "scale", "workers", "track"}


@dataclass(frozen=True)
class SweepSpec:
    command: str
    parameter: str
    start: float
    stop: float
    count: int
    scale: str = "linear"
    workers: int = 1
    track: str = ""

    def __post_init__(self):
        if self.command not in SCHEMAS:
            raise ConfigError(f"sweep.command: unknown command {self.command!r}")
        if self.parameter not in SCHEMAS[self.command]:
            raise ConfigError(f"sweep.parameter: {self.parameter!r} is not a parameter of {self.command!r}")
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(f"sweep.count must be an integer >= 2, got {self.count!r}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"sweep.scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ConfigError("sweep.start/sweep.stop must be positive for a log sweep")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError(f"sweep.workers must be a positive integer, got {self.workers!r}")

    def values(self) -> list[float]:
        n = int(self.count)
        if self.scale == "linear":
            return [self.start + (self.stop - self.start) * k / (n - 1) for k in range(n)]
        a, b = math.log(self.start), math.log(self.stop)
        return [math.exp(a + (b - a) * k / (n - 1)) for k in range(n)]


@dataclass(frozen=True)
class RunConfig:
    """Validated run: command, full parameter map (defaults filled), output, sweep."""

    command: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    sweep: SweepSpec | None = None

    def target_command(self) -> str:
        return self.sweep.command if self.sweep is not None else self.command


def _coerce(key: str, value, default):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: booleans are not accepted")
    if default is None or isinstance(default, float):
        if isinstance(value, (int, float)):
            v = float(value)
            if not math.isfinite(v):
                raise ConfigError(f"{key}: value must be finite, got {value!r}")
            return v
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, int) or (isinstance(value, float) and value.is_integer()):
            return int(value)
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    raise ConfigError(f"{key}: unsupported value {value!r}")


def _validate_params(command: str, raw: dict) -> dict:
    schema = SCHEMAS[command]
    given = {}
    for key, value in raw.items():
        if key.endswith("_in") and key[:-3] in schema and key[:-3] in LENGTH_KEYS:
            base = key[:-3]
            if base in raw:
                raise ConfigError(f"{key}: both {base!r} and {key!r} given")
            given[base] = _coerce(key, value, 0.0) * INCH
        elif key in schema:
            given[key] = _coerce(key, value, schema[key])
        else:
            raise ConfigError(f"unknown parameter {key!r} for command {command!r}")
    out = {}
    for key, default in schema.items():
        v = given.get(key, default)
        if v is not None:
            out[key] = v
    return out


def parse_override(item: str) -> tuple[str, object]:
    """Parse ``key=value``; the value uses TOML syntax, bare words become strings."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = (s.strip() for s in item.split("=", 1))
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        value = text
    return key, value


def _apply_overrides(doc: dict, overrides) -> dict:
    doc = {k: (dict(v) if isinstance(v, dict) else v) for k, v in doc.items()}
    for item in overrides or ():
        key, value = parse_override(item) if isinstance(item, str) else item
        if key.startswith("sweep."):
            doc.setdefault("sweep", {})[key[6:]] = value
        elif key in ("command", "output"):
            doc[key] = value
        else:
            if key.startswith("params."):
                key = key[7:]
            doc.setdefault("params", {})[key] = value
    return doc


def parse_config(text: str = "", command: str | None = None, overrides=None) -> RunConfig:
    """Parse and validate a configuration document.

    ``command`` (from the command line) takes precedence over the document's
    ``command`` key, and ``overrides`` (``"key=value"`` strings) over both the
    document's parameters and its sweep table.
    """
    try:
        doc = tomli.loads(text or "")
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"configuration parse error: {exc}") from None
    doc = _apply_overrides(doc, overrides)
    unknown = set(doc) - {"command", "output", "params", "sweep"}
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    cmd = command or doc.get("command")
    if not cmd:
        raise ConfigError(f"no command given; expected one of: {', '.join(COMMANDS)}")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; expected one of: {', '.join(COMMANDS)}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be a table")
    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a string path")

    sweep = None
    if cmd == "sweep":
        raw = doc.get("sweep")
        if not isinstance(raw, dict):
            raise ConfigError("the sweep command needs a [sweep] table")
        bad = set(raw) - _SWEEP_KEYS
        if bad:
            raise ConfigError(f"unknown sweep key(s): {', '.join(sorted(bad))}")
        missing = {"command", "parameter", "start", "stop", "count"} - set(raw)
        if missing:
            raise ConfigError(f"sweep is missing key(s): {', '.join(sorted(missing))}")
        sweep = SweepSpec(
            command=str(raw["command"]),
            parameter=str(raw["parameter"]),
            start=_coerce("sweep.start", raw["start"], 0.0),
            stop=_coerce("sweep.stop", raw["stop"], 0.0),
            count=_coerce("sweep.count", raw["count"], 0),
            scale=str(raw.get("scale", "linear")),
            workers=_coerce("sweep.workers", raw.get("workers", 1), 0),
            track=str(raw.get("track", "")),
        )
        if not isinstance(SCHEMAS[sweep.command][sweep.parameter], (float, type(None))):
            raise ConfigError(f"sweep.parameter {sweep.parameter!r} is not a scalar number")
        params = _validate_params(sweep.command, params)
    else:
        if "sweep" in doc:
            raise ConfigError("a [sweep] table is only valid with the sweep command")
        params = _validate_params(cmd, params)
    return RunConfig(cmd, params, output, sweep)


def dump_config(config: RunConfig) -> str:
    """Serialise a validated config back to TOML (inverse of :func:`parse_config`)."""
    doc: dict = {"command": config.command}
    if config.output is not None:
        doc["output"] = config.output
    doc["params"] = dict(config.params)
    if config.sweep is not None:
        s = config.sweep
        doc["sweep"] = {
            "command": s.command,
            "parameter": s.parameter,
            "start": s.start,
            "stop": s.stop,
            "count": int(s.count),
            "scale": s.scale,
            "workers": int(s.workers),
            "track": s.track,
        }
    return tomli_w.dumps(doc)
