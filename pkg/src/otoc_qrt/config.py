"""Run configuration: ``key = value`` text files and named presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .emitter import EXCITED, IDENTITY, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, EmitterParams
from .interferometer import UNITARITY_TOL, InterferometerParams

DETECTOR_CHOICES = ("A", "B", "A-minus-B")
NOISE_CHOICES = ("on", "off", "both")

OPERATORS = {
    "sp": SIGMA_PLUS,
    "sm": SIGMA_MINUS,
    "sx": SIGMA_PLUS + SIGMA_MINUS,
    "sy": -1j * SIGMA_PLUS + 1j * SIGMA_MINUS,
    "sz": SIGMA_Z,
    "n": EXCITED,
    "id": IDENTITY,
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.start, self.stop, self.step)):
            raise ValueError("grid bounds must be finite")
        if self.step <= 0:
            raise ValueError(f"grid step must be > 0, got {self.step}")
        if self.start < 0 or self.stop < self.start:
            raise ValueError(f"grid must be ascending and non-negative: {self.start}..{self.stop}")

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        # rounding keeps tau and T grids bit-identical where they coincide
        return np.round(self.start + self.step * np.arange(n), 12)


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterParams = field(default_factory=EmitterParams)
    interferometer: InterferometerParams = field(default_factory=InterferometerParams)
    tau_grid: Grid = Grid(0.0, 4.0, 0.1)
    T_grid: Grid = Grid(0.0, 4.0, 0.1)
    detector: str = "A"
    noise: str = "both"
    output: str = "-"
    precision: int = 12
    schedule: tuple = ()
    oracle_dt: tuple = (0.08, 0.04, 0.02)

    def __post_init__(self):
        if self.detector not in DETECTOR_CHOICES:
            raise ValueError(f"detector must be one of {DETECTOR_CHOICES}")
        if self.noise not in NOISE_CHOICES:
            raise ValueError(f"noise must be one of {NOISE_CHOICES}")
        if not 6 <= self.precision <= 17:
            raise ValueError(f"precision must lie in [6, 17], got {self.precision}")
        if any(not dt > 0 for dt in self.oracle_dt):
            raise ValueError("oracle_dt values must be > 0")

    def events(self):
        return [(OPERATORS[name], t) for name, t in self.schedule]


_FIG_GRID = Grid(0.0, 4.0, 0.1)
_CURVE_GRID = Grid(0.0, 8.0, 0.02)
_OTOC = (("sp", 0.3), ("sp", 0.0), ("sm", 0.3), ("sm", 0.0))

PRESETS = {
    "fig3": RunConfig(EmitterParams(omega=2.0), InterferometerParams(T=1.0),
                      _CURVE_GRID, _FIG_GRID, schedule=_OTOC),
    "fig3-caption": RunConfig(EmitterParams(omega=3.0), InterferometerParams(T=1.0),
                              _CURVE_GRID, _FIG_GRID, schedule=_OTOC),
    "fig4": RunConfig(EmitterParams(omega=2.0), InterferometerParams(T=1.0),
                      _FIG_GRID, _FIG_GRID, schedule=_OTOC),
    "fig5": RunConfig(EmitterParams(nbar=1.0), InterferometerParams(T=1.0),
                      _CURVE_GRID, _FIG_GRID, schedule=_OTOC),
    "fig6": RunConfig(EmitterParams(nbar=1.0), InterferometerParams(T=1.0),
                      _FIG_GRID, _FIG_GRID, schedule=_OTOC),
    "oracle": RunConfig(EmitterParams(omega=1.0), InterferometerParams(),
                        schedule=(("sp", 0.24), ("sp", 0.0), ("sm", 0.24), ("sm", 0.0))),
}

_FLOAT_KEYS = {
    "omega", "delta", "gamma", "nbar", "t1", "r1", "t2", "r2", "T",
    "tau_min", "tau_max", "tau_step", "T_min", "T_max", "T_step",
}
_KEYS = _FLOAT_KEYS | {"detector", "noise", "output", "precision", "schedule", "oracle_dt"}


def _parse_float(value: str, key: str, line: int) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"malformed number for {key!r}: {value!r}", line) from None
    if not math.isfinite(out):
        raise ConfigError(f"{key!r} must be finite", line)
    return out


def _parse_schedule(value: str, line: int) -> tuple:
    events = []
    for item in value.split(","):
        item = item.strip()
        name, sep, t = item.partition("@")
        if not sep or name.strip() not in OPERATORS:
            raise ConfigError(
                f"schedule entries look like 'sp@0.5' with operators {sorted(OPERATORS)}; got {item!r}",
                line,
            )
        events.append((name.strip(), _parse_float(t.strip(), "schedule", line)))
    return tuple(events)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines on top of ``base`` (default: plain defaults).

    Unknown keys, malformed numbers and violated invariants raise
    ``ConfigError`` carrying the offending line number.
    """
    base = base or RunConfig()
    raw: dict[str, tuple[object, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in _FLOAT_KEYS:
            parsed = _parse_float(value, key, lineno)
        elif key == "precision":
            try:
                parsed = int(value)
            except ValueError:
                raise ConfigError(f"precision must be an integer, got {value!r}", lineno) from None
        elif key == "schedule":
            parsed = _parse_schedule(value, lineno)
        elif key == "oracle_dt":
            parsed = tuple(_parse_float(v.strip(), key, lineno) for v in value.split(","))
        else:
            parsed = value
        raw[key] = (parsed, lineno)
    return _assemble(raw, base)


def _assemble(raw: dict, base: RunConfig) -> RunConfig:
    def get(key, default):
        return raw[key][0] if key in raw else default

    def line_of(*keys):
        lines = [raw[k][1] for k in keys if k in raw]
        return max(lines) if lines else None

    e = base.emitter
    try:
        emitter = EmitterParams(get("omega", e.omega), get("delta", e.delta),
                                get("gamma", e.gamma), get("nbar", e.nbar))
    except ValueError as err:
        raise ConfigError(str(err), line_of("omega", "delta", "gamma", "nbar")) from None

    ip = base.interferometer
    try:
        t1, r1 = _splitter(get("t1", None), get("r1", None), ip.t1, ip.r1, 1)
        t2, r2 = _splitter(get("t2", None), get("r2", None), ip.t2, ip.r2, 2)
        interferometer = InterferometerParams(t1, r1, t2, r2, get("T", ip.T))
    except ValueError as err:
        raise ConfigError(str(err), line_of("t1", "r1", "t2", "r2", "T")) from None

    grids = {}
    for name, prefix, g in (("tau_grid", "tau", base.tau_grid), ("T_grid", "T", base.T_grid)):
        keys = (f"{prefix}_min", f"{prefix}_max", f"{prefix}_step")
        try:
            grids[name] = Grid(get(keys[0], g.start), get(keys[1], g.stop), get(keys[2], g.step))
        except ValueError as err:
            raise ConfigError(str(err), line_of(*keys)) from None

    try:
        return replace(
            base,
            emitter=emitter,
            interferometer=interferometer,
            detector=get("detector", base.detector),
            noise=get("noise", base.noise),
            output=get("output", base.output),
            precision=get("precision", base.precision),
            schedule=get("schedule", base.schedule),
            oracle_dt=get("oracle_dt", base.oracle_dt),
            **grids,
        )
    except ValueError as err:
        raise ConfigError(str(err), line_of("detector", "noise", "precision", "oracle_dt")) from None


def _splitter(t, r, t_default, r_default, k):
    if t is None and r is None:
        return t_default, r_default
    for name, v in ((f"t{k}", t), (f"r{k}", r)):
        if v is not None and not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    if r is None:
        return t, math.sqrt(1 - t * t)
    if t is None:
        return math.sqrt(1 - r * r), r
    if abs(t * t + r * r - 1) > UNITARITY_TOL:
        raise ValueError(f"t{k}^2 + r{k}^2 must equal 1, got {t * t + r * r}")
    return t, r
