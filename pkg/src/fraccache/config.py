"""JSON experiment configuration.

One top-level object with optional blocks ``library``, ``channel``,
``distance``, ``sweep``, ``sim`` and ``output``.  Missing keys take the
default operating point; unknown keys are rejected.  All dB values are
converted to linear exactly once, when the channel is built.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel_model import ChannelParams
from .content_model import ContentLibrary, kilobytes_to_mbit, zipf_popularity
from .distance import TabulatedPdf, from_mean_distance

__all__ = [
    "ConfigError",
    "LibraryConfig",
    "ChannelConfig",
    "DistanceConfig",
    "SweepConfig",
    "SimConfig",
    "OutputConfig",
    "ExperimentConfig",
    "DEFAULT_SNR_GRID_DB",
    "DEFAULT_DISTANCE_GRID_M",
    "parse_config",
    "config_from_dict",
]

DEFAULT_SNR_GRID_DB = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0)
DEFAULT_DISTANCE_GRID_M = (20.0, 30.0, 40.0, 50.0, 60.0, 80.0)
DISTANCE_KINDS = ("fixed", "uniform", "poisson", "tabulated")
SWEEP_AXES = ("snr_db", "mean_distance_m")
OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration.  ``field`` is the dotted path of the bad entry."""

    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        where = field if line is None else f"{field} (line {line})"
        super().__init__(f"{where}: {message}")


def _number(value, name, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if isinstance(value, str):
        try:
            value = float(value.strip())
        except ValueError:
            raise ConfigError(name, f"expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    if positive and not value > 0:
        raise ConfigError(name, f"must be positive, got {value:g}")
    if nonneg and not value >= 0:
        raise ConfigError(name, f"must be non-negative, got {value:g}")
    if integer:
        if value != int(value):
            raise ConfigError(name, f"must be an integer, got {value:g}")
        return int(value)
    return value


def _number_list(values, name, **kw):
    if not isinstance(values, list) or not values:
        raise ConfigError(name, "expected a non-empty list of numbers")
    return tuple(_number(v, f"{name}[{k}]", **kw) for k, v in enumerate(values))


@dataclass(frozen=True)
class LibraryConfig:
    F: int = 20
    zipf_exponent: float = 1.0
    q_min: float = 0.2
    q_max: float = 1.0
    A: float = 1.0
    T: float = 1.0
    M: float = kilobytes_to_mbit(650.0)

    def build(self):
        return ContentLibrary(
            zipf_popularity(self.F, self.zipf_exponent),
            q_min=self.q_min,
            q_max=self.q_max,
            A=self.A,
            T=self.T,
            M=self.M,
        )


@dataclass(frozen=True)
class ChannelConfig:
    psi_db: float = 25.0
    upsilon_db: float = 5.0
    bandwidth_mhz: float = 5.0
    beta: float = 3.0
    r0_m: float = 1.0

    def build(self, psi_db=None):
        return ChannelParams.from_db(
            psi_db=self.psi_db if psi_db is None else psi_db,
            upsilon_db=self.upsilon_db,
            bandwidth_mhz=self.bandwidth_mhz,
            beta=self.beta,
            r0_m=self.r0_m,
        )


@dataclass(frozen=True)
class DistanceConfig:
    kind: str = "fixed"
    mean_distance_m: float = 40.0
    intensity: float = 1e-3
    grid: tuple = ()
    density: tuple = ()

    def build(self, kind=None, mean_distance_m=None):
        kind = self.kind if kind is None else kind
        mean = self.mean_distance_m if mean_distance_m is None else mean_distance_m
        if kind == "tabulated":
            return TabulatedPdf(self.grid, self.density)
        return from_mean_distance(kind, mean, self.intensity)


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "snr_db"
    values: tuple = DEFAULT_SNR_GRID_DB


@dataclass(frozen=True)
class SimConfig:
    n_trials: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class ExperimentConfig:
    library: LibraryConfig = field(default_factory=LibraryConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    distance: DistanceConfig = field(default_factory=DistanceConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def replace(self, block, **changes):
        return dataclasses.replace(self, **{block: dataclasses.replace(getattr(self, block), **changes)})

    def point(self, sweep_value):
        """Library, channel and mean distance at one sweep value."""
        psi_db = self.channel.psi_db
        mean = self.distance.mean_distance_m
        if self.sweep.axis == "snr_db":
            psi_db = sweep_value
        else:
            mean = sweep_value
        return self.library.build(), self.channel.build(psi_db), mean

    def to_dict(self):
        return dataclasses.asdict(self)


def _check_keys(block, allowed, name):
    if not isinstance(block, dict):
        raise ConfigError(name, "expected a JSON object")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown key")


def _library(block):
    _check_keys(block, ("F", "zipf_exponent", "q_min", "q_max", "A", "T", "M", "M_kb"), "library")
    d = LibraryConfig()
    if "M" in block and "M_kb" in block:
        raise ConfigError("library.M_kb", "give the cache size as M (Mbit) or M_kb, not both")
    M = d.M
    if "M" in block:
        M = _number(block["M"], "library.M", nonneg=True)
    elif "M_kb" in block:
        M = kilobytes_to_mbit(_number(block["M_kb"], "library.M_kb", nonneg=True))
    cfg = LibraryConfig(
        F=_number(block.get("F", d.F), "library.F", positive=True, integer=True),
        zipf_exponent=_number(block.get("zipf_exponent", d.zipf_exponent), "library.zipf_exponent", nonneg=True),
        q_min=_number(block.get("q_min", d.q_min), "library.q_min", positive=True),
        q_max=_number(block.get("q_max", d.q_max), "library.q_max", positive=True),
        A=_number(block.get("A", d.A), "library.A", positive=True),
        T=_number(block.get("T", d.T), "library.T", positive=True),
        M=M,
    )
    if cfg.q_min > cfg.q_max:
        raise ConfigError("library.q_min", f"must not exceed q_max={cfg.q_max:g}")
    return cfg


def _channel(block):
    _check_keys(block, ("psi_db", "upsilon_db", "bandwidth_mhz", "beta", "r0_m"), "channel")
    d = ChannelConfig()
    return ChannelConfig(
        psi_db=_number(block.get("psi_db", d.psi_db), "channel.psi_db"),
        upsilon_db=_number(block.get("upsilon_db", d.upsilon_db), "channel.upsilon_db"),
        bandwidth_mhz=_number(block.get("bandwidth_mhz", d.bandwidth_mhz), "channel.bandwidth_mhz", positive=True),
        beta=_number(block.get("beta", d.beta), "channel.beta", positive=True),
        r0_m=_number(block.get("r0_m", d.r0_m), "channel.r0_m", positive=True),
    )


def _distance(block):
    _check_keys(block, ("kind", "mean_distance_m", "intensity", "grid", "density"), "distance")
    d = DistanceConfig()
    kind = block.get("kind", d.kind)
    if kind not in DISTANCE_KINDS:
        raise ConfigError("distance.kind", f"must be one of {', '.join(DISTANCE_KINDS)}, got {kind!r}")
    grid = density = ()
    if kind == "tabulated":
        if "grid" not in block or "density" not in block:
            raise ConfigError("distance.grid", "tabulated distance needs grid and density lists")
        grid = _number_list(block["grid"], "distance.grid", nonneg=True)
        density = _number_list(block["density"], "distance.density", nonneg=True)
        try:
            TabulatedPdf(grid, density)
        except ValueError as exc:
            raise ConfigError("distance.density", str(exc)) from None
    return DistanceConfig(
        kind=kind,
        mean_distance_m=_number(block.get("mean_distance_m", d.mean_distance_m), "distance.mean_distance_m", positive=True),
        intensity=_number(block.get("intensity", d.intensity), "distance.intensity", positive=True),
        grid=grid,
        density=density,
    )


def _sweep(block):
    _check_keys(block, ("axis", "values"), "sweep")
    axis = block.get("axis", "snr_db")
    if axis not in SWEEP_AXES:
        raise ConfigError("sweep.axis", f"must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    default = DEFAULT_SNR_GRID_DB if axis == "snr_db" else DEFAULT_DISTANCE_GRID_M
    if "values" in block:
        values = _number_list(block["values"], "sweep.values", positive=(axis == "mean_distance_m"))
    else:
        values = default
    return SweepConfig(axis=axis, values=values)


def _sim(block):
    _check_keys(block, ("n_trials", "seed"), "sim")
    d = SimConfig()
    seed = _number(block.get("seed", d.seed), "sim.seed", nonneg=True, integer=True)
    if seed >= 2**64:
        raise ConfigError("sim.seed", "must fit in 64 bits")
    return SimConfig(
        n_trials=_number(block.get("n_trials", d.n_trials), "sim.n_trials", positive=True, integer=True),
        seed=seed,
    )


def _output(block):
    _check_keys(block, ("directory", "formats"), "output")
    d = OutputConfig()
    directory = block.get("directory", d.directory)
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory", "expected a non-empty string")
    formats = block.get("formats", list(d.formats))
    if isinstance(formats, str):
        formats = [formats]
    if not isinstance(formats, list) or not formats:
        raise ConfigError("output.formats", "expected a non-empty list")
    for k, fmt in enumerate(formats):
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"output.formats[{k}]", f"must be csv or json, got {fmt!r}")
    return OutputConfig(directory=directory, formats=tuple(formats))


def config_from_dict(data):
    """Validate a decoded JSON object and apply defaults."""
    _check_keys(data, ("library", "channel", "distance", "sweep", "sim", "output"), "config")
    cfg = ExperimentConfig(
        library=_library(data.get("library", {})),
        channel=_channel(data.get("channel", {})),
        distance=_distance(data.get("distance", {})),
        sweep=_sweep(data.get("sweep", {})),
        sim=_sim(data.get("sim", {})),
        output=_output(data.get("output", {})),
    )
    try:
        cfg.library.build()
        cfg.channel.build()
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from None
    return cfg


def parse_config(path):
    """Read a JSON config file.  An empty file yields the default configuration.

    Raises
    ------
    ConfigError
        For a missing file, malformed JSON (with line number) or invalid values.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    if not text.strip():
        return ExperimentConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return config_from_dict(data)
