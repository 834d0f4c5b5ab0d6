"""
Experiment configuration: defaults, an optional JSON file and command-line
flags merged into one validated ExperimentConfig.
"""

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from . import DEFAULT_FORMAT, DEFAULT_MU, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_WORKERS, REPLICATION_CAP
from .critical_bands import BOUNDARY as BAND_BOUNDARY
from .critical_bands import INTERIOR as BAND_INTERIOR
from .critical_bands import HSpec, classify, z_star
from .errors import ConfigError, DomainError
from .samplers import BOUNDARY, FAMILIES, FIXED_GROUP, GEOMETRIC, INTERIOR, SamplerSpec
from .seq_test import DEFAULT_K_GRID, DEFAULT_SEARCH_REPS, TABLE1_D, TABLE1_D_OVER_C, TABLE1_THETA

FORMATS = ("csv", "json", "table")
COMMANDS = ("simulate", "bands", "table1")
COMMAND_DEFAULTS = {
    "bands": {"format": "json", "a_grid": None},
    "table1": {"format": "table"},
}


def parse_grid(text, name, cast=float):
    """'100,1000,1e4' -> (100.0, 1000.0, 10000.0)."""
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [part for part in str(text).split(",") if part.strip()]
    try:
        values = tuple(cast(float(item)) if cast is int else cast(item) for item in items)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot parse {text!r} as a comma-separated list of numbers")
    if not values:
        raise ConfigError(name, "list is empty")
    return values


def _as_number(value, name, cast):
    try:
        number = cast(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if cast is int and number != value and float(number) != float(value):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return number


def parse_k_star(text):
    """'1:15,5:22' -> {1.0: 15, 5.0: 22}."""
    if isinstance(text, dict):
        items = text.items()
    else:
        items = []
        for part in str(text).split(","):
            if not part.strip():
                continue
            key, sep, value = part.partition(":")
            if not sep:
                raise ConfigError("k_star", f"expected 'd_over_c:k' pairs, got {part!r}")
            items.append((key, value))
    try:
        return {float(key): int(value) for key, value in items}
    except ValueError:
        raise ConfigError("k_star", f"cannot parse {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Every parameter of the simulate, bands and table1 commands."""

    command: str = "simulate"
    sampler: str = GEOMETRIC
    a_grid: tuple = (100.0,)
    h: Optional[str] = None
    mu: float = DEFAULT_MU
    z: Optional[float] = None
    m: Optional[int] = None
    group: Optional[float] = None
    reps: int = DEFAULT_REPS
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    out: Optional[str] = None
    format: str = DEFAULT_FORMAT
    log_dir: Optional[str] = None
    verbose: bool = False
    quiet: bool = False
    d_over_c: tuple = TABLE1_D_OVER_C
    d: float = TABLE1_D
    theta: float = TABLE1_THETA
    k_star: dict = field(default_factory=dict)
    k_grid: tuple = DEFAULT_K_GRID
    search_reps: int = DEFAULT_SEARCH_REPS
    per_truth: bool = False

    @classmethod
    def from_sources(cls, file_values=None, flag_values=None):
        """Merge defaults < file values < flags (flags set to None are ignored)."""
        known = {f.name for f in fields(cls)}
        merged = {}
        for key, value in (file_values or {}).items():
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
            merged[key] = value
        for key, value in (flag_values or {}).items():
            if value is not None and key in known:
                merged[key] = value
        command = merged.get("command", "simulate")
        for key, value in COMMAND_DEFAULTS.get(command, {}).items():
            if key not in merged:
                merged[key] = value
        return cls(**merged).normalized()

    @classmethod
    def from_file(cls, path, flag_values=None):
        try:
            with open(path, encoding="utf-8") as handle:
                file_values = json.load(handle)
        except OSError as e:
            raise ConfigError("config", f"cannot read {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"{path} is not valid JSON: {e}")
        if not isinstance(file_values, dict):
            raise ConfigError("config", f"{path} must hold a JSON object")
        return cls.from_sources(file_values, flag_values)

    def normalized(self):
        """Parse list-valued fields, then validate."""
        config = replace(
            self,
            reps=_as_number(self.reps, "reps", int),
            seed=_as_number(self.seed, "seed", int),
            workers=_as_number(self.workers, "workers", int),
            search_reps=_as_number(self.search_reps, "search_reps", int),
            mu=_as_number(self.mu, "mu", float),
            d=_as_number(self.d, "d", float),
            theta=_as_number(self.theta, "theta", float),
            a_grid=None if self.a_grid is None else parse_grid(self.a_grid, "a"),
            d_over_c=parse_grid(self.d_over_c, "d_over_c"),
            k_grid=parse_grid(self.k_grid, "k_grid", cast=int),
            k_star=parse_k_star(self.k_star),
        )
        config.validate()
        return config

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError("command", f"expected one of {COMMANDS}, got {self.command!r}")
        if self.sampler not in FAMILIES:
            raise ConfigError("sampler", f"expected one of {FAMILIES}, got {self.sampler!r}")
        if self.format not in FORMATS:
            raise ConfigError("format", f"expected one of {FORMATS}, got {self.format!r}")
        if not (int(self.reps) == self.reps and 2 <= self.reps <= REPLICATION_CAP):
            raise ConfigError("reps", f"must be an integer in [2, {REPLICATION_CAP}], got {self.reps!r}")
        if not (int(self.seed) == self.seed and 0 <= self.seed < 2**64):
            raise ConfigError("seed", f"must be an integer in [0, 2^64), got {self.seed!r}")
        if not (int(self.workers) == self.workers and self.workers >= 1):
            raise ConfigError("workers", f"must be a positive integer, got {self.workers!r}")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ConfigError("mu", f"must be positive and finite, got {self.mu!r}")
        if self.a_grid is None:
            if self.command != "bands":
                raise ConfigError("a", f"{self.command} needs at least one boundary")
        elif any(a <= 0.0 for a in self.a_grid):
            raise ConfigError("a", "boundaries must be positive")
        elif any(b <= a for a, b in zip(self.a_grid, self.a_grid[1:])):
            raise ConfigError("a", "grid must be strictly increasing")
        if any(ratio <= 0.0 for ratio in self.d_over_c):
            raise ConfigError("d_over_c", "cost ratios must be positive")
        if not 0.0 < self.d < 1.0:
            raise ConfigError("d", f"must lie in (0, 1), got {self.d!r}")
        if any(k < 1 for k in self.k_grid) or any(k < 1 for k in self.k_star.values()):
            raise ConfigError("k_grid", "group sizes must be positive")
        if self.search_reps < 2:
            raise ConfigError("search_reps", f"must be at least 2, got {self.search_reps!r}")
        if self.theta == 0.0:
            raise ConfigError("theta", "hypotheses +-theta coincide for theta = 0")

    def h_spec(self):
        if self.h is None:
            return None
        try:
            return HSpec.parse(self.h)
        except DomainError as e:
            raise ConfigError("h", str(e))

    def band(self):
        try:
            return classify(self.h_spec())
        except DomainError as e:
            raise ConfigError("h", str(e))

    def resolve_sampler(self):
        """
        Build the SamplerSpec; returns (spec, solved z* or None).

        Interior samplers take m from h's band when --m is absent; boundary
        samplers without --z use the z* of h's band.
        """
        try:
            if self.sampler == GEOMETRIC:
                if self.z is None:
                    raise ConfigError("z", "geometric sampler needs --z")
                return SamplerSpec.geometric(float(self.z), self.mu), None
            if self.sampler == FIXED_GROUP:
                if self.group is None:
                    raise ConfigError("group", "fixed_group sampler needs --group")
                return SamplerSpec.fixed_group(float(self.group), self.mu), None
            if self.h is None:
                if self.sampler == INTERIOR or self.z is None or self.m is None:
                    raise ConfigError("h", f"{self.sampler} sampler needs --h")
                return SamplerSpec.boundary(int(self.m), float(self.z), self.mu), None
            h, band = self.h_spec(), self.band()
            m = band.m if self.m is None else int(self.m)
            if self.sampler == INTERIOR:
                if band.kind != BAND_INTERIOR or band.m != m:
                    raise ConfigError("h", f"h = {h} lies in the {band.kind} of band {band.m}, "
                                           f"not the interior of band {m}")
                return SamplerSpec.interior(m, h, self.mu), None
            if self.z is not None:
                return SamplerSpec.boundary(m, float(self.z), self.mu), None
            if band.kind != BAND_BOUNDARY or band.m != m:
                raise ConfigError("h", f"z* needs h on the boundary of band {m}; "
                                       f"h = {h} lies in the {band.kind} of band {band.m}")
            solved = z_star(m, self.mu, h)
            return SamplerSpec.boundary(m, solved, self.mu), solved
        except DomainError as e:
            raise ConfigError("sampler", str(e))
