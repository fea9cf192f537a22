"""Versioned run configuration: one INI-style file holds every tunable.

Sections mirror the model objects: ``[run]``, ``[constants]``, ``[factors]``,
``[costs]``, ``[tree]`` and ``[simulation]``. Omitted keys take their
defaults; unknown sections or keys are rejected so typos cannot silently fall
back to a default.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources

from .flow import BaseConfig
from .scenario import CalibrationConstants, CostModel, ScenarioFactors, as_fraction
from .sim.random import Distribution
from .tree import TreeConfig

__all__ = [
    "CONFIG_VERSION",
    "ConfigError",
    "RunConfig",
    "load_config",
    "loads_config",
    "shipped_config",
    "SHIPPED_CONFIG_NAME",
]

CONFIG_VERSION = 1
SHIPPED_CONFIG_NAME = "calibrated.ini"
FORMATS = ("csv", "md", "both")
METHOD_NAMES = ("sa", "dt", "mc", "des0", "des1", "des2", "des3")


class ConfigError(ValueError):
    pass


# -- value codecs ---------------------------------------------------------------


def _fmt_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return repr(x) if isinstance(x, float) else str(x)


def _parse_fraction(text: str) -> Fraction:
    try:
        return as_fraction(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _fmt_dist(d: Distribution) -> str:
    return " ".join([d.kind, *(_fmt_number(p) for p in d.params)])


def _parse_dist(text: str) -> Distribution:
    kind, *params = text.split()
    try:
        return Distribution(kind, tuple(float(p) for p in params))
    except ValueError as exc:
        raise ConfigError(f"bad distribution {text!r}: {exc}") from exc


def _fmt_pairs(pairs) -> str:
    return ", ".join(f"{_fmt_number(a)}:{_fmt_number(b)}" for a, b in pairs)


def _parse_pairs(text: str, value=_parse_fraction) -> tuple:
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        if ":" not in item:
            raise ConfigError(f"expected level:value, got {item!r}")
        a, b = item.split(":", 1)
        out.append((_parse_fraction(a), value(b)))
    return tuple(out)


def _parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError as exc:
        raise ConfigError(f"not an integer: {text!r}") from exc


def _parse_float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _codec_for(value):
    """(format, parse) for a dataclass field, chosen by its default's type."""
    if isinstance(value, bool):
        raise TypeError("boolean fields are not configurable")
    if isinstance(value, Distribution):
        return _fmt_dist, _parse_dist
    if isinstance(value, Fraction):
        return str, _parse_fraction
    if isinstance(value, int):
        return str, _parse_int
    if isinstance(value, float):
        return repr, _parse_float
    if isinstance(value, tuple) and all(isinstance(v, float) for v in value):
        return (lambda t: ", ".join(repr(v) for v in t),
                lambda s: tuple(_parse_float(v) for v in s.split(",")))
    raise TypeError(f"no codec for {type(value).__name__}")


def _plain_fields(obj, skip=()):
    return [f.name for f in dataclasses.fields(obj) if f.name not in skip]


# -- the configuration ------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    version: int = CONFIG_VERSION
    seed: int = 42
    replications: int | str = 10
    replication_cap: int = 50
    calibration_tolerance: float = 0.05
    out: str = "results"
    format: str = "both"
    constants: CalibrationConstants = CalibrationConstants()
    factors: ScenarioFactors = ScenarioFactors()
    costs: CostModel = field(default_factory=CostModel)
    tree: TreeConfig = TreeConfig()
    simulation: BaseConfig = BaseConfig()

    def __post_init__(self):
        if self.version != CONFIG_VERSION:
            raise ConfigError(_version_hint(self.version))
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        reps = self.replications
        if reps != "auto" and (not isinstance(reps, int) or reps < 2):
            raise ConfigError("replications must be 'auto' or an integer >= 2")
        if self.replication_cap < 5:
            raise ConfigError("replication_cap must be at least 5")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        # the simulation always sees the same constants and tree as the other methods
        sim = self.simulation
        if sim.constants != self.constants or sim.tree != self.tree:
            object.__setattr__(self, "simulation", replace(sim, constants=self.constants, tree=self.tree))

    # model-defining content, excluding where and how output is written
    def model_ini(self) -> str:
        return self.to_ini(include_output=False)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.model_ini().encode()).hexdigest()[:12]

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_ini(self, include_output: bool = True) -> str:
        lines = ["[run]", f"version = {self.version}", f"seed = {self.seed}",
                 f"replications = {self.replications}", f"replication_cap = {self.replication_cap}",
                 f"calibration_tolerance = {self.calibration_tolerance!r}"]
        if include_output:
            lines += [f"out = {self.out}", f"format = {self.format}"]
        lines += ["", "[constants]"]
        for name in _plain_fields(self.constants):
            fmt, _ = _codec_for(getattr(CalibrationConstants(), name))
            lines.append(f"{name} = {fmt(getattr(self.constants, name))}")
        f = self.factors
        lines += ["", "[factors]",
                  f"tg_levels = {_fmt_pairs(f.tg_levels)}",
                  f"cg_levels = {_fmt_pairs(f.cg_levels)}",
                  "sg_options = " + ", ".join(str(s) for s in f.sg_options)]
        c = self.costs
        lines += ["", "[costs]", f"cost_per_missed_lorry = {c.cost_per_missed_lorry}",
                  f"search_cost = {_fmt_pairs(sorted(c.search_growth_cost.items()))}"]
        lines += ["", "[tree]"]
        for name in _plain_fields(self.tree):
            lines.append(f"{name} = {getattr(self.tree, name)}")
        lines += ["", "[simulation]"]
        defaults = BaseConfig()
        for name in _plain_fields(self.simulation, skip=("constants", "tree")):
            fmt, _ = _codec_for(getattr(defaults, name))
            lines.append(f"{name} = {fmt(getattr(self.simulation, name))}")
        return "\n".join(lines) + "\n"


def _version_hint(found) -> str:
    return (f"config version {found!r} is not supported (expected {CONFIG_VERSION}); "
            f"add 'version = {CONFIG_VERSION}' under [run] and re-check keys against "
            f"a file written by the 'calibrate' command")


_RUN_KEYS = {"version", "seed", "replications", "replication_cap", "calibration_tolerance", "out", "format"}
_SECTIONS = {"run", "constants", "factors", "costs", "tree", "simulation"}


def _check_keys(section, keys, allowed):
    unknown = sorted(set(keys) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def loads_config(text: str) -> RunConfig:
    """Parse configuration text; every key is optional except ``[run] version``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    unknown = sorted(set(cp.sections()) - _SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    if not cp.has_option("run", "version"):
        raise ConfigError(_version_hint(None))
    run = dict(cp["run"])
    _check_keys("run", run, _RUN_KEYS)
    kw = {"version": _parse_int(run["version"])}
    if kw["version"] != CONFIG_VERSION:
        raise ConfigError(_version_hint(kw["version"]))
    if "seed" in run:
        kw["seed"] = _parse_int(run["seed"])
    if "replications" in run:
        v = run["replications"].strip()
        kw["replications"] = "auto" if v == "auto" else _parse_int(v)
    if "replication_cap" in run:
        kw["replication_cap"] = _parse_int(run["replication_cap"])
    if "calibration_tolerance" in run:
        kw["calibration_tolerance"] = _parse_float(run["calibration_tolerance"])
    for key in ("out", "format"):
        if key in run:
            kw[key] = run[key].strip()

    try:
        if cp.has_section("constants"):
            sec = dict(cp["constants"])
            names = _plain_fields(CalibrationConstants)
            _check_keys("constants", sec, names)
            base = CalibrationConstants()
            kw["constants"] = replace(base, **{k: _codec_for(getattr(base, k))[1](v) for k, v in sec.items()})
        if cp.has_section("factors"):
            sec = dict(cp["factors"])
            _check_keys("factors", sec, {"tg_levels", "cg_levels", "sg_options"})
            fk = {}
            for key in ("tg_levels", "cg_levels"):
                if key in sec:
                    fk[key] = _parse_pairs(sec[key])
            if "sg_options" in sec:
                fk["sg_options"] = tuple(_parse_fraction(s) for s in sec["sg_options"].split(",") if s.strip())
            kw["factors"] = ScenarioFactors(**fk)
        if cp.has_section("costs"):
            sec = dict(cp["costs"])
            _check_keys("costs", sec, {"cost_per_missed_lorry", "search_cost"})
            ck = {}
            if "cost_per_missed_lorry" in sec:
                ck["cost_per_missed_lorry"] = _parse_int(sec["cost_per_missed_lorry"])
            if "search_cost" in sec:
                ck["search_growth_cost"] = dict(_parse_pairs(sec["search_cost"], _parse_int))
            kw["costs"] = CostModel(**ck)
        if cp.has_section("tree"):
            sec = dict(cp["tree"])
            _check_keys("tree", sec, _plain_fields(TreeConfig))
            kw["tree"] = TreeConfig(**{k: _parse_fraction(v) for k, v in sec.items()})
        if cp.has_section("simulation"):
            sec = dict(cp["simulation"])
            base = BaseConfig()
            _check_keys("simulation", sec, _plain_fields(base, skip=("constants", "tree")))
            kw["simulation"] = replace(base, **{k: _codec_for(getattr(base, k))[1](v) for k, v in sec.items()})
        return RunConfig(**kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text)


def shipped_config() -> RunConfig:
    """The calibrated configuration that ships with the package."""
    text = resources.files("calais_cba").joinpath("data", SHIPPED_CONFIG_NAME).read_text(encoding="utf-8")
    return loads_config(text)
