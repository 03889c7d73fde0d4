"""Experiment configuration: sectioned key/value files parsed with configparser.

Every key has a default, so an empty file describes the standard plate cooling
problem.  Errors name the section, key and (when known) the line number.
"""

import configparser
import dataclasses
import math
from dataclasses import dataclass, field

from .acceleration import ACCELERATORS
from .errors import ConfigurationError
from .fluid import FluidSurrogateConfig
from .predictors import PREDICTORS


@dataclass(frozen=True)
class StructureParams:
    length: float = 0.02
    elements: int = 20
    order: int = 2
    material: str = "51CrV4"
    units: str = "K"
    density: float = 7836.0
    heat_capacity: float = 600.0
    conductivity: float = 40.0
    initial_temperature: float = 900.0
    jacobian: str = "newton"


@dataclass(frozen=True)
class FluidParams:
    length: float = 1e-4
    cells: int = 10
    conductivity: float = 0.03
    heat_capacity: float = 1.2 * 1005.0
    far_field: float = 273.0
    stiffness: float = 1.0
    flux_order: int = 2
    initial: str = "steady"

    def surrogate_config(self, **overrides):
        kw = dataclasses.asdict(self)
        kw.update(overrides)
        return FluidSurrogateConfig(**kw)


@dataclass(frozen=True)
class CouplingParams:
    divisor: float = 5.0
    max_iterations: int = 100
    omega0: float = 0.8
    window: int = None
    termination: str = "accepted"
    inner_tol_factor: float = 0.01


@dataclass(frozen=True)
class ControllerParams:
    safety: float = 0.9
    f_min: float = 0.2
    f_max: float = 5.0
    dt_min: float = 1e-10
    dt_max: float = None


@dataclass(frozen=True)
class StudyParams:
    dts: tuple = (1.0, 5.0)
    stiffness: float = 10.0
    tol: float = 1e-13
    target: float = 1e-8
    max_iterations: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    case: str = "plate-cooling"
    end_time: float = 100.0
    dt0: float = 0.5
    tols: tuple = (1e-2, 1e-3, 1e-4, 1e-5)
    accelerators: tuple = ACCELERATORS
    predictors: tuple = PREDICTORS
    combine: bool = False
    fixed_vs_adaptive: bool = True
    reference_tol: float = 1e-8
    seed: int = 0
    output: str = "results"
    structure: StructureParams = field(default_factory=StructureParams)
    fluid: FluidParams = field(default_factory=FluidParams)
    coupling: CouplingParams = field(default_factory=CouplingParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    study: StudyParams = field(default_factory=StudyParams)

    def validate(self):
        _check(self.end_time > 0, "experiment", "end_time", "must be positive")
        _check(self.dt0 > 0, "experiment", "dt0", "must be positive")
        _check(self.tols and all(t > 0 for t in self.tols), "experiment", "tols",
               "needs at least one positive value")
        _check(self.reference_tol > 0, "experiment", "reference_tol", "must be positive")
        for a in self.accelerators:
            _check(a in ACCELERATORS, "experiment", "accelerators", f"unknown accelerator {a!r}")
        for p in self.predictors:
            _check(p in PREDICTORS, "experiment", "predictors", f"unknown predictor {p!r}")
        _check(self.structure.material in ("51CrV4", "constant"), "structure", "material",
               "must be '51CrV4' or 'constant'")
        _check(self.coupling.max_iterations >= 2, "coupling", "max_iterations", "must be >= 2")
        _check(all(d > 0 for d in self.study.dts), "stage_study", "dts", "must be positive")
        return self

    @property
    def sorted_tols(self):
        return tuple(sorted(self.tols, reverse=True))


_SECTIONS = {
    "experiment": None,
    "structure": StructureParams,
    "fluid": FluidParams,
    "coupling": CouplingParams,
    "controller": ControllerParams,
    "stage_study": StudyParams,
}
_ATTR = {"stage_study": "study"}
_TUPLE_KEYS = {"tols": float, "accelerators": str, "predictors": str, "dts": float}


def _check(ok, section, key, msg, line=None):
    if not ok:
        where = f" (line {line})" if line else ""
        raise ConfigurationError(f"[{section}] {key}: {msg}{where}")


def _key_lines(text):
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif section and s and s[0] not in "#;" and ("=" in s or ":" in s):
            key = s.split("=", 1)[0].split(":", 1)[0].strip().lower()
            lines[section, key] = no
    return lines


def _convert(value, default, key, section, line):
    value = value.strip()
    try:
        if key in _TUPLE_KEYS:
            kind = _TUPLE_KEYS[key]
            items = [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]
            return tuple(kind(v) if kind is float else v.lower() for v in items)
        if value.lower() in ("", "none", "null") and default is None:
            return None
        if isinstance(default, bool):
            if value.lower() in ("1", "yes", "true", "on"):
                return True
            if value.lower() in ("0", "no", "false", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if isinstance(default, int) or key in ("window",):
            return int(value)
        if isinstance(default, float) or default is None:
            out = float(value)
            if not math.isfinite(out):
                raise ValueError("must be finite")
            return out
        return value
    except ValueError as exc:
        raise ConfigurationError(f"[{section}] {key}: {exc}"
                                 + (f" (line {line})" if line else "")) from None


def _build(cls, section, items, lines):
    defaults = {f.name: f.default for f in dataclasses.fields(cls)
                if f.default is not dataclasses.MISSING}
    kw = {}
    for key, value in items:
        line = lines.get((section, key))
        _check(key in defaults, section, key, "unknown key", line)
        kw[key] = _convert(value, defaults[key], key, section, line)
    try:
        return cls(**kw)
    except ConfigurationError as exc:
        raise ConfigurationError(f"[{section}] {exc}") from None


def parse_config(text):
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from None
    lines = _key_lines(text)
    kw = {}
    for section in parser.sections():
        _check(section in _SECTIONS, section, "*", "unknown section", None)
        items = parser.items(section)
        if section == "experiment":
            top = {f.name: f.default for f in dataclasses.fields(ExperimentConfig)
                   if f.default is not dataclasses.MISSING}
            for key, value in items:
                line = lines.get((section, key))
                _check(key in top, section, key, "unknown key", line)
                kw[key] = _convert(value, top[key], key, section, line)
        else:
            kw[_ATTR.get(section, section)] = _build(_SECTIONS[section], section, items, lines)
    return ExperimentConfig(**kw).validate()


def load_config(path=None):
    if path is None:
        return ExperimentConfig().validate()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
