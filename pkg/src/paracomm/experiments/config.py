"""Experiment configuration: dataclasses, YAML I/O and validation.

A config file is a YAML mapping with top-level grid/run keys and one nested
section per suite.  Unknown keys and ill-typed values are rejected with the
file line and column of the offending entry.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

__all__ = [
    "SUITES",
    "ConfigError",
    "Theorem1Config",
    "IdentitiesConfig",
    "EquivalenceConfig",
    "CarlesonConfig",
    "ExperimentConfig",
    "load_config",
    "dump_config",
    "spec_hash",
]

SUITES = ("theorem1", "identities", "equivalence", "carleson")


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` carries a file:line:col prefix when known."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None, column: int | None = None):
        self.message, self.source, self.line, self.column = message, source, line, column
        where = ""
        if source is not None:
            where = f"{source}:"
            if line is not None:
                where += f"{line}:{column}:"
            where += " "
        super().__init__(f"{where}{message}")


@dataclass
class Theorem1Config:
    """Curl-free coefficient fields against random gradients."""

    fields: int = 20
    tests_per_field: int = 5
    band: Optional[int] = None
    tol: float = 1e-10
    mollify_cells: list = field(default_factory=lambda: [2.0])
    perturbation_deltas: list = field(default_factory=lambda: [1e-6, 1e-4, 1e-2])
    linearity_tol: float = 1e-6


@dataclass
class IdentitiesConfig:
    """Lemma residuals, calibration and the discrete Plancherel ratio."""

    fields: int = 3
    t_points: int = 8
    tol: float = 1e-11
    aliasing_min: float = 1e-6
    plancherel_fields: int = 10
    plancherel_n: int = 64
    plancherel_points: int = 64


@dataclass
class EquivalenceConfig:
    """BMO versus operator norm over a multiscale divergence-free gallery."""

    grid_sizes: list = field(default_factory=lambda: [32, 64])
    fields_per_slope: list = field(default_factory=lambda: [9, 1])
    slopes: list = field(default_factory=lambda: [0.75, 1.5, 2.25])
    power_tol: float = 1e-7
    power_max_iter: int = 3000
    restarts: int = 3
    scale: float = 3.0
    homogeneity_tol: float = 1e-8
    shift_cases: int = 3
    shift_tol: float = 1e-8
    shift_fraction: int = 4
    points_per_octave: int = 8
    control_op_max: float = 1e-10
    control_bmo_min: float = 0.1
    baseline_tol: float = 0.05


@dataclass
class CarlesonConfig:
    """Joint BMO and Carleson scan over vector and scalar targets."""

    slopes: list = field(default_factory=lambda: [0.75, 1.5, 2.25])
    fields_per_slope: int = 2
    exact_bmo_max_n: int = 16
    shift_fraction: int = 4
    points_per_octave: int = 8
    translation_tol: float = 1e-12
    baseline_tol: float = 0.05


@dataclass
class ExperimentConfig:
    """Top-level run configuration (grid, seeds, output and suite sections)."""

    suite: str = "all"
    n: int = 32
    length: float = 2 * math.pi
    seed: int = 0
    output: str = "results"
    threads: int = 1
    dump_fields: bool = False
    baselines: Optional[str] = None
    theorem1: Theorem1Config = field(default_factory=Theorem1Config)
    identities: IdentitiesConfig = field(default_factory=IdentitiesConfig)
    equivalence: EquivalenceConfig = field(default_factory=EquivalenceConfig)
    carleson: CarlesonConfig = field(default_factory=CarlesonConfig)

    def suites(self) -> list[str]:
        return list(SUITES) if self.suite == "all" else [self.suite]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, source: str | None = None, marks: dict | None = None) -> "ExperimentConfig":
        cfg = _build(cls, data, (), source, marks or {})
        cfg.validate(source, marks)
        return cfg

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Copy with CLI overrides; ``n`` replaces every grid size."""
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = dataclasses.replace(self, **{k: v for k, v in kw.items() if k != "n"})
        if "n" in kw:
            n = int(kw["n"])
            eq = cfg.equivalence
            cfg = dataclasses.replace(
                cfg,
                n=n,
                identities=dataclasses.replace(cfg.identities, plancherel_n=n),
                equivalence=dataclasses.replace(eq, grid_sizes=[n], fields_per_slope=[sum(eq.fields_per_slope)]),
            )
        cfg.validate()
        return cfg

    def validate(self, source: str | None = None, marks: dict | None = None) -> None:
        marks = marks or {}

        def fail(path, msg):
            line, col = marks.get(tuple(path), (None, None))
            raise ConfigError(msg, source, line, col)

        if self.suite not in SUITES + ("all",):
            fail(["suite"], f"unknown suite {self.suite!r}; expected one of {SUITES + ('all',)}")
        sizes = [("n",), ("identities", "plancherel_n")] + [
            ("equivalence", "grid_sizes") for _ in self.equivalence.grid_sizes
        ]
        for path, n in zip(sizes, [self.n, self.identities.plancherel_n] + list(self.equivalence.grid_sizes)):
            if n < 8 or n & (n - 1):
                fail(path, f"grid size must be a power of two >= 8, got {n}")
        if self.length <= 0:
            fail(["length"], "domain length must be positive")
        if self.threads < 1:
            fail(["threads"], "threads must be >= 1")
        t1 = self.theorem1
        band_max = (self.n - 1) // 3
        if t1.band is not None and not 1 <= t1.band <= band_max:
            fail(["theorem1", "band"], f"band {t1.band} outside [1, n/3] = [1, {band_max}] for n={self.n}")
        for c in t1.mollify_cells:
            if not 2 <= c <= self.n / 8:
                fail(["theorem1", "mollify_cells"], f"mollifier width {c} cells outside [2, n/8] = [2, {self.n / 8:g}] for n={self.n}")
        if t1.fields < 1 or t1.tests_per_field < 1:
            fail(["theorem1"], "theorem1 needs at least one field and one test function")
        ident = self.identities
        if ident.t_points < 2:
            fail(["identities", "t_points"], "at least two scales are needed")
        if ident.plancherel_points < 64:
            fail(["identities", "plancherel_points"], "the square function needs at least 64 quadrature points")
        if ident.plancherel_n < 16:
            fail(["identities", "plancherel_n"], "mid-band shells need n >= 16")
        eq = self.equivalence
        if len(eq.fields_per_slope) != len(eq.grid_sizes):
            fail(["equivalence", "fields_per_slope"], "fields_per_slope must have one entry per grid size")
        for n in eq.grid_sizes:
            if n < 16:
                fail(["equivalence", "grid_sizes"], f"the Carleson scale range needs n >= 16, got {n}")
        for s in list(eq.slopes) + list(self.carleson.slopes):
            if not 0.5 <= s <= 2.5:
                fail(["equivalence", "slopes"], f"spectral slope {s} outside [0.5, 2.5]")
        if self.suite in ("all", "carleson") and self.n < 16:
            fail(["n"], "the Carleson suite needs n >= 16")


def _field_types(cls):
    hints = {}
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        hints[f.name] = default
    return hints


def _coerce(name, default, value, path, source, marks):
    def fail(msg):
        line, col = marks.get(path, (None, None))
        raise ConfigError(msg, source, line, col)

    if dataclasses.is_dataclass(default):
        if not isinstance(value, dict):
            fail(f"section {name!r} must be a mapping")
        return _build(type(default), value, path, source, marks)
    if value is None:
        if default is None:
            return None
        fail(f"{name!r} may not be empty")
    if isinstance(default, bool):
        if not isinstance(value, bool):
            fail(f"{name!r} must be true or false, got {value!r}")
        return value
    if isinstance(default, int) or (default is None and isinstance(value, int)):
        if isinstance(value, bool) or not isinstance(value, int):
            fail(f"{name!r} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            # YAML 1.1 reads 1e-10 (no dot) as a string
            try:
                return float(value)
            except (TypeError, ValueError):
                fail(f"{name!r} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str) or default is None:
        if not isinstance(value, str):
            fail(f"{name!r} must be a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            fail(f"{name!r} must be a list")
        kind = type(default[0]) if default else float
        out = []
        for v in value:
            ok = not isinstance(v, bool) and isinstance(v, int if kind is int else (int, float, str))
            try:
                out.append(kind(v))
            except (TypeError, ValueError):
                ok = False
            if not ok:
                fail(f"bad entry {v!r} in {name!r}; expected {kind.__name__} values")
        return out
    fail(f"unsupported value for {name!r}")


def _build(cls, data: dict, prefix: tuple, source, marks):
    defaults = _field_types(cls)
    kwargs = {}
    for key, value in data.items():
        path = prefix + (key,)
        if key not in defaults:
            line, col = marks.get(path, (None, None))
            section = ".".join(prefix) or "top level"
            raise ConfigError(f"unknown key {key!r} in {section}; expected one of {sorted(defaults)}", source, line, col)
        kwargs[key] = _coerce(key, defaults[key], value, path, source, marks)
    return cls(**kwargs)


def _marks(node, prefix=(), out=None) -> dict:
    """Map key paths to 1-based (line, column) of their YAML value nodes."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = (k.start_mark.line + 1, k.start_mark.column + 1)
            _marks(v, path, out)
    return out


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    src = str(path)
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", src, mark.line + 1, mark.column + 1) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", src, 1, 1)
    return ExperimentConfig.from_dict(data, src, _marks(node))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def spec_hash(obj: Any) -> str:
    """Short content hash of a JSON-serializable recipe."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
