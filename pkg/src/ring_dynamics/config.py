"""Run configuration: flat ``section.key = value`` files with ``#`` comments.

Unknown keys and out-of-range values raise :class:`ConfigError`; command
line flags are applied on top of the file with :meth:`RunConfig.override`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import IntegratorConfig
from .errors import ConfigError
from .potential import EulerSystem, RingSystem


def _positive(v):
    return v > 0


def _nonnegative(v):
    return v >= 0


# key -> (type, default, validator or allowed values, description)
SCHEMA: dict[str, tuple] = {
    "system.type": (str, "ring", ("ring", "euler"), "ring or euler"),
    "system.radius": (float, 1.0, _positive, "circle radius, or half separation for euler"),
    "system.mass": (float, 1.0, _positive, "circle mass, or mass per center"),
    "system.density": (float, None, _positive, "linear density; overrides system.mass"),
    "system.convention": (str, "fixed-mass", ("fixed-mass", "fixed-density"), "recorded in output"),
    "integrator.rtol": (float, 1e-11, _positive, "relative tolerance"),
    "integrator.atol": (float, 1e-12, _positive, "absolute tolerance"),
    "integrator.max_step": (float, float("inf"), _positive, "largest step"),
    "integrator.event_tol": (float, 1e-12, _positive, "event localisation tolerance"),
    "integrator.method": (str, "DOP853", ("DOP853", "RK45"), "Runge-Kutta pair"),
    "search.eps": (float, None, _positive, "scale parameter"),
    "search.K": (float, 0.3, None, "angular momentum for spiral orbits"),
    "search.family": (int, 0, _nonnegative, "figure-eight family index"),
    "search.q_max": (int, 20, _positive, "largest winding denominator"),
    "search.levels": (int, 60, _positive, "length of the height schedule"),
    "verify.seed": (int, 0, None, "random seed for sampled checks"),
    "output.directory": (str, ".", None, "where files are written"),
    "output.formats": (str, "csv,json,png", None, "comma separated subset of csv,json,dat,png"),
}

OUTPUT_FORMATS = ("csv", "json", "dat", "png")


def _convert(key: str, raw):
    typ, _default, check, _doc = SCHEMA[key]
    if raw is None:
        return None
    try:
        if typ is int and isinstance(raw, float) and not raw.is_integer():
            raise ValueError
        value = typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {raw!r} as {typ.__name__}") from None
    if isinstance(check, tuple):
        if value not in check:
            raise ConfigError(f"{key}: {value!r} not in {check}")
    elif check is not None and not check(value):
        raise ConfigError(f"{key}: {value!r} out of range")
    if key == "output.formats":
        bad = [f for f in value.split(",") if f.strip() and f.strip() not in OUTPUT_FORMATS]
        if bad:
            raise ConfigError(f"output.formats: unknown format(s) {bad}")
    return value


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: v[1] for k, v in SCHEMA.items()})

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cfg = cls()
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected key = value")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(f"line {n}: unknown key {key!r}")
            cfg.values[key] = _convert(key, raw)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def override(self, **kwargs) -> "RunConfig":
        """Apply non-None overrides given as ``section__key=value``."""
        out = RunConfig(dict(self.values))
        for name, raw in kwargs.items():
            if raw is None:
                continue
            key = name.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            out.values[key] = _convert(key, raw)
        return out

    def system(self):
        radius = self["system.radius"]
        if self["system.type"] == "euler":
            return EulerSystem(mass=self["system.mass"], separation=radius)
        if self["system.density"] is not None:
            return RingSystem.from_density(self["system.density"], radius)
        return RingSystem(radius=radius, mass=self["system.mass"])

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rtol=self["integrator.rtol"], atol=self["integrator.atol"],
                                max_step=self["integrator.max_step"],
                                event_tol=self["integrator.event_tol"],
                                method=self["integrator.method"])

    def formats(self) -> set[str]:
        return {f.strip() for f in self["output.formats"].split(",") if f.strip()}

    def dump(self) -> str:
        lines = []
        for key, (_t, _d, _c, doc) in SCHEMA.items():
            v = self.values[key]
            if v is None:
                lines.append(f"# {key} =    # {doc}")
            else:
                lines.append(f"{key} = {v}    # {doc}")
        return "\n".join(lines) + "\n"
