"""Experiment configuration: an INI document with fixed sections and keys.

Schema (version 1); every key is optional unless noted::

    [experiment]  kind (required), schema_version, seeds, lambdas, ladder,
                  nonlinear, output
    [grid]        n, P, L (all required), dealias
    [data]        kind, amplitude, modes, width, center, momentum, seed, band,
                  profile, profile_width, mean_free
    [time]        T, dt, stride
    [imethod]     N, s
    [oracles]     richardson, duhamel, double_sum

Lists are comma separated; ``#`` or ``;`` starts a comment, also inline.
Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

__all__ = [
    "SCHEMA_VERSION",
    "EXPERIMENT_KINDS",
    "ConfigError",
    "DataSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = ("run", "conserve", "identity-check", "acl-sweep", "morawetz", "lemma1", "scatter-proxy")
DATA_KINDS = ("planewave", "gaussian", "random", "zero")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending ``section.key``."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class DataSpec:
    kind: str = "gaussian"
    amplitude: float = 1.0
    modes: tuple = (1,)
    width: float = 1.0
    center: Optional[tuple] = None
    momentum: tuple = ()
    seed: int = 0
    band: Optional[int] = None
    profile: str = "flat"
    profile_width: float = 1.0
    mean_free: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n: int
    P: int
    L: float
    dealias: str = "half_rule"
    data: DataSpec = field(default_factory=DataSpec)
    T: float = 1.0
    dt: float = 0.01
    stride: int = 1
    N: tuple = (2.0, 4.0, 8.0, 16.0)
    s: float = 1.0
    seeds: int = 1
    lambdas: tuple = (2.0, 4.0)
    ladder: int = 6
    nonlinear: bool = True
    output: str = ""
    oracles: dict = field(default_factory=lambda: {"richardson": True, "duhamel": True, "double_sum": False})
    schema_version: int = SCHEMA_VERSION

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, data=replace(self.data, seed=int(seed)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["data"] = asdict(self.data)
        return d

    def to_text(self) -> str:
        """INI text that parses back to an equal config (floats via ``repr``)."""
        d = self.data

        def lst(xs):
            return ", ".join(_fmt(x) for x in xs)

        sections = {
            "experiment": {
                "kind": self.kind,
                "schema_version": self.schema_version,
                "seeds": self.seeds,
                "lambdas": lst(self.lambdas),
                "ladder": self.ladder,
                "nonlinear": self.nonlinear,
                "output": self.output,
            },
            "grid": {"n": self.n, "P": self.P, "L": self.L, "dealias": self.dealias},
            "data": {
                "kind": d.kind,
                "amplitude": d.amplitude,
                "modes": lst(d.modes),
                "width": d.width,
                "center": "none" if d.center is None else lst(d.center),
                "momentum": lst(d.momentum),
                "seed": d.seed,
                "band": "none" if d.band is None else d.band,
                "profile": d.profile,
                "profile_width": d.profile_width,
                "mean_free": d.mean_free,
            },
            "time": {"T": self.T, "dt": self.dt, "stride": self.stride},
            "imethod": {"N": lst(self.N), "s": self.s},
            "oracles": dict(self.oracles),
        }
        lines = []
        for name, items in sections.items():
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {_fmt(v)}" for k, v in items.items())
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        data = dict(d["data"])
        for key in ("modes", "momentum"):
            data[key] = tuple(data[key])
        if data.get("center") is not None:
            data["center"] = tuple(data["center"])
        top = {k: v for k, v in d.items() if k != "data"}
        for key in ("N", "lambdas"):
            top[key] = tuple(top[key])
        return cls(data=DataSpec(**data), **top)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_KEYS = {
    "experiment": {"kind", "schema_version", "seeds", "lambdas", "ladder", "nonlinear", "output"},
    "grid": {"n", "P", "L", "dealias"},
    "data": {
        "kind",
        "amplitude",
        "modes",
        "width",
        "center",
        "momentum",
        "seed",
        "band",
        "profile",
        "profile_width",
        "mean_free",
    },
    "time": {"T", "dt", "stride"},
    "imethod": {"N", "s"},
    "oracles": {"richardson", "duhamel", "double_sum"},
}


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.p = parser

    def raw(self, section, key):
        if self.p.has_section(section) and self.p.has_option(section, key):
            return self.p.get(section, key).strip()
        return None

    def get(self, section, key, conv, default=None, required=False):
        raw = self.raw(section, key)
        if raw is None:
            if required:
                raise ConfigError(f"{section}.{key}", "missing required key")
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}.{key}", f"expects {conv.__name__}, got {raw!r}") from exc


def integer(text: str) -> int:
    return int(text)


def real(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def boolean(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


def real_list(text: str) -> tuple:
    return tuple(real(x) for x in text.split(",") if x.strip())


def int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def optional_real_list(text: str):
    return None if text.lower() == "none" else real_list(text)


def optional_integer(text: str):
    return None if text.lower() == "none" else int(text)


def string(text: str) -> str:
    return text


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an INI config; raises :class:`ConfigError` naming the key."""
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__defaults__", inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<document>", str(exc).splitlines()[0]) from exc
    for section in parser.sections():
        if section not in _KEYS:
            raise ConfigError(section, "unknown section")
        for key in parser.options(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")

    r = _Reader(parser)
    version = r.get("experiment", "schema_version", integer, SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("experiment.schema_version", f"unsupported schema version {version}")
    kind = r.get("experiment", "kind", string, required=True)
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError("experiment.kind", f"must be one of {', '.join(EXPERIMENT_KINDS)}")

    n = r.get("grid", "n", integer, required=True)
    if not 1 <= n <= 7:
        raise ConfigError("grid.n", "dimension must be in 1..7")
    P = r.get("grid", "P", integer, required=True)
    pow2 = P >= 4 and P & (P - 1) == 0
    if not pow2 and not (kind == "lemma1" and P >= 4 and P % 2 == 0):
        raise ConfigError("grid.P", "points_per_axis must be a power of two (>= 4)")
    L = r.get("grid", "L", real, required=True)
    if not L > 0:
        raise ConfigError("grid.L", "box length must be positive")
    dealias = r.get("grid", "dealias", string, "half_rule")
    if dealias not in ("none", "half_rule"):
        raise ConfigError("grid.dealias", "must be 'none' or 'half_rule'")

    dkind = r.get("data", "kind", string, "gaussian")
    if dkind not in DATA_KINDS:
        raise ConfigError("data.kind", f"must be one of {', '.join(DATA_KINDS)}")
    profile = r.get("data", "profile", string, "flat")
    if profile not in ("flat", "gaussian"):
        raise ConfigError("data.profile", "must be 'flat' or 'gaussian'")
    data = DataSpec(
        kind=dkind,
        amplitude=r.get("data", "amplitude", real, 1.0),
        modes=r.get("data", "modes", int_list, (1,)),
        width=r.get("data", "width", real, 1.0),
        center=r.get("data", "center", optional_real_list, None),
        momentum=r.get("data", "momentum", int_list, ()),
        seed=r.get("data", "seed", integer, 0),
        band=r.get("data", "band", optional_integer, None),
        profile=profile,
        profile_width=r.get("data", "profile_width", real, 1.0),
        mean_free=r.get("data", "mean_free", boolean, True),
    )
    if not 0 <= data.seed < 2**64:
        raise ConfigError("data.seed", "must be a 64-bit unsigned integer")
    if data.width <= 0:
        raise ConfigError("data.width", "must be positive")
    if data.center is not None and len(data.center) != n:
        raise ConfigError("data.center", f"needs {n} coordinates")
    if data.band is not None and not 0 <= data.band <= P // 2 - 1:
        raise ConfigError("data.band", f"must be in 0..P/2-1 = {P // 2 - 1}")

    T = r.get("time", "T", real, 1.0)
    dt = r.get("time", "dt", real, 0.01)
    if not T > 0:
        raise ConfigError("time.T", "must be positive")
    if not dt > 0:
        raise ConfigError("time.dt", "must be positive")
    steps = T / dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ConfigError("time.dt", f"T/dt = {steps!r} must be an integer")
    stride = r.get("time", "stride", integer, 1)
    if stride < 1:
        raise ConfigError("time.stride", "must be >= 1")

    N = r.get("imethod", "N", real_list, (2.0, 4.0, 8.0, 16.0))
    if any(x < 1 for x in N):
        raise ConfigError("imethod.N", "every N must be >= 1")
    s = r.get("imethod", "s", real, 1.0)
    if not 0 < s < 2:
        raise ConfigError("imethod.s", "s must satisfy 0 < s < 2 (regularity range of the I-operator multiplier m_N)")

    seeds = r.get("experiment", "seeds", integer, 1)
    if seeds < 1:
        raise ConfigError("experiment.seeds", "must be >= 1")
    lambdas = r.get("experiment", "lambdas", real_list, (2.0, 4.0))
    if any(x <= 0 for x in lambdas):
        raise ConfigError("experiment.lambdas", "scaling factors must be positive")
    ladder = r.get("experiment", "ladder", integer, 6)
    if ladder < 2:
        raise ConfigError("experiment.ladder", "must be >= 2")

    oracles = {"richardson": True, "duhamel": True, "double_sum": False}
    for key in oracles:
        oracles[key] = r.get("oracles", key, boolean, oracles[key])

    return ExperimentConfig(
        kind=kind,
        n=n,
        P=P,
        L=L,
        dealias=dealias,
        data=data,
        T=T,
        dt=dt,
        stride=stride,
        N=N,
        s=s,
        seeds=seeds,
        lambdas=lambdas,
        ladder=ladder,
        nonlinear=r.get("experiment", "nonlinear", boolean, True),
        output=r.get("experiment", "output", string, ""),
        oracles=oracles,
        schema_version=version,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
