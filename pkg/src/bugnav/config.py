"""Experiment configuration files and the shipped presets.

A config file is INI-style: one ``[section]`` per experiment and one
``key = value`` per line. List-valued keys take comma-separated values and
the noise grid is the cartesian product of the noise lists.

    [fig12_odometry]
    envs = 200
    algorithms = com, com1, bug2, alg1, alg2
    odom_sigma = 0, 0.05, 0.10, 0.15, 0.20
"""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field

from .bugs import Algorithm
from .envgen import GenParams
from .noise import FP_MODES, NoiseConfig


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


@dataclass(frozen=True)
class Experiment:
    name: str
    envs: int = 200
    base_seed: int = 0
    algorithms: tuple = tuple(Algorithm)
    odom_sigma: tuple = (0.0,)
    p_fp: tuple = (0.0,)
    p_fn: tuple = (0.0,)
    dt_sigma: tuple = (0.0,)
    fp_mode: str = "per_tick"
    noise_seed: int = 0
    time_limit: float = 300.0
    goal_radius: float = 1.0
    arena_size: float = 14.0
    gen: GenParams = field(default_factory=GenParams)

    def noise_grid(self) -> list[NoiseConfig]:
        return [
            NoiseConfig(o, fp, fn, d, self.fp_mode, self.noise_seed)
            for o, fp, fn, d in itertools.product(self.odom_sigma, self.p_fp, self.p_fn, self.dt_sigma)
        ]

    @property
    def n_runs(self) -> int:
        return self.envs * len(self.algorithms) * len(self.noise_grid())

    def manifest(self) -> dict:
        return {
            "name": self.name,
            "envs": self.envs,
            "base_seed": self.base_seed,
            "algorithms": [a.value for a in self.algorithms],
            "odom_sigma": list(self.odom_sigma),
            "p_fp": list(self.p_fp),
            "p_fn": list(self.p_fn),
            "dt_sigma": list(self.dt_sigma),
            "fp_mode": self.fp_mode,
            "noise_seed": self.noise_seed,
            "time_limit": self.time_limit,
            "goal_radius": self.goal_radius,
            "arena_size": self.arena_size,
            "n_runs": self.n_runs,
        }


def _int(key, raw, lo=None):
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if lo is not None and v < lo:
        raise ConfigError(f"{key}: must be >= {lo}, got {v}")
    return v


def _float(key, raw):
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite, got {raw!r}")
    return v


def _floats(key, raw):
    items = [s.strip() for s in raw.split(",")]
    if not items or any(s == "" for s in items):
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {raw!r}")
    return tuple(_float(key, s) for s in items)


def _algorithms(key, raw):
    out = []
    for s in raw.split(","):
        try:
            out.append(Algorithm.parse(s.strip()))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    if not out:
        raise ConfigError(f"{key}: empty algorithm list")
    return tuple(out)


def _fp_mode(key, raw):
    if raw not in FP_MODES:
        raise ConfigError(f"{key}: expected one of {', '.join(FP_MODES)}, got {raw!r}")
    return raw


_PARSERS = {
    "envs": lambda k, r: _int(k, r, 1),
    "base_seed": lambda k, r: _int(k, r, 0),
    "algorithms": _algorithms,
    "odom_sigma": _floats,
    "p_fp": _floats,
    "p_fn": _floats,
    "dt_sigma": _floats,
    "fp_mode": _fp_mode,
    "noise_seed": lambda k, r: _int(k, r, 0),
    "time_limit": _float,
    "goal_radius": _float,
    "arena_size": _float,
}


def experiment_from_mapping(name: str, items: dict) -> Experiment:
    kw = {}
    for key, raw in items.items():
        qualified = f"[{name}] {key}"
        if key not in _PARSERS:
            raise ConfigError(f"{qualified}: unknown key (known: {', '.join(sorted(_PARSERS))})")
        kw[key] = _PARSERS[key](qualified, raw.strip())
    try:
        gen = GenParams(arena_size=kw.get("arena_size", 14.0))
        exp = Experiment(name=name, gen=gen, **kw)
        exp.noise_grid()  # validates ranges
    except ValueError as exc:
        raise ConfigError(f"[{name}]: {exc}") from None
    if exp.time_limit <= 0:
        raise ConfigError(f"[{name}] time_limit: must be positive")
    if exp.goal_radius <= 0:
        raise ConfigError(f"[{name}] goal_radius: must be positive")
    return exp


def parse_config(text: str) -> list[Experiment]:
    cp = configparser.ConfigParser(
        interpolation=None, default_section="__defaults__", inline_comment_prefixes=("#", ";")
    )
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not cp.sections():
        raise ConfigError("config has no [experiment] sections")
    return [experiment_from_mapping(name, dict(cp[name])) for name in cp.sections()]


def dump_experiment(exp: Experiment) -> str:
    """Inverse of :func:`parse_config` for one experiment."""

    def fmt(v):
        if isinstance(v, tuple):
            return ", ".join(a.value if isinstance(a, Algorithm) else repr(a) for a in v)
        return str(v)

    lines = [f"[{exp.name}]"]
    for key in _PARSERS:
        lines.append(f"{key} = {fmt(getattr(exp, key))}")
    return "\n".join(lines) + "\n"


PRESETS = {
    "fig11_noiseless": """
[fig11_noiseless]
envs = 200
algorithms = wf, com, com1, bug2, alg1, alg2
""",
    "fig12_odometry": """
[fig12_odometry]
envs = 200
algorithms = com, com1, bug2, alg1, alg2
odom_sigma = 0, 0.05, 0.10, 0.15, 0.20
""",
    # p(FP) is tried once per simulated second, so p = 0.005 gives 1.5
    # expected false recalls over 300 s and p = 0.025 gives 7.5
    "fig14_fp_fn": """
[fig14_fp]
envs = 100
algorithms = alg1, alg2
p_fp = 0, 0.005, 0.01, 0.015, 0.02, 0.025
fp_mode = per_episode

[fig14_fn]
envs = 100
algorithms = alg1, alg2
p_fn = 0, 0.2, 0.4, 0.6, 0.8, 1.0
""",
    "fig15_dt": """
[fig15_dt]
envs = 200
algorithms = com1, alg2
dt_sigma = 0, 1, 2, 3, 4, 5, 6
""",
}


def preset(name: str) -> list[Experiment]:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r} (known: {', '.join(PRESETS)})") from None
    return parse_config(text)
