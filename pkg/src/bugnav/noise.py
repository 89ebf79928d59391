"""Degradation models: odometry drift, hit-point recognition errors, and
noise on the distance-to-target channel.

Each model draws from its own RNG stream, so switching one source on does
not shift the samples seen by another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Vec2

FP_MODES = ("per_tick", "per_episode")
STREAM_NAMES = ("odom", "recognizer", "dt", "ransac")


@dataclass(frozen=True)
class NoiseConfig:
    odom_sigma: float = 0.0
    p_fp: float = 0.0
    p_fn: float = 0.0
    dt_sigma: float = 0.0
    fp_mode: str = "per_tick"
    noise_seed: int = 0

    def __post_init__(self):
        for name in ("odom_sigma", "dt_sigma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite value >= 0, got {v!r}")
        for name in ("p_fp", "p_fn"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.fp_mode not in FP_MODES:
            raise ValueError(f"fp_mode must be one of {FP_MODES}, got {self.fp_mode!r}")


def split_streams(noise_seed: int) -> dict[str, np.random.Generator]:
    """One independent generator per noise purpose."""
    children = np.random.SeedSequence(noise_seed).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAM_NAMES, children)}


def noisy_velocity(true_v, sigma: float, rng: np.random.Generator, dt: float = 0.05) -> Vec2:
    """Measured per-tick displacement: each component ~ Normal(true, sigma*dt).

    With sigma = 0 the input passes through untouched and no sample is drawn.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return Vec2(true_v[0], true_v[1])
    e = rng.normal(0.0, sigma * dt, size=2)
    return Vec2(true_v[0] + e[0], true_v[1] + e[1])


def noisy_dt(true_d: float, sigma: float, rng: np.random.Generator) -> float:
    """Range-to-target reading, Normal(true_d, sigma) clamped at zero."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return true_d
    return max(0.0, float(rng.normal(true_d, sigma)))


def geometric_match(hit_points, est_pos, eps: float, eligible=None) -> int | None:
    """Index of the first stored point within ``eps`` of ``est_pos``, or None.

    ``eligible`` optionally masks points that are still cooling down.
    """
    for i, hp in enumerate(hit_points):
        if eligible is not None and not eligible[i]:
            continue
        if math.hypot(hp[0] - est_pos[0], hp[1] - est_pos[1]) <= eps:
            return i
    return None


def recognize(
    hit_points,
    est_pos,
    eps: float,
    p_fp: float,
    p_fn: float,
    rng: np.random.Generator,
    wall_following: bool = True,
    eligible=None,
) -> bool:
    """Single recognizer query with independent FP and FN errors.

    A true geometric match is reported with probability 1 - p_fn. Without one,
    a spurious match fires with probability p_fp, but only while
    wall-following with at least one stored point. Probabilities of exactly 0
    or 1 consume no randomness.
    """
    if geometric_match(hit_points, est_pos, eps, eligible) is not None:
        return not _bernoulli(p_fn, rng)
    if not wall_following or len(hit_points) == 0:
        return False
    return _bernoulli(p_fp, rng)


def _bernoulli(p: float, rng: np.random.Generator) -> bool:
    if p <= 0.0:
        return False
    if p >= 1.0:
        return True
    return bool(rng.random() < p)


@dataclass
class HitPointRecognizer:
    """Stateful recognizer used inside an episode.

    Stored points are ineligible for ``cooldown`` seconds after they are
    stored or matched. A miss (FN) is decided once per encounter, on the
    first eligible tick inside a point's ``eps`` ball, and holds until the
    estimate leaves the ball.

    In ``per_tick`` mode every wall-following tick is an FP trial. In
    ``per_episode`` mode trials happen once per simulated second, so p_fp is
    read as a per-second rate over the episode.
    """

    eps: float = 0.5
    cooldown: float = 10.0
    p_fp: float = 0.0
    p_fn: float = 0.0
    fp_mode: str = "per_tick"
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    _stored_at: list = field(default_factory=list)
    _ready_at: list = field(default_factory=list)
    _decided: list = field(default_factory=list)
    _missed: list = field(default_factory=list)
    _last_fp_slot: int = -1
    fp_count: int = 0
    fn_count: int = 0

    def __post_init__(self):
        if self.fp_mode not in FP_MODES:
            raise ValueError(f"unknown fp_mode {self.fp_mode!r}")

    def store(self, point, now: float) -> None:
        self._stored_at.append(Vec2(point[0], point[1]))
        self._ready_at.append(now + self.cooldown)
        self._decided.append(False)
        self._missed.append(False)

    @property
    def hit_points(self) -> list:
        return list(self._stored_at)

    def query(self, est_pos, now: float, wall_following: bool) -> bool:
        matched = None
        for i, hp in enumerate(self._stored_at):
            inside = math.hypot(hp[0] - est_pos[0], hp[1] - est_pos[1]) <= self.eps
            if not inside:
                self._decided[i] = False
                self._missed[i] = False
                continue
            if now < self._ready_at[i]:
                continue
            if not self._decided[i]:
                self._decided[i] = True
                self._missed[i] = _bernoulli(self.p_fn, self.rng)
                if self._missed[i]:
                    self.fn_count += 1
            if self._missed[i]:
                continue
            if matched is None:
                matched = i
        if matched is not None:
            self._ready_at[matched] = now + self.cooldown
            return True
        if not wall_following or not self._stored_at:
            return False
        if self.fp_mode == "per_episode":
            slot = int(math.floor(now + 1e-9))
            if slot == self._last_fp_slot:
                return False
            self._last_fp_slot = slot
        if _bernoulli(self.p_fp, self.rng):
            self.fp_count += 1
            return True
        return False
