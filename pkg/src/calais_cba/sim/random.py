"""Seeded random streams, variate generation and arrival processes.

One stream per (seed, replication, purpose). Streams for different purposes
never share state, so adding a new random decision leaves every existing
draw untouched and scenario cells see common random numbers.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RandomStream",
    "Distribution",
    "exponential",
    "triangular",
    "uniform",
    "WeeklyProfile",
    "NoArrivalsError",
    "sample",
    "triangular_ppf",
    "next_arrival",
    "generate_arrivals",
    "MINUTES_PER_HOUR",
    "MINUTES_PER_WEEK",
    "MINUTES_PER_YEAR",
]

MINUTES_PER_HOUR = 60.0
HOURS_PER_WEEK = 168
MINUTES_PER_WEEK = HOURS_PER_WEEK * MINUTES_PER_HOUR
MINUTES_PER_YEAR = 52 * MINUTES_PER_WEEK  # 524,160


def _purpose_key(purpose) -> int:
    if isinstance(purpose, int):
        return purpose
    return zlib.crc32(str(purpose).encode())


class RandomStream:
    """A reproducible stream of variates for one replication and purpose."""

    _BUFFER = 4096

    def __init__(self, seed: int, purpose="default", replication: int = 0):
        self.seed = int(seed)
        self.purpose = purpose
        self.replication = int(replication)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.replication, _purpose_key(purpose)))
        self.generator = np.random.Generator(np.random.PCG64(ss))
        self._buf = np.empty(0)
        self._pos = 0

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, purpose={self.purpose!r}, replication={self.replication})"

    def uniform(self, size=None):
        """U(0, 1) variates; a scalar draw is served from a buffered block."""
        if size is not None:
            return self.generator.random(size)
        if self._pos >= len(self._buf):
            self._buf = self.generator.random(self._BUFFER)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)


@dataclass(frozen=True)
class Distribution:
    """``kind`` in {"exponential", "triangular", "uniform", "constant"}."""

    kind: str
    params: tuple = ()

    def __post_init__(self):
        k, p = self.kind, self.params
        if k == "exponential":
            if len(p) != 1 or not p[0] > 0:
                raise ValueError("exponential needs one positive mean")
        elif k == "triangular":
            if len(p) != 3 or not p[0] <= p[1] <= p[2]:
                raise ValueError("triangular needs min <= mode <= max")
        elif k == "uniform":
            if p not in ((), (0, 1), (0.0, 1.0)):
                if len(p) != 2 or not p[0] <= p[1]:
                    raise ValueError("uniform needs low <= high")
        elif k == "constant":
            if len(p) != 1:
                raise ValueError("constant needs one value")
        else:
            raise ValueError(f"unknown distribution kind {k!r}")

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "exponential":
            return p[0]
        if k == "triangular":
            return sum(p) / 3
        if k == "uniform":
            lo, hi = p or (0.0, 1.0)
            return (lo + hi) / 2
        return p[0]

    def scaled(self, factor: float) -> "Distribution":
        """Same shape with every time parameter multiplied by ``factor``."""
        if self.kind == "uniform":
            return self
        return Distribution(self.kind, tuple(x * factor for x in self.params))

    @property
    def is_zero(self) -> bool:
        return self.kind in ("triangular", "constant") and max(self.params) == 0


def exponential(mean) -> Distribution:
    return Distribution("exponential", (float(mean),))


def triangular(low, mode, high) -> Distribution:
    return Distribution("triangular", (float(low), float(mode), float(high)))


def uniform(low=0.0, high=1.0) -> Distribution:
    return Distribution("uniform", (float(low), float(high)))


def triangular_ppf(u, low, mode, high):
    """Inverse CDF of the triangular distribution (scalar or array ``u``)."""
    width = high - low
    if width == 0:
        return np.full_like(u, low, dtype=float) if isinstance(u, np.ndarray) else float(low)
    cut = (mode - low) / width
    if isinstance(u, np.ndarray):
        left = low + np.sqrt(u * width * (mode - low))
        right = high - np.sqrt((1.0 - u) * width * (high - mode))
        return np.where(u < cut, left, right)
    if u < cut:
        return low + math.sqrt(u * width * (mode - low))
    return high - math.sqrt((1.0 - u) * width * (high - mode))


def sample(dist: Distribution, stream: RandomStream, size=None):
    """Draw from ``dist`` by inversion of the stream's uniforms."""
    k, p = dist.kind, dist.params
    if k == "constant":
        return float(p[0]) if size is None else np.full(size, float(p[0]))
    u = stream.uniform(size)
    if k == "triangular":
        return triangular_ppf(u, *p)
    if k == "exponential":
        if size is None:
            return -p[0] * math.log1p(-u)
        return -p[0] * np.log1p(-u)
    lo, hi = p or (0.0, 1.0)
    return lo + (hi - lo) * u


class NoArrivalsError(ValueError):
    """The arrival profile has no positive rate anywhere."""


class WeeklyProfile:
    """Piecewise-constant weekly arrival rate: 168 hourly rates (arrivals/hour).

    Hour 0 is Monday 00:00-01:00. The profile repeats every week.
    """

    def __init__(self, hourly_rates):
        rates = np.asarray(hourly_rates, dtype=float)
        if rates.shape != (HOURS_PER_WEEK,):
            raise ValueError(f"weekly profile needs {HOURS_PER_WEEK} hourly rates, got {rates.shape}")
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise ValueError("hourly rates must be finite and non-negative")
        self.rates = rates
        self.rates.setflags(write=False)
        self._cum = np.concatenate(([0.0], np.cumsum(rates)))
        self.weekly_total = float(self._cum[-1])

    @classmethod
    def constant(cls, per_hour: float) -> "WeeklyProfile":
        return cls(np.full(HOURS_PER_WEEK, float(per_hour)))

    @classmethod
    def from_daily_shape(cls, daily_weights, annual_total: float, weeks: int = 52) -> "WeeklyProfile":
        """Repeat a 24-hour shape over the week, normalised to ``annual_total``."""
        w = np.asarray(daily_weights, dtype=float)
        if w.shape != (24,):
            raise ValueError("daily shape needs 24 weights")
        week = np.tile(w, 7)
        if week.sum() <= 0:
            raise NoArrivalsError("daily shape is all zero")
        per_week = annual_total / weeks
        return cls(week * per_week / week.sum())

    def scaled(self, factor: float) -> "WeeklyProfile":
        return WeeklyProfile(self.rates * factor)

    def _require_positive(self):
        if self.weekly_total <= 0:
            raise NoArrivalsError("arrival profile is zero in every hour")

    def rate_at(self, t):
        """Arrivals per minute at time ``t`` (minutes)."""
        h = (np.floor(np.asarray(t) / MINUTES_PER_HOUR).astype(int)) % HOURS_PER_WEEK
        return self.rates[h] / MINUTES_PER_HOUR

    def cumulative(self, t):
        """Expected arrivals in [0, t]."""
        t = np.asarray(t, dtype=float)
        weeks = np.floor(t / MINUTES_PER_WEEK)
        tau = t - weeks * MINUTES_PER_WEEK
        h = np.minimum((tau // MINUTES_PER_HOUR).astype(int), HOURS_PER_WEEK - 1)
        out = weeks * self.weekly_total + self._cum[h] + self.rates[h] * (tau - h * MINUTES_PER_HOUR) / MINUTES_PER_HOUR
        return out if out.ndim else float(out)

    def inverse_cumulative(self, s):
        """Earliest time at which the cumulative intensity reaches ``s``.

        Zero-rate hours are skipped, so no returned time ever lies inside one.
        """
        self._require_positive()
        s = np.asarray(s, dtype=float)
        weeks = np.floor(s / self.weekly_total)
        rem = s - weeks * self.weekly_total
        # side='right' lands on the hour whose cumulative range contains rem,
        # which always has a positive rate
        h = np.searchsorted(self._cum, rem, side="right") - 1
        over = h >= HOURS_PER_WEEK
        if np.any(over):  # float round-off at the week boundary
            weeks = np.where(over, weeks + 1, weeks)
            rem = np.where(over, 0.0, rem)
            h = np.where(over, np.searchsorted(self._cum, 0.0, side="right") - 1, h)
        frac = (rem - self._cum[h]) / self.rates[h]
        out = weeks * MINUTES_PER_WEEK + (h + frac) * MINUTES_PER_HOUR
        return out if out.ndim else float(out)


def next_arrival(profile: WeeklyProfile, clock: float, stream: RandomStream) -> float:
    """Next event time of the non-homogeneous Poisson process after ``clock``.

    Inversion of the cumulative intensity: a unit-rate exponential step in
    "expected arrivals" is mapped back to calendar time. A constant profile
    reduces exactly to exponential inter-arrival times.
    """
    profile._require_positive()
    e = -math.log1p(-stream.uniform())
    return float(profile.inverse_cumulative(profile.cumulative(clock) + e))


def generate_arrivals(profile: WeeklyProfile, start: float, end: float, stream: RandomStream) -> np.ndarray:
    """All arrival times in (start, end], vectorised.

    On a fresh stream this yields the same times (to round-off) as chaining
    :func:`next_arrival` from ``start``; the stream is left further advanced.
    """
    profile._require_positive()
    s0 = profile.cumulative(start)
    s_end = profile.cumulative(end)
    expected = s_end - s0
    chunk = int(expected + 6 * math.sqrt(expected) + 64)
    steps = []
    total = s0
    while True:
        u = stream.uniform(chunk)
        inc = -np.log1p(-u)
        cum = total + np.cumsum(inc)
        steps.append(cum)
        total = cum[-1]
        if total > s_end:
            break
        chunk = max(64, chunk // 4)
    s = np.concatenate(steps)
    s = s[s <= s_end]
    return profile.inverse_cumulative(s)
