"""Statistics collection and replication output analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

__all__ = [
    "InsufficientDataError",
    "StationStats",
    "StatsCollector",
    "Summary",
    "summarize",
    "replications_needed",
    "REPLICATION_FLOOR",
]

REPLICATION_FLOOR = 5


class InsufficientDataError(ValueError):
    pass


@dataclass
class StationStats:
    """Finalised figures for one station (resource plus its queue)."""

    name: str
    servers: int
    utilization: float
    served: int
    throughput_per_hour: float
    waits: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    queue_capacity: int | None = None
    max_queue: int = 0
    mean_queue: float = 0.0
    first_half_mean_queue: float | None = None
    rejected: int = 0

    @property
    def bottleneck(self) -> bool:
        """Saturated, or a queue whose running average keeps growing with run length."""
        if self.utilization >= 0.95:
            return True
        h = self.first_half_mean_queue
        return h is not None and self.mean_queue > 1.0 and self.mean_queue > 1.5 * h

    def wait_quantiles(self, qs=(0.5, 0.9, 0.95, 0.99)) -> dict:
        if len(self.waits) == 0:
            return {q: 0.0 for q in qs}
        return dict(zip(qs, np.quantile(self.waits, qs).tolist()))

    def as_dict(self) -> dict:
        d = {
            "station": self.name,
            "servers": self.servers,
            "utilization": self.utilization,
            "served": self.served,
            "throughput_per_hour": self.throughput_per_hour,
            "queue_capacity": self.queue_capacity,
            "max_queue": self.max_queue,
            "mean_queue": self.mean_queue,
            "rejected": self.rejected,
            "mean_wait": float(self.waits.mean()) if len(self.waits) else 0.0,
            "bottleneck": self.bottleneck,
        }
        for q, v in self.wait_quantiles().items():
            d[f"wait_q{int(q * 100)}"] = v
        return d


@dataclass
class StatsCollector:
    """Everything a run reports: stations, outcome counts, entity flow, time in system."""

    end_time: float = 0.0
    stations: dict = field(default_factory=dict)
    outcomes: dict = field(default_factory=dict)
    created: int = 0
    disposed: int = 0
    in_flight: int = 0
    time_in_system: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    events: int = 0

    def count(self, outcome: str, n: int = 1):
        self.outcomes[outcome] = self.outcomes.get(outcome, 0) + n

    def conserved(self) -> bool:
        return self.created == self.disposed + self.in_flight

    def bottlenecks(self) -> list:
        return [name for name, st in self.stations.items() if st.bottleneck]

    def as_dict(self) -> dict:
        """Plain-data view, used for serialisation and determinism checks."""
        tis = self.time_in_system
        return {
            "end_time": self.end_time,
            "created": self.created,
            "disposed": self.disposed,
            "in_flight": self.in_flight,
            "events": self.events,
            "outcomes": dict(sorted(self.outcomes.items())),
            "stations": {k: v.as_dict() for k, v in sorted(self.stations.items())},
            "time_in_system_mean": float(tis.mean()) if len(tis) else 0.0,
            "time_in_system_q95": float(np.quantile(tis, 0.95)) if len(tis) else 0.0,
        }


@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    half_width: float
    n: int
    confidence: float = 0.95

    @property
    def se(self) -> float:
        return self.sd / math.sqrt(self.n)

    @property
    def ci(self) -> tuple:
        return self.mean - self.half_width, self.mean + self.half_width


def summarize(values, confidence: float = 0.95) -> Summary:
    """Mean, unbiased SD and Student-t confidence half-width of replication outputs."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 2:
        raise InsufficientDataError("need at least two replications")
    sd = float(x.std(ddof=1))
    t = sps.t.ppf(1 - (1 - confidence) / 2, n - 1)
    return Summary(float(x.mean()), sd, float(t * sd / math.sqrt(n)), n, confidence)


def replications_needed(samples, confidence: float = 0.95, precision: float = 5.0,
                        floor: int = REPLICATION_FLOOR, cap: int = 10_000) -> int:
    """Smallest n >= ``floor`` whose CI half-width is within ``precision`` percent of the mean.

    The pilot's SD is carried forward as the estimate for larger n; only the
    t-quantile and sqrt(n) change. Returns ``cap`` if even that is not enough.
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError("need at least two pilot replications")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if not precision > 0:
        raise ValueError("precision must be positive")
    mean = float(x.mean())
    if mean == 0:
        raise ZeroDivisionError("relative precision is undefined for a zero mean")
    sd = float(x.std(ddof=1))
    alpha = 1 - confidence
    for n in range(max(floor, 2), cap + 1):
        t = sps.t.ppf(1 - alpha / 2, n - 1)
        if 100.0 * t * sd / math.sqrt(n) / abs(mean) <= precision:
            return n
    return cap
