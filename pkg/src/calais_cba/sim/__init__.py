"""Discrete-event simulation kernel: calendar, streams, resources, statistics."""

from .engine import EventCalendar, OrderingError, Simulation, run_until
from .random import (
    MINUTES_PER_YEAR,
    Distribution,
    NoArrivalsError,
    RandomStream,
    WeeklyProfile,
    exponential,
    generate_arrivals,
    next_arrival,
    sample,
    triangular,
    uniform,
)
from .resources import UNBOUNDED, BoundedQueue, QueueFullError, Resource
from .stats import (
    InsufficientDataError,
    StationStats,
    StatsCollector,
    Summary,
    replications_needed,
    summarize,
)

__all__ = [
    "EventCalendar", "OrderingError", "Simulation", "run_until",
    "MINUTES_PER_YEAR", "Distribution", "NoArrivalsError", "RandomStream", "WeeklyProfile",
    "exponential", "generate_arrivals", "next_arrival", "sample", "triangular", "uniform",
    "UNBOUNDED", "BoundedQueue", "QueueFullError", "Resource",
    "InsufficientDataError", "StationStats", "StatsCollector", "Summary",
    "replications_needed", "summarize",
]
