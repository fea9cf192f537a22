"""Event-scheduling kernel.

Events live in a binary heap keyed by ``(time, sequence)``; the sequence
number is the insertion order, so simultaneous events run first-scheduled
first-served regardless of what they carry.
"""

from __future__ import annotations

import heapq
import math

__all__ = ["OrderingError", "EventCalendar", "Simulation", "run_until"]


class OrderingError(RuntimeError):
    """An event was scheduled before the current clock."""


class EventCalendar:
    """Future-event list with deterministic tie-breaking."""

    __slots__ = ("_heap", "_seq", "clock")

    def __init__(self):
        self._heap = []
        self._seq = 0
        self.clock = 0.0

    def __len__(self):
        return len(self._heap)

    def push(self, time, fn, arg=None):
        if time < self.clock or math.isnan(time):
            raise OrderingError(f"event at t={time!r} scheduled in the past (clock={self.clock!r})")
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, fn, arg))

    def peek_time(self):
        return self._heap[0][0] if self._heap else math.inf

    def pop(self):
        time, _, fn, arg = heapq.heappop(self._heap)
        self.clock = time
        return time, fn, arg


class Simulation:
    """Owns the calendar and the clock; models schedule callbacks on it.

    Callbacks take a single argument (``None`` when scheduled without one).
    """

    def __init__(self):
        self.calendar = EventCalendar()
        self.events_executed = 0
        self._feed = None
        self._feed_pos = 0

    def feed(self, times, fn):
        """Attach a pre-sampled, sorted stream of external arrivals.

        ``fn(k)`` runs at ``times[k]``. The feed is merged with the calendar
        without heap traffic; on equal timestamps feed entries run first.
        """
        times = [float(t) for t in times]
        if any(b < a for a, b in zip(times, times[1:])):
            raise OrderingError("feed times must be sorted")
        if times and times[0] < self.calendar.clock:
            raise OrderingError("feed starts before the clock")
        self._feed = (times, fn)
        self._feed_pos = 0

    @property
    def now(self) -> float:
        return self.calendar.clock

    def schedule_at(self, time, fn, arg=None):
        self.calendar.push(time, fn, arg)

    def schedule(self, delay, fn, arg=None):
        if delay < 0:
            raise OrderingError(f"negative delay {delay!r}")
        self.calendar.push(self.calendar.clock + delay, fn, arg)

    def run(self, end_time) -> int:
        """Execute every event with timestamp <= ``end_time``; return how many ran."""
        cal = self.calendar
        if end_time < cal.clock:
            raise OrderingError(f"end_time {end_time!r} is before the clock {cal.clock!r}")
        heap = cal._heap
        pop = heapq.heappop
        n = 0
        if self._feed is not None:
            ftimes, ffn = self._feed
            nf = len(ftimes)
            k = self._feed_pos
            inf = math.inf
            while True:
                tf = ftimes[k] if k < nf else inf
                if heap and heap[0][0] < tf:
                    if heap[0][0] > end_time:
                        break
                    time, _, fn, arg = pop(heap)
                    cal.clock = time
                    fn(arg)
                elif tf <= end_time:
                    cal.clock = tf
                    ffn(k)
                    k += 1
                else:
                    break
                n += 1
            self._feed_pos = k
        else:
            while heap and heap[0][0] <= end_time:
                time, _, fn, arg = pop(heap)
                cal.clock = time
                fn(arg)
                n += 1
        cal.clock = float(end_time)
        self.events_executed += n
        return n


def run_until(model, end_time, sim: Simulation | None = None):
    """Initialise ``model`` on a fresh simulation, run to ``end_time`` and
    return the model's finalized :class:`~calais_cba.sim.stats.StatsCollector`.

    A model provides ``initialize(sim)`` and ``finalize(sim, end_time)``.
    """
    if not end_time > 0:
        raise ValueError("end_time must be positive")
    sim = sim or Simulation()
    model.initialize(sim)
    sim.run(end_time)
    return model.finalize(sim, end_time)
