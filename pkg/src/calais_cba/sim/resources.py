"""Bounded FIFO queues and multi-server resources with time-weighted statistics."""

from __future__ import annotations

from collections import deque

__all__ = ["UNBOUNDED", "QueueFullError", "BoundedQueue", "Resource"]

# "unbounded" queues are realised as a very large finite capacity
UNBOUNDED = 1_000_000


class QueueFullError(RuntimeError):
    pass


class BoundedQueue:
    """FIFO queue with a capacity, maximum length and time-weighted mean length."""

    __slots__ = ("name", "capacity", "_items", "max_length", "_area", "_last", "_start",
                 "entered", "_half_mark", "_half_area")

    def __init__(self, name: str, capacity: int | None = UNBOUNDED, start: float = 0.0):
        if capacity is None:
            capacity = UNBOUNDED
        if capacity < 0:
            raise ValueError("queue capacity must be non-negative")
        self.name = name
        self.capacity = int(capacity)
        self._items = deque()
        self.max_length = 0
        self._area = 0.0
        self._last = start
        self._start = start
        self.entered = 0
        self._half_mark = None
        self._half_area = None

    def __len__(self):
        return len(self._items)

    def __bool__(self):
        return bool(self._items)

    def _advance(self, now):
        if self._half_mark is not None and self._half_area is None and now >= self._half_mark:
            self._half_area = self._area + len(self._items) * (self._half_mark - self._last)
        self._area += len(self._items) * (now - self._last)
        self._last = now

    def mark_half(self, time: float):
        """Record the area at ``time`` too, for growth (bottleneck) checks."""
        self._half_mark = time

    @property
    def full(self) -> bool:
        return len(self._items) >= self.capacity

    def push(self, item, now: float):
        if len(self._items) >= self.capacity:
            raise QueueFullError(f"queue {self.name!r} at capacity {self.capacity}")
        self._advance(now)
        self._items.append(item)
        n = len(self._items)
        assert n <= self.capacity
        if n > self.max_length:
            self.max_length = n
        self.entered += 1

    def pop(self, now: float):
        self._advance(now)
        return self._items.popleft()

    def drain(self, now: float):
        """Remove and return every waiting item."""
        self._advance(now)
        items = list(self._items)
        self._items.clear()
        return items

    def mean_length(self, now: float) -> float:
        self._advance(now)
        span = now - self._start
        return self._area / span if span > 0 else 0.0

    def first_half_mean(self) -> float | None:
        if self._half_area is None or self._half_mark is None or self._half_mark <= self._start:
            return None
        return self._half_area / (self._half_mark - self._start)


class Resource:
    """``capacity`` identical servers; tracks busy time for utilisation."""

    __slots__ = ("name", "capacity", "busy", "_area", "_last", "_start", "served")

    def __init__(self, name: str, capacity: int, start: float = 0.0):
        if capacity < 0:
            raise ValueError("resource capacity must be non-negative")
        self.name = name
        self.capacity = int(capacity)
        self.busy = 0
        self._area = 0.0
        self._last = start
        self._start = start
        self.served = 0

    @property
    def available(self) -> bool:
        return self.busy < self.capacity

    def acquire(self, now: float):
        if self.busy >= self.capacity:
            raise RuntimeError(f"resource {self.name!r} has no free server")
        self._area += self.busy * (now - self._last)
        self._last = now
        self.busy += 1

    def release(self, now: float):
        if self.busy <= 0:
            raise RuntimeError(f"resource {self.name!r} released while idle")
        self._area += self.busy * (now - self._last)
        self._last = now
        self.busy -= 1
        self.served += 1

    def utilization(self, now: float) -> float:
        span = now - self._start
        if self.capacity == 0 or span <= 0:
            return 0.0
        area = self._area + self.busy * (now - self._last)
        return min(1.0, area / (self.capacity * span))
