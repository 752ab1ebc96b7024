import logging
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from ..numkit import Matrix, Vector
from .types import DataPoint, ObservedPair


logger = logging.getLogger(__name__)


class SlidingWindow:
    """
    Fixed-capacity ring buffer of observed pairs.

    Storage is slot-addressed: `slots()` lists the physical slot of every stored pair from
    oldest to newest, so learners can keep per-pair caches in arrays aligned with the ring.
    """

    __slots__ = ("capacity", "dims", "_points", "_targets", "_head", "_count")

    def __init__(self, capacity: int, dims: int) -> None:
        assert capacity > 0, "window capacity must be positive"
        self.capacity = capacity
        self.dims = dims
        self._points: Matrix = np.zeros((capacity, dims))
        self._targets: Vector = np.zeros(capacity)
        self._head = 0  # next slot to write
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def __iter__(self) -> Iterator[ObservedPair]:
        for slot in self.slots():
            yield ObservedPair(self._points[slot].copy(), float(self._targets[slot]))

    @property
    def full(self) -> bool:
        return self._count == self.capacity

    @property
    def oldest_slot(self) -> int:
        return (self._head - self._count) % self.capacity

    @property
    def newest_slot(self) -> int:
        assert self._count > 0
        return (self._head - 1) % self.capacity

    def slots(self) -> NDArray[np.intp]:
        return (self.oldest_slot + np.arange(self._count)) % self.capacity

    def push(self, pair: ObservedPair) -> ObservedPair | None:
        """Stores pair as the newest element; returns the evicted oldest pair when full."""
        dropped = None
        if self.full:
            slot = self.oldest_slot
            dropped = ObservedPair(self._points[slot].copy(), float(self._targets[slot]))
            self._count -= 1
        self._points[self._head] = pair.point
        self._targets[self._head] = pair.target
        self._head = (self._head + 1) % self.capacity
        self._count += 1
        return dropped

    def pop_oldest(self) -> ObservedPair:
        assert self._count > 0, "pop from empty window"
        slot = self.oldest_slot
        self._count -= 1
        return ObservedPair(self._points[slot].copy(), float(self._targets[slot]))

    def find(self, point: DataPoint) -> int | None:
        """Slot of a stored pair with exactly equal features, if any."""
        slots = self.slots()
        if slots.size == 0:
            return None
        hits = np.flatnonzero(np.all(self._points[slots] == point, axis=1))
        return int(slots[hits[0]]) if hits.size else None

    def overwrite_target(self, slot: int, target: float) -> float:
        previous = float(self._targets[slot])
        self._targets[slot] = target
        return previous

    def point_at(self, slot: int) -> DataPoint:
        return self._points[slot]

    def target_at(self, slot: int) -> float:
        return float(self._targets[slot])

    def points(self) -> Matrix:
        """Stored points, oldest first (copy)."""
        return self._points[self.slots()]

    def targets(self) -> Vector:
        """Stored targets, oldest first (copy)."""
        return self._targets[self.slots()]

    @property
    def raw_points(self) -> Matrix:
        return self._points

    @property
    def raw_targets(self) -> Vector:
        return self._targets

    def clear(self) -> None:
        self._head = 0
        self._count = 0
