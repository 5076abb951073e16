"""
Deterministic virtual-time scheduler for simulated workers

Each worker repeats read -> compute -> send. A read at tick t draws a delay d
from the worker's latency range and schedules the matching send at t + d; the
worker reads again right after its send. Events at the same tick are ordered
by the order they were scheduled, so zero latency gives round-robin sends.
"""

import heapq
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence, Tuple

import numpy as np

from .exceptions import ConfigError

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    READ = 'read'
    SEND = 'send'


@dataclass(frozen=True)
class ScheduleEvent:
    tick: int
    kind: EventKind
    worker_id: int


@dataclass(frozen=True)
class LatencyModel:
    """Uniform integer delay ranges in virtual ticks, shared or per worker"""
    ranges: Tuple[Tuple[int, int], ...] = ((0, 0),)

    def __post_init__(self):
        for lo, hi in self.ranges:
            if lo < 0 or hi < lo:
                raise ConfigError(f"Latency range must satisfy 0 <= lo <= hi, got {lo}:{hi}")

    @classmethod
    def uniform(cls, lo: int, hi: int) -> 'LatencyModel':
        return cls(ranges=((lo, hi),))

    @classmethod
    def per_worker(cls, ranges: Sequence[Tuple[int, int]]) -> 'LatencyModel':
        return cls(ranges=tuple((int(lo), int(hi)) for lo, hi in ranges))

    @classmethod
    def parse(cls, text: str) -> 'LatencyModel':
        """'lo:hi' for all workers, or 'lo:hi,lo:hi,...' one range per worker"""
        try:
            ranges = [tuple(int(part) for part in item.split(':')) for item in text.split(',')]
        except ValueError:
            raise ConfigError(f"Latency must look like lo:hi, got '{text}'") from None
        if any(len(item) != 2 for item in ranges):
            raise ConfigError(f"Latency must look like lo:hi, got '{text}'")
        return cls.per_worker(ranges)

    def for_worker(self, worker_id: int) -> Tuple[int, int]:
        if len(self.ranges) == 1:
            return self.ranges[0]
        return self.ranges[worker_id]

    def check_workers(self, workers: int):
        if len(self.ranges) not in (1, workers):
            raise ConfigError(f"Latency model has {len(self.ranges)} ranges for {workers} workers")

    def __str__(self):
        return ','.join(f"{lo}:{hi}" for lo, hi in self.ranges)


def simulated_schedule(seed: int, latency: LatencyModel, workers: int) -> Iterator[ScheduleEvent]:
    """Endless, seed-determined stream of worker read/send events"""
    latency.check_workers(workers)
    rng = np.random.default_rng([seed, 0x5C4ED])
    order = itertools.count()
    pending = []
    for worker_id in range(workers):
        heapq.heappush(pending, (0, next(order), EventKind.READ, worker_id))

    while True:
        tick, _, kind, worker_id = heapq.heappop(pending)
        yield ScheduleEvent(tick, kind, worker_id)
        if kind is EventKind.READ:
            lo, hi = latency.for_worker(worker_id)
            delay = int(rng.integers(lo, hi + 1))
            heapq.heappush(pending, (tick + delay, next(order), EventKind.SEND, worker_id))
        else:
            heapq.heappush(pending, (tick, next(order), EventKind.READ, worker_id))
