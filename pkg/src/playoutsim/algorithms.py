"""Playout-delay estimators.

Each estimator consumes packets one at a time through ``update`` and
reports the playout delay it would apply to a talkspurt starting now
through ``playout_delay``. The simulator calls ``playout_delay`` once per
talkspurt, right after updating with the talkspurt's first packet.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, ClassVar, Mapping

from .packet import PacketObservation

THRESHOLDS = (1.1, 1.5, 1.75)


class EstimatorStateError(RuntimeError):
    """Raised when a playout decision is requested before any packet."""


class Mode(enum.Enum):
    NORMAL = "normal"
    SPIKE = "spike"


@dataclass
class Estimator:
    algorithm_id: ClassVar[str] = ""

    def update(self, obs: PacketObservation) -> None:
        raise NotImplementedError

    def playout_delay(self) -> float:
        raise NotImplementedError

    @classmethod
    def param_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls) if f.init)


@dataclass
class ExpAvg(Estimator):
    """Exponentially weighted mean and mean deviation, ``p = d + 4v``."""

    algorithm_id: ClassVar[str] = "exp-avg"

    alpha: float = 0.998002
    safety_factor: float = 4.0

    d: float = field(default=0.0, init=False)
    v: float = field(default=0.0, init=False)
    initialized: bool = field(default=False, init=False)

    def __post_init__(self):
        _check_alpha(self.alpha)

    def update(self, obs: PacketObservation) -> None:
        n = obs.network_delay_ms
        if not self.initialized:
            self.d, self.v, self.initialized = n, 0.0, True
            return
        a = self.alpha
        self.d = a * self.d + (1 - a) * n
        # v uses the freshly updated d
        self.v = a * self.v + (1 - a) * abs(self.d - n)

    def playout_delay(self) -> float:
        if not self.initialized:
            raise EstimatorStateError("exp-avg: no packet observed yet")
        return max(0.0, self.d + self.safety_factor * self.v)


@dataclass
class MinDelay(Estimator):
    """Plays the next talkspurt at the previous talkspurt's minimum delay
    plus ``4v``, with ``v`` from the Exp-Avg recurrence."""

    algorithm_id: ClassVar[str] = "min-d"

    alpha: float = 0.998002
    safety_factor: float = 4.0

    current_min: float = field(default=math.inf, init=False)
    previous_min: float | None = field(default=None, init=False)
    talkspurt_packets: int = field(default=0, init=False)
    d: float = field(default=0.0, init=False)
    v: float = field(default=0.0, init=False)
    initialized: bool = field(default=False, init=False)

    def __post_init__(self):
        _check_alpha(self.alpha)

    def update(self, obs: PacketObservation) -> None:
        n = obs.network_delay_ms
        if not self.initialized:
            self.d, self.v, self.initialized = n, 0.0, True
            self.current_min, self.talkspurt_packets = n, 1
            return
        a = self.alpha
        self.d = a * self.d + (1 - a) * n
        self.v = a * self.v + (1 - a) * abs(self.d - n)
        if obs.is_talkspurt_start:
            self.previous_min = self.current_min
            self.current_min, self.talkspurt_packets = n, 1
        else:
            self.current_min = min(self.current_min, n)
            self.talkspurt_packets += 1

    def playout_delay(self) -> float:
        if not self.initialized:
            raise EstimatorStateError("min-d: no packet observed yet")
        # first talkspurt has no predecessor; fall back to the first delay
        base = self.previous_min if self.previous_min is not None else self.current_min
        return max(0.0, base + self.safety_factor * self.v)


@dataclass
class SpikeDetection(Estimator):
    """Exp-Avg with a faster weight and a SPIKE mode that follows the
    delay one-for-one until the spike drains.

    ``spike_entry_margin`` and ``spike_exit_threshold`` are in the same
    unit as the trace delays.
    """

    algorithm_id: ClassVar[str] = "spike-det"

    alpha: float = 0.875
    spike_entry_margin: float = 800.0
    spike_exit_threshold: float = 63.0
    safety_factor: float = 4.0

    mode: Mode = field(default=Mode.NORMAL, init=False)
    d: float = field(default=0.0, init=False)
    v: float = field(default=0.0, init=False)
    var: float = field(default=0.0, init=False)
    n_prev: float = field(default=0.0, init=False)
    n_prev2: float = field(default=0.0, init=False)
    count: int = field(default=0, init=False)

    def __post_init__(self):
        _check_alpha(self.alpha)

    def update(self, obs: PacketObservation) -> None:
        n = obs.network_delay_ms
        a = self.alpha
        if self.count == 0:
            self.d, self.v = n, 0.0
            self.n_prev = self.n_prev2 = n
            self.count = 1
            return
        self.count += 1
        # the first two packets only seed the delay history
        if self.count > 2:
            if self.mode is Mode.NORMAL:
                if abs(n - self.n_prev) > abs(self.v) * 2 + self.spike_entry_margin:
                    self.var = 0.0
                    self.mode = Mode.SPIKE
                else:
                    self.var = self.var / 2 + abs(2 * n - self.n_prev - self.n_prev2) / 8
            else:
                self.var = self.var / 2 + abs(2 * n - self.n_prev - self.n_prev2) / 8
                if self.var <= self.spike_exit_threshold:
                    self.mode = Mode.NORMAL
                    self._shift(n)
                    return
        if self.mode is Mode.NORMAL:
            self.d = a * self.d + (1 - a) * n
        else:
            self.d = self.d + n - self.n_prev
        self.v = a * self.v + (1 - a) * abs(self.d - n)
        self._shift(n)

    def _shift(self, n: float) -> None:
        self.n_prev2, self.n_prev = self.n_prev, n

    def playout_delay(self) -> float:
        if self.count == 0:
            raise EstimatorStateError("spike-det: no packet observed yet")
        return max(0.0, self.d + self.safety_factor * self.v)


def select_threshold(ts_max: float, ts_min: float) -> float:
    """Pick the sign-generator threshold from one talkspurt's delay range."""
    if ts_max > 3.0 * ts_min:
        return 1.75
    if ts_max > 1.5 * ts_min:
        return 1.5
    return 1.1


@dataclass
class Suggested(Estimator):
    """Variance-stepped estimator with a runtime threshold and spike mode.

    In NORMAL mode the estimate moves by one windowed standard deviation
    per packet: down when it exceeds ``threshold`` times the current
    packet delay, up otherwise. A packet more than ``head`` times the
    estimate switches to SPIKE mode, where the estimate equals the packet
    delay until delays fall back under ``tail`` times the pre-spike
    estimate.
    """

    algorithm_id: ClassVar[str] = "suggested"

    window_n: int = 50
    head: float = 2.0
    tail: float = 1.2
    variance_update: str = "corrected"
    initial_threshold: float = 1.5

    mode: Mode = field(default=Mode.NORMAL, init=False)
    d: float = field(default=0.0, init=False)
    variance: float = field(default=0.0, init=False)
    deviations: deque = field(default_factory=deque, init=False)
    delays: deque = field(default_factory=deque, init=False)
    delay_sum: float = field(default=0.0, init=False)
    sign_generator: int = field(default=1, init=False)
    threshold: float = field(default=1.5, init=False)
    ts_max: float = field(default=0.0, init=False)
    ts_min: float = field(default=0.0, init=False)
    old_d: float = field(default=0.0, init=False)
    last_delay: float = field(default=0.0, init=False)
    count: int = field(default=0, init=False)

    def __post_init__(self):
        if self.window_n < 1:
            raise ValueError(f"window_n must be >= 1, got {self.window_n}")
        if self.head <= 0 or self.tail <= 0:
            raise ValueError("head and tail must be positive")
        if self.variance_update not in ("corrected", "paper-literal"):
            raise ValueError(f"unknown variance_update {self.variance_update!r}")
        if self.initial_threshold not in THRESHOLDS:
            raise ValueError(f"initial_threshold must be one of {THRESHOLDS}")
        self.threshold = self.initial_threshold

    def update(self, obs: PacketObservation) -> None:
        n = obs.network_delay_ms
        start = obs.is_talkspurt_start
        if self.count == 0:
            self.d = n
            self.ts_max = self.ts_min = n
            self.deviations.append(0.0)
            self.delays.append(n)
            self.delay_sum = n
            self.last_delay = n
            self.count = 1
            return
        self.count += 1

        if start:
            # extrema still describe the talkspurt that just ended
            self.threshold = select_threshold(self.ts_max, self.ts_min)
            self.ts_max = self.ts_min = n
        else:
            self.ts_max = max(self.ts_max, n)
            self.ts_min = min(self.ts_min, n)

        if self.mode is Mode.NORMAL:
            if n > self.head * self.d:
                self.mode = Mode.SPIKE
                self.old_d = self.d
                self.d = n
            else:
                # spike packets stay out of the variance window
                self._push_deviation(n - self.delay_sum / len(self.delays))
                self._push_delay(n)
                # d is still the playout delay given to the previous packet
                drop = not start and self.d > self.threshold * n
                self.sign_generator = -1 if drop else 1
                step = math.sqrt(self.variance)
                floor = max(0.0, min(self.delays) - step)
                self.d = max(floor, self.d + step * self.sign_generator)
        else:
            self.d = n
            if n <= self.tail * self.old_d:
                self.mode = Mode.NORMAL
        self.last_delay = n

    def _push_deviation(self, dev: float) -> None:
        oldest = self.deviations.popleft() if len(self.deviations) == self.window_n else 0.0
        self.deviations.append(dev)
        if self.variance_update == "corrected":
            delta = (dev * dev - oldest * oldest) / self.window_n
        else:
            delta = (oldest * oldest - dev * dev) / self.window_n
        self.variance = max(0.0, self.variance + delta)

    def _push_delay(self, n: float) -> None:
        if len(self.delays) == self.window_n:
            self.delay_sum -= self.delays.popleft()
        self.delays.append(n)
        self.delay_sum += n

    def playout_delay(self) -> float:
        if self.count == 0:
            raise EstimatorStateError("suggested: no packet observed yet")
        return max(0.0, self.d)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


ALGORITHMS: dict[str, type[Estimator]] = {
    cls.algorithm_id: cls for cls in (ExpAvg, MinDelay, SpikeDetection, Suggested)
}


def make_estimator(algorithm_id: str, params: Mapping[str, Any] | None = None) -> Estimator:
    """Build a fresh estimator from its string id and flat parameters.

    Parameter values may be strings (as read from the command line or a
    config file); they are coerced to the type of the field's default.
    """
    try:
        cls = ALGORITHMS[algorithm_id]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {algorithm_id!r}, expected one of {sorted(ALGORITHMS)}"
        ) from None
    fields = {f.name: f for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in (params or {}).items():
        if key not in fields:
            raise ValueError(
                f"{algorithm_id}: unknown parameter {key!r}, expected one of {sorted(fields)}"
            )
        kind = type(fields[key].default)
        try:
            kwargs[key] = kind(value)
        except (TypeError, ValueError):
            raise ValueError(f"{algorithm_id}: bad value {value!r} for {key}") from None
    return cls(**kwargs)
