"""Trace replay with per-talkspurt playout scheduling and late-loss accounting."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .algorithms import ALGORITHMS, Estimator, make_estimator
from .quality import DEFAULT_PARAMS, QualityParams, conversational_mos
from .trace import DelayTrace


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    algorithm_id: str
    algorithm_params: Mapping[str, Any] = field(default_factory=dict)
    window_ms: float = 5000.0

    def __post_init__(self):
        if self.algorithm_id not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm_id!r}, expected one of {sorted(ALGORITHMS)}"
            )
        if not self.window_ms > 0:
            raise ValueError(f"window_ms must be positive, got {self.window_ms}")


@dataclass(frozen=True)
class PlayoutDecision:
    talkspurt_id: int
    playout_delay_ms: float


@dataclass(frozen=True)
class RunMetrics:
    avg_playout_delay_ms: float
    loss_pct: float
    r_factor: float
    mos: float
    played_count: int
    lost_count: int

    @property
    def total_count(self) -> int:
        return self.played_count + self.lost_count


@dataclass(frozen=True)
class MosPoint:
    window_start_ms: float
    mos: float
    loss_pct: float
    avg_delay_ms: float
    packets: int


@dataclass(frozen=True)
class MosTimeseries:
    window_ms: float
    points: tuple[MosPoint, ...]


@dataclass(frozen=True)
class PacketOutcome:
    seq: int
    send_time_ms: float
    network_delay_ms: float
    playout_delay_ms: float
    lost: bool


def replay(trace: DelayTrace, estimator: Estimator) -> tuple[list[PlayoutDecision], list[PacketOutcome]]:
    """Drive ``estimator`` over the trace and classify every packet.

    The playout delay of a talkspurt is frozen right after the estimator
    has seen the talkspurt's first packet. A packet is late, hence lost,
    when it arrives strictly after its playout time. Lost packets still
    update the estimator.
    """
    decisions: list[PlayoutDecision] = []
    outcomes: list[PacketOutcome] = []
    p = 0.0
    for pkt in trace.packets:
        estimator.update(pkt)
        if pkt.is_talkspurt_start:
            p = estimator.playout_delay()
            if not (math.isfinite(p) and p >= 0):
                raise SimulationError(f"invalid playout delay {p!r} for talkspurt {pkt.talkspurt_id}")
            decisions.append(PlayoutDecision(pkt.talkspurt_id, p))
        lost = pkt.arrival_time_ms > pkt.send_time_ms + p
        outcomes.append(PacketOutcome(pkt.seq, pkt.send_time_ms, pkt.network_delay_ms, p, lost))
    return decisions, outcomes


def _aggregate(outcomes: Iterable[PacketOutcome]) -> tuple[float, float, int, int]:
    played = lost = 0
    delay_sum = 0.0
    for o in outcomes:
        if o.lost:
            lost += 1
        else:
            played += 1
            delay_sum += o.playout_delay_ms
    total = played + lost
    avg = delay_sum / played if played else 0.0
    loss = 100.0 * lost / total if total else 0.0
    return avg, loss, played, lost


def metrics_from_outcomes(outcomes: Sequence[PacketOutcome],
                          quality: QualityParams = DEFAULT_PARAMS) -> RunMetrics:
    avg, loss, played, lost = _aggregate(outcomes)
    r, mos = conversational_mos(avg, loss, quality)
    return RunMetrics(avg, loss, r, mos, played, lost)


def mos_timeseries(outcomes: Sequence[PacketOutcome], window_ms: float, duration_ms: float,
                   quality: QualityParams = DEFAULT_PARAMS) -> MosTimeseries:
    """Score contiguous windows of ``window_ms`` by send time.

    Windows with no packets report zero delay and zero loss. A window
    longer than the trace yields a single point.
    """
    if not outcomes:
        return MosTimeseries(window_ms, ())
    t0 = outcomes[0].send_time_ms
    n_windows = max(1, math.ceil(duration_ms / window_ms - 1e-9))
    buckets: list[list[PacketOutcome]] = [[] for _ in range(n_windows)]
    for o in outcomes:
        idx = min(int((o.send_time_ms - t0) // window_ms), n_windows - 1)
        buckets[idx].append(o)
    points = []
    for i, bucket in enumerate(buckets):
        avg, loss, played, lost = _aggregate(bucket)
        _, mos = conversational_mos(avg, loss, quality)
        points.append(MosPoint(t0 + i * window_ms, mos, loss, avg, played + lost))
    return MosTimeseries(window_ms, tuple(points))


def simulate_estimator(trace: DelayTrace, estimator: Estimator, window_ms: float = 5000.0,
                       quality: QualityParams = DEFAULT_PARAMS) -> tuple[RunMetrics, MosTimeseries]:
    if len(trace) == 0:
        raise SimulationError("cannot simulate an empty trace")
    _, outcomes = replay(trace, estimator)
    metrics = metrics_from_outcomes(outcomes, quality)
    return metrics, mos_timeseries(outcomes, window_ms, trace.duration_ms, quality)


def simulate(trace: DelayTrace, config: SimulationConfig,
             quality: QualityParams = DEFAULT_PARAMS) -> tuple[RunMetrics, MosTimeseries]:
    estimator = make_estimator(config.algorithm_id, config.algorithm_params)
    return simulate_estimator(trace, estimator, config.window_ms, quality)


def compare(trace: DelayTrace, configs: Sequence[SimulationConfig],
            quality: QualityParams = DEFAULT_PARAMS,
            max_workers: int | None = None) -> list[tuple[str, RunMetrics]]:
    """Run every config on the same trace; results keep the input order."""
    if not configs:
        raise ValueError("compare needs at least one config")

    def run(config: SimulationConfig) -> tuple[str, RunMetrics]:
        try:
            metrics, _ = simulate(trace, config, quality)
        except Exception as exc:
            raise SimulationError(f"{config.algorithm_id}: {exc}") from exc
        return config.algorithm_id, metrics

    if max_workers is None or max_workers <= 1:
        return [run(c) for c in configs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run, configs))


METRIC_FIELDS = ("avg_playout_delay_ms", "loss_pct", "r_factor", "mos", "played_count", "lost_count")
POINT_FIELDS = ("window_start_ms", "mos", "loss_pct", "avg_delay_ms", "packets")


def metrics_to_dict(metrics: RunMetrics) -> dict[str, Any]:
    return asdict(metrics)


def timeseries_to_dict(series: MosTimeseries) -> dict[str, Any]:
    return {"window_ms": series.window_ms, "points": [asdict(p) for p in series.points]}


def metrics_to_json(metrics: RunMetrics) -> str:
    return json.dumps(metrics_to_dict(metrics), indent=2) + "\n"


def timeseries_to_csv(series: MosTimeseries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(POINT_FIELDS)
    for p in series.points:
        writer.writerow([repr(getattr(p, f)) for f in POINT_FIELDS])
    return buf.getvalue()


def outcomes_to_csv(outcomes: Sequence[PacketOutcome]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("seq", "send_time_ms", "delay_ms", "playout_delay_ms", "lost"))
    for o in outcomes:
        writer.writerow((o.seq, f"{o.send_time_ms:.3f}", f"{o.network_delay_ms:.3f}",
                         repr(o.playout_delay_ms), int(o.lost)))
    return buf.getvalue()
