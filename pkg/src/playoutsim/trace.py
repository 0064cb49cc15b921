"""Delay traces: the data model, synthetic network profiles and CSV I/O.

Canonical CSV layout::

    seq,send_time_ms,delay_ms,talkspurt_id
    0,0.000,51.204,0
    1,20.000,50.871,0

An optional fifth column ``talkspurt_start`` (0/1) is accepted on input;
when absent, talkspurt starts are taken from ``talkspurt_id`` changes.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .packet import PacketObservation

CSV_HEADER = ("seq", "send_time_ms", "delay_ms", "talkspurt_id")
DEFAULT_PACKET_INTERVAL_MS = 20.0


class TraceError(ValueError):
    """A trace failed to parse or violates the trace invariants."""


@dataclass(frozen=True)
class NetworkProfile:
    name: str
    base_delay_ms: float
    jitter_scale_ms: float
    spike_probability: float
    spike_magnitude_ms: float
    spike_decay: float
    talkspurt_len_range: tuple[int, int] = (10, 80)
    packet_interval_ms: float = DEFAULT_PACKET_INTERVAL_MS

    def __post_init__(self):
        if not 0 <= self.spike_probability <= 1:
            raise ValueError(f"spike_probability must lie in [0, 1], got {self.spike_probability}")
        if not 0 < self.spike_decay < 1:
            raise ValueError(f"spike_decay must lie in (0, 1), got {self.spike_decay}")
        for name in ("base_delay_ms", "jitter_scale_ms", "spike_magnitude_ms"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        lo, hi = self.talkspurt_len_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad talkspurt_len_range {self.talkspurt_len_range}")
        if self.packet_interval_ms <= 0:
            raise ValueError("packet_interval_ms must be positive")


# Jitter is a shifted exponential; spikes jump by spike_magnitude_ms and
# decay geometrically. Values chosen to land in the delay/loss regimes of
# the published comparison tables.
PROFILES: dict[str, NetworkProfile] = {
    "stable": NetworkProfile("stable", 50.0, 1.0, 0.0005, 80.0, 0.9),
    "medium_jitter": NetworkProfile("medium_jitter", 50.0, 10.0, 0.002, 100.0, 0.3),
    "high_jitter": NetworkProfile("high_jitter", 50.0, 20.0, 0.03, 700.0, 0.7),
}


@dataclass(frozen=True)
class DelayTrace:
    packets: tuple[PacketObservation, ...]
    profile_name: str = "custom"
    base_delay_ms: float = 0.0
    seed: int | None = None
    packet_interval_ms: float = DEFAULT_PACKET_INTERVAL_MS

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))
        validate_packets(self.packets)

    def __len__(self) -> int:
        return len(self.packets)

    def __iter__(self):
        return iter(self.packets)

    @property
    def delays(self) -> list[float]:
        return [p.network_delay_ms for p in self.packets]

    @property
    def duration_ms(self) -> float:
        if not self.packets:
            return 0.0
        return self.packets[-1].send_time_ms - self.packets[0].send_time_ms + self.packet_interval_ms

    def talkspurts(self) -> list[list[PacketObservation]]:
        runs: list[list[PacketObservation]] = []
        for p in self.packets:
            if p.is_talkspurt_start or not runs:
                runs.append([])
            runs[-1].append(p)
        return runs


def validate_packets(packets) -> None:
    seen_ids: set[int] = set()
    prev = None
    for i, p in enumerate(packets):
        where = f"packet {i} (seq {p.seq})"
        if not math.isfinite(p.network_delay_ms) or p.network_delay_ms < 0:
            raise TraceError(f"{where}: delay must be finite and non-negative, got {p.network_delay_ms}")
        if not math.isfinite(p.send_time_ms):
            raise TraceError(f"{where}: send time must be finite")
        if prev is None:
            if not p.is_talkspurt_start:
                raise TraceError(f"{where}: first packet must start a talkspurt")
        else:
            if p.seq <= prev.seq:
                raise TraceError(f"{where}: seq not strictly increasing after {prev.seq}")
            if p.send_time_ms < prev.send_time_ms:
                raise TraceError(f"{where}: send time goes backwards")
            if p.talkspurt_id != prev.talkspurt_id and not p.is_talkspurt_start:
                raise TraceError(f"{where}: talkspurt {p.talkspurt_id} begins without a start flag")
            if p.talkspurt_id == prev.talkspurt_id and p.is_talkspurt_start:
                raise TraceError(f"{where}: start flag inside talkspurt {p.talkspurt_id}")
        if p.is_talkspurt_start:
            if p.talkspurt_id in seen_ids:
                raise TraceError(f"{where}: talkspurt {p.talkspurt_id} is not contiguous")
            seen_ids.add(p.talkspurt_id)
        prev = p


def generate_trace(profile: NetworkProfile, n_packets: int, seed: int) -> DelayTrace:
    """Synthesize a seeded delay trace for ``profile``.

    Each packet's delay is ``base + Exp(jitter_scale) + spike_level``, where
    a new spike adds ``spike_magnitude_ms`` with probability
    ``spike_probability`` and the level otherwise shrinks by
    ``spike_decay`` per packet. Talkspurt lengths are uniform over
    ``talkspurt_len_range``. Delays are rounded to microseconds so the
    trace survives a CSV round trip unchanged.
    """
    if n_packets < 1:
        raise ValueError(f"n_packets must be >= 1, got {n_packets}")
    rng = np.random.default_rng(seed)
    if profile.jitter_scale_ms > 0:
        jitter = rng.exponential(profile.jitter_scale_ms, n_packets)
    else:
        jitter = np.zeros(n_packets)
    spike_starts = rng.random(n_packets) < profile.spike_probability
    lo, hi = profile.talkspurt_len_range
    # upper bound on talkspurts needed: every one at minimum length
    lengths = rng.integers(lo, hi + 1, size=n_packets // lo + 1)

    spikes = np.empty(n_packets)
    level = 0.0
    for i in range(n_packets):
        level *= profile.spike_decay
        if spike_starts[i]:
            level += profile.spike_magnitude_ms
        spikes[i] = level
    delays = np.round(profile.base_delay_ms + jitter + spikes, 3)

    packets = []
    ts_id, remaining = -1, 0
    for i in range(n_packets):
        start = remaining == 0
        if start:
            ts_id += 1
            remaining = int(lengths[ts_id])
        remaining -= 1
        packets.append(PacketObservation(
            seq=i,
            send_time_ms=round(i * profile.packet_interval_ms, 3),
            network_delay_ms=float(delays[i]),
            talkspurt_id=ts_id,
            is_talkspurt_start=start,
        ))
    return DelayTrace(
        packets=tuple(packets),
        profile_name=profile.name,
        base_delay_ms=profile.base_delay_ms,
        seed=seed,
        packet_interval_ms=profile.packet_interval_ms,
    )


def get_profile(name: str) -> NetworkProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}, expected one of {sorted(PROFILES)}") from None


_PROFILE_KEYS = {
    "base_delay_ms": float,
    "jitter_scale_ms": float,
    "spike_probability": float,
    "spike_magnitude_ms": float,
    "spike_decay": float,
    "packet_interval_ms": float,
}


def profile_from_mapping(values, name: str = "custom") -> NetworkProfile:
    """Build a profile from flat string key/values.

    ``extends`` names a shipped profile to start from (default: stable);
    ``talkspurt_min``/``talkspurt_max`` set the talkspurt length range.
    Any other key must be a numeric profile field.
    """
    values = dict(values)
    base = get_profile(values.pop("extends", "stable"))
    name = values.pop("name", name)
    changes: dict = {"name": name}
    lo, hi = base.talkspurt_len_range
    if "talkspurt_min" in values:
        lo = int(values.pop("talkspurt_min"))
    if "talkspurt_max" in values:
        hi = int(values.pop("talkspurt_max"))
    changes["talkspurt_len_range"] = (lo, hi)
    for key, raw in values.items():
        if key not in _PROFILE_KEYS:
            raise ValueError(f"unknown profile key {key!r}")
        try:
            changes[key] = _PROFILE_KEYS[key](raw)
        except ValueError:
            raise ValueError(f"bad value {raw!r} for profile key {key}") from None
    return replace(base, **changes)


def load_profile_config(path: str | os.PathLike) -> NetworkProfile:
    """Read a profile from the ``[profile]`` section of an INI file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise OSError(f"cannot read profile config {path}")
    if not parser.has_section("profile"):
        raise ValueError(f"{path}: missing [profile] section")
    return profile_from_mapping(parser["profile"], name=Path(path).stem)


def load_trace_csv(path: str | os.PathLike) -> DelayTrace:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TraceError(f"{path}: empty file") from None
        if tuple(header[:4]) != CSV_HEADER or header[4:] not in ([], ["talkspurt_start"]):
            raise TraceError(f"{path}: line 1: unexpected header {header}")
        has_flag = len(header) == 5
        packets = []
        prev_id = None
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise TraceError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
            try:
                seq = int(row[0])
                send = float(row[1])
                delay = float(row[2])
                ts_id = int(row[3])
                flag = bool(int(row[4])) if has_flag else ts_id != prev_id
            except ValueError as exc:
                raise TraceError(f"{path}: line {line}: {exc}") from None
            if delay < 0:
                raise TraceError(f"{path}: line {line}: negative delay {row[2]}")
            if packets and seq <= packets[-1].seq:
                raise TraceError(f"{path}: line {line}: seq {seq} not increasing")
            packets.append(PacketObservation(seq, send, delay, ts_id, flag))
            prev_id = ts_id
    if not packets:
        raise TraceError(f"{path}: no packets")
    interval = packets[1].send_time_ms - packets[0].send_time_ms if len(packets) > 1 else DEFAULT_PACKET_INTERVAL_MS
    try:
        return DelayTrace(packets=tuple(packets), profile_name=path.stem,
                          packet_interval_ms=interval if interval > 0 else DEFAULT_PACKET_INTERVAL_MS)
    except TraceError as exc:
        raise TraceError(f"{path}: {exc}") from None


def trace_to_csv_text(trace: DelayTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in trace.packets:
        writer.writerow((p.seq, f"{p.send_time_ms:.3f}", f"{p.network_delay_ms:.3f}", p.talkspurt_id))
    return buf.getvalue()


def export_trace_csv(trace: DelayTrace, path: str | os.PathLike) -> None:
    write_text_atomic(path, trace_to_csv_text(trace))


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
