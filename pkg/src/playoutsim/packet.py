from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class PacketObservation:
    """One packet of a delay trace as seen by the receiver."""

    seq: int
    send_time_ms: float
    network_delay_ms: float
    talkspurt_id: int
    is_talkspurt_start: bool = False

    @property
    def arrival_time_ms(self) -> float:
        return self.send_time_ms + self.network_delay_ms
