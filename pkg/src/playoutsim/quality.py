"""E-model arithmetic: impairment factors, R <-> MOS conversion and the
conversational MOS chain used to score playout runs.

All functions are pure. Loss is always given in percent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MOS_MIN = 1.0
MOS_MAX = 4.5

MOS_MAPS = ("standard", "paper-literal")


@dataclass(frozen=True)
class QualityParams:
    r0: float = 93.2
    ie_a: float = 20.06
    ie_b: float = 0.1024
    ie_c: float = 25.63
    id_slope: float = 0.024
    id_knee_ms: float = 177.3
    id_excess_slope: float = 0.11
    r_floor: float = 6.5
    r_ceil: float = 100.0
    # "standard" is the G.107 cubic; "paper-literal" drops the (100 - R) factor.
    mos_map: str = "standard"

    def __post_init__(self):
        for name in ("r0", "ie_a", "ie_b", "ie_c", "id_slope", "id_knee_ms",
                     "id_excess_slope", "r_floor", "r_ceil"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0 < self.r0 <= 100:
            raise ValueError(f"r0 must lie in (0, 100], got {self.r0}")
        if not self.r_floor < self.r_ceil:
            raise ValueError("r_floor must be below r_ceil")
        if self.mos_map not in MOS_MAPS:
            raise ValueError(f"unknown mos_map {self.mos_map!r}, expected one of {MOS_MAPS}")


DEFAULT_PARAMS = QualityParams()


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def _check_mos(mos: float) -> None:
    _check_finite("mos", mos)
    if not MOS_MIN <= mos <= MOS_MAX:
        raise ValueError(f"MOS must lie in [{MOS_MIN}, {MOS_MAX}], got {mos}")


def clamp_r(r: float, params: QualityParams = DEFAULT_PARAMS) -> float:
    return min(max(r, params.r_floor), params.r_ceil)


def mos_from_r(r: float, params: QualityParams = DEFAULT_PARAMS) -> float:
    """Map a transmission rating R to MOS on the 1.0 .. 4.5 scale."""
    _check_finite("r", r)
    if r <= 0:
        return MOS_MIN
    if r >= 100:
        return MOS_MAX
    if params.mos_map == "standard":
        mos = 1 + 0.035 * r + r * (r - 60) * (100 - r) * 7e-6
    else:
        mos = 1 + 0.035 * r + r * (r - 60) * 7e-6
    return min(max(mos, MOS_MIN), MOS_MAX)


def r_from_mos(mos: float, params: QualityParams = DEFAULT_PARAMS) -> float:
    """Cubic fit from MOS back to R, clamped to ``[r_floor, r_ceil]``.

    The fit is not an exact inverse of :func:`mos_from_r`; round trips
    land within a few R units over the useful range.
    """
    _check_mos(mos)
    r = 3.026 * mos**3 - 25.314 * mos**2 + 87.060 * mos - 57.336
    return clamp_r(r, params)


def delay_impairment(ta_ms: float, params: QualityParams = DEFAULT_PARAMS) -> float:
    """Id for an absolute one-way (playout) delay in milliseconds."""
    _check_finite("ta_ms", ta_ms)
    if ta_ms < 0:
        raise ValueError(f"delay must be non-negative, got {ta_ms}")
    excess = ta_ms - params.id_knee_ms
    # Heaviside step with H(0) = 1
    step = 1.0 if excess >= 0 else 0.0
    return params.id_slope * ta_ms + params.id_excess_slope * excess * step


def loss_impairment(loss_pct: float, params: QualityParams = DEFAULT_PARAMS) -> float:
    """Ie from a random packet loss ratio expressed in percent."""
    _check_finite("loss_pct", loss_pct)
    if loss_pct < 0:
        raise ValueError(f"loss must be non-negative, got {loss_pct}")
    return params.ie_a * math.log(1 + params.ie_b * loss_pct) + params.ie_c


def conversational_mos(
    avg_playout_delay_ms: float,
    loss_pct: float,
    params: QualityParams = DEFAULT_PARAMS,
) -> tuple[float, float]:
    """Return ``(R, MOS)`` for a run with the given delay and loss.

    R is computed unclamped as ``r0 - Ie - Id`` and fed to the MOS map;
    the returned R is clamped to the reporting range.
    """
    r = (params.r0
         - loss_impairment(loss_pct, params)
         - delay_impairment(avg_playout_delay_ms, params))
    return clamp_r(r, params), mos_from_r(r, params)


def ie_from_listening_mos(listening_mos: float, params: QualityParams = DEFAULT_PARAMS) -> float:
    """Equipment impairment implied by an externally measured listening MOS
    (for instance a PESQ score), floored at zero."""
    return max(0.0, params.r0 - r_from_mos(listening_mos, params))
