"""Independent reference implementations used as test oracles.

These are written from the formulas directly and share no code with the
package, so agreement between the two is meaningful.
"""

import math
import random

import mpmath

from playoutsim.packet import PacketObservation
from playoutsim.trace import DelayTrace

mpmath.mp.dps = 50

TABLE_ROWS = [
    # (table, algorithm, avg delay ms, loss %, printed MOS)
    (1, "Exp-Avg", 52.83, 3.21, 3.13),
    (1, "Min-D", 51.89, 7.29, 2.84),
    (1, "Spike-Det", 52.75, 4.58, 3.03),
    (1, "Suggested", 54.73, 0.71, 3.35),
    (2, "Exp-Avg", 99.8, 4.67, 2.96),
    (2, "Min-D", 95.31, 5.55, 2.9),
    (2, "Spike-Det", 190.33, 1.86, 2.99),
    (2, "Suggested", 104.46, 1.32, 3.23),
    (3, "Exp-Avg", 150.56, 4.77, 2.89),
    (3, "Min-D", 138.56, 5.9, 2.82),
    (3, "Spike-Det", 471.95, 1.0, 1.31),
    (3, "Suggested", 114.69, 4.28, 2.97),
]


# quality formulas in arbitrary precision

def mp_mos_from_r(r, literal=False):
    r = mpmath.mpf(r)
    if r <= 0:
        return mpmath.mpf(1)
    if r >= 100:
        return mpmath.mpf("4.5")
    tail = 1 if literal else (100 - r)
    m = 1 + mpmath.mpf("0.035") * r + r * (r - 60) * tail * mpmath.mpf("7e-6")
    return min(max(m, mpmath.mpf(1)), mpmath.mpf("4.5"))


def mp_r_from_mos(m):
    m = mpmath.mpf(m)
    r = (mpmath.mpf("3.026") * m**3 - mpmath.mpf("25.314") * m**2
         + mpmath.mpf("87.060") * m - mpmath.mpf("57.336"))
    return min(max(r, mpmath.mpf("6.5")), mpmath.mpf(100))


def mp_delay_impairment(ta):
    ta = mpmath.mpf(ta)
    knee = mpmath.mpf("177.3")
    h = 1 if ta - knee >= 0 else 0
    return mpmath.mpf("0.024") * ta + mpmath.mpf("0.11") * (ta - knee) * h


def mp_loss_impairment(loss):
    return mpmath.mpf("20.06") * mpmath.log(1 + mpmath.mpf("0.1024") * mpmath.mpf(loss)) + mpmath.mpf("25.63")


def mp_conversational_mos(delay, loss, literal=False):
    r = mpmath.mpf("93.2") - mp_loss_impairment(loss) - mp_delay_impairment(delay)
    return mp_mos_from_r(r, literal)


# estimators

def spike_det_modes(delays, alpha=0.875, margin=800.0, exit_var=63.0):
    """Straight transcription of the two-mode spike detector; returns the
    mode after every packet and the final estimate pair (d, v)."""
    modes = []
    mode = "NORMAL"
    d = v = var = 0.0
    n1 = n2 = 0.0
    for i, n in enumerate(delays):
        if i == 0:
            d, v, n1, n2 = n, 0.0, n, n
            modes.append(mode)
            continue
        exited = False
        if i >= 2:
            if mode == "NORMAL":
                if abs(n - n1) > abs(v) * 2 + margin:
                    var = 0.0
                    mode = "SPIKE"
                else:
                    var = var / 2 + abs(2 * n - n1 - n2) / 8
            else:
                var = var / 2 + abs(2 * n - n1 - n2) / 8
                if var <= exit_var:
                    mode = "NORMAL"
                    exited = True
        if not exited:
            if mode == "NORMAL":
                d = alpha * d + (1 - alpha) * n
            else:
                d = d + n - n1
            v = alpha * v + (1 - alpha) * abs(d - n)
        n2, n1 = n1, n
        modes.append(mode)
    return modes, (d, v)


def windowed_variance(deviations, window_n):
    """Sum of the squared deviations in the last ``window_n`` slots, over n."""
    last = deviations[-window_n:]
    return math.fsum(x * x for x in last) / window_n


# simulator

def brute_force_run(trace, decide):
    """Classify packets with a fresh prefix replay for every talkspurt.

    ``decide(prefix)`` returns the playout delay after seeing ``prefix``.
    Returns (lost seq set, avg delay over played packets).
    """
    packets = list(trace.packets)
    lost = set()
    played_delays = []
    p = None
    for i, pkt in enumerate(packets):
        if pkt.is_talkspurt_start:
            p = decide(packets[: i + 1])
        if pkt.send_time_ms + pkt.network_delay_ms > pkt.send_time_ms + p:
            lost.add(pkt.seq)
        else:
            played_delays.append(p)
    avg = math.fsum(played_delays) / len(played_delays) if played_delays else 0.0
    return lost, avg


def random_trace(rng: random.Random, n_packets: int, spike=False, interval=20.0):
    packets = []
    ts_id = -1
    remaining = 0
    level = 0.0
    for i in range(n_packets):
        start = remaining == 0
        if start:
            ts_id += 1
            remaining = rng.randint(1, 30)
        remaining -= 1
        level *= 0.8
        if spike and rng.random() < 0.02:
            level += rng.uniform(900, 2500)
        delay = round(40 + rng.expovariate(1 / 15) + level, 3)
        packets.append(PacketObservation(i, i * interval, delay, ts_id, start))
    return DelayTrace(tuple(packets), packet_interval_ms=interval)
