"""Adaptive VoIP playout-buffer simulator with E-model quality scoring."""

from .algorithms import (ALGORITHMS, ExpAvg, MinDelay, SpikeDetection, Suggested,
                         make_estimator)
from .packet import PacketObservation
from .quality import (QualityParams, conversational_mos, delay_impairment,
                      ie_from_listening_mos, loss_impairment, mos_from_r, r_from_mos)
from .simulator import RunMetrics, SimulationConfig, compare, simulate
from .trace import (PROFILES, DelayTrace, NetworkProfile, export_trace_csv, generate_trace,
                    load_trace_csv)

__version__ = "0.1.0"
