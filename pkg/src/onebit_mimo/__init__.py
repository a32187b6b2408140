"""Achievable rates and capacity for fading channels behind one-bit ADCs."""

from .model import (Constellation, constellation_symbols, draw_channel,
                    make_rng, quantize_one_bit)
from .psi import PsiEvaluator
from .siso import (RateResult, binary_entropy, capacity_siso, critical_snr,
                   jpd_rate, mismatch_distribution, optimize_pilots,
                   perfect_csi_rate_siso, pilot_bound, rate_bpsk, rate_qpsk)
from .sim import (InsufficientPilotsError, PilotSchedule, SimConfig,
                  UplinkFrame, build_pilot_schedule, constellation_dump,
                  ls_estimate, mrc_combine, simulate_frame)
from .mi import GridSpec, JointHistogram, grid_map, mi_lower_bound, rate_mrc

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
