"""Monte-Carlo simulation of the multiuser uplink with one-bit ADCs.

One coherence block: K users transmit round-robin pilots followed by
i.i.d. data symbols; the base station quantizes every antenna output to
one bit, forms per-user LS channel estimates from the pilot slots, and
separates the streams with maximum-ratio combining.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (CONSTELLATION_KINDS, CORRELATION_MODES,
                    constellation_symbols, draw_channel, draw_noise, make_rng,
                    quantize_one_bit)

# Frames simulated per RNG stream in the batched path. Fixed, so results
# depend only on (seed, frame index), never on worker scheduling.
CHUNK_FRAMES = 64


class InsufficientPilotsError(ValueError):
    """Fewer pilot slots than required for orthogonal round-robin training."""


class DegenerateEstimateError(ValueError):
    """An all-zero channel estimate row; MRC is undefined."""


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one uplink simulation."""

    n_antennas: int
    n_users: int
    coherence_time: int
    n_pilots: int
    snr: float
    constellation: str = "qpsk"
    correlation: str = "iid"
    csi_mode: str = "estimated"
    frames: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_antennas < 1 or self.n_users < 1:
            raise ValueError("antenna and user counts must be >= 1")
        if not 0 <= self.n_pilots <= self.coherence_time:
            raise ValueError("need 0 <= pilots <= coherence time")
        if self.constellation not in CONSTELLATION_KINDS:
            raise ValueError("unknown constellation %r" % (self.constellation,))
        if self.correlation not in CORRELATION_MODES:
            raise ValueError("unknown correlation mode %r" % (self.correlation,))
        if self.csi_mode not in ("estimated", "perfect"):
            raise ValueError("csi_mode must be 'estimated' or 'perfect'")
        if self.snr <= 0:
            raise ValueError("snr must be positive")

    def constellation_obj(self):
        return constellation_symbols(self.constellation, self.snr)

    @property
    def n_data(self):
        return self.coherence_time - self.n_pilots


@dataclass(frozen=True)
class PilotSchedule:
    """Round-robin pilot slot assignment with a constant QPSK pilot."""

    n_users: int
    n_pilots: int
    pilot_symbol: complex
    # slots[k] holds the slot indices occupied by user k
    slots: tuple = field(default=())

    @property
    def per_user(self):
        return self.n_pilots // self.n_users


def build_pilot_schedule(n_users, n_pilots, snr):
    """Assign the first n_pilots slots to the users in round-robin blocks.

    User k occupies slots [k * P/K, (k+1) * P/K). Each user transmits the
    constant QPSK pilot (1+j) * sqrt(snr/2); under the LS estimator any
    fixed QPSK sequence is equivalent. Other users stay silent (zero)
    during foreign pilot slots.
    """
    if n_pilots < n_users or n_pilots % n_users != 0:
        raise InsufficientPilotsError(
            "insufficient pilots: need P >= K and K | P, got K=%d, P=%d"
            % (n_users, n_pilots))
    per = n_pilots // n_users
    slots = tuple(np.arange(k * per, (k + 1) * per) for k in range(n_users))
    pilot = complex((1 + 1j) * math.sqrt(snr / 2.0))
    return PilotSchedule(n_users=n_users, n_pilots=n_pilots,
                         pilot_symbol=pilot, slots=slots)


@dataclass
class UplinkFrame:
    """Inputs, channel, quantized outputs, estimates, and MRC outputs of one block."""

    X: np.ndarray            # (T, K) channel inputs
    H: np.ndarray            # (K, N) channel
    R: np.ndarray            # (T, N) quantized outputs
    H_hat: np.ndarray        # (K, N) channel estimate (H itself in perfect mode)
    x_mrc: np.ndarray        # (T-P, K) combiner outputs
    data_symbols: np.ndarray  # (T-P, K) indices into the constellation
    degenerate_users: np.ndarray  # bool (K,), True where the estimate row was zero


def ls_estimate(r_pilot, schedule, snr):
    """Per-user LS channel estimate from the pilot rows.

    h_hat_k = (1 / (P_k sqrt(snr))) * x_pilot^H r over user k's slots,
    independently per antenna. Reduces to the SISO formula for K = 1.
    """
    r_pilot = np.asarray(r_pilot)
    if r_pilot.shape[0] != schedule.n_pilots:
        raise ValueError("pilot rows (%d) do not match schedule length (%d)"
                         % (r_pilot.shape[0], schedule.n_pilots))
    n = r_pilot.shape[1]
    h_hat = np.empty((schedule.n_users, n), dtype=complex)
    scale = 1.0 / (schedule.per_user * math.sqrt(snr))
    for k, sl in enumerate(schedule.slots):
        h_hat[k] = scale * np.conj(schedule.pilot_symbol) * r_pilot[sl].sum(axis=0)
    return h_hat


def mrc_combine(r_data, h_hat):
    """Maximum-ratio combining normalized per user.

    x_mrc[t, k] = h_hat_k^H r_t / ||h_hat_k||^2; invariant to positive
    rescaling of the estimate rows. Raises on an all-zero estimate row.
    """
    r_data = np.atleast_2d(np.asarray(r_data))
    h_hat = np.atleast_2d(np.asarray(h_hat))
    norms = np.sum(np.abs(h_hat) ** 2, axis=1)
    if np.any(norms == 0):
        raise DegenerateEstimateError("all-zero channel estimate row")
    return (r_data @ h_hat.conj().T) / norms[None, :]


def _frame_inputs(config, schedule, const, rng):
    """Draw one frame's channel, noise, data symbols, and input matrix."""
    T, K, N = config.coherence_time, config.n_users, config.n_antennas
    P = config.n_pilots
    h = draw_channel(K, N, config.correlation, rng)
    w = draw_noise((T, N), rng)
    data_idx = rng.integers(0, const.size, size=(T - P, K))
    x = np.zeros((T, K), dtype=complex)
    if schedule is not None:
        for k, sl in enumerate(schedule.slots):
            x[sl, k] = schedule.pilot_symbol
    x[P:] = const.symbols[data_idx]
    return h, w, data_idx, x


def simulate_frame(config, rng):
    """Simulate one coherence block end to end.

    Draws the channel, noise, and data; quantizes; estimates the channel
    from the pilot slots (or copies it in perfect-CSI mode); combines.
    Users whose estimate row is exactly zero get zero combiner outputs and
    are flagged in ``degenerate_users`` (their conditional output carries
    no information, see mi.rate_mrc).
    """
    const = config.constellation_obj()
    schedule = None
    if config.n_pilots > 0 or config.csi_mode == "estimated":
        schedule = build_pilot_schedule(config.n_users, config.n_pilots, config.snr)
    h, w, data_idx, x = _frame_inputs(config, schedule, const, rng)
    r = quantize_one_bit(x @ h + w)
    if config.csi_mode == "perfect":
        h_hat = h.copy()
    else:
        h_hat = ls_estimate(r[:config.n_pilots], schedule, config.snr)
    norms = np.sum(np.abs(h_hat) ** 2, axis=1)
    degenerate = norms == 0
    safe = np.where(degenerate[:, None], 1.0, h_hat)
    x_mrc = (r[config.n_pilots:] @ np.conj(safe).T) / np.sum(np.abs(safe) ** 2, axis=1)
    x_mrc[:, degenerate] = 0.0
    return UplinkFrame(X=x, H=h, R=r, H_hat=h_hat, x_mrc=x_mrc,
                       data_symbols=data_idx, degenerate_users=degenerate)


def chunk_size(config):
    """Frames per RNG stream; a fixed function of the block dimensions."""
    per_frame = config.coherence_time * config.n_antennas
    return max(1, min(CHUNK_FRAMES, 4_000_000 // max(per_frame, 1)))


def simulate_chunk(config, chunk_index):
    """Vectorized simulation of one chunk of frames.

    Chunk c covers frames [c * chunk_size, (c+1) * chunk_size) and draws
    from stream id c, so every frame's data is a deterministic function of
    (seed, frame index) regardless of how chunks are spread over workers.

    Returns (data symbol indices, combiner outputs), both (F, T-P, K).
    """
    F = chunk_size(config)
    T, K, N, P = (config.coherence_time, config.n_users,
                  config.n_antennas, config.n_pilots)
    const = config.constellation_obj()
    schedule = None
    if P > 0 or config.csi_mode == "estimated":
        schedule = build_pilot_schedule(K, P, config.snr)
    rng = make_rng(config.seed, chunk_index)

    if config.correlation == "fully_correlated":
        h = draw_channel(K * F, 1, "iid", rng).reshape(F, K, 1)
        h = np.repeat(h, N, axis=2)
    else:
        h = draw_channel(K * F, N, "iid", rng).reshape(F, K, N)
    w = draw_noise((F, T, N), rng)
    data_idx = rng.integers(0, const.size, size=(F, T - P, K))

    x = np.zeros((F, T, K), dtype=complex)
    if schedule is not None:
        for k, sl in enumerate(schedule.slots):
            x[:, sl, k] = schedule.pilot_symbol
    x[:, P:, :] = const.symbols[data_idx]

    r = quantize_one_bit(np.einsum("ftk,fkn->ftn", x, h) + w)

    if config.csi_mode == "perfect":
        h_hat = h
    else:
        scale = 1.0 / (schedule.per_user * math.sqrt(config.snr))
        h_hat = np.empty((F, K, N), dtype=complex)
        for k, sl in enumerate(schedule.slots):
            h_hat[:, k, :] = (scale * np.conj(schedule.pilot_symbol)
                              * r[:, sl, :].sum(axis=1))
    norms = np.sum(np.abs(h_hat) ** 2, axis=2)          # (F, K)
    degenerate = norms == 0
    x_mrc = np.einsum("ftn,fkn->ftk", r[:, P:, :], np.conj(h_hat))
    with np.errstate(invalid="ignore", divide="ignore"):
        x_mrc = x_mrc / norms[:, None, :]
    x_mrc[np.broadcast_to(degenerate[:, None, :], x_mrc.shape)] = 0.0
    return data_idx, x_mrc


def constellation_dump(config, frames, start_frame=0):
    """Scatter data for combiner-output constellation plots.

    Returns a record array with one row per (frame, data slot, user):
    user index, transmitted symbol, and combiner output.
    """
    if frames <= 0:
        return np.empty((0, 5))
    const = config.constellation_obj()
    cs = chunk_size(config)
    out = []
    for c in range(start_frame // cs, (start_frame + frames + cs - 1) // cs):
        data_idx, x_mrc = simulate_chunk(config, c)
        lo = max(start_frame - c * cs, 0)
        hi = min(start_frame + frames - c * cs, data_idx.shape[0])
        for k in range(config.n_users):
            sym = const.symbols[data_idx[lo:hi, :, k].ravel()]
            xt = x_mrc[lo:hi, :, k].ravel()
            out.append(np.column_stack([np.full(sym.size, k), sym.real, sym.imag,
                                        xt.real, xt.imag]))
    return np.vstack(out)
