"""Channel, noise, quantizer, and constellation primitives.

Conventions: the additive noise has unit variance per complex entry, so the
average symbol power rho plays the role of the SNR. Channel entries are
CN(0,1), drawn as two independent real Gaussians of variance 1/2.
"""

import numpy as np
from dataclasses import dataclass

# The four possible outputs of a pair of zero-threshold comparators.
QUANT_OUTCOMES = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j], dtype=complex)

CONSTELLATION_KINDS = ("bpsk", "qpsk", "16qam")
CORRELATION_MODES = ("iid", "fully_correlated")


class ModelError(ValueError):
    """Invalid model parameters."""


@dataclass(frozen=True)
class Constellation:
    """A finite complex symbol alphabet with average power ``power``."""

    kind: str
    symbols: np.ndarray
    power: float

    def __post_init__(self):
        object.__setattr__(self, "symbols", np.asarray(self.symbols, dtype=complex))

    @property
    def size(self):
        return len(self.symbols)

    @property
    def bits(self):
        return float(np.log2(self.size))

    def min_distance(self):
        """Smallest pairwise distance between symbols."""
        s = self.symbols
        d = np.abs(s[:, None] - s[None, :])
        return float(np.min(d[d > 0]))

    def max_coordinate(self):
        """Largest |Re| or |Im| coordinate over the alphabet."""
        return float(max(np.max(np.abs(self.symbols.real)),
                         np.max(np.abs(self.symbols.imag))))


def constellation_symbols(kind, snr):
    """Build a BPSK/QPSK/16-QAM constellation with average power ``snr``.

    Parameters
    ----------
    kind : str
        One of 'bpsk', 'qpsk', '16qam'.
    snr : float
        Average symbol power (linear scale). Must be positive: at snr = 0
        the alphabet degenerates to a single point.
    """
    kind = kind.lower()
    if kind not in CONSTELLATION_KINDS:
        raise ModelError("unknown constellation kind: %r" % (kind,))
    if snr <= 0:
        raise ModelError("constellation power must be positive, got %r" % (snr,))
    if kind == "bpsk":
        syms = np.sqrt(snr) * np.array([1.0, -1.0], dtype=complex)
    elif kind == "qpsk":
        syms = np.sqrt(snr / 2.0) * QUANT_OUTCOMES
    else:
        coords = np.array([-3, -1, 1, 3], dtype=float)
        grid = coords[:, None] + 1j * coords[None, :]
        syms = np.sqrt(snr / 10.0) * grid.ravel()
    return Constellation(kind=kind, symbols=syms, power=float(snr))


def quantize_one_bit(y):
    """One-bit quantize each complex entry: keep only the signs of Re and Im.

    sign(0) is taken as +1, so the output alphabet is exactly
    {1+j, -1+j, -1-j, 1-j}. Total function, idempotent on its own output.
    """
    y = np.asarray(y)
    re = np.where(y.real >= 0, 1.0, -1.0)
    im = np.where(y.imag >= 0, 1.0, -1.0)
    return re + 1j * im


def make_rng(seed, stream):
    """Deterministic, independent random streams.

    Identical (seed, stream) pairs reproduce identical draws; distinct
    stream ids give statistically independent generators, so parallel
    workers can be assigned disjoint stream ranges.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1),
                                                         int(stream)]))


def draw_channel(n_users, n_antennas, correlation, rng):
    """Draw a K x N Rayleigh channel matrix.

    'iid' draws every user/antenna coefficient independently CN(0,1);
    'fully_correlated' draws one CN(0,1) coefficient per user and repeats
    it across all antennas.
    """
    if n_users < 1 or n_antennas < 1:
        raise ModelError("channel dimensions must be >= 1")
    if correlation not in CORRELATION_MODES:
        raise ModelError("unknown correlation mode: %r" % (correlation,))
    if correlation == "fully_correlated":
        h = rng.standard_normal((n_users, 2)) @ np.array([1, 1j]) * np.sqrt(0.5)
        return np.repeat(h[:, None], n_antennas, axis=1)
    h = rng.standard_normal((n_users, n_antennas, 2)) @ np.array([1, 1j])
    return h * np.sqrt(0.5)


def draw_noise(shape, rng):
    """CN(0,1) noise of the given shape."""
    w = rng.standard_normal(tuple(shape) + (2,)) @ np.array([1, 1j])
    return w * np.sqrt(0.5)
