"""Closed-form SISO rates and capacity for the one-bit quantized channel.

QPSK/BPSK achievable rates, the pilot-based least-squares lower bound,
the joint pilot-data (JPD) rate, the critical SNR and the resulting
capacity expression, the mismatch-count pmfs used to re-derive the pilot
bound, and the perfect receiver-CSI Monte-Carlo reference.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, ndtr, xlogy

from .psi import DEFAULT_NODES, get_evaluator
from .model import constellation_symbols

LN2 = math.log(2.0)


class BracketingError(RuntimeError):
    """The critical-SNR search did not find an interior maximum."""


@dataclass
class RateResult:
    """A rate in bits per channel use plus the parameters that produced it."""

    rate: float
    T: int
    P: int = 0
    stderr: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def binary_entropy(p):
    """Binary entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("binary_entropy argument must lie in [0, 1]")
    h = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / LN2
    return float(h) if h.ndim == 0 else h


def _log_binom(n, k):
    k = np.asarray(k)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _block_sum(ev, T):
    """sum_k C(T,k) psi(k,T-k) log2 psi(k,T-k), assembled in the log domain."""
    k = np.arange(T + 1)
    lpsi = ev.log_psi_level(T)
    # C(T,k) psi(k,T-k) is a pmf, so the exp never overflows; terms whose
    # pmf mass underflows to zero are genuinely negligible.
    return float(np.sum(np.exp(_log_binom(T, k) + lpsi) * lpsi) / LN2)


def rate_qpsk(snr, T, node_count=DEFAULT_NODES):
    """Rate achievable with QPSK over a coherence block of T channel uses."""
    if T < 1:
        raise ValueError("coherence time must be >= 1")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    ev = get_evaluator(snr, node_count)
    return RateResult(rate=2.0 + 2.0 / T * _block_sum(ev, T), T=T)


def rate_bpsk(snr, T, node_count=DEFAULT_NODES):
    """BPSK rate; half the QPSK rate at the same per-dimension SNR."""
    if T < 1:
        raise ValueError("coherence time must be >= 1")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    ev = get_evaluator(snr, node_count)
    return RateResult(rate=1.0 + 1.0 / T * _block_sum(ev, T), T=T)


def _pilot_bracket(ev, P):
    """Per-symbol QPSK mutual information given an LS estimate from P symbols.

    2 * [1 - sum_l C(P,l) psi(l,P-l) H_b(psi(l+1,P-l) / psi(l,P-l))].
    The complementary entropy argument is taken from the recursion
    psi(l,P-l) = psi(l+1,P-l) + psi(l,P-l+1) so both branches stay exact
    in the log domain.
    """
    lvl = ev.log_psi_level(P)
    nxt = ev.log_psi_level(P + 1)
    l = np.arange(P + 1)
    lq = nxt[1:] - lvl        # log of psi(l+1, P-l) / psi(l, P-l)
    lqm = nxt[:-1] - lvl      # log of psi(l, P-l+1) / psi(l, P-l)
    hb = -(np.exp(lq) * lq + np.exp(lqm) * lqm) / LN2
    pl = np.exp(_log_binom(P, l) + lvl)
    return 2.0 * (1.0 - float(np.sum(pl * hb)))


def pilot_bound(snr, T, P, node_count=DEFAULT_NODES):
    """Pilot-based LS-estimation lower bound on capacity.

    2 (T-P)/T [1 - sum_l C(P,l) psi(l,P-l) H_b(psi(l+1,P-l)/psi(l,P-l))].
    P = 0 and P = T give exactly zero (no estimate / no data symbols).
    Tiny negative values from rounding (|.| < 1e-12) are clamped to 0.
    """
    if not 0 <= P <= T:
        raise ValueError("pilot count must satisfy 0 <= P <= T")
    if P == 0 or P == T:
        return RateResult(rate=0.0, T=T, P=P)
    ev = get_evaluator(snr, node_count)
    rate = (T - P) / T * _pilot_bracket(ev, P)
    if -1e-12 < rate < 0.0:
        rate = 0.0
    return RateResult(rate=rate, T=T, P=P)


def optimize_pilots(snr, T, node_count=DEFAULT_NODES):
    """Exhaustive pilot-count optimization of the pilot bound over 1..T-1.

    Returns (best P, RateResult); ties break toward smaller P.
    """
    if T < 2:
        raise ValueError("coherence time must be >= 2")
    ev = get_evaluator(snr, node_count)
    best_p, best_rate = 1, -np.inf
    for P in range(1, T):
        rate = (T - P) / T * _pilot_bracket(ev, P)
        if rate > best_rate:
            best_p, best_rate = P, rate
    return best_p, RateResult(rate=max(best_rate, 0.0), T=T, P=best_p)


def jpd_rate(snr, T, node_count=DEFAULT_NODES):
    """Rate of LS estimation with joint pilot-data processing.

    One pilot starts the block; symbol n is decoded from an LS estimate
    based on the previous n-1 symbols, so the block rate is the average
    of the per-symbol informations for estimate sizes 1..T-1.
    """
    if T < 2:
        raise ValueError("coherence time must be >= 2")
    ev = get_evaluator(snr, node_count)
    total = sum(_pilot_bracket(ev, n - 1) for n in range(2, T + 1))
    return RateResult(rate=total / T, T=T, P=1)


@lru_cache(maxsize=None)
def critical_snr(T, node_count=DEFAULT_NODES, rel_tol=1e-6):
    """SNR maximizing rate_qpsk(snr, T) / snr.

    Bracketing grid scan over snr in 10^[-4, 4] (200 log-spaced points)
    followed by golden-section refinement on log snr. Raises
    BracketingError when the maximum sits on the scan boundary.

    Returns (snr_c, attained ratio).
    """
    if T < 2:
        raise ValueError("coherence time must be >= 2")

    def ratio(log_snr):
        s = math.exp(log_snr)
        return rate_qpsk(s, T, node_count).rate / s

    grid = np.linspace(math.log(1e-4), math.log(1e4), 200)
    vals = np.array([ratio(g) for g in grid])
    i = int(np.argmax(vals))
    if i == 0 or i == len(grid) - 1:
        raise BracketingError(
            "rate/snr is monotone over snr in [1e-4, 1e4]; no interior maximum")

    lo, hi = grid[i - 1], grid[i + 1]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = ratio(c), ratio(d)
    while b - a > rel_tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = ratio(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = ratio(d)
    log_opt = (a + b) / 2.0
    return math.exp(log_opt), ratio(log_opt)


def capacity_siso(snr, T, node_count=DEFAULT_NODES):
    """SISO capacity: linear time-sharing segment below the critical SNR,
    the QPSK rate above it."""
    if T < 2:
        raise ValueError("coherence time must be >= 2")
    snr_c, _ = critical_snr(T, node_count)
    if snr <= snr_c:
        rate = snr / snr_c * rate_qpsk(snr_c, T, node_count).rate
    else:
        rate = rate_qpsk(snr, T, node_count).rate
    return RateResult(rate=rate, T=T, diagnostics={"snr_c": snr_c})


def _gauss_expect(f):
    """integral of f(h) * N(0,1) density over the real line, adaptive."""
    val, _ = quad(lambda h: f(h) * math.exp(-0.5 * h * h) / math.sqrt(2 * math.pi),
                  -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    return val


def mismatch_distribution(P, snr):
    """pmfs of the pilot mismatch count and of the one-shot data output.

    For the real-valued channel with BPSK amplitude sqrt(snr) and P
    all-positive pilots, l counts the sign mismatches between pilots and
    quantized outputs (in one-to-one relation with the LS estimate).

    Returns
    -------
    p_l : array, shape (P+1,)
        p(l) = C(P,l) * psi(l, P-l), computed by adaptive quadrature
        (independent of the Gauss-Hermite path).
    p_r_given_xl : array, shape (P+1, 2, 2)
        p(r | x, l) with axes (l, x in {+sqrt(snr), -sqrt(snr)},
        r in {+1, -1}).
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    rs = math.sqrt(snr)
    lb = np.exp(_log_binom(P, np.arange(P + 1)))

    p_l = np.empty(P + 1)
    p_r = np.empty((P + 1, 2, 2))
    for l in range(P + 1):
        def weight(h, l=l):
            return ndtr(-h * rs) ** l * ndtr(h * rs) ** (P - l)

        p_l[l] = lb[l] * _gauss_expect(weight)
        for ix, x in enumerate((rs, -rs)):
            for ir, r in enumerate((1.0, -1.0)):
                num = lb[l] * _gauss_expect(lambda h: weight(h) * ndtr(r * h * x))
                p_r[l, ix, ir] = num / p_l[l]

    if abs(p_l.sum() - 1.0) > 1e-12:
        raise ArithmeticError("mismatch pmf does not normalize: %r" % p_l.sum())
    if np.max(np.abs(p_r.sum(axis=2) - 1.0)) > 1e-12:
        raise ArithmeticError("conditional output pmf does not normalize")
    return p_l, p_r


def perfect_csi_rate_siso(snr, n_channel_samples, rng):
    """Monte-Carlo perfect receiver-CSI QPSK rate.

    For each fading draw the 4-input/4-output channel (QPSK in, quantizer
    outcome out) is a finite DMC whose transition probabilities are
    products of normal CDFs, so the per-realization mutual information is
    exact; only the fading average is sampled.
    """
    if n_channel_samples < 1:
        raise ValueError("need at least one channel sample")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    syms = constellation_symbols("qpsk", snr).symbols if snr > 0 else \
        np.zeros(4, dtype=complex)
    h = (rng.standard_normal(n_channel_samples)
         + 1j * rng.standard_normal(n_channel_samples)) * np.sqrt(0.5)
    z = h[:, None] * syms[None, :]                     # (n, 4) products x*h
    # Re/Im of the noise have variance 1/2.
    a = ndtr(np.sqrt(2.0) * z.real)                    # P(Re r = +1 | x, h)
    b = ndtr(np.sqrt(2.0) * z.imag)                    # P(Im r = +1 | x, h)
    # Output order: (+,+), (-,+), (-,-), (+,-) to match the quantizer set.
    p = np.stack([a * b, (1 - a) * b, (1 - a) * (1 - b), a * (1 - b)], axis=2)
    pbar = p.mean(axis=1, keepdims=True)               # uniform input marginal
    mi = np.sum(xlogy(p, p) - xlogy(p, np.broadcast_to(pbar, p.shape)),
                axis=(1, 2)) / (4.0 * LN2)
    rate = float(mi.mean())
    stderr = float(mi.std(ddof=1) / math.sqrt(n_channel_samples)) \
        if n_channel_samples > 1 else 0.0
    return RateResult(rate=rate, T=0, stderr=stderr,
                      diagnostics={"n_samples": n_channel_samples})
