"""Histogram-based lower bound on the input/combiner-output mutual information.

Combiner outputs are mapped to a regular lattice in the complex plane and
the mutual information of the induced finite-alphabet channel is computed
from empirical frequencies. This lower-bounds the true mutual information
and tightens as the grid spacing shrinks. Because data symbols are drawn
independently of the channel estimate, the unconditional estimate also
lower-bounds the estimate-conditional mutual information of the achievable
rate, so the reported value is a valid achievable-rate lower bound.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .siso import LN2, RateResult
from .sim import InsufficientPilotsError, chunk_size, simulate_chunk

N_FOLDS = 10


@dataclass(frozen=True)
class GridSpec:
    """Regular lattice of spacing delta covering [-extent, extent]^2.

    Coordinates beyond the extent clamp to the boundary cells, keeping the
    map total.
    """

    delta: float
    extent: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("grid spacing must be positive")
        if self.extent < self.delta:
            raise ValueError("grid extent must be at least the spacing")

    @property
    def half_cells(self):
        return int(round(self.extent / self.delta))

    @property
    def side(self):
        return 2 * self.half_cells + 1

    @property
    def n_cells(self):
        return self.side ** 2


def grid_map(x, grid):
    """Map complex values to lattice cell indices (nearest point, clamped)."""
    x = np.asarray(x)
    m = grid.half_cells
    i = np.clip(np.round(x.real / grid.delta), -m, m).astype(np.int64) + m
    j = np.clip(np.round(x.imag / grid.delta), -m, m).astype(np.int64) + m
    idx = i * grid.side + j
    return int(idx) if idx.ndim == 0 else idx


@dataclass
class JointHistogram:
    """Sparse counts over (input symbol, output cell) pairs.

    Counts are kept per fold so a standard error can be reported from the
    fold spread; the pooled histogram is the fold-wise sum. Merging adds
    counts and is associative and commutative.
    """

    n_symbols: int
    n_folds: int = N_FOLDS
    counts: list = field(default=None)

    def __post_init__(self):
        if self.counts is None:
            self.counts = [{} for _ in range(self.n_folds)]

    @property
    def total(self):
        return sum(sum(c.values()) for c in self.counts)

    def accumulate(self, symbol, cell, fold=0):
        if not 0 <= symbol < self.n_symbols:
            raise IndexError("symbol index out of range")
        c = self.counts[fold]
        c[(symbol, cell)] = c.get((symbol, cell), 0) + 1

    def add_batch(self, symbols, cells, fold=0):
        """Vectorized accumulate of equal-length index arrays."""
        symbols = np.asarray(symbols).ravel()
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.n_symbols):
            raise IndexError("symbol index out of range")
        keys, cnt = np.unique(
            np.stack([symbols, np.asarray(cells).ravel()]), axis=1,
            return_counts=True)
        c = self.counts[fold]
        for (s, q), n in zip(keys.T, cnt):
            c[(int(s), int(q))] = c.get((int(s), int(q)), 0) + int(n)

    def merge(self, other):
        """Count-wise sum; the histograms must agree on shape."""
        if (self.n_symbols, self.n_folds) != (other.n_symbols, other.n_folds):
            raise ValueError("histogram shapes differ")
        out = JointHistogram(self.n_symbols, self.n_folds)
        for f in range(self.n_folds):
            c = dict(self.counts[f])
            for k, v in other.counts[f].items():
                c[k] = c.get(k, 0) + v
            out.counts[f] = c
        return out

    def pooled(self):
        """Fold-summed counts as a single dict."""
        c = {}
        for f in self.counts:
            for k, v in f.items():
                c[k] = c.get(k, 0) + v
        return c


def _plugin_mi(counts, n_symbols):
    """Plug-in mutual information (bits) of a sparse count dict."""
    total = sum(counts.values())
    if total == 0:
        raise ValueError("empty histogram")
    # Fixed key order makes the floating-point sums independent of dict
    # insertion order, so merged multi-worker histograms reproduce the
    # single-worker result bit for bit.
    keys = sorted(counts)
    sym = np.array([k[0] for k in keys], dtype=np.int64)
    cell = np.array([k[1] for k in keys], dtype=np.int64)
    n = np.array([counts[k] for k in keys], dtype=float)
    pj = n / total
    px = np.bincount(sym, weights=n, minlength=n_symbols) / total
    cells, cinv = np.unique(cell, return_inverse=True)
    pq = np.bincount(cinv, weights=n, minlength=len(cells)) / total
    mi = np.sum(pj * (np.log(pj) - np.log(px[sym]) - np.log(pq[cinv]))) / LN2
    return float(mi)


def mi_lower_bound(hist):
    """Mutual information (bits) of the pooled histogram plus a fold-based
    standard error (std of the per-fold estimates / sqrt(#folds))."""
    pooled = hist.pooled()
    mi = _plugin_mi(pooled, hist.n_symbols)
    fold_mis = [_plugin_mi(c, hist.n_symbols) for c in hist.counts
                if sum(c.values()) > 0]
    if len(fold_mis) > 1:
        stderr = float(np.std(fold_mis, ddof=1) / math.sqrt(len(fold_mis)))
    else:
        stderr = 0.0
    return mi, stderr


def default_grid(config, calibration_chunks=1):
    """Grid sized to the constellation and the observed combiner spread.

    Spacing: a quarter of the minimum symbol distance. Extent: twice the
    largest symbol coordinate plus three standard deviations of the
    combiner output, measured on a short calibration run (fixed stream id,
    so the grid is a deterministic function of the config).
    """
    const = config.constellation_obj()
    delta = const.min_distance() / 4.0
    spread = []
    for c in range(calibration_chunks):
        _, x_mrc = simulate_chunk(config, 2**32 + c)
        spread.append(np.concatenate([x_mrc.real.ravel(), x_mrc.imag.ravel()]))
    sigma = float(np.std(np.concatenate(spread))) if spread else 1.0
    extent = 2.0 * const.max_coordinate() + 3.0 * max(sigma, delta)
    return GridSpec(delta=delta, extent=extent)


def _histogram_for_chunks(config, grid, chunk_range, user=0):
    const = config.constellation_obj()
    cs = chunk_size(config)
    hist = JointHistogram(const.size)
    for c in chunk_range:
        data_idx, x_mrc = simulate_chunk(config, c)
        cells = grid_map(x_mrc[:, :, user], grid)
        folds = (c * cs + np.arange(data_idx.shape[0])) % N_FOLDS
        for f_val in np.unique(folds):
            sel = folds == f_val
            hist.add_batch(data_idx[sel, :, user], cells[sel], fold=int(f_val))
    return hist


def rate_mrc(config, grid=None, workers=1, target_stderr=None, user=0):
    """Per-user achievable rate with LS estimation and MRC.

    Simulates frames, aggregates (transmitted symbol, grid-mapped combiner
    output) pairs into a joint histogram, and returns
    (T - P)/T * mutual-information lower bound for the given user (user 1
    is representative: the users are statistically equivalent).

    ``config.frames`` is the frame budget; when ``target_stderr`` is set,
    simulation stops early once the rate standard error falls below it
    (checked on deterministic round boundaries, so the result is
    reproducible and independent of the worker count).

    An infeasible pilot configuration yields rate 0 with an
    ``insufficient_pilots`` flag instead of an exception.
    """
    from .sim import build_pilot_schedule

    T, P = config.coherence_time, config.n_pilots
    try:
        if config.csi_mode == "estimated":
            build_pilot_schedule(config.n_users, P, config.snr)
    except InsufficientPilotsError as err:
        return RateResult(rate=0.0, T=T, P=P,
                          diagnostics={"insufficient_pilots": True,
                                       "reason": str(err)})
    if grid is None:
        grid = default_grid(config)

    cs = chunk_size(config)
    n_chunks = max(1, math.ceil(config.frames / cs))
    round_chunks = max(N_FOLDS, min(n_chunks, max(1, 2000 // cs)))
    prefactor = (T - P) / T

    hist = JointHistogram(config.constellation_obj().size)
    done = 0
    rate = stderr = 0.0
    while done < n_chunks:
        batch = list(range(done, min(done + round_chunks, n_chunks)))
        if workers > 1:
            splits = np.array_split(np.array(batch), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(
                    lambda ix: _histogram_for_chunks(config, grid, ix, user),
                    [s for s in splits if len(s)]))
            for p in parts:
                hist = hist.merge(p)
        else:
            hist = hist.merge(_histogram_for_chunks(config, grid, batch, user))
        done = batch[-1] + 1
        mi, se = mi_lower_bound(hist)
        rate, stderr = prefactor * mi, prefactor * se
        if target_stderr is not None and stderr < target_stderr and done >= round_chunks:
            break
    return RateResult(rate=rate, T=T, P=P, stderr=stderr,
                      diagnostics={"frames": done * cs, "grid_delta": grid.delta,
                                   "grid_extent": grid.extent})
