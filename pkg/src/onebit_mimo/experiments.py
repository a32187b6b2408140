"""Figure-reproduction experiments and CSV output.

Each experiment sweeps one axis (coherence time, SNR, or antenna count),
optionally optimizing the pilot count at every sweep point, and writes one
CSV row per curve per point. Runs are deterministic given the seed and
independent of the worker count.
"""

import json
import math
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import mi, siso
from .model import make_rng
from .sim import SimConfig, constellation_dump

CSV_HEADER = ("experiment,constellation,N,K,T,P,snr_db,csi_mode,"
              "rate_bits,stderr,frames,seed,walltime_s")
SCATTER_HEADER = ("constellation,N,K,T,P,snr_db,correlation,csi_mode,"
                  "user,x_re,x_im,xt_re,xt_im")

EXPERIMENTS = ("siso-rate-vs-T", "rate-vs-snr", "rate-vs-T", "rate-vs-N",
               "constellation")


def db_to_linear(snr_db):
    """The one place fixing the dB convention: rho = 10^(dB/10)."""
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(snr):
    return 10.0 * math.log10(snr)


@dataclass
class ResultRow:
    experiment: str
    constellation: str
    N: int
    K: int
    T: int
    P: int
    snr_db: float
    csi_mode: str
    rate_bits: float
    stderr: float
    frames: int
    seed: int
    walltime_s: float


@dataclass
class ExperimentSpec:
    """One figure-reproduction run."""

    experiment: str
    sweep: list
    n_antennas: int = 128
    users: tuple = (1,)
    coherence_time: int = 200
    snr_db: float = 0.0
    constellations: tuple = ("qpsk",)
    csi_mode: str = "estimated"
    correlation: str = "iid"
    pilots: int = None            # None: optimize per sweep point
    pilot_cap: int = 10           # max pilot candidates per MC optimization
    frames: int = 4000
    target_stderr: float = 0.02
    mc_samples: int = 20000       # perfect-CSI SISO reference samples
    seed: int = 0
    workers: int = 1
    out: str = "results.csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError("unknown experiment %r" % (self.experiment,))
        if self.experiment != "constellation":
            if not self.sweep:
                raise ValueError("sweep values must be nonempty")
            self.sweep = sorted(self.sweep)
        if self.frames < 1:
            raise ValueError("frame budget must be >= 1")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit_csv(rows, path, header=CSV_HEADER):
    """Write result rows as UTF-8, LF-terminated CSV at full precision."""
    cols = header.split(",")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            d = asdict(row) if not isinstance(row, dict) else row
            fh.write(",".join(_fmt(d[c]) for c in cols) + "\n")


def parse_csv(path, header=CSV_HEADER):
    """Read back a CSV written by emit_csv; returns a list of dicts."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != header:
        raise ValueError("unexpected CSV header in %s" % (path,))
    cols = header.split(",")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        row = {}
        for c, v in zip(cols, parts):
            if c in ("experiment", "constellation", "csi_mode", "correlation"):
                row[c] = v
            elif c in ("N", "K", "T", "P", "frames", "seed", "user"):
                row[c] = int(v)
            else:
                row[c] = float(v)
        out.append(row)
    return out


def pilot_candidates(n_users, coherence_time, cap):
    """Pilot counts tried by the MC optimizer: multiples of K up to T-1,
    thinned log-spaced to at most ``cap`` candidates (endpoints kept)."""
    mults = np.arange(1, coherence_time // n_users + 1) * n_users
    mults = mults[mults <= coherence_time - 1]
    if len(mults) == 0:
        return []
    if len(mults) <= cap:
        return [int(m) for m in mults]
    picks = np.unique(np.round(np.logspace(0, np.log10(len(mults)), cap)
                               ).astype(int) - 1)
    return [int(mults[i]) for i in picks]


def _mc_point(spec, constellation, n_antennas, n_users, coherence_time,
              snr_db, csi_mode, pilots):
    """One Monte-Carlo rate point, optimizing pilots when requested."""
    snr = db_to_linear(snr_db)
    if csi_mode == "perfect":
        cands = [0]
    elif pilots is not None:
        cands = [pilots]
    else:
        cands = pilot_candidates(n_users, coherence_time, spec.pilot_cap)
        if not cands:
            cands = [n_users] if n_users <= coherence_time else [0]
    best = None
    for P in cands:
        cfg = SimConfig(n_antennas=n_antennas, n_users=n_users,
                        coherence_time=coherence_time, n_pilots=P,
                        snr=snr, constellation=constellation,
                        correlation=spec.correlation, csi_mode=csi_mode,
                        frames=spec.frames, seed=spec.seed)
        res = mi.rate_mrc(cfg, workers=spec.workers,
                          target_stderr=spec.target_stderr)
        if best is None or res.rate > best.rate:
            best = res
    return best


def _row(spec, experiment, constellation, n_antennas, n_users, coherence_time,
         snr_db, csi_mode, res, t0):
    return ResultRow(experiment=experiment, constellation=constellation,
                     N=n_antennas, K=n_users, T=coherence_time, P=res.P,
                     snr_db=float(snr_db), csi_mode=csi_mode,
                     rate_bits=float(res.rate), stderr=float(res.stderr),
                     frames=int(res.diagnostics.get("frames", 0)),
                     seed=spec.seed, walltime_s=time.perf_counter() - t0)


def _siso_rate_vs_t(spec, rows):
    snr = db_to_linear(spec.snr_db)
    rng = make_rng(spec.seed, 0)
    ref = siso.perfect_csi_rate_siso(snr, spec.mc_samples, rng)
    for T in spec.sweep:
        t0 = time.perf_counter()
        cap = siso.capacity_siso(snr, T)
        rows.append(_row(spec, "siso-capacity", "qpsk", 1, 1, T, spec.snr_db,
                         "none", cap, t0))
        t0 = time.perf_counter()
        _, pb = siso.optimize_pilots(snr, T)
        rows.append(_row(spec, "siso-pilot-bound", "qpsk", 1, 1, T,
                         spec.snr_db, "none", pb, t0))
        t0 = time.perf_counter()
        jpd = siso.jpd_rate(snr, T)
        rows.append(_row(spec, "siso-jpd", "qpsk", 1, 1, T, spec.snr_db,
                         "none", jpd, t0))
        rows.append(_row(spec, "siso-perfect-csi", "qpsk", 1, 1, T,
                         spec.snr_db, "perfect",
                         siso.RateResult(rate=ref.rate, T=T, stderr=ref.stderr,
                                         diagnostics=ref.diagnostics),
                         time.perf_counter()))


def _mimo_sweep(spec, rows):
    axis = spec.experiment
    for val in spec.sweep:
        for const in spec.constellations:
            for K in spec.users:
                n_ant = spec.n_antennas
                T = spec.coherence_time
                snr_db = spec.snr_db
                if axis == "rate-vs-snr":
                    snr_db = float(val)
                elif axis == "rate-vs-T":
                    T = int(val)
                elif axis == "rate-vs-N":
                    n_ant = int(val)
                t0 = time.perf_counter()
                res = _mc_point(spec, const, n_ant, K, T, snr_db,
                                spec.csi_mode, spec.pilots)
                rows.append(_row(spec, axis, const, n_ant, K, T, snr_db,
                                 spec.csi_mode, res, t0))
                if axis == "rate-vs-T" and spec.csi_mode == "estimated":
                    t0 = time.perf_counter()
                    ref = _mc_point(spec, const, n_ant, K, T, snr_db,
                                    "perfect", None)
                    rows.append(_row(spec, axis, const, n_ant, K, T, snr_db,
                                     "perfect", ref, t0))


# Fig. 3 panel layout: (antennas, snr_db, correlation).
CONSTELLATION_PANELS = ((40, 0.0, "iid"), (400, 0.0, "iid"),
                        (400, 20.0, "iid"), (400, 20.0, "fully_correlated"))


def _constellation_dump(spec):
    rows = []
    for n_ant, snr_db, corr in CONSTELLATION_PANELS:
        cfg = SimConfig(n_antennas=n_ant, n_users=max(spec.users),
                        coherence_time=spec.coherence_time,
                        n_pilots=spec.pilots if spec.pilots is not None else 20,
                        snr=db_to_linear(snr_db),
                        constellation=spec.constellations[0],
                        correlation=corr, csi_mode=spec.csi_mode,
                        frames=spec.frames, seed=spec.seed)
        table = constellation_dump(cfg, spec.frames)
        for user, x_re, x_im, xt_re, xt_im in table:
            rows.append({"constellation": cfg.constellation, "N": n_ant,
                         "K": cfg.n_users, "T": cfg.coherence_time,
                         "P": cfg.n_pilots, "snr_db": snr_db,
                         "correlation": corr, "csi_mode": cfg.csi_mode,
                         "user": int(user), "x_re": x_re, "x_im": x_im,
                         "xt_re": xt_re, "xt_im": xt_im})
    return rows


def run_experiment(spec):
    """Run one experiment and write its CSV (plus a .meta.json sidecar
    recording the spec, including the pilot-candidate cap).

    On failure, rows computed so far are flushed with a trailing failure
    marker row before the exception propagates.
    """
    meta = asdict(spec)
    with open(spec.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, default=str)

    if spec.experiment == "constellation":
        rows = _constellation_dump(spec)
        emit_csv(rows, spec.out, header=SCATTER_HEADER)
        return rows

    rows = []
    try:
        if spec.experiment == "siso-rate-vs-T":
            _siso_rate_vs_t(spec, rows)
        else:
            _mimo_sweep(spec, rows)
    except Exception:
        rows.append(ResultRow(experiment="failed:" + spec.experiment,
                              constellation="", N=0, K=0, T=0, P=0,
                              snr_db=0.0, csi_mode="", rate_bits=0.0,
                              stderr=0.0, frames=0, seed=spec.seed,
                              walltime_s=0.0))
        emit_csv(_sorted(rows), spec.out)
        raise
    rows = _sorted(rows)
    emit_csv(rows, spec.out)
    return rows


def _sorted(rows):
    return sorted(rows, key=lambda r: (r.experiment, r.constellation, r.K,
                                       r.csi_mode, r.N, r.T, r.snr_db))


def desk_preset(experiment, seed=0, out="results.csv", workers=1):
    """Desk-scale presets: small antenna counts and frame budgets, sized to
    finish in minutes while keeping the standard error near 0.02 bits."""
    common = dict(seed=seed, out=out, workers=workers, frames=4000,
                  target_stderr=0.02)
    if experiment == "siso-rate-vs-T":
        return ExperimentSpec(experiment=experiment, snr_db=10.0,
                              sweep=[2, 3, 5, 10, 20, 50, 100, 200, 500, 1000],
                              mc_samples=20000, **common)
    if experiment == "rate-vs-snr":
        return ExperimentSpec(experiment=experiment,
                              sweep=list(np.arange(-20.0, 21.0, 5.0)),
                              n_antennas=128, coherence_time=200,
                              users=(1, 4), constellations=("qpsk", "16qam"),
                              **common)
    if experiment == "rate-vs-T":
        return ExperimentSpec(experiment=experiment,
                              sweep=[25, 50, 100, 200, 400],
                              n_antennas=128, snr_db=-10.0, users=(20,),
                              constellations=("qpsk", "16qam"), **common)
    if experiment == "rate-vs-N":
        return ExperimentSpec(experiment=experiment, sweep=[16, 32, 64, 128],
                              coherence_time=200, snr_db=-10.0, users=(1,),
                              constellations=("qpsk", "16qam"), **common)
    if experiment == "constellation":
        return ExperimentSpec(experiment=experiment, sweep=[],
                              coherence_time=70, pilots=20, users=(1,),
                              constellations=("16qam",), seed=seed, out=out,
                              workers=workers, frames=40)
    raise ValueError("unknown experiment %r" % (experiment,))


def paper_preset(experiment, seed=0, out="results.csv", workers=1):
    """Paper-scale presets (N = 400, T = 1000); compute-heavy."""
    common = dict(seed=seed, out=out, workers=workers, frames=40000,
                  target_stderr=0.02)
    if experiment == "siso-rate-vs-T":
        return ExperimentSpec(experiment=experiment, snr_db=10.0,
                              sweep=[2, 5, 10, 20, 50, 100, 200, 500, 1000],
                              mc_samples=200000, **common)
    if experiment == "rate-vs-snr":
        return ExperimentSpec(experiment=experiment,
                              sweep=list(np.arange(-20.0, 31.0, 2.5)),
                              n_antennas=400, coherence_time=1000,
                              users=(1, 20), constellations=("qpsk", "16qam"),
                              **common)
    if experiment == "rate-vs-T":
        return ExperimentSpec(experiment=experiment,
                              sweep=[25, 50, 100, 250, 500, 1000],
                              n_antennas=400, snr_db=-10.0, users=(20,),
                              constellations=("qpsk", "16qam"), **common)
    if experiment == "rate-vs-N":
        return ExperimentSpec(experiment=experiment,
                              sweep=[25, 50, 100, 200, 400],
                              coherence_time=1000, snr_db=-10.0, users=(1,),
                              constellations=("qpsk", "16qam"), **common)
    if experiment == "constellation":
        return ExperimentSpec(experiment=experiment, sweep=[],
                              coherence_time=1020, pilots=20, users=(1,),
                              constellations=("16qam",), seed=seed, out=out,
                              workers=workers, frames=100)
    raise ValueError("unknown experiment %r" % (experiment,))
