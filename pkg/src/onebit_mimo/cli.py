"""Command-line front end.

Subcommands compose the closed-form SISO operations, the Monte-Carlo
uplink pipeline, and the figure-reproduction sweeps, all emitting the same
CSV schema. Flags can be preloaded from a key-value config file
(``key = value`` per line, same names as the flags) and overridden on the
command line.
"""

import argparse
import sys
import time

from . import mi, siso
from .experiments import (ResultRow, db_to_linear, desk_preset,
                          emit_csv, paper_preset, run_experiment)
from .sim import SimConfig


def read_config(path):
    """Parse a ``key = value`` config file; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("%s:%d: expected 'key = value'" % (path, lineno))
            key, val = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _add_common(p):
    p.add_argument("--config", help="key-value config file; flags override it")
    p.add_argument("--snr-db", type=float, default=0.0)
    p.add_argument("--coherence-time", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")


def _add_mimo(p):
    p.add_argument("--antennas", type=int, default=128)
    p.add_argument("--users", type=int, default=1)
    p.add_argument("--pilots", type=int, default=None)
    p.add_argument("--optimize-pilots", action="store_true")
    p.add_argument("--constellation", choices=("bpsk", "qpsk", "16qam"),
                   default="qpsk")
    p.add_argument("--csi", choices=("estimated", "perfect"), default="estimated")
    p.add_argument("--correlation", choices=("iid", "full"), default="iid")
    p.add_argument("--frames", type=int, default=4000)
    p.add_argument("--target-stderr", type=float, default=None)
    p.add_argument("--grid-delta", type=float, default=None)
    p.add_argument("--grid-extent", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="onebit-mimo",
        description="Achievable rates for fading channels behind one-bit ADCs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("siso-capacity", help="closed-form SISO capacity")
    _add_common(p)

    p = sub.add_parser("siso-pilot-bound",
                       help="pilot-based LS lower bound (optionally optimized P)")
    _add_common(p)
    p.add_argument("--pilots", type=int, default=None)
    p.add_argument("--optimize-pilots", action="store_true")

    p = sub.add_parser("siso-jpd", help="joint pilot-data processing rate")
    _add_common(p)

    p = sub.add_parser("mimo-rate",
                       help="Monte-Carlo LS + MRC achievable rate per user")
    _add_common(p)
    _add_mimo(p)

    p = sub.add_parser("constellation", help="combiner-output scatter dump")
    _add_common(p)
    _add_mimo(p)

    p = sub.add_parser("sweep", help="figure-reproduction experiment")
    _add_common(p)
    p.add_argument("--experiment", required=True,
                   choices=("siso-rate-vs-T", "rate-vs-snr", "rate-vs-T",
                            "rate-vs-N", "constellation"))
    p.add_argument("--preset", choices=("desk", "paper"), default="desk")
    p.add_argument("--values", default=None,
                   help="comma-separated sweep values (overrides the preset)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--frames", type=int, default=None)
    return parser


def _cast_like(raw, current):
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if current is not None:
        return type(current)(raw)
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _apply_config(parser, argv):
    """Parse argv, then fill flags not given on the command line from the
    --config file (command-line flags win)."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        passed = {a[2:].split("=", 1)[0].replace("-", "_")
                  for a in argv if a.startswith("--")}
        for key, raw in read_config(args.config).items():
            if not hasattr(args, key):
                raise SystemExit("config key %r is not a known flag" % (key,))
            if key in passed:
                continue
            setattr(args, key, _cast_like(raw, getattr(args, key)))
    return args


def _emit(rows, out):
    if out:
        emit_csv(rows, out)
        return
    import os
    import tempfile
    fd, tmp = tempfile.mkstemp(suffix=".csv")
    os.close(fd)
    try:
        emit_csv(rows, tmp)
        with open(tmp, "r", encoding="utf-8") as fh:
            sys.stdout.write(fh.read())
    finally:
        os.unlink(tmp)


def _single_row(args, experiment, rate_result, constellation="qpsk",
                n_antennas=1, n_users=1, csi_mode="none", t0=None):
    return ResultRow(experiment=experiment, constellation=constellation,
                     N=n_antennas, K=n_users, T=rate_result.T,
                     P=rate_result.P, snr_db=args.snr_db, csi_mode=csi_mode,
                     rate_bits=rate_result.rate, stderr=rate_result.stderr,
                     frames=int(rate_result.diagnostics.get("frames", 0)),
                     seed=args.seed,
                     walltime_s=time.perf_counter() - t0 if t0 else 0.0)


def main(argv=None):
    parser = build_parser()
    args = _apply_config(parser, sys.argv[1:] if argv is None else list(argv))
    try:
        return _dispatch(args)
    except (ValueError, OSError) as err:
        print("error: %s" % (err,), file=sys.stderr)
        return 2


def _dispatch(args):
    snr = db_to_linear(args.snr_db) if hasattr(args, "snr_db") else None
    t0 = time.perf_counter()

    if args.command == "siso-capacity":
        res = siso.capacity_siso(snr, args.coherence_time)
        _emit([_single_row(args, "siso-capacity", res, t0=t0)], args.out)
        return 0

    if args.command == "siso-pilot-bound":
        if args.optimize_pilots or args.pilots is None:
            _, res = siso.optimize_pilots(snr, args.coherence_time)
        else:
            res = siso.pilot_bound(snr, args.coherence_time, args.pilots)
        _emit([_single_row(args, "siso-pilot-bound", res, t0=t0)], args.out)
        return 0

    if args.command == "siso-jpd":
        res = siso.jpd_rate(snr, args.coherence_time)
        _emit([_single_row(args, "siso-jpd", res, t0=t0)], args.out)
        return 0

    if args.command == "mimo-rate":
        correlation = "fully_correlated" if args.correlation == "full" else "iid"
        pilots = args.pilots
        if args.optimize_pilots:
            pilots = None
        elif pilots is None:
            pilots = args.users
        grid = None
        if args.grid_delta is not None:
            extent = args.grid_extent if args.grid_extent is not None \
                else 10 * args.grid_delta
            grid = mi.GridSpec(delta=args.grid_delta, extent=extent)
        if pilots is None:
            from .experiments import pilot_candidates
            cands = pilot_candidates(args.users, args.coherence_time, 10)
        else:
            cands = [pilots]
        best = None
        for P in cands:
            cfg = SimConfig(n_antennas=args.antennas, n_users=args.users,
                            coherence_time=args.coherence_time, n_pilots=P,
                            snr=snr, constellation=args.constellation,
                            correlation=correlation, csi_mode=args.csi,
                            frames=args.frames, seed=args.seed)
            res = mi.rate_mrc(cfg, grid=grid, workers=args.workers,
                              target_stderr=args.target_stderr)
            if best is None or res.rate > best.rate:
                best = res
        row = _single_row(args, "mimo-rate", best,
                          constellation=args.constellation,
                          n_antennas=args.antennas, n_users=args.users,
                          csi_mode=args.csi, t0=t0)
        _emit([row], args.out)
        if best.diagnostics.get("insufficient_pilots"):
            print("insufficient pilots: rate reported as 0", file=sys.stderr)
        return 0

    if args.command == "constellation":
        from .experiments import SCATTER_HEADER
        from .sim import constellation_dump
        correlation = "fully_correlated" if args.correlation == "full" else "iid"
        cfg = SimConfig(n_antennas=args.antennas, n_users=args.users,
                        coherence_time=args.coherence_time,
                        n_pilots=args.pilots if args.pilots is not None else 20,
                        snr=snr, constellation=args.constellation,
                        correlation=correlation, csi_mode=args.csi,
                        frames=args.frames, seed=args.seed)
        table = constellation_dump(cfg, args.frames)
        rows = [{"constellation": cfg.constellation, "N": cfg.n_antennas,
                 "K": cfg.n_users, "T": cfg.coherence_time, "P": cfg.n_pilots,
                 "snr_db": args.snr_db, "correlation": correlation,
                 "csi_mode": cfg.csi_mode, "user": int(u), "x_re": xr,
                 "x_im": xi, "xt_re": tr, "xt_im": ti}
                for u, xr, xi, tr, ti in table]
        out = args.out or "constellation.csv"
        emit_csv(rows, out, header=SCATTER_HEADER)
        return 0

    if args.command == "sweep":
        preset = desk_preset if args.preset == "desk" else paper_preset
        spec = preset(args.experiment, seed=args.seed,
                      out=args.out or "results.csv", workers=args.workers)
        if args.values:
            spec.sweep = sorted(type(spec.sweep[0] if spec.sweep else float)(v)
                                for v in
                                (float(x) if "." in x or "e" in x.lower()
                                 else int(x) for x in args.values.split(",")))
        if args.frames:
            spec.frames = args.frames
        run_experiment(spec)
        return 0

    raise AssertionError("unhandled command %r" % (args.command,))


if __name__ == "__main__":
    sys.exit(main())
