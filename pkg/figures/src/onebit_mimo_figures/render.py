"""Render achievable-rate curves and constellation scatter panels from the
CSV files emitted by the ``onebit-mimo`` CLI.

The renderer only consumes the documented CSV schemas; it never imports
the simulation package. Output is deterministic for identical inputs:
styling comes from a checked-in style file and the image metadata is
pinned (no timestamps).
"""

import os
import warnings

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE_FILE = os.path.join(os.path.dirname(__file__), "house.mplstyle")

RATE_COLUMNS = ("experiment,constellation,N,K,T,P,snr_db,csi_mode,"
                "rate_bits,stderr,frames,seed,walltime_s").split(",")
SCATTER_COLUMNS = ("constellation,N,K,T,P,snr_db,correlation,csi_mode,"
                   "user,x_re,x_im,xt_re,xt_im").split(",")

KINDS = ("rate-vs-T", "rate-vs-snr", "rate-vs-N", "scatter-grid")
AXIS_FOR_KIND = {"rate-vs-T": ("T", "coherence time T"),
                 "rate-vs-snr": ("snr_db", "SNR [dB]"),
                 "rate-vs-N": ("N", "number of antennas N")}

_STRING_COLUMNS = {"experiment", "constellation", "csi_mode", "correlation"}


class RecipeError(ValueError):
    """Malformed recipe or input not matching the documented schema."""


def read_recipe(path):
    """Parse a ``key = value`` recipe file; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise RecipeError("%s:%d: expected 'key = value'"
                                  % (path, lineno))
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
    for required in ("kind", "input", "output"):
        if required not in values:
            raise RecipeError("recipe is missing the %r key" % (required,))
    if values["kind"] not in KINDS:
        raise RecipeError("unknown figure kind %r (expected one of %s)"
                          % (values["kind"], ", ".join(KINDS)))
    return values


def read_csv(path, required):
    """Read a CSV into a dict of column arrays, checking the schema."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise RecipeError("%s: empty file (expected at least a header)" % path)
    cols = lines[0].split(",")
    missing = [c for c in required if c not in cols]
    if missing:
        raise RecipeError("%s: missing columns: %s"
                          % (path, ", ".join(missing)))
    raw = [ln.split(",") for ln in lines[1:]]
    table = {}
    for i, c in enumerate(cols):
        vals = [r[i] for r in raw]
        if c in _STRING_COLUMNS:
            table[c] = np.array(vals, dtype=object)
        else:
            table[c] = np.array([float(v) for v in vals])
    table["__len__"] = len(raw)
    return table


def _curve_groups(table):
    """Curve key per row: one line per (experiment, constellation, K, csi)."""
    n = table["__len__"]
    keys = [(table["experiment"][i], table["constellation"][i],
             int(table["K"][i]), table["csi_mode"][i]) for i in range(n)]
    return keys


def _render_rates(recipe, table, kind):
    xcol, xlabel = AXIS_FOR_KIND[kind]
    fig, ax = plt.subplots()
    n = table["__len__"]
    if n == 0:
        warnings.warn("header-only CSV: rendering empty axes")
    else:
        keys = _curve_groups(table)
        for key in sorted(set(keys)):
            sel = np.array([k == key for k in keys])
            order = np.argsort(table[xcol][sel])
            x = table[xcol][sel][order]
            y = table["rate_bits"][sel][order]
            err = table["stderr"][sel][order]
            label = "%s %s K=%d %s" % key
            if np.any(err > 0):
                ax.errorbar(x, y, yerr=err, marker="o", capsize=2,
                            label=label)
            else:
                ax.plot(x, y, marker="o", label=label)
        ax.legend()
    if kind == "rate-vs-T":
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("rate [bits/channel use]")
    ax.set_title(recipe.get("title", kind))
    return fig


def _render_scatter(recipe, table):
    n = table["__len__"]
    if n == 0:
        warnings.warn("header-only CSV: rendering empty axes")
        fig, _ = plt.subplots()
        fig.suptitle(recipe.get("title", "scatter-grid"))
        return fig
    panels = sorted(set((table["N"][i], table["snr_db"][i],
                         table["correlation"][i]) for i in range(n)))
    ncols = 2 if len(panels) > 1 else 1
    nrows = (len(panels) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 4 * nrows),
                             squeeze=False)
    for ax in axes.ravel():
        ax.set_visible(False)
    for p, (n_ant, snr_db, corr) in enumerate(panels):
        ax = axes.ravel()[p]
        ax.set_visible(True)
        sel = np.array([(table["N"][i], table["snr_db"][i],
                         table["correlation"][i]) == (n_ant, snr_db, corr)
                        for i in range(n)])
        ax.plot(table["xt_re"][sel], table["xt_im"][sel], ".", markersize=2,
                alpha=0.5)
        ax.plot(table["x_re"][sel], table["x_im"][sel], "+", color="k",
                markersize=7)
        ax.set_title("N=%d, %.0f dB, %s" % (int(n_ant), snr_db, corr),
                     fontsize=9)
        ax.set_aspect("equal")
    fig.suptitle(recipe.get("title", "combiner outputs"))
    return fig


def render(recipe):
    """Render one recipe (a dict from read_recipe) to its output image."""
    kind = recipe["kind"]
    with plt.style.context(STYLE_FILE):
        if kind == "scatter-grid":
            table = read_csv(recipe["input"], SCATTER_COLUMNS)
            fig = _render_scatter(recipe, table)
        else:
            table = read_csv(recipe["input"], RATE_COLUMNS)
            fig = _render_rates(recipe, table, kind)
        fig.savefig(recipe["output"],
                    metadata={"Software": "onebit-mimo-figures"})
        plt.close(fig)
    return recipe["output"]
