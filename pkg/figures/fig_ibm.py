"""Dephasing benchmark figure: simulated coherence decay against the exact
pure-dephasing solution, one pair of curves per run directory.

The analytic overlay is evaluated locally from the bath parameters in
meta.json; nothing from the simulation package is imported.

Usage: python -m figures.fig_ibm --in RUNDIR [RUNDIR ...] --out ibm.pdf
"""

import argparse
import math
import sys

import numpy as np

try:
    from .common import COLORS, beta_label, load_meta, load_series, plt, save_vector
except ImportError:
    from common import COLORS, beta_label, load_meta, load_series, plt, save_vector


def exact_coherence(times, alpha, s, omega_c, beta, omega_0):
    """cos(w0 t) exp(-Gamma(t)) for the hard-cutoff power-law bath, with the
    decoherence exponent done by midpoint quadrature on a fine grid."""
    n_grid = 4000
    w = (np.arange(n_grid) + 0.5) * (omega_c / n_grid)
    jw = 2.0 * alpha * omega_c * (w / omega_c) ** s
    therm = np.ones_like(w) if math.isinf(beta) else 1.0 / np.tanh(0.5 * beta * w)
    weight = jw * therm / w**2 * (omega_c / n_grid)
    vals = []
    for t in times:
        gamma = 4.0 * np.sum(weight * (1.0 - np.cos(w * t)))
        vals.append(math.cos(omega_0 * t) * math.exp(-gamma))
    return np.array(vals)


def build_figure(run_dirs):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for i, run in enumerate(run_dirs):
        cfg = load_meta(run)["config"]
        bath = cfg["bath"]
        beta = float(bath["beta"])
        t, sx = load_series(run, ["sigma_x"])["sigma_x"]
        exact = exact_coherence(t, bath["alpha"], bath["s"], bath["omega_c"],
                                beta, cfg["model"]["omega_0"])
        color = COLORS[i % len(COLORS)]
        ax.plot(t, exact, color=color, lw=1.4, label=f"exact, {beta_label(beta)}")
        stride = max(1, len(t) // 60)
        ax.plot(t[::stride], sx[::stride], "x", color="black", ms=4,
                label="simulation" if i == 0 else None)
    ax.set_xlabel(r"$\omega_c t$")
    ax.set_ylabel(r"$\langle\sigma_x(t)\rangle$")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="runs", nargs="+", required=True, metavar="RUNDIR")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    save_vector(build_figure(args.runs), args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
