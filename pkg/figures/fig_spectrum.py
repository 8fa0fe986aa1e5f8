"""Extended-bath occupation spectra with the two companion insets: total
chain occupation against time (left) and the detailed-balance peak ratio
against inverse temperature on a log scale (right).

Usage: python -m figures.fig_spectrum --in RUNDIR [RUNDIR ...] --out f.pdf
"""

import argparse
import math
import sys

import numpy as np

try:
    from .common import COLORS, beta_label, beta_of, load_series, load_spectrum, plt, save_vector
except ImportError:
    from common import COLORS, beta_label, beta_of, load_series, load_spectrum, plt, save_vector


def peak_heights(omega, n):
    """(positive peak height, negative peak height or None) by discrete max."""
    pos = omega > 0
    neg = omega < 0
    h_pos = float(np.max(n[pos]))
    if not np.any(neg):
        return h_pos, None
    h_neg = float(np.max(n[neg]))
    if h_neg <= max(1e-8 * h_pos, 1e-12):
        return h_pos, None
    return h_pos, h_neg


def build_figure(run_dirs):
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    ratios = []
    for i, run in enumerate(run_dirs):
        beta = beta_of(run)
        omega, n, _ = load_spectrum(run)
        color = COLORS[i % len(COLORS)]
        ax.plot(omega, n, lw=1.3, color=color, label=beta_label(beta))
        h_pos, h_neg = peak_heights(omega, n)
        if h_neg is not None and not math.isinf(beta):
            ratios.append((beta, (h_pos + 1.0) / h_neg))
    ax.set_xlabel(r"$\omega/\omega_c$")
    ax.set_ylabel(r"$\langle n_\omega\rangle$")
    ax.legend(frameon=False, fontsize=8, loc="upper left")

    left = ax.inset_axes([0.08, 0.45, 0.3, 0.35])
    for i, run in enumerate(run_dirs):
        t, ntot = load_series(run, ["n_total"])["n_total"]
        left.plot(t, ntot, lw=1.0, color=COLORS[i % len(COLORS)])
    left.set_xlabel(r"$\omega_c t$", fontsize=7)
    left.set_ylabel(r"$\langle n\rangle_{tot}$", fontsize=7)
    left.tick_params(labelsize=6)

    right = ax.inset_axes([0.68, 0.45, 0.28, 0.35])
    if ratios:
        ratios.sort()
        betas = np.array([b for b, _ in ratios])
        vals = np.array([r for _, r in ratios])
        right.semilogy(betas, vals, "o", ms=4, color="black")
        if len(ratios) >= 2:
            slope, intercept = np.polyfit(betas, np.log(vals), 1)
            grid = np.linspace(betas.min(), betas.max(), 50)
            right.semilogy(grid, np.exp(intercept + slope * grid), "-", lw=1.0,
                           color="tab:gray", label=f"exp({slope:.3f} b)")
            right.legend(frameon=False, fontsize=6)
    right.set_xlabel(r"$\beta\omega_c$", fontsize=7)
    right.set_ylabel(r"$(n_{\omega_p}+1)/n_{\omega_n}$", fontsize=7)
    right.tick_params(labelsize=6)
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
