"""Tunneling rates on a log scale against inverse temperature, grouped by the
electronic coupling, with the perturbative limits overlaid: dashed for the
high-temperature (classical) branch, dotted for the low-temperature (quantum)
branch.  The limit formulas are evaluated locally.

Usage: python -m figures.fig_rates --in rates.csv --out rates.pdf
       [--alpha A] bath coupling used for the overlays (default 0.8)
"""

import argparse
import math
import sys

import numpy as np

try:
    from .common import COLORS, load_rates, plt, save_vector
except ImportError:
    from common import COLORS, load_rates, plt, save_vector


def rate_low_t(eps, alpha, beta):
    return math.sqrt(math.pi) / (4 * math.sqrt(alpha)) * eps**2 * (math.pi / beta) ** (2 * alpha - 1)


def rate_high_t(eps, alpha, beta):
    return 0.25 * eps**2 * math.sqrt(math.pi * beta / (2 * alpha)) * math.exp(-0.5 * alpha * beta)


def build_figure(rates_csv, alpha=0.8):
    rows = load_rates(rates_csv)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    epsilons = sorted({eps for eps, _, _ in rows})
    beta_lo = min(b for _, b, _ in rows)
    beta_hi = max(b for _, b, _ in rows)
    grid = np.geomspace(max(beta_lo, 1e-3), beta_hi, 200)
    for i, eps in enumerate(epsilons):
        color = COLORS[i % len(COLORS)]
        pts = sorted((b, g) for e, b, g in rows if e == eps)
        ax.plot([b for b, _ in pts], [g for _, g in pts], "o", ms=5, color=color,
                label=f"eps={eps:g}")
        ax.plot(grid, [rate_high_t(eps, alpha, b) for b in grid], "--", lw=1.0, color=color)
        ax.plot(grid, [rate_low_t(eps, alpha, b) for b in grid], ":", lw=1.2, color=color)
    ax.set_yscale("log")
    ax.set_xscale("log")
    ax.set_xlabel(r"$\beta\omega_c$")
    ax.set_ylabel(r"$\Gamma/\omega_c$")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="rates", required=True, metavar="RATES_CSV")
    parser.add_argument("--out", required=True)
    parser.add_argument("--alpha", type=float, default=0.8)
    args = parser.parse_args(argv)
    save_vector(build_figure(args.rates, args.alpha), args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
