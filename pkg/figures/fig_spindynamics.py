"""Reaction-coordinate dynamics: <sigma_x(t)> (reaction progress) and
<sigma_y(t)> (conjugate momentum) per temperature, with a zoomed inset of the
early transient in the lower panel.

Usage: python -m figures.fig_spindynamics --in RUNDIR [RUNDIR ...] --out f.pdf
"""

import argparse
import sys

try:
    from .common import COLORS, beta_label, beta_of, load_series, plt, save_vector
except ImportError:
    from common import COLORS, beta_label, beta_of, load_series, plt, save_vector


def build_figure(run_dirs):
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    inset = bottom.inset_axes([0.55, 0.55, 0.4, 0.4])
    for i, run in enumerate(run_dirs):
        series = load_series(run, ["sigma_x", "sigma_y"])
        color = COLORS[i % len(COLORS)]
        label = beta_label(beta_of(run))
        t, sx = series["sigma_x"]
        _, sy = series["sigma_y"]
        top.plot(t, sx, lw=1.2, color=color, label=label)
        bottom.plot(t, sy, lw=1.2, color=color)
        early = t <= 5.0
        inset.plot(t[early], sy[early], lw=1.0, color=color)
    top.set_ylabel(r"$\langle\sigma_x(t)\rangle$")
    top.legend(frameon=False, fontsize=8)
    bottom.set_ylabel(r"$\langle\sigma_y(t)\rangle$")
    bottom.set_xlabel(r"$\omega_c t$")
    inset.tick_params(labelsize=6)
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
