"""Chain-mode occupation snapshot: <c_n^+ c_n> against site index at a fixed
time, one curve per run directory (typically different temperatures).

Usage: python -m figures.fig_chainwaves --in RUNDIR [RUNDIR ...] --out f.pdf
       [--time T]    snapshot time (defaults to the last measured time)
"""

import argparse
import sys

import numpy as np

try:
    from .common import beta_label, beta_of, load_occupation_snapshots, plt, save_vector
except ImportError:
    from common import beta_label, beta_of, load_occupation_snapshots, plt, save_vector


def build_figure(run_dirs, time=None):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for run in run_dirs:
        occ = load_occupation_snapshots(run)
        times = np.array(sorted(occ))
        t_sel = times[-1] if time is None else times[np.argmin(np.abs(times - time))]
        vals = occ[t_sel]
        ax.plot(np.arange(1, len(vals) + 1), vals, lw=1.3,
                label=f"{beta_label(beta_of(run))} (t={t_sel:g})")
    ax.set_xlabel("chain site n")
    ax.set_ylabel(r"$\langle c_n^\dagger c_n\rangle$")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="runs", nargs="+", required=True, metavar="RUNDIR")
    parser.add_argument("--out", required=True)
    parser.add_argument("--time", type=float, default=None)
    args = parser.parse_args(argv)
    save_vector(build_figure(args.runs, args.time), args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
