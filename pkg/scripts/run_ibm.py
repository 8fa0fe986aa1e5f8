#!/usr/bin/env python3
"""Dephasing benchmark at three temperatures (coherence decay against the
exact solution), then the comparison figure.

    python3 scripts/run_ibm.py --out out/ibm [--t-final 40]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from thermochain.cli import main as cli  # noqa: E402
from figures.fig_ibm import main as fig_main  # noqa: E402

BETAS = (1.0, 10.0, 100.0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/ibm")
    parser.add_argument("--t-final", type=float, default=40.0)
    args = parser.parse_args()

    runs = []
    for beta in BETAS:
        code = cli([
            "evolve", "--out", args.out,
            "--set", "model.kind=ibm",
            "--set", f"bath.beta={beta:g}",
            "--set", f"tdvp.t_final={args.t_final:g}",
            "--set", f"chain.n_sites={int(args.t_final * 1.2) + 30}",
            "--set", "output.run_id=" + f"ibm_beta{beta:g}",
        ])
        if code != 0:
            return code
        runs.append(str(Path(args.out) / f"ibm_beta{beta:g}"))
    return fig_main(["--in", *runs, "--out", str(Path(args.out) / "ibm.pdf")])


if __name__ == "__main__":
    sys.exit(main())
