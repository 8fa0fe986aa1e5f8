#!/usr/bin/env python3
"""Dissipative two-level runs at several temperatures, bath occupation
spectra from the final checkpoints, and the spectrum figure with the
total-occupation and detailed-balance insets.

    python3 scripts/run_sbm_spectrum.py --out out/sbm            # inf and 2
    python3 scripts/run_sbm_spectrum.py --betas inf,2,4,6,10     # full set
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from thermochain.cli import main as cli  # noqa: E402
from figures.fig_spectrum import main as fig_main  # noqa: E402
from figures.fig_chainwaves import main as waves_main  # noqa: E402


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/sbm")
    parser.add_argument("--betas", default="inf,2")
    parser.add_argument("--t-final", type=float, default=150.0)
    args = parser.parse_args()

    runs = []
    for beta in args.betas.split(","):
        run_id = f"sbm_beta{beta}"
        code = cli([
            "evolve", "--out", args.out,
            "--set", "model.kind=sbm",
            "--set", f"bath.beta={beta}",
            "--set", f"tdvp.t_final={args.t_final:g}",
            "--set", f"chain.n_sites={int(args.t_final * 1.3) + 40}",
            "--set", "tdvp.checkpoint_stride=500",
            "--set", "tdvp.observable_stride=10",
            "--set", f"output.run_id={run_id}",
        ])
        if code != 0:
            return code
        run_dir = str(Path(args.out) / run_id)
        code = cli(["spectrum", "--run", run_dir])
        if code != 0:
            return code
        runs.append(run_dir)
    code = fig_main(["--in", *runs, "--out", str(Path(args.out) / "spectrum.pdf")])
    if code != 0:
        return code
    return waves_main(["--in", *runs, "--out", str(Path(args.out) / "chainwaves.pdf"),
                       "--time", str(min(45.0, args.t_final))])


if __name__ == "__main__":
    sys.exit(main())
