#!/usr/bin/env python3
"""Electron-transfer sweep over temperatures and electronic couplings,
exponential rate fits, and the rate plot with the perturbative overlays.

    python3 scripts/run_et_rates.py --out out/et
    python3 scripts/run_et_rates.py --betas 0.5,5,100 --epsilons 0.2,0.3,0.4

Strong coupling fills the chain modes quickly, so this is the most expensive
study; the defaults keep it at desk scale (tens of minutes).
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from thermochain.cli import main as cli  # noqa: E402
from figures.fig_rates import main as fig_main  # noqa: E402
from figures.fig_spindynamics import main as spin_main  # noqa: E402


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/et")
    parser.add_argument("--betas", default="0.5,5,100")
    parser.add_argument("--epsilons", default="0.2,0.3,0.4")
    parser.add_argument("--t-final", type=float, default=60.0)
    parser.add_argument("--fock-dim", type=int, default=10)
    parser.add_argument("--max-bond", type=int, default=8)
    parser.add_argument("--jobs", type=int, default=0)
    args = parser.parse_args()

    code = cli([
        "sweep", "--out", args.out,
        "--set", "model.kind=et",
        "--set", f"tdvp.t_final={args.t_final:g}",
        "--set", f"tdvp.fock_dim={args.fock_dim}",
        "--set", f"tdvp.max_bond={args.max_bond}",
        "--set", f"chain.n_sites={int(args.t_final * 1.3) + 40}",
        "--set", "tdvp.checkpoint_stride=0",
        "--set", "tdvp.observable_stride=2",
        "--betas", args.betas,
        "--epsilons", args.epsilons,
        "--jobs", str(args.jobs),
    ])
    if code != 0:
        return code
    code = fig_main(["--in", str(Path(args.out) / "rates.csv"),
                     "--out", str(Path(args.out) / "rates.pdf"), "--alpha", "0.8"])
    if code != 0:
        return code
    spin_runs = sorted(str(d) for d in Path(args.out).iterdir()
                       if d.name.startswith("et_") and "eps0.2" in d.name)
    if spin_runs:
        return spin_main(["--in", *spin_runs,
                          "--out", str(Path(args.out) / "spindynamics.pdf")])
    return 0


if __name__ == "__main__":
    sys.exit(main())
