"""Shared loaders and the deterministic vector-image writer.

Only the documented primary output formats are read here:
  observables.csv  -- long format t,obs_name,value_re,value_im
  spectrum.csv     -- omega,n,n_thermal
  rates.csv        -- epsilon,beta,gamma,rmse,tau
  meta.json        -- {"config": {...}, "version": ..., "chain_hash": ...}
"""

import csv
import json
import math
import sys
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "figures"

COLORS = ["tab:red", "tab:blue", "tab:green", "tab:purple", "tab:orange", "tab:brown"]


def fail(message):
    sys.exit(f"error: {message}")


def load_meta(run_dir):
    path = Path(run_dir) / "meta.json"
    if not path.exists():
        fail(f"missing input {path}")
    with open(path) as fh:
        return json.load(fh)


def beta_of(run_dir):
    return float(load_meta(run_dir)["config"]["bath"]["beta"])


def beta_label(beta):
    return "beta=inf" if math.isinf(beta) else f"beta={beta:g}"


def load_series(run_dir, names):
    """Pivot observables.csv into {name: (times, values)} for the given names."""
    path = Path(run_dir) / "observables.csv"
    if not path.exists():
        fail(f"missing input {path}")
    out = {name: ([], []) for name in names}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for col in ("t", "obs_name", "value_re"):
            if col not in (reader.fieldnames or []):
                fail(f"{path} is missing column '{col}'")
        for row in reader:
            name = row["obs_name"]
            if name in out:
                out[name][0].append(float(row["t"]))
                out[name][1].append(float(row["value_re"]))
    return {k: (np.array(t), np.array(v)) for k, (t, v) in out.items()}


def load_occupation_snapshots(run_dir):
    """time -> array of chain occupations (site order) from observables.csv."""
    path = Path(run_dir) / "observables.csv"
    if not path.exists():
        fail(f"missing input {path}")
    per_time = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for col in ("t", "obs_name", "value_re"):
            if col not in (reader.fieldnames or []):
                fail(f"{path} is missing column '{col}'")
        for row in reader:
            name = row["obs_name"]
            if name.startswith("n_") and name[2:].isdigit():
                per_time.setdefault(float(row["t"]), {})[int(name[2:])] = float(row["value_re"])
    if not per_time:
        fail(f"{path} contains no chain occupations (columns n_1, n_2, ...)")
    out = {}
    for t, sites in per_time.items():
        arr = np.zeros(max(sites))
        for k, v in sites.items():
            arr[k - 1] = v
        out[t] = arr
    return out


def load_spectrum(run_dir):
    path = Path(run_dir) / "spectrum.csv"
    if not path.exists():
        fail(f"missing input {path}")
    omegas, ns, nts = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for col in ("omega", "n", "n_thermal"):
            if col not in (reader.fieldnames or []):
                fail(f"{path} is missing column '{col}'")
        for row in reader:
            omegas.append(float(row["omega"]))
            ns.append(float(row["n"]))
            nts.append(float(row["n_thermal"]) if row["n_thermal"] else math.nan)
    order = np.argsort(omegas)
    return np.array(omegas)[order], np.array(ns)[order], np.array(nts)[order]


def load_rates(path):
    path = Path(path)
    if not path.exists():
        fail(f"missing input {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for col in ("epsilon", "beta", "gamma"):
            if col not in (reader.fieldnames or []):
                fail(f"{path} is missing column '{col}'")
        for row in reader:
            rows.append((float(row["epsilon"]), float(row["beta"]), float(row["gamma"])))
    if not rows:
        fail(f"{path} has no rate rows")
    return rows


def save_vector(fig, out):
    """Write a vector image with no embedded timestamps (byte-stable)."""
    out = Path(out)
    if out.suffix == ".pdf":
        meta = {"CreationDate": None}
    elif out.suffix == ".svg":
        meta = {"Date": None}
    else:
        fail(f"output must be .pdf or .svg, got '{out.suffix}'")
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata=meta)
    plt.close(fig)
