"""Regenerates synthetic_proteins.csv: 20 proteins, 30 case and 30 control
subjects, lognormal abundances; proteins P01-P05 are shifted up in cases."""

import csv

import numpy as np

rng = np.random.default_rng(20100409)
n_case, n_control = 30, 30
subjects = [f"S{i:02d}:case" for i in range(1, n_case + 1)]
subjects += [f"S{i:02d}:control" for i in range(n_case + 1, n_case + n_control + 1)]

with open("synthetic_proteins.csv", "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["feature"] + subjects)
    for k in range(1, 21):
        base = rng.uniform(1.0, 4.0)
        shift = 0.6 if k <= 5 else 0.0
        case = np.exp(base + shift + 0.5 * rng.standard_normal(n_case))
        control = np.exp(base + 0.5 * rng.standard_normal(n_control))
        w.writerow([f"P{k:02d}"] + [f"{v:.6f}" for v in np.concatenate([case, control])])
