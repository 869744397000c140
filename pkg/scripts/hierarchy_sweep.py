"""n^T F_Q n of random states in each separability class next to the matching bounds."""
import argparse
import csv
from pathlib import Path

import numpy as np

from qmbounds.bounds import (
    heisenberg_bound,
    mode_separable_bound,
    moments_from_state,
    shot_noise_bound,
)
from qmbounds.fisher import qfi_matrix
from qmbounds.hilbert import ModeConfig, build_generators
from qmbounds.states import EntanglementSpec, sample_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="data/hierarchy_sweep.csv")
    args = ap.parse_args()

    config = ModeConfig.uniform(2)
    n = np.array([1.0, 1.0]) / np.sqrt(2)
    spec = EntanglementSpec(P=(1, 1), partition=((0,), (1,)))
    rows = []
    for cls, N in (("particle-sep", 4), ("mode-sep", (2, 2)), ("p-producible", (2, 2)), ("arbitrary-pure", (2, 2))):
        for i in range(args.samples):
            s = sample_state(config, N, cls, spec, seed=args.seed + i)
            g = build_generators(s.basis)
            F = qfi_matrix(s, g)
            ms = moments_from_state(s, g)
            rows.append([
                cls, args.seed + i, float(n @ F @ n),
                float(n @ shot_noise_bound(ms, config) @ n),
                float(n @ mode_separable_bound(ms, config) @ n),
                heisenberg_bound(n, ms, config).form(),
            ])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "seed", "nFn", "shot_noise", "mode_separable", "heisenberg"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
