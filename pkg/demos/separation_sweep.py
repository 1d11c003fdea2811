"""Error rate of the separation scheme as the relay-to-destination pipe widens.

Two uniform bits with their xor known at the relay and the destination.
The relay hears (X1, X2) perfectly; the destination hears only the relay
symbol X3 from an alphabet of size k3, so every destination bit must pass
through the relay. At binning rates of one bit per sample per source the
destination needs log2 k3 >= 2 bits per channel use. Run with
``python3 demos/separation_sweep.py``; ``--csv FILE`` saves the sweep.
"""

import argparse

import numpy as np

from marclab.conditions import check_thm1, separation_operating_margins
from marclab.models import SeparationInput, noiseless_pipe_channel, xor_side_info_source
from marclab.sim import BlockMarkovConfig, run_separation_df, sweep_csv

RATES = {"R1r": 1.0, "R2r": 1.0, "R1d": 1.0, "R2d": 1.0}


def main(trials: int, seed: int, csv_path: str | None):
    model = xor_side_info_source()
    cfg = BlockMarkovConfig(m=8, n=8, B=3, rates=RATES, epsilon=1e3, seed=seed)
    print(f"m = n = {cfg.m}, B = {cfg.B} blocks, rates {RATES}, {trials} trials per point\n")
    print(f"{'k3':>4} {'rate-free margin':>17} {'operating margin':>17} {'p_err':>7} {'95% interval':>17}")
    rows = []
    for k3 in (2, 4, 16):
        ch = noiseless_pipe_channel(8, 8, k3)
        inp = SeparationInput.independent(np.full(8, 1 / 8), np.full(8, 1 / 8), np.full(k3, 1 / k3))
        free = min(c.margin_bits for c in check_thm1(model, ch, inp).conditions)
        op = separation_operating_margins(model, ch, inp, RATES)
        worst = min(op, key=op.get)
        rep = run_separation_df(model, ch, inp, cfg, trials)
        lo, hi = rep.interval
        print(f"{k3:>4} {free:>+17.3f} {op[worst]:>+11.3f} ({worst}) {rep.p_err_estimate:>7.3f} "
              f"[{lo:.3f}, {hi:.3f}]")
        rows.append((op[worst], rep))
    print("\nThe rate-free conditions already hold at k3 = 4, but the fixed destination rates fill that pipe "
          "exactly; only the operating margin predicts the error rate.")
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write(sweep_csv(rows))
        print(f"wrote {csv_path}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--csv")
    a = ap.parse_args()
    main(a.trials, a.seed, a.csv)
