#!/usr/bin/env python3
"""Run every registered experiment with its default config.

Outputs land under RONS_OUT_DIR (default ./rons-out), one directory per
experiment, and a short table of headline metrics is printed at the end.
"""

import argparse
import sys

from rons.experiments import EXPERIMENTS, output_root, run

HEADLINE = {
    "advdiff-exact": ["max_rel_err_A", "max_abs_Ldot"],
    "nlse-focusing": ["rons_peak_amp", "dns_peak_amp", "peak_time_gap_rel"],
    "nlse-defocusing": ["drift_I1", "drift_I2"],
    "nlse-unconstrained": ["drift_I1", "drift_I2"],
    "euler-dipole": ["rons_speed", "lateral_dev_over_distance"],
    "euler-pair": ["rons_angular_velocity", "separation_drift_rel"],
    "euler-leapfrog": ["swaps_positive_pair", "swaps_negative_pair"],
    "galerkin-equivalence": ["max_rhs_deviation"],
    "appendixA-instability": ["max_growth_rate_rel_err", "max_decay_rate_rel_err"],
    "fit-demo": ["max_param_rel_err"],
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--only", nargs="*", default=None, help="subset of experiment names")
    args = parser.parse_args()

    names = args.only or sorted(EXPERIMENTS)
    rows = []
    failed = False
    for name in names:
        record = run({"experiment": name})
        failed |= record.status != "ok"
        picks = {
            k: record.metrics.get(k) for k in HEADLINE.get(name, []) if k in record.metrics
        }
        rows.append((name, record.status, f"{record.wall_time_s:.1f}s", picks))
        print(f"done {name}: {record.status} in {record.wall_time_s:.1f}s")

    print(f"\noutputs under {output_root()}\n")
    for name, status, wall, picks in rows:
        details = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in picks.items())
        print(f"{name:<22} {status:<7} {wall:>7}  {details}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
