#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 NR FSO Bench contributors

"""Sweep ACLR against the transmit window overlap.

Runs the ACLR-only scenario once per overlap value (0 disables windowing) through the
chosen channel preset and prints both adjacent-channel ratios and the margin to the limit.
"""

import argparse
import sys

from nr_fso_bench.channel.presets import PRESETS
from nr_fso_bench.common.bench_exception import BenchException
from nr_fso_bench.harness.runner import run_scenario
from nr_fso_bench.harness.scenario import Scenario

OVERLAPS = [0, 8, 16, 36, 64]


def main():
    parser = argparse.ArgumentParser(description="ACLR versus transmit window overlap")
    parser.add_argument("--tm", default="TM1.1", help="Test model (default: TM1.1)")
    parser.add_argument("--preset", default="paper-fso", choices=sorted(PRESETS),
                        help="Channel preset (default: paper-fso)")
    parser.add_argument("--overlap", type=int, nargs="+", default=OVERLAPS,
                        help=f"Window overlaps in samples (default: {' '.join(map(str, OVERLAPS))})")
    parser.add_argument("--n-slots", type=int, default=4, help="Slots per run (default: 4)")
    parser.add_argument("--seed", type=int, default=1, help="Scenario seed (default: 1)")
    args = parser.parse_args()

    print(f"{'W':>5} {'lower dB':>9} {'upper dB':>9} {'margin':>8}")
    failed = False
    for w in args.overlap:
        s = Scenario(tm=args.tm, preset=args.preset, n_slots=args.n_slots, seed=args.seed, window_overlap=w,
                     measurements=("aclr",))
        try:
            report = run_scenario(s)
        except BenchException as e:
            print(f"{w:5d} ERROR - {e}", file=sys.stderr)
            failed = True
            continue
        margin = min(v.margin for v in report.verdicts)
        print(f"{w:5d} {report.aclr['aclr_lower_db']:9.2f} {report.aclr['aclr_upper_db']:9.2f} {margin:+8.2f}")

    if failed:
        sys.exit(2)


if __name__ == "__main__":
    main()
