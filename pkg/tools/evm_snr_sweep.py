#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 NR FSO Bench contributors

"""Sweep EVM against SNR over a flat AWGN channel.

Builds a test-model grid, OFDM-modulates it at baseband without windowing, adds white
noise whose power is counted in the occupied band, demodulates, equalizes and measures EVM.
Each point is compared with the ideal 100 * 10^(-SNR/20) percent:
  - ideal: equalize with the known unit channel (pure noise-limited EVM)
  - ls:    equalize with the DMRS least-squares estimate (adds estimation noise)

Exits 1 when any point misses the ideal curve by more than --tolerance with the
ideal estimator.
"""

import argparse
import math
import sys

import numpy as np

from nr_fso_bench.channel.impairments import add_awgn
from nr_fso_bench.conformance.evm import measure_evm
from nr_fso_bench.rx.demodulator import ofdm_demodulate
from nr_fso_bench.rx.equalizer import ChannelEstimate, estimate_channel_ls, zf_equalize
from nr_fso_bench.rx.sync import SyncResult
from nr_fso_bench.waveform.numerology import make_numerology
from nr_fso_bench.waveform.ofdm import ofdm_modulate
from nr_fso_bench.waveform.test_models import TestModelSpec, build_test_model_grid

SNRS_DB = [20.0, 25.0, 30.0, 35.0]
MIN_DATA_RES = 100_000


def unit_estimate(n_slots: int, n_sc: int) -> ChannelEstimate:
    return ChannelEstimate(h=np.ones((n_slots, n_sc), dtype=complex), valid=np.ones((n_slots, n_sc), dtype=bool),
                           delay_samples=np.zeros(n_slots))


def main():
    parser = argparse.ArgumentParser(description="EVM versus SNR over a flat AWGN channel")
    parser.add_argument("--tm", default="TM3.1a", help="Test model (default: TM3.1a)")
    parser.add_argument("--snr", type=float, nargs="+", default=SNRS_DB,
                        help=f"SNR points in dB (default: {' '.join(f'{s:g}' for s in SNRS_DB)})")
    parser.add_argument("--n-slots", type=int, default=20, help="Slots per point (default: 20)")
    parser.add_argument("--estimator", choices=["ideal", "ls"], default="ideal",
                        help="Channel estimate used by the equalizer (default: ideal)")
    parser.add_argument("--tolerance", type=float, default=0.3,
                        help="Allowed deviation from the ideal curve in percentage points (default: 0.3)")
    parser.add_argument("--seed", type=int, default=1, help="Noise seed (default: 1)")
    args = parser.parse_args()

    num = make_numerology(30e3, 20e6)
    tm = TestModelSpec.for_model(args.tm, num.n_rb)
    grid = build_test_model_grid(tm, num, n_slots=args.n_slots)
    n_data = int(np.count_nonzero(grid.role == 0))
    if n_data < MIN_DATA_RES:
        print(f"Warning: only {n_data} data REs per point (< {MIN_DATA_RES}); raise --n-slots", file=sys.stderr)
    bb = ofdm_modulate(grid, num, window_overlap=0)

    print(f"{'SNR dB':>8} {'EVM %':>8} {'ideal %':>8} {'delta':>8}")
    worst = 0.0
    for i, snr in enumerate(args.snr):
        noisy = add_awgn(bb, snr, seed=args.seed + i, reference_bw_hz=num.occupied_bw_hz)
        rx = ofdm_demodulate(noisy, num, SyncResult(start=0), n_symbols=grid.n_symbols)
        if args.estimator == "ideal":
            est = unit_estimate(args.n_slots, num.n_subcarriers)
        else:
            est = estimate_channel_ls(rx, grid, fft_size=num.fft_size)
        evm = measure_evm(zf_equalize(rx, est), grid).evm_pct
        expected = 100.0 * math.pow(10.0, -snr / 20.0)
        worst = max(worst, abs(evm - expected))
        print(f"{snr:8.1f} {evm:8.3f} {expected:8.3f} {evm - expected:+8.3f}")

    if args.estimator == "ideal" and worst > args.tolerance:
        print(f"Worst deviation {worst:.3f} points exceeds {args.tolerance}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
