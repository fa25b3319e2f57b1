"""
CP removal and FFT back to the resource grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError, TruncationError
from nr_fso_bench.rx.sync import SyncResult
from nr_fso_bench.waveform.numerology import Numerology
from nr_fso_bench.waveform.signal import SampledSignal


@dataclass(frozen=True)
class ReceivedGrid:
    """symbols[l, j]: received RE of symbol l, grid column j (same layout as ResourceGrid)."""
    symbols: np.ndarray
    symbols_per_slot: int = 14
    start: int = 0

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.symbols.shape[1]

    @property
    def n_slots(self) -> int:
        return self.n_symbols // self.symbols_per_slot


def whole_slots_available(n_samples: int, num: Numerology, start: int) -> int:
    avail = n_samples - start
    slots, used = 0, 0
    while used + num.slot_length(slots) <= avail:
        used += num.slot_length(slots)
        slots += 1
    return slots


def ofdm_demodulate(bb: SampledSignal, num: Numerology, sync: SyncResult, n_symbols: Optional[int] = None,
                    fft_backoff: int = 0) -> ReceivedGrid:
    """
    Strip the CP of each symbol and forward-FFT (unitary). The FFT window may start
    fft_backoff samples inside the CP; the resulting phase ramp exp(-j 2 pi k b / N) is removed.
    By default every whole slot after sync.start is demodulated.
    """
    if not 0 <= fft_backoff <= num.min_cp:
        raise ConfigurationError(f"FFT back-off {fft_backoff} must be within [0, {num.min_cp}]")
    slots = whole_slots_available(len(bb), num, sync.start)
    if n_symbols is None:
        if slots < 1:
            raise TruncationError(f"Less than one slot of signal after sample {sync.start}")
        n_symbols = slots * num.symbols_per_slot
    starts = num.symbol_starts(n_symbols)
    if sync.start + starts[-1] > len(bb):
        raise TruncationError(f"{n_symbols} symbols need {starts[-1]} samples after {sync.start}, "
                              f"capture holds {len(bb) - sync.start}")

    x = bb.samples
    n_fft = num.fft_size
    first = sync.start + starts[:-1] + np.array([num.cp_length(l) for l in range(n_symbols)]) - fft_backoff
    idx = first[:, None] + np.arange(n_fft)[None, :]
    spec = np.fft.fft(x[idx], axis=1, norm="ortho")
    k = num.subcarrier_indices()
    grid = spec[:, num.fft_bins()]
    if fft_backoff:
        grid = grid * np.exp(2j * np.pi * k * fft_backoff / n_fft)[None, :]
    return ReceivedGrid(symbols=grid, symbols_per_slot=num.symbols_per_slot, start=sync.start)
