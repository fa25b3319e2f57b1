"""
CP-OFDM modulation with optional raised-cosine windowing (WOLA).

Transforms are unitary (norm="ortho"), so time-domain power equals grid power times
n_subcarriers / fft_size.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError
from nr_fso_bench.waveform.numerology import Numerology
from nr_fso_bench.waveform.signal import SampledSignal
from nr_fso_bench.waveform.test_models import ROLE_DMRS, ResourceGrid, TestModelSpec, dmrs_sequence

log = logging.getLogger(__name__)


def default_window_overlap(num: Numerology) -> int:
    return num.min_cp // 2


def raised_cosine_ramp(w: int) -> np.ndarray:
    """Rising half of a raised-cosine window; ramp + ramp[::-1] == 1."""
    n = np.arange(w)
    return 0.5 * (1 - np.cos(np.pi * (n + 0.5) / w))


def _check_grid(grid: ResourceGrid, num: Numerology):
    if grid.n_subcarriers != num.n_subcarriers:
        raise InputError(f"Grid has {grid.n_subcarriers} subcarriers, numerology expects {num.n_subcarriers}")
    if grid.n_symbols < 1:
        raise InputError("Grid has no OFDM symbols")


def ofdm_modulate(grid: ResourceGrid, num: Numerology, window_overlap: Optional[int] = None) -> SampledSignal:
    """
    Map each grid row onto the FFT bins centered on DC, inverse-transform, prepend the CP.

    With window_overlap W > 0 every symbol is extended by a W-sample cyclic suffix; the
    first W samples of the CP ramp up, the suffix ramps down and overlaps the next symbol's
    ramp-up. The waveform is treated as periodic (AWG playback), so the last suffix wraps
    onto the start. Samples [W, cp + fft_size) of each symbol are untouched.
    """
    _check_grid(grid, num)
    w = default_window_overlap(num) if window_overlap is None else int(window_overlap)
    if not 0 <= w <= num.min_cp:
        raise ConfigurationError(f"Window overlap {w} must be within [0, {num.min_cp}] samples")

    n_sym, n_fft = grid.n_symbols, num.fft_size
    freq = np.zeros((n_sym, n_fft), dtype=np.complex128)
    freq[:, num.fft_bins()] = grid.symbols
    bodies = np.fft.ifft(freq, axis=1, norm="ortho")

    starts = num.symbol_starts(n_sym)
    total = int(starts[-1])
    out = np.zeros(total, dtype=np.complex128)
    if w:
        up = raised_cosine_ramp(w)
        down = up[::-1]
    for l in range(n_sym):
        cp = num.cp_length(l)
        sym = np.concatenate((bodies[l, n_fft - cp:], bodies[l]))
        if w:
            sym[:w] *= up
        s = int(starts[l])
        out[s:s + len(sym)] += sym
        if w:
            idx = (s + len(sym) + np.arange(w)) % total
            out[idx] += bodies[l, :w] * down

    log.debug("OFDM modulated %d symbols into %d samples (W=%d)", n_sym, total, w)
    return SampledSignal.complex(out, num.sample_rate_hz, window_overlap=w, history=["ofdm_modulate"])


@dataclass(frozen=True)
class DmrsReference:
    """DMRS-only time-domain symbol (CP included) and where it starts within the waveform."""
    samples: np.ndarray
    offset: int
    symbol: int


def dmrs_time_reference(grid_or_tm: Union[ResourceGrid, TestModelSpec], num: Numerology,
                        slot: int = 0) -> DmrsReference:
    if slot < 0:
        raise InputError("Slot index must be >= 0")
    n_sc = num.n_subcarriers
    if isinstance(grid_or_tm, ResourceGrid):
        grid = grid_or_tm
        _check_grid(grid, num)
        rows = [l for l in range(slot * num.symbols_per_slot, (slot + 1) * num.symbols_per_slot)
                if l < grid.n_symbols and np.any(grid.role[l] == ROLE_DMRS)]
        if not rows:
            raise InputError(f"Slot {slot} holds no DMRS symbol")
        l = rows[0]
        row = np.where(grid.role[l] == ROLE_DMRS, grid.symbols[l], 0)
    else:
        tm = grid_or_tm
        sym_in_slot = min(tm.dmrs.symbols)
        l = slot * num.symbols_per_slot + sym_in_slot
        cols = np.arange(0, n_sc, tm.dmrs.stride)
        row = np.zeros(n_sc, dtype=np.complex128)
        row[cols] = dmrs_sequence(slot, sym_in_slot, len(cols), tm.dmrs, num.symbols_per_slot)
        if any(p != 0 for p in tm.power_pattern):
            row *= np.repeat(10 ** (np.asarray(tm.power_pattern) / 20), 12)

    freq = np.zeros(num.fft_size, dtype=np.complex128)
    freq[num.fft_bins()] = row
    body = np.fft.ifft(freq, norm="ortho")
    cp = num.cp_length(l)
    return DmrsReference(samples=np.concatenate((body[-cp:], body)), offset=int(num.symbol_starts(l + 1)[l]),
                         symbol=l)


def add_dc_leak(bb: SampledSignal, leak_db: Optional[float]) -> SampledSignal:
    """Residual LO leak: a constant at baseband DC, leak_db relative to the signal power."""
    if leak_db is None:
        return bb
    p = bb.power()
    if p <= 0:
        raise InputError("Carrier leak level is relative to signal power; signal has none")
    amp = np.sqrt(p * 10 ** (leak_db / 10))
    return bb.with_samples(bb.samples + amp, step="dc_leak", carrier_leak_db=float(leak_db))
