"""
Frame timing and carrier frequency offset from the cyclic prefix and the DMRS.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import signal

from nr_fso_bench.common.bench_exception import InputError, SyncError
from nr_fso_bench.waveform.numerology import Numerology
from nr_fso_bench.waveform.ofdm import DmrsReference
from nr_fso_bench.waveform.signal import SampledSignal

log = logging.getLogger(__name__)

DEFAULT_SYNC_THRESHOLD = 0.3
CP_GUARD = 8
# CP metric needed before the symbol grid is trusted to bound the DMRS search
CP_CONFIDENCE = 0.5


@dataclass(frozen=True)
class SyncResult:
    start: int
    frac_timing: float = 0.0
    cfo_hz: float = 0.0
    metric: float = 1.0
    coarse_symbol_start: Optional[int] = None
    bounded: bool = False

    def __post_init__(self):
        if self.start < 0:
            raise SyncError(f"Frame start {self.start} lies before the capture")


def cp_autocorrelation(x: np.ndarray, fft_size: int, cp: int) -> np.ndarray:
    """gamma[m] = sum_{n<cp} x[m+n] conj(x[m+n+fft_size]), for every m with a full window."""
    prod = x[:-fft_size] * np.conj(x[fft_size:])
    c = np.concatenate(([0], np.cumsum(prod)))
    return c[cp:] - c[:-cp]


def coarse_symbol_timing(x: np.ndarray, num: Numerology) -> Tuple[Optional[int], float]:
    """Start of the strongest CP match in the first slot-plus-symbol of the capture, and its metric."""
    span = num.samples_per_slot + num.fft_size + num.min_cp
    seg = x[:span + num.fft_size + num.min_cp]
    if len(seg) < num.fft_size + num.min_cp + 1:
        return None, 0.0
    gamma = cp_autocorrelation(seg, num.fft_size, num.min_cp)
    e = np.concatenate(([0.0], np.cumsum(np.abs(seg) ** 2)))
    win = e[num.min_cp:] - e[:-num.min_cp]
    energy = 0.5 * (win[:len(gamma)] + win[num.fft_size:num.fft_size + len(gamma)])
    metric = np.abs(gamma) / np.maximum(energy, np.finfo(float).tiny)
    m = int(np.argmax(metric[:span]))
    return m, float(metric[m])


def symbol_grid_mask(n_lags: int, coarse: int, num: Numerology, dmrs_offset: int,
                     tolerance: Optional[int] = None) -> np.ndarray:
    """
    DMRS lags whose implied frame start puts a symbol boundary within tolerance of the coarse
    CP timing. Frame starts before the capture are excluded.
    """
    tol = num.min_cp // 2 if tolerance is None else tolerance
    starts = num.symbol_starts(2 * num.symbols_per_slot)
    mask = np.zeros(n_lags, dtype=bool)
    for frame in coarse - starts[starts <= coarse]:
        lo, hi = max(frame + dmrs_offset - tol, dmrs_offset, 0), min(frame + dmrs_offset + tol + 1, n_lags)
        if lo < hi:
            mask[lo:hi] = True
    return mask


def cp_cfo_estimate(bb: SampledSignal, num: Numerology, start: int, n_symbols: Optional[int] = None,
                    guard: int = CP_GUARD, window_overlap: int = 0) -> float:
    """
    CFO from the phase of the CP autocorrelation accumulated over all whole symbols after
    start. Only CP samples [W + guard, cp - guard) are used. Valid within +-scs/2.
    """
    x = bb.samples
    starts = num.symbol_starts(num.symbols_per_frame * 64)
    max_sym = int(np.searchsorted(starts, len(x) - start, side="right")) - 1
    n_symbols = max_sym if n_symbols is None else min(n_symbols, max_sym)
    if n_symbols < 1:
        raise InputError("No whole OFDM symbol after the frame start")
    acc = 0j
    for l in range(n_symbols):
        s = start + int(starts[l])
        lo, hi = s + window_overlap + guard, s + num.cp_length(l) - guard
        if hi <= lo:
            lo, hi = s, s + num.cp_length(l)
        acc += np.vdot(x[lo + num.fft_size:hi + num.fft_size], x[lo:hi])
    return float(-np.angle(acc) * num.scs_hz / (2 * np.pi))


def correct_cfo(bb: SampledSignal, cfo_hz: float) -> SampledSignal:
    if cfo_hz == 0:
        return bb
    n = np.arange(len(bb))
    return bb.with_samples(bb.samples * np.exp(-2j * np.pi * np.mod(n * (cfo_hz / bb.rate_hz), 1.0)),
                           step="cfo_correct", cfo_corrected_hz=float(cfo_hz))


def time_synchronize(bb: SampledSignal, num: Numerology, dmrs: DmrsReference,
                     threshold: float = DEFAULT_SYNC_THRESHOLD, window_overlap: int = 0) -> SyncResult:
    """
    Coarse symbol timing from the CP autocorrelation, then the frame start from the
    normalized cross-correlation with the DMRS time-domain symbol of slot 0. When the CP
    timing is confident the DMRS search only visits lags on its symbol grid; a search that
    finds nothing there falls back to the whole capture. CFO comes from the CP phase.
    """
    if bb.is_real:
        raise InputError("Synchronization expects a complex baseband signal")
    x = bb.samples
    ref = dmrs.samples
    if len(x) < max(num.samples_per_slot, len(ref)):
        raise SyncError("Capture is shorter than one slot")

    corr = np.abs(signal.correlate(x, ref, mode="valid", method="fft"))
    e = np.concatenate(([0.0], np.cumsum(np.abs(x) ** 2)))
    win = e[len(ref):] - e[:-len(ref)]
    metric = corr / (np.linalg.norm(ref) * np.sqrt(np.maximum(win, np.finfo(float).tiny)))
    metric[win <= 0] = 0.0

    coarse, coarse_metric = coarse_symbol_timing(x, num)
    bounded = False
    m = int(np.argmax(metric))
    if coarse is not None and coarse_metric >= CP_CONFIDENCE:
        mask = symbol_grid_mask(len(metric), coarse, num, dmrs.offset)
        if mask.any():
            mb = int(np.flatnonzero(mask)[np.argmax(metric[mask])])
            if metric[mb] >= threshold:
                m, bounded = mb, True
            else:
                log.debug("No DMRS peak on the CP symbol grid at %d; searching the whole capture", coarse)
    peak = float(metric[m])
    if peak < threshold:
        raise SyncError(f"DMRS correlation peak {peak:.3f} below threshold {threshold:g}")

    frac = 0.0
    if 0 < m < len(corr) - 1:
        a, b, c = corr[m - 1], corr[m], corr[m + 1]
        den = a - 2 * b + c
        frac = float(0.5 * (a - c) / den) if den != 0 else 0.0

    start = m - dmrs.offset
    if start < 0:
        raise SyncError(f"DMRS found at sample {m}, before a whole frame could start")
    cfo = cp_cfo_estimate(bb, num, start, guard=CP_GUARD, window_overlap=window_overlap)
    log.debug("Sync: start %d (frac %.3f, CP timing %s), metric %.3f, CFO %.2f Hz", start, frac, coarse, peak, cfo)
    return SyncResult(start=start, frac_timing=frac, cfo_hz=cfo, metric=peak, coarse_symbol_start=coarse,
                      bounded=bounded)
