"""
Least-squares channel estimation on DMRS and zero-forcing equalization.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import interp1d

from nr_fso_bench.common.bench_exception import EqualizationError, EstimationError, InputError
from nr_fso_bench.rx.demodulator import ReceivedGrid
from nr_fso_bench.waveform.test_models import ROLE_DMRS, ResourceGrid

log = logging.getLogger(__name__)

DEFAULT_ZF_FLOOR = 1e-6


@dataclass(frozen=True)
class ChannelEstimate:
    """
    h[slot, j]: complex gain of grid column j in that slot (held over the slot).
    valid[slot, j]: usable entries. delay_samples: timing offset implied by the phase slope.
    """
    h: np.ndarray
    valid: np.ndarray
    delay_samples: np.ndarray

    @property
    def n_slots(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class EqualizedGrid:
    symbols: np.ndarray
    mask: np.ndarray
    symbols_per_slot: int = 14

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[0]


def _interpolate(cols: np.ndarray, values: np.ndarray, n_sc: int) -> np.ndarray:
    if len(cols) == 1:
        return np.full(n_sc, values[0], dtype=np.complex128)
    f = interp1d(cols, np.vstack((values.real, values.imag)), kind="linear", axis=1,
                 fill_value="extrapolate", assume_sorted=True)
    re, im = f(np.arange(n_sc))
    return re + 1j * im


def estimate_channel_ls(rx: ReceivedGrid, tx: ResourceGrid, fft_size: int = 0,
                        delay_compensation: bool = True) -> ChannelEstimate:
    """
    H = Y / X on DMRS REs, averaged over the DMRS symbols of a slot, then interpolated over
    frequency. With delay_compensation the dominant linear phase (from mean pilot-to-pilot
    rotation) is removed before interpolation and re-applied after.
    """
    if rx.n_subcarriers != tx.n_subcarriers:
        raise InputError("Received and reference grids differ in subcarrier count")
    n_slots = rx.n_slots
    if n_slots < 1:
        raise EstimationError("Received grid holds no whole slot")
    if tx.n_symbols < rx.n_symbols:
        raise InputError("Reference grid is shorter than the received grid")
    n_sc, sps = rx.n_subcarriers, rx.symbols_per_slot
    h = np.zeros((n_slots, n_sc), dtype=np.complex128)
    valid = np.zeros((n_slots, n_sc), dtype=bool)
    delay = np.zeros(n_slots)
    k = np.arange(n_sc)

    for s in range(n_slots):
        rows = [l for l in range(s * sps, (s + 1) * sps) if np.any(tx.role[l] == ROLE_DMRS)]
        if not rows:
            raise EstimationError(f"Slot {s} has no DMRS symbol")
        cols = np.flatnonzero(tx.role[rows[0]] == ROLE_DMRS)
        x = tx.reference[np.ix_(rows, cols)]
        if np.any(x == 0):
            raise EstimationError(f"Slot {s} has zero-valued DMRS")
        hp = np.mean(rx.symbols[np.ix_(rows, cols)] / x, axis=0)

        alpha = 0.0
        if delay_compensation and len(cols) > 1:
            step = int(np.min(np.diff(cols)))
            alpha = float(np.angle(np.mean(hp[1:] * np.conj(hp[:-1])))) / step
        g = hp * np.exp(-1j * alpha * cols)
        h[s] = _interpolate(cols, g, n_sc) * np.exp(1j * alpha * k)
        valid[s] = np.isfinite(h[s])
        if fft_size:
            delay[s] = -alpha * fft_size / (2 * np.pi)
    return ChannelEstimate(h=h, valid=valid, delay_samples=delay)


def zf_equalize(rx: ReceivedGrid, h: ChannelEstimate, floor: float = DEFAULT_ZF_FLOOR) -> EqualizedGrid:
    """X = Y / H; entries with |H| below floor x median |H| are masked (set to 0)."""
    n_sym = h.n_slots * rx.symbols_per_slot
    if rx.n_symbols < n_sym:
        raise InputError("Channel estimate covers more slots than the received grid")
    mag = np.abs(h.h)
    ref = np.median(mag[h.valid]) if np.any(h.valid) else 0.0
    ok = h.valid & (mag >= floor * ref) & (mag > 0)
    if not np.any(ok):
        raise EqualizationError("Every subcarrier is below the ZF floor")
    mask = np.repeat(ok, rx.symbols_per_slot, axis=0)
    hh = np.repeat(np.where(ok, h.h, 1.0), rx.symbols_per_slot, axis=0)
    out = np.where(mask, rx.symbols[:n_sym] / hh, 0)
    n_masked = int(np.count_nonzero(~ok))
    if n_masked:
        log.info("ZF masked %d of %d subcarrier-slots", n_masked, ok.size)
    return EqualizedGrid(symbols=out, mask=mask, symbols_per_slot=rx.symbols_per_slot)
