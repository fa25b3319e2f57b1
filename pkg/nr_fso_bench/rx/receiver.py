"""
Receiver pipeline: carrier recovery -> sync -> CFO correction -> CP removal/FFT -> LS -> ZF.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError, NoLockError
from nr_fso_bench.rx.costas import CostasConfig, CostasTrace, costas_track, nominal_downconvert
from nr_fso_bench.rx.demodulator import ReceivedGrid, ofdm_demodulate
from nr_fso_bench.rx.equalizer import DEFAULT_ZF_FLOOR, ChannelEstimate, EqualizedGrid, estimate_channel_ls, \
    zf_equalize
from nr_fso_bench.rx.sync import DEFAULT_SYNC_THRESHOLD, SyncResult, correct_cfo, time_synchronize
from nr_fso_bench.waveform.numerology import CarrierConfig, Numerology
from nr_fso_bench.waveform.ofdm import dmrs_time_reference
from nr_fso_bench.waveform.signal import SampledSignal
from nr_fso_bench.waveform.test_models import ResourceGrid

log = logging.getLogger(__name__)

CARRIER_RECOVERY_MODES = ("auto", "costas", "nominal")
PATH_COSTAS = "costas"
PATH_NOMINAL = "nominal+cp-cfo+dmrs-phase"
PATH_BASEBAND = "baseband"

DEFAULT_FFT_BACKOFF = 8


@dataclass(frozen=True)
class RxConfig:
    carrier_recovery: str = "auto"
    costas: CostasConfig = field(default_factory=CostasConfig)
    sync_threshold: float = DEFAULT_SYNC_THRESHOLD
    fft_backoff: int = DEFAULT_FFT_BACKOFF
    zf_floor: float = DEFAULT_ZF_FLOOR
    cfo_correction: bool = True

    def __post_init__(self):
        if self.carrier_recovery not in CARRIER_RECOVERY_MODES:
            raise ConfigurationError(f"Unknown carrier recovery {self.carrier_recovery!r}; "
                                     f"valid: {list(CARRIER_RECOVERY_MODES)}")
        if not 0 < self.sync_threshold < 1:
            raise ConfigurationError("Sync threshold must be in (0, 1)")
        if self.fft_backoff < 0 or self.zf_floor < 0:
            raise ConfigurationError("FFT back-off and ZF floor must be >= 0")

    def for_link(self, num: Numerology, carrier: CarrierConfig) -> "RxConfig":
        """Bind the Costas loop to the carrier and numerology rates."""
        return replace(self, costas=replace(self.costas, nominal_carrier_hz=carrier.carrier_hz,
                                            output_rate_hz=num.sample_rate_hz,
                                            passband_edge_hz=carrier.occupied_bw_hz / 2))


@dataclass(frozen=True)
class RxResult:
    equalized: EqualizedGrid
    estimate: ChannelEstimate
    sync: SyncResult
    received: ReceivedGrid
    reference: ResourceGrid
    carrier_path: str
    baseband: SampledSignal
    costas_trace: Optional[CostasTrace] = None


def crop_reference(ref: ResourceGrid, n_symbols: int) -> ResourceGrid:
    if ref.n_symbols < n_symbols:
        raise InputError(f"Reference grid holds {ref.n_symbols} symbols, receiver produced {n_symbols}")
    return ResourceGrid(symbols=ref.symbols[:n_symbols], role=ref.role[:n_symbols],
                        reference=ref.reference[:n_symbols], modulation=ref.modulation,
                        symbols_per_slot=ref.symbols_per_slot)


class Receiver:
    """Binds numerology, carrier and the transmitted reference grid to one receive configuration."""

    def __init__(self, num: Numerology, carrier: CarrierConfig, reference: ResourceGrid,
                 cfg: Optional[RxConfig] = None, window_overlap: int = 0):
        self.num = num
        self.carrier = carrier
        self.reference = reference
        self.cfg = (cfg or RxConfig()).for_link(num, carrier)
        self.window_overlap = window_overlap
        if window_overlap + self.cfg.fft_backoff > num.min_cp:
            raise ConfigurationError(f"Window overlap {window_overlap} plus FFT back-off {self.cfg.fft_backoff} "
                                     f"exceeds the shortest CP ({num.min_cp})")

    def recover_carrier(self, sig: SampledSignal):
        if not sig.is_real:
            if sig.rate_hz != self.num.sample_rate_hz:
                raise InputError(f"Baseband input at {sig.rate_hz:g} Hz, numerology runs at "
                                 f"{self.num.sample_rate_hz:g} Hz")
            return sig, PATH_BASEBAND, None
        bb = nominal_downconvert(sig, self.cfg.costas)
        mode = self.cfg.carrier_recovery
        if mode == "nominal":
            return bb, PATH_NOMINAL, None
        try:
            locked, trace = costas_track(bb, self.cfg.costas)
            return locked, PATH_COSTAS, trace
        except NoLockError as e:
            if mode == "costas":
                raise
            log.info("Costas loop unavailable (%s); using nominal NCO with CP-based CFO correction", e)
            return bb, PATH_NOMINAL, None

    def receive(self, sig: SampledSignal) -> RxResult:
        bb, path, trace = self.recover_carrier(sig)
        dmrs = dmrs_time_reference(self.reference, self.num, slot=0)
        sync = time_synchronize(bb, self.num, dmrs, threshold=self.cfg.sync_threshold,
                                window_overlap=self.window_overlap)
        if self.cfg.cfo_correction:
            bb = correct_cfo(bb, sync.cfo_hz)
        rx = ofdm_demodulate(bb, self.num, sync, fft_backoff=self.cfg.fft_backoff)
        ref = crop_reference(self.reference, rx.n_symbols)
        est = estimate_channel_ls(rx, ref, fft_size=self.num.fft_size)
        eq = zf_equalize(rx, est, floor=self.cfg.zf_floor)
        log.debug("Received %d slots via %s; mean delay %.3f samples", rx.n_slots, path,
                  float(np.mean(est.delay_samples)))
        return RxResult(equalized=eq, estimate=est, sync=sync, received=rx, reference=ref, carrier_path=path,
                        baseband=bb, costas_trace=trace)
