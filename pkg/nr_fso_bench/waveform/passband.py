"""
Rational-rate resampling and real passband up/down conversion.
"""
from __future__ import annotations

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import signal

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError
from nr_fso_bench.waveform.numerology import CarrierConfig
from nr_fso_bench.waveform.signal import SampledSignal

log = logging.getLogger(__name__)

STOPBAND_ATTENUATION_DB = 100.0
# polyphase factor product above which an integer stage is split off first
MAX_POLYPHASE = 1 << 16
MAX_TAPS = 1 << 20


def rate_ratio(rate_in_hz: float, rate_out_hz: float) -> Fraction:
    ratio = Fraction(int(round(rate_out_hz)), int(round(rate_in_hz)))
    if not np.isclose(float(ratio), rate_out_hz / rate_in_hz, rtol=1e-12, atol=0):
        raise ConfigurationError(f"Rates {rate_in_hz} -> {rate_out_hz} Hz have no exact rational ratio")
    return ratio


@lru_cache(maxsize=32)
def resample_filter(up: int, down: int, rate_in_hz: float, pass_hz: float) -> np.ndarray:
    """
    Kaiser low-pass for resample_poly at the intermediate rate rate_in x up, unit DC gain,
    odd length. Pass band ends at pass_hz, stop band starts where the first image (or alias)
    would land on the pass band.
    """
    fs = rate_in_hz * up
    stop_hz = min(rate_in_hz, rate_in_hz * up / down) - pass_hz
    if stop_hz <= pass_hz:
        raise ConfigurationError(f"Pass band {pass_hz / 1e6:g} MHz does not fit the rate change "
                                 f"{rate_in_hz / 1e6:g} MHz x {up}/{down}")
    numtaps, beta = signal.kaiserord(STOPBAND_ATTENUATION_DB, (stop_hz - pass_hz) / (fs / 2))
    numtaps |= 1
    if numtaps > MAX_TAPS:
        raise ConfigurationError(f"Resampling filter needs {numtaps} taps; use an intermediate rate")
    taps = signal.firwin(numtaps, (pass_hz + stop_hz) / 2, window=("kaiser", beta), fs=fs)
    taps.flags.writeable = False
    log.debug("Resample filter %d/%d at %.6g Hz: %d taps, beta %.2f", up, down, rate_in_hz, numtaps, beta)
    return taps


def rational_resample(x: np.ndarray, rate_in_hz: float, rate_out_hz: float, pass_hz: float) -> np.ndarray:
    """Resample x, keeping [0, pass_hz] (or [-pass_hz, pass_hz] for complex input) intact."""
    ratio = rate_ratio(rate_in_hz, rate_out_hz)
    up, down = ratio.numerator, ratio.denominator
    if up == down:
        return np.array(x, copy=True)
    if up * down > MAX_POLYPHASE and rate_out_hz >= 2 * rate_in_hz:
        m = int(rate_out_hz // rate_in_hz)
        mid = rational_resample(x, rate_in_hz, rate_in_hz * m, pass_hz)
        return rational_resample(mid, rate_in_hz * m, rate_out_hz, pass_hz)
    taps = resample_filter(up, down, float(rate_in_hz), float(pass_hz))
    return signal.resample_poly(x, up, down, window=np.array(taps))


def _carrier_phase(n_samples: int, carrier_hz: float, rate_hz: float) -> np.ndarray:
    ratio = None
    if float(carrier_hz).is_integer() and float(rate_hz).is_integer():
        ratio = Fraction(int(carrier_hz), int(rate_hz))
    n = np.arange(n_samples, dtype=np.int64)
    if ratio is not None:
        # exact cycle count modulo 1 from integer arithmetic
        cycles = np.mod(n * ratio.numerator, ratio.denominator) / ratio.denominator
    else:
        cycles = np.mod(n * (carrier_hz / rate_hz), 1.0)
    return 2 * np.pi * cycles


def upconvert_to_passband(bb: SampledSignal, carrier: CarrierConfig,
                          pass_hz: Optional[float] = None) -> SampledSignal:
    """Resample to the passband rate, mix to carrier_hz, keep the real part scaled by sqrt(2)."""
    if bb.is_real:
        raise InputError("Upconversion expects a complex baseband signal")
    pass_hz = carrier.occupied_bw_hz / 2 if pass_hz is None else pass_hz
    x = rational_resample(bb.samples, bb.rate_hz, carrier.passband_rate_hz, pass_hz)
    phase = _carrier_phase(len(x), carrier.carrier_hz, carrier.passband_rate_hz)
    y = np.sqrt(2) * (x.real * np.cos(phase) - x.imag * np.sin(phase))
    log.debug("Upconverted %d baseband samples to %d at %.6g Hz", len(bb), len(y), carrier.passband_rate_hz)
    return bb.with_samples(y, step="upconvert", rate_hz=carrier.passband_rate_hz, kind="real",
                           carrier_hz=carrier.carrier_hz)


def mix_to_baseband(pb: SampledSignal, carrier_hz: float) -> np.ndarray:
    phase = _carrier_phase(len(pb), carrier_hz, pb.rate_hz)
    return np.sqrt(2) * pb.samples * np.exp(-1j * phase)


def downconvert_from_passband(pb: SampledSignal, carrier: CarrierConfig, rate_hz: float,
                              pass_hz: Optional[float] = None) -> SampledSignal:
    """Ideal counterpart of upconvert_to_passband: mix down at the nominal carrier, low-pass, decimate."""
    if not pb.is_real:
        raise InputError("Downconversion expects a real passband signal")
    pass_hz = carrier.occupied_bw_hz / 2 if pass_hz is None else pass_hz
    x = rational_resample(mix_to_baseband(pb, carrier.carrier_hz), pb.rate_hz, rate_hz, pass_hz)
    return pb.with_samples(x, step="downconvert", rate_hz=rate_hz, kind="complex")
