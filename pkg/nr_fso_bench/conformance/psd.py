"""
Welch power spectral density, normalized so that sum(density) x bin width equals the
time-domain mean power.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError
from nr_fso_bench.waveform.signal import SampledSignal

DEFAULT_SEGMENT = 4096
DEFAULT_OVERLAP = 0.5


@dataclass(frozen=True)
class PsdEstimate:
    """freq_hz ascending (two-sided for complex input); density in power units per Hz."""
    freq_hz: np.ndarray
    density: np.ndarray
    rbw_hz: float
    onesided: bool

    @property
    def total_power(self) -> float:
        return float(np.sum(self.density) * self.rbw_hz)

    @property
    def density_db(self) -> np.ndarray:
        """Density in dB relative to the total power, per Hz."""
        ref = self.total_power
        if ref <= 0:
            raise InputError("PSD of a zero-power signal has no dB reference")
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.density / ref)

    def band_power(self, f_lo: float, f_hi: float) -> float:
        sel = (self.freq_hz >= f_lo) & (self.freq_hz <= f_hi)
        return float(np.sum(self.density[sel]) * self.rbw_hz)


def welch_psd(sig: SampledSignal, segment_len: int = DEFAULT_SEGMENT, overlap_frac: float = DEFAULT_OVERLAP,
              window: str = "hann") -> PsdEstimate:
    if segment_len < 2:
        raise ConfigurationError("Welch segment must hold at least 2 samples")
    if not 0 <= overlap_frac < 1:
        raise ConfigurationError("Welch overlap must be in [0, 1)")
    if len(sig) < segment_len:
        raise InputError(f"Welch segment of {segment_len} samples exceeds the signal ({len(sig)} samples)")
    f, p = signal.welch(sig.samples, fs=sig.rate_hz, window=window, nperseg=segment_len,
                        noverlap=int(segment_len * overlap_frac), detrend=False, scaling="density",
                        return_onesided=sig.is_real)
    if not sig.is_real:
        f, p = np.fft.fftshift(f), np.fft.fftshift(p)
    return PsdEstimate(freq_hz=f, density=p, rbw_hz=sig.rate_hz / segment_len, onesided=sig.is_real)
