"""
Stateless impairment operations on SampledSignal.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import signal

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError, UndefinedSnrError
from nr_fso_bench.channel.models import AmplifierModel, FrequencyResponse, LaserModel, QuantizerModel
from nr_fso_bench.waveform.signal import SampledSignal

log = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

DEFAULT_FIR_TAPS = 255


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _require_real(sig: SampledSignal, what: str):
    if not sig.is_real:
        raise InputError(f"{what} expects a real signal")


def quantize(sig: SampledSignal, q: QuantizerModel) -> SampledSignal:
    """Midtread uniform quantizer; out-of-range values clip to the extreme codes."""
    _require_real(sig, "quantize")
    lo, hi = q.code_range
    codes = np.clip(np.round(sig.samples / q.step), lo, hi)
    clipped = int(np.count_nonzero((sig.samples / q.step > hi + 0.5) | (sig.samples / q.step < lo - 0.5)))
    return sig.with_samples(codes * q.step, step=f"quantize[{q.bits}b]", quantizer_clipped=clipped)


def laser_pi_transfer(sig: SampledSignal, m: LaserModel) -> SampledSignal:
    """Drive -> injection current -> optical power in mW."""
    _require_real(sig, "laser_pi_transfer")
    current = m.i_bias_ma + m.mod_gain_ma_per_unit * sig.samples
    below = current < m.i_threshold_ma
    stats = {
        "laser_clip_fraction": float(np.mean(below)) if len(current) else 0.0,
        "laser_peak_current_ma": float(current.max()) if len(current) else m.i_bias_ma,
        "laser_min_current_ma": float(current.min()) if len(current) else m.i_bias_ma,
    }
    return sig.with_samples(m.power_mw(current), step="laser", **stats)


@lru_cache(maxsize=64)
def fir_from_measured_response(resp: FrequencyResponse, rate_hz: float, n_taps: int = DEFAULT_FIR_TAPS) -> np.ndarray:
    """
    Linear-phase FIR realising |H| of the table (frequency sampling). When the table carries
    phase, the phase is realised on top of the (n_taps - 1) / 2 bulk delay.
    """
    if n_taps < 3 or n_taps % 2 == 0:
        raise ConfigurationError(f"FIR length must be odd and >= 3, got {n_taps}")
    nyq = rate_hz / 2
    if resp.phase_deg is None:
        n_freqs = 1 + 2 ** int(math.ceil(math.log2(4 * n_taps)))
        f = np.linspace(0.0, nyq, n_freqs)
        gain = 10 ** (resp.magnitude_db_at(f) / 20)
        taps = signal.firwin2(n_taps, f, gain, fs=rate_hz, window="hamming")
    else:
        n_fft = 2 ** int(math.ceil(math.log2(8 * n_taps)))
        f = np.fft.rfftfreq(n_fft, d=1 / rate_hz)
        delay = (n_taps - 1) / 2
        h = 10 ** (resp.magnitude_db_at(f) / 20) * np.exp(1j * (resp.phase_rad_at(f) - 2 * np.pi * f * delay / rate_hz))
        taps = np.fft.irfft(h, n_fft)[:n_taps] * signal.get_window("hamming", n_taps, fftbins=False)
    taps.flags.writeable = False
    return taps


def apply_fir(sig: SampledSignal, taps: np.ndarray, step: str = "fir") -> SampledSignal:
    """Convolve with a centred odd-length FIR (no bulk delay)."""
    if len(taps) % 2 == 0:
        raise ConfigurationError("Centred FIR filtering needs an odd tap count")
    y = signal.oaconvolve(sig.samples, taps, mode="same")
    return sig.with_samples(y, step=step)


def add_awgn(sig: SampledSignal, snr_db: float, seed: SeedLike, reference_bw_hz: float = None) -> SampledSignal:
    """
    White Gaussian noise at signal-power / noise-power = snr_db. With reference_bw_hz the SNR
    is counted in that bandwidth only (noise spread over the whole sampled band).
    snr_db = +inf passes the signal through untouched.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return sig.with_samples(sig.samples, step="awgn[inf]")
    p = sig.power()
    if not p > 0:
        raise UndefinedSnrError("SNR is undefined for a zero-power signal")
    var = p / 10 ** (snr_db / 10)
    if reference_bw_hz is not None:
        band = sig.rate_hz / 2 if sig.is_real else sig.rate_hz
        if not 0 < reference_bw_hz <= band:
            raise ConfigurationError(f"SNR reference bandwidth {reference_bw_hz} Hz outside (0, {band}] Hz")
        var *= band / reference_bw_hz
    rng = _rng(seed)
    if sig.is_real:
        noise = rng.normal(0.0, math.sqrt(var), len(sig))
    else:
        noise = (rng.normal(0.0, 1.0, len(sig)) + 1j * rng.normal(0.0, 1.0, len(sig))) * math.sqrt(var / 2)
    return sig.with_samples(sig.samples + noise, step=f"awgn[{snr_db:g}dB]", awgn_noise_power=var)


def noisy_amplify(sig: SampledSignal, a: AmplifierModel, seed: SeedLike) -> SampledSignal:
    """gain x (input + input-referred thermal noise)."""
    _require_real(sig, "noisy_amplify")
    var = a.input_noise_power(sig.rate_hz)
    x = sig.samples
    if var > 0:
        x = x + _rng(seed).normal(0.0, math.sqrt(var), len(sig))
    return sig.with_samples(a.gain_lin * x, step=f"amplifier[{a.gain_db:g}dB]", amplifier_noise_power_in=var)


def scale_db(sig: SampledSignal, gain_db: float, step: str = "gain") -> SampledSignal:
    return sig.with_samples(sig.samples * 10 ** (gain_db / 20), step=f"{step}[{gain_db:g}dB]")


def add_carrier_tone(sig: SampledSignal, carrier_hz: float, level_db: float) -> SampledSignal:
    """Residual carrier: a cosine at carrier_hz, level_db relative to the signal power."""
    _require_real(sig, "add_carrier_tone")
    p = sig.power()
    if not p > 0:
        raise InputError("Carrier leak level is relative to signal power; signal has none")
    amp = math.sqrt(2 * p * 10 ** (level_db / 10))
    n = np.arange(len(sig))
    tone = amp * np.cos(2 * np.pi * np.mod(n * (carrier_hz / sig.rate_hz), 1.0))
    return sig.with_samples(sig.samples + tone, step="carrier_leak", carrier_leak_db=float(level_db))
