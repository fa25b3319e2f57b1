"""
Carrier recovery: quadrature mix at the nominal carrier, polyphase decimation, then a
second-order Costas loop.

The loop runs on a zero-phase narrow-band copy of the baseband (``prefilter_bw_hz`` around
DC) decimated to a loop rate, after an FFT-aided coarse frequency acquisition within
+-``pull_in_hz``. The resulting phase sequence is interpolated back and removed from the
full-band signal.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError, NoLockError
from nr_fso_bench.waveform.passband import mix_to_baseband, rational_resample
from nr_fso_bench.waveform.signal import SampledSignal

log = logging.getLogger(__name__)

LOOP_OVERSAMPLING = 20


@dataclass(frozen=True)
class CostasConfig:
    nominal_carrier_hz: float = 627e6
    loop_bandwidth_hz: float = 500.0
    damping: float = 0.707
    order: int = 2
    prefilter_bw_hz: float = 5e3
    pull_in_hz: float = 50e3
    output_rate_hz: float = 30.72e6
    passband_edge_hz: float = 9.18e6
    settle_s: float = 1e-3
    lock_threshold: float = 1e-3

    def __post_init__(self):
        if self.order != 2:
            raise ConfigurationError("Only a second-order Costas loop is implemented")
        if not self.damping > 0:
            raise ConfigurationError("Loop damping must be > 0")
        if not 0 < self.loop_bandwidth_hz < 0.01 * self.nominal_carrier_hz:
            raise ConfigurationError("Loop bandwidth must be > 0 and well below the carrier frequency")
        if not self.loop_bandwidth_hz < self.prefilter_bw_hz:
            raise ConfigurationError("Pre-filter bandwidth must exceed the loop bandwidth")
        if not 0 <= self.pull_in_hz < self.output_rate_hz / 2:
            raise ConfigurationError("Pull-in range must be within the baseband Nyquist band")
        if self.settle_s < 0 or self.lock_threshold <= 0:
            raise ConfigurationError("settle_s must be >= 0 and lock_threshold > 0")

    def loop_gains(self, loop_rate_hz: float):
        """Proportional and integral gains (unit detector and NCO gain)."""
        wn = 2 * self.loop_bandwidth_hz / (self.damping + 1 / (4 * self.damping))
        wt = wn / loop_rate_hz
        return 2 * self.damping * wt, wt ** 2


@dataclass(frozen=True)
class CostasTrace:
    """Loop state per loop sample; freq_hz includes the coarse offset."""
    time_s: np.ndarray
    phase_rad: np.ndarray
    freq_hz: np.ndarray
    error: np.ndarray
    coarse_offset_hz: float
    error_variance: float
    locked: bool

    @property
    def loop_rate_hz(self) -> float:
        return 1 / (self.time_s[1] - self.time_s[0]) if len(self.time_s) > 1 else 0.0


def nominal_downconvert(sig: SampledSignal, cfg: CostasConfig) -> SampledSignal:
    """Fixed NCO at the nominal carrier followed by decimation to output_rate_hz."""
    if not sig.is_real:
        raise InputError("Carrier recovery expects a real passband signal")
    z = rational_resample(mix_to_baseband(sig, cfg.nominal_carrier_hz), sig.rate_hz, cfg.output_rate_hz,
                          cfg.passband_edge_hz + cfg.pull_in_hz)
    return sig.with_samples(z, step="nco_mix", rate_hz=cfg.output_rate_hz, kind="complex",
                            carrier_hz=cfg.nominal_carrier_hz)


def coarse_frequency(z: np.ndarray, rate_hz: float, pull_in_hz: float) -> float:
    """Strongest spectral line within +-pull_in_hz, refined by parabolic interpolation."""
    if pull_in_hz <= 0 or len(z) < 8:
        return 0.0
    n_fft = 1 << int(math.ceil(math.log2(4 * len(z))))
    spec = np.abs(np.fft.fft(z, n_fft))
    f = np.fft.fftfreq(n_fft, d=1 / rate_hz)
    cand = np.flatnonzero(np.abs(f) <= pull_in_hz)
    i = int(cand[np.argmax(spec[cand])])
    a, b, c = spec[(i - 1) % n_fft], spec[i], spec[(i + 1) % n_fft]
    den = a - 2 * b + c
    delta = 0.5 * (a - c) / den if den != 0 else 0.0
    return float((f[i] + delta * rate_hz / n_fft))


def costas_track(bb: SampledSignal, cfg: CostasConfig):
    """
    Run the loop on a complex baseband signal whose carrier sits near DC.
    Returns (corrected signal, trace). Raises NoLockError when the loop does not settle.
    """
    z = bb.samples
    rate = bb.rate_hz
    if len(z) == 0 or not np.any(z):
        raise NoLockError("No carrier to track: input is all zero")
    if bb.duration_s <= cfg.settle_s:
        raise NoLockError(f"Capture of {bb.duration_s * 1e3:g} ms is shorter than the settle time")

    n = np.arange(len(z))
    f0 = coarse_frequency(z, rate, cfg.pull_in_hz)
    zc = z * np.exp(-2j * np.pi * np.mod(n * (f0 / rate), 1.0))

    sos = signal.butter(4, cfg.prefilter_bw_hz, btype="low", fs=rate, output="sos")
    narrow = signal.sosfiltfilt(sos, zc)
    dec = max(1, int(rate // (LOOP_OVERSAMPLING * cfg.prefilter_bw_hz)))
    zl = narrow[::dec]
    loop_rate = rate / dec
    p_ref = float(np.mean(np.abs(zl) ** 2))
    if p_ref <= 0:
        raise NoLockError("No carrier power inside the loop pre-filter")

    k1, k2 = cfg.loop_gains(loop_rate)
    theta = np.empty(len(zl))
    err = np.empty(len(zl))
    ctrl = np.empty(len(zl))
    ph, nu = 0.0, 0.0
    for i, s in enumerate(zl):
        y = s * complex(math.cos(ph), -math.sin(ph))
        e = y.real * y.imag / p_ref
        nu += k2 * e
        theta[i] = ph
        err[i] = e
        ctrl[i] = k1 * e + nu
        ph += ctrl[i]

    settle = min(len(zl) - 1, int(math.ceil(cfg.settle_s * loop_rate)))
    variance = float(np.var(err[settle:]) + np.mean(err[settle:]) ** 2)
    locked = variance < cfg.lock_threshold
    t_loop = np.arange(len(zl)) * dec / rate
    trace = CostasTrace(time_s=t_loop, phase_rad=theta, freq_hz=f0 + ctrl * loop_rate / (2 * np.pi), error=err,
                        coarse_offset_hz=f0, error_variance=variance, locked=locked)
    log.debug("Costas loop: coarse %.3f Hz, error variance %.3g, locked %s", f0, variance, locked)
    if not locked:
        raise NoLockError(f"Costas loop did not lock: error variance {variance:.3g} >= {cfg.lock_threshold:g}")

    phase = np.interp(n / rate, t_loop, theta)
    out = zc * np.exp(-1j * phase)
    return bb.with_samples(out, step="costas", carrier_offset_hz=float(np.mean(trace.freq_hz[settle:])),
                           costas_locked=True), trace


def costas_downconvert(sig: SampledSignal, cfg: CostasConfig):
    """Real passband -> carrier-locked complex baseband plus the loop trace."""
    return costas_track(nominal_downconvert(sig, cfg), cfg)
