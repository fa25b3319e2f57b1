"""
NR FR1 numerology and carrier configuration.

N_RB comes from the FR1 maximum transmission bandwidth configuration table; the cyclic
prefix schedule evaluates the normal-CP length formula of the NR physical layer
(144·κ·2^-μ Tc, plus 16·κ Tc on the first symbol of every half subframe) at the
numerology sample rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError

# Maximum transmission bandwidth configuration N_RB, FR1: {scs_khz: {bw_mhz: n_rb}}
NRB_TABLE_FR1: Dict[int, Dict[int, int]] = {
    15: {5: 25, 10: 52, 15: 79, 20: 106, 25: 133, 30: 160, 40: 216, 50: 270},
    30: {5: 11, 10: 24, 15: 38, 20: 51, 25: 65, 30: 78, 40: 106, 50: 133,
         60: 162, 70: 189, 80: 217, 90: 245, 100: 273},
    60: {10: 11, 15: 18, 20: 24, 25: 31, 30: 38, 40: 51, 50: 65,
         60: 79, 70: 93, 80: 107, 90: 121, 100: 135},
}

SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_SLOT = 14
# Occupied subcarriers must fit in fft_size / (1 + margin)
FFT_GUARD_MARGIN = 0.25
# FR1 frequency range, Hz
FR1_RANGE_HZ = (410e6, 7125e6)


@dataclass(frozen=True)
class Numerology:
    scs_hz: float
    n_rb: int
    fft_size: int
    sample_rate_hz: float
    cp_lengths: Tuple[int, ...]
    symbols_per_slot: int = SYMBOLS_PER_SLOT
    slots_per_frame: int = 20
    bandwidth_hz: float = 0.0

    def __post_init__(self):
        if self.fft_size < SUBCARRIERS_PER_RB * self.n_rb:
            raise ConfigurationError(f"fft_size {self.fft_size} < 12 x n_rb ({12 * self.n_rb})")
        if not math.isclose(self.sample_rate_hz, self.fft_size * self.scs_hz, rel_tol=0, abs_tol=1e-6):
            raise ConfigurationError("sample_rate_hz must equal fft_size x scs_hz")
        if len(self.cp_lengths) != self.symbols_per_subframe or min(self.cp_lengths) <= 0:
            raise ConfigurationError("cp_lengths needs one positive entry per OFDM symbol of a subframe")
        total = sum(self.cp_lengths) + self.fft_size * len(self.cp_lengths)
        if total * 1000 != round(self.sample_rate_hz):
            raise ConfigurationError(f"Subframe holds {total} samples, expected {self.sample_rate_hz / 1000:g}")

    @property
    def mu(self) -> int:
        return int(round(math.log2(self.scs_hz / 15e3)))

    @property
    def n_subcarriers(self) -> int:
        return SUBCARRIERS_PER_RB * self.n_rb

    @property
    def occupied_bw_hz(self) -> float:
        return self.n_subcarriers * self.scs_hz

    @property
    def slots_per_subframe(self) -> int:
        return 2 ** self.mu

    @property
    def symbols_per_subframe(self) -> int:
        return self.symbols_per_slot * self.slots_per_subframe

    @property
    def symbols_per_frame(self) -> int:
        return self.symbols_per_slot * self.slots_per_frame

    @property
    def samples_per_slot(self) -> int:
        return self.slot_length(0)

    @property
    def min_cp(self) -> int:
        return min(self.cp_lengths)

    def cp_length(self, symbol: int) -> int:
        """CP length of the symbol with the given absolute index (0 = first symbol of a frame)."""
        return self.cp_lengths[symbol % self.symbols_per_subframe]

    def slot_length(self, slot: int) -> int:
        first = slot * self.symbols_per_slot
        return sum(self.cp_length(s) + self.fft_size for s in range(first, first + self.symbols_per_slot))

    def symbol_starts(self, n_symbols: int) -> np.ndarray:
        """Start sample (CP start) of each of the first n_symbols symbols, plus the end position."""
        lengths = [self.cp_length(s) + self.fft_size for s in range(n_symbols)]
        return np.concatenate(([0], np.cumsum(lengths))).astype(np.int64)

    def subcarrier_indices(self) -> np.ndarray:
        """Subcarrier numbers k (DC = 0) of the grid columns, lowest frequency first."""
        n = self.n_subcarriers
        return np.arange(n, dtype=np.int64) - n // 2

    def fft_bins(self) -> np.ndarray:
        """FFT bin of each grid column."""
        return np.mod(self.subcarrier_indices(), self.fft_size)


def normal_cp_schedule(scs_hz: float, fft_size: int) -> Tuple[int, ...]:
    """
    Normal CP lengths in samples for the symbols of one subframe.
    Lengths are expressed in Ts = 1/(15 kHz x 2048) units, then scaled to the sample rate.
    """
    mu = int(round(math.log2(scs_hz / 15e3)))
    # samples per Ts at rate fft_size x scs
    scale = fft_size * 2 ** mu / 2048
    normal = 144 * 2 ** -mu * scale
    extended = normal + 16 * scale
    if not (float(normal).is_integer() and float(extended).is_integer()):
        raise ConfigurationError(f"FFT size {fft_size} gives a fractional CP at {scs_hz / 1e3:g} kHz")
    n_sym = SYMBOLS_PER_SLOT * 2 ** mu
    half = 7 * 2 ** mu
    return tuple(int(extended) if l % half == 0 else int(normal) for l in range(n_sym))


def make_numerology(scs_hz: float, bandwidth_hz: float) -> Numerology:
    scs_khz = int(round(scs_hz / 1e3))
    bw_mhz = int(round(bandwidth_hz / 1e6))
    if scs_khz not in NRB_TABLE_FR1 or not math.isclose(scs_hz, scs_khz * 1e3):
        raise ConfigurationError(f"SCS {scs_hz / 1e3:g} kHz not supported in FR1; valid: {sorted(NRB_TABLE_FR1)} kHz")
    table = NRB_TABLE_FR1[scs_khz]
    if bw_mhz not in table or not math.isclose(bandwidth_hz, bw_mhz * 1e6):
        raise ConfigurationError(f"Channel bandwidth {bandwidth_hz / 1e6:g} MHz not supported at {scs_khz} kHz; "
                                 f"valid: {sorted(table)} MHz")
    n_rb = table[bw_mhz]
    needed = SUBCARRIERS_PER_RB * n_rb * (1 + FFT_GUARD_MARGIN)
    fft_size = 1 << int(math.ceil(math.log2(needed)))
    mu = int(round(math.log2(scs_khz / 15)))
    return Numerology(scs_hz=float(scs_khz * 1e3), n_rb=n_rb, fft_size=fft_size,
                      sample_rate_hz=float(fft_size * scs_khz * 1e3),
                      cp_lengths=normal_cp_schedule(scs_khz * 1e3, fft_size),
                      slots_per_frame=10 * 2 ** mu, bandwidth_hz=float(bw_mhz * 1e6))


@dataclass(frozen=True)
class CarrierConfig:
    carrier_hz: float = 627e6
    passband_rate_hz: float = 2.4576e9
    occupied_bw_hz: float = 18.36e6
    channel_bw_hz: float = 20e6

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.passband_rate_hz <= 0 or self.occupied_bw_hz <= 0:
            raise ConfigurationError("Carrier, passband rate and occupied bandwidth must be > 0")
        if not self.passband_rate_hz > 2 * (self.carrier_hz + self.occupied_bw_hz / 2):
            raise ConfigurationError(
                f"Passband rate {self.passband_rate_hz / 1e6:g} MHz violates Nyquist for a carrier at "
                f"{self.carrier_hz / 1e6:g} MHz with {self.occupied_bw_hz / 1e6:g} MHz occupied")

    @classmethod
    def for_numerology(cls, num: Numerology, carrier_hz: float = 627e6,
                       passband_rate_hz: float = 2.4576e9) -> "CarrierConfig":
        return cls(carrier_hz=carrier_hz, passband_rate_hz=passband_rate_hz,
                   occupied_bw_hz=num.occupied_bw_hz, channel_bw_hz=num.bandwidth_hz or num.occupied_bw_hz)

    @property
    def in_fr1(self) -> bool:
        return FR1_RANGE_HZ[0] <= self.carrier_hz <= FR1_RANGE_HZ[1]
