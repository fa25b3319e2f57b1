"""
Parameter models of the analog link components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError, FormatError

BOLTZMANN = 1.380649e-23
T0_KELVIN = 290.0

MIDTREAD = "midtread"


@dataclass(frozen=True)
class QuantizerModel:
    bits: int
    full_scale: float
    style: str = MIDTREAD

    def __post_init__(self):
        if self.bits < 2:
            raise ConfigurationError(f"Quantizer needs >= 2 bits, got {self.bits}")
        if not self.full_scale > 0:
            raise ConfigurationError(f"Quantizer full scale must be > 0, got {self.full_scale}")
        if self.style != MIDTREAD:
            raise ConfigurationError(f"Only midtread quantizers are modelled, got {self.style!r}")

    @property
    def step(self) -> float:
        return self.full_scale / 2 ** (self.bits - 1)

    @property
    def code_range(self) -> Tuple[int, int]:
        return -(2 ** (self.bits - 1)), 2 ** (self.bits - 1) - 1


@dataclass(frozen=True)
class LaserModel:
    """
    Piecewise-linear P-I curve of a directly modulated laser.
    Slope = 21 mW / (670 - 420) mA from the two published operating points.
    """
    i_threshold_ma: float = 420.0
    slope_mw_per_ma: float = 0.084
    i_bias_ma: float = 545.0
    mod_gain_ma_per_unit: float = 28.0

    def __post_init__(self):
        if not self.i_threshold_ma < self.i_bias_ma:
            raise ConfigurationError(f"Laser bias {self.i_bias_ma} mA must exceed threshold {self.i_threshold_ma} mA")
        if not self.slope_mw_per_ma > 0:
            raise ConfigurationError("Laser slope efficiency must be > 0")
        if not self.mod_gain_ma_per_unit > 0:
            raise ConfigurationError("Laser modulation gain must be > 0")

    def power_mw(self, current_ma) -> np.ndarray:
        return self.slope_mw_per_ma * np.maximum(0.0, np.asarray(current_ma, dtype=np.float64) - self.i_threshold_ma)

    @property
    def linear_drive_limit(self) -> float:
        """Largest negative drive amplitude that keeps the current above threshold."""
        return (self.i_bias_ma - self.i_threshold_ma) / self.mod_gain_ma_per_unit


@dataclass(frozen=True)
class AmplifierModel:
    """
    Gain plus input-referred thermal noise sigma^2 = k T0 B (F - 1) R.
    bandwidth_hz=None uses the sample rate of the amplified signal.
    """
    gain_db: float
    noise_figure_db: float = 0.0
    temperature_k: float = T0_KELVIN
    impedance_ohm: float = 1.0
    bandwidth_hz: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.gain_db):
            raise ConfigurationError("Amplifier gain must be finite")
        if self.noise_figure_db < 0:
            raise ConfigurationError("Noise figure must be >= 0 dB")
        if self.temperature_k <= 0 or self.impedance_ohm <= 0:
            raise ConfigurationError("Temperature and impedance must be > 0")
        if self.bandwidth_hz is not None and self.bandwidth_hz <= 0:
            raise ConfigurationError("Noise bandwidth must be > 0")

    @property
    def gain_lin(self) -> float:
        return 10 ** (self.gain_db / 20)

    def input_noise_power(self, rate_hz: float) -> float:
        b = rate_hz if self.bandwidth_hz is None else self.bandwidth_hz
        f = 10 ** (self.noise_figure_db / 10)
        return BOLTZMANN * self.temperature_k * b * (f - 1) * self.impedance_ohm


@dataclass(frozen=True)
class FrequencyResponse:
    """
    Tabulated response: (freq_hz, mag_db, phase_deg or None), strictly increasing frequency.
    Outside the table the nearest value is held.
    """
    points: Tuple[Tuple[float, float, Optional[float]], ...]
    label: str = ""

    def __post_init__(self):
        pts = tuple((float(p[0]), float(p[1]), None if len(p) < 3 or p[2] is None else float(p[2]))
                    for p in self.points)
        if len(pts) < 2:
            raise FormatError("A frequency response needs at least 2 points")
        freq = np.array([p[0] for p in pts])
        if np.any(np.diff(freq) <= 0):
            raise FormatError("Frequency response frequencies must be strictly increasing")
        if freq[0] < 0:
            raise FormatError("Frequency response frequencies must be >= 0")
        has_phase = {p[2] is not None for p in pts}
        if len(has_phase) > 1:
            raise FormatError("Phase must be given for every point or for none")
        object.__setattr__(self, "points", pts)

    @property
    def freq_hz(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def mag_db(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def phase_deg(self) -> Optional[np.ndarray]:
        if self.points[0][2] is None:
            return None
        return np.array([p[2] for p in self.points])

    @property
    def is_passive(self) -> bool:
        return bool(np.all(self.mag_db <= 0))

    def magnitude_db_at(self, freq_hz) -> np.ndarray:
        return np.interp(freq_hz, self.freq_hz, self.mag_db)

    def phase_rad_at(self, freq_hz) -> np.ndarray:
        ph = self.phase_deg
        if ph is None:
            return np.zeros_like(np.asarray(freq_hz, dtype=np.float64))
        return np.deg2rad(np.interp(freq_hz, self.freq_hz, ph))

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "FrequencyResponse":
        """Read a `freq_hz,mag_db[,phase_deg]` CSV file."""
        path = Path(path)
        try:
            data = np.genfromtxt(path, delimiter=",", names=True, dtype=np.float64, comments="#")
        except (OSError, ValueError) as e:
            raise FormatError(f"Cannot read frequency response {path}: {e}")
        names = data.dtype.names or ()
        if names[:2] != ("freq_hz", "mag_db") or len(names) > 3 or (len(names) == 3 and names[2] != "phase_deg"):
            raise FormatError(f"{path}: header must be freq_hz,mag_db[,phase_deg], got {','.join(names)}")
        data = np.atleast_1d(data)
        if np.any(~np.isfinite(data["freq_hz"])) or np.any(~np.isfinite(data["mag_db"])):
            raise FormatError(f"{path}: non-numeric frequency or magnitude entries")
        phase = data["phase_deg"] if "phase_deg" in names else [None] * len(data)
        return cls(points=tuple(zip(data["freq_hz"], data["mag_db"], phase)), label=path.name)

    @classmethod
    def flat(cls, f_max_hz: float = 1e12) -> "FrequencyResponse":
        return cls(points=((0.0, 0.0, None), (f_max_hz, 0.0, None)), label="flat")

    @classmethod
    def single_pole(cls, f3db_hz: float, f_max_hz: float = 25e9, n_points: int = 2001) -> "FrequencyResponse":
        if f3db_hz <= 0:
            raise ConfigurationError("Pole frequency must be > 0")
        f = np.linspace(0.0, f_max_hz, n_points)
        mag = -10 * np.log10(1 + (f / f3db_hz) ** 2)
        return cls(points=tuple((fi, mi, None) for fi, mi in zip(f, mag)), label=f"single-pole {f3db_hz / 1e6:g} MHz")

    @classmethod
    def band_pass(cls, center_hz: float, width_hz: float, transition_hz: Optional[float] = None,
                  floor_db: float = -80.0) -> "FrequencyResponse":
        t = width_hz / 2 if transition_hz is None else transition_hz
        lo, hi = center_hz - width_hz / 2, center_hz + width_hz / 2
        if width_hz <= 0 or t <= 0 or lo - t <= 0:
            raise ConfigurationError(f"Band-pass {center_hz / 1e6:g} MHz / {width_hz / 1e6:g} MHz is not realizable")
        pts = ((0.0, floor_db, None), (lo - t, floor_db, None), (lo, 0.0, None),
               (hi, 0.0, None), (hi + t, floor_db, None))
        return cls(points=pts, label=f"band-pass {center_hz / 1e6:g} MHz")
