"""
ChannelChain: an ordered list of impairment stages with seeded randomness.

A chain is described in JSON as {"seed": int, "stages": [{"type": ..., ...params}]}.
Each stage gets its own child of SeedSequence(seed), so adding a noiseless stage never
shifts the noise drawn by another.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, ClassVar, Dict, List, Optional, Tuple, Type

import numpy as np

from nr_fso_bench.common.bench_exception import BenchException, ConfigurationError
from nr_fso_bench.channel.impairments import (DEFAULT_FIR_TAPS, add_awgn, add_carrier_tone, apply_fir,
                                              fir_from_measured_response, laser_pi_transfer, noisy_amplify,
                                              quantize, scale_db)
from nr_fso_bench.channel.models import AmplifierModel, FrequencyResponse, LaserModel, QuantizerModel
from nr_fso_bench.utils.log_helper import TRACE
from nr_fso_bench.waveform.passband import rational_resample
from nr_fso_bench.waveform.signal import SampledSignal

log = logging.getLogger(__name__)

PACKAGED_DATA = Path(__file__).resolve().parent.parent / "data"
SYNTHETIC_RESPONSE = "synthetic"
SYNTHETIC_RESPONSE_FILE = PACKAGED_DATA / "fso_response_synthetic.csv"

STAGE_STAT_KEYS = ("laser_clip_fraction", "laser_peak_current_ma", "laser_min_current_ma", "quantizer_clipped",
                   "quantizer_full_scale")

STAGE_TYPES: Dict[str, Type["Stage"]] = {}


def register(kind: str) -> Callable[[Type["Stage"]], Type["Stage"]]:
    def wrap(cls):
        cls.kind = kind
        STAGE_TYPES[kind] = cls
        return cls
    return wrap


def load_response(ref: Optional[str]) -> Optional[FrequencyResponse]:
    if ref is None:
        return None
    if ref == SYNTHETIC_RESPONSE:
        return FrequencyResponse.from_csv(SYNTHETIC_RESPONSE_FILE)
    return FrequencyResponse.from_csv(ref)


def _response_from_points(points) -> Optional[FrequencyResponse]:
    if points is None:
        return None
    return FrequencyResponse(points=tuple(tuple(p) for p in points))


@dataclass(frozen=True)
class Stage:
    """
    Base class of chain stages. rate_hz, when set, pins the input rate the stage was
    designed for; run_chain refuses a signal at any other rate.
    """
    name: Optional[str] = None
    rate_hz: Optional[float] = None

    kind: ClassVar[str] = ""

    def output_rate(self, rate_hz: float) -> float:
        return rate_hz

    def apply(self, sig: SampledSignal, seed: np.random.SeedSequence) -> SampledSignal:
        raise NotImplementedError

    def fidelity(self) -> Dict[str, str]:
        return {}

    @property
    def label(self) -> str:
        return self.name or self.kind

    def to_dict(self) -> Dict[str, Any]:
        d = {"type": self.kind}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, float) and math.isinf(v):
                v = "inf" if v > 0 else "-inf"
            d[f.name] = v
        return d


@register("normalize")
@dataclass(frozen=True)
class NormalizeStage(Stage):
    """AWG amplitude setting: scale to a target RMS."""
    target_rms: float = 1.0

    def apply(self, sig, seed):
        p = sig.power()
        if not p > 0:
            raise ConfigurationError("Cannot normalize a zero-power signal")
        return sig.with_samples(sig.samples * (self.target_rms / math.sqrt(p)), step="normalize")


@register("quantizer")
@dataclass(frozen=True)
class QuantizerStage(Stage):
    """full_scale absolute, or loading_db above the input RMS."""
    bits: int = 8
    full_scale: Optional[float] = None
    loading_db: Optional[float] = None

    def __post_init__(self):
        if (self.full_scale is None) == (self.loading_db is None):
            raise ConfigurationError("Quantizer stage needs exactly one of full_scale and loading_db")
        if self.full_scale is not None:
            QuantizerModel(bits=self.bits, full_scale=self.full_scale)

    def model_for(self, sig: SampledSignal) -> QuantizerModel:
        if self.full_scale is not None:
            return QuantizerModel(bits=self.bits, full_scale=self.full_scale)
        rms = math.sqrt(sig.power())
        if not rms > 0:
            raise ConfigurationError("Quantizer loading is relative to the input RMS; input has none")
        return QuantizerModel(bits=self.bits, full_scale=rms * 10 ** (self.loading_db / 20))

    def apply(self, sig, seed):
        q = self.model_for(sig)
        return quantize(sig, q).with_meta(quantizer_full_scale=q.full_scale)


@register("laser")
@dataclass(frozen=True)
class LaserStage(Stage):
    i_threshold_ma: float = 420.0
    slope_mw_per_ma: float = 0.084
    i_bias_ma: float = 545.0
    mod_gain_ma_per_unit: float = 28.0

    def __post_init__(self):
        _ = self.model

    @property
    def model(self) -> LaserModel:
        return LaserModel(i_threshold_ma=self.i_threshold_ma, slope_mw_per_ma=self.slope_mw_per_ma,
                          i_bias_ma=self.i_bias_ma, mod_gain_ma_per_unit=self.mod_gain_ma_per_unit)

    def apply(self, sig, seed):
        return laser_pi_transfer(sig, self.model)

    def fidelity(self):
        return {"laser.i_threshold_ma": "published", "laser.slope_mw_per_ma": "derived",
                "laser.i_bias_ma": "engineering", "laser.mod_gain_ma_per_unit": "engineering"}


@register("fso")
@dataclass(frozen=True)
class FsoStage(Stage):
    """Free-space path as a scalar power attenuation."""
    attenuation_db: float = 0.0

    def __post_init__(self):
        if self.attenuation_db < 0:
            raise ConfigurationError("FSO attenuation must be >= 0 dB")

    def apply(self, sig, seed):
        return sig.with_samples(sig.samples * 10 ** (-self.attenuation_db / 10), step="fso")

    def fidelity(self):
        return {"fso.attenuation_db": "engineering"}


@register("detector")
@dataclass(frozen=True)
class DetectorStage(Stage):
    """
    Optical power (mW) -> voltage: responsivity x transimpedance, optional DC block, then a
    low-pass FIR (single pole at f3db_hz unless a response table or file is given).
    """
    responsivity_a_per_w: float = 1.0
    transimpedance_ohm: float = 50.0
    dc_block: bool = True
    f3db_hz: float = 720e6
    response_file: Optional[str] = None
    response: Optional[Tuple] = None
    n_taps: int = DEFAULT_FIR_TAPS

    def __post_init__(self):
        if self.responsivity_a_per_w <= 0 or self.transimpedance_ohm <= 0:
            raise ConfigurationError("Detector responsivity and transimpedance must be > 0")
        if self.response_file is not None and self.response is not None:
            raise ConfigurationError("Detector takes a response table or a response file, not both")

    def frequency_response(self) -> FrequencyResponse:
        return (_response_from_points(self.response) or load_response(self.response_file)
                or FrequencyResponse.single_pole(self.f3db_hz))

    def apply(self, sig, seed):
        v = sig.samples * 1e-3 * self.responsivity_a_per_w * self.transimpedance_ohm
        dc = float(np.mean(v)) if len(v) else 0.0
        if self.dc_block:
            v = v - dc
        out = sig.with_samples(v, step="photodetect", detector_dc_v=dc)
        taps = fir_from_measured_response(self.frequency_response(), sig.rate_hz, self.n_taps)
        return apply_fir(out, taps, step="detector_lpf")

    def fidelity(self):
        if self.response_file == SYNTHETIC_RESPONSE:
            return {"detector.response": "synthetic"}
        if self.response is None and self.response_file is None:
            return {"detector.f3db_hz": "published", "detector.responsivity_a_per_w": "engineering"}
        return {"detector.response": "measured"}


@register("fir")
@dataclass(frozen=True)
class FirStage(Stage):
    """Generic response filter: a table, a CSV file, or a band-pass {center_hz, width_hz}."""
    response: Optional[Tuple] = None
    response_file: Optional[str] = None
    band_pass: Optional[Dict[str, float]] = None
    n_taps: int = 401

    def __post_init__(self):
        given = [x is not None for x in (self.response, self.response_file, self.band_pass)]
        if sum(given) != 1:
            raise ConfigurationError("FIR stage needs exactly one of response, response_file, band_pass")
        self.frequency_response()

    def frequency_response(self) -> FrequencyResponse:
        if self.band_pass is not None:
            try:
                return FrequencyResponse.band_pass(**self.band_pass)
            except TypeError as e:
                raise ConfigurationError(f"Bad band_pass parameters: {e}")
        return _response_from_points(self.response) or load_response(self.response_file)

    def apply(self, sig, seed):
        taps = fir_from_measured_response(self.frequency_response(), sig.rate_hz, self.n_taps)
        return apply_fir(sig, taps, step=self.label)


@register("gain")
@dataclass(frozen=True)
class GainStage(Stage):
    gain_db: float = 0.0

    def apply(self, sig, seed):
        return scale_db(sig, self.gain_db, step=self.label)


@register("amplifier")
@dataclass(frozen=True)
class AmplifierStage(Stage):
    gain_db: float = 30.0
    noise_figure_db: float = 6.0
    temperature_k: float = 290.0
    impedance_ohm: float = 1.0
    bandwidth_hz: Optional[float] = None

    def __post_init__(self):
        _ = self.model

    @property
    def model(self) -> AmplifierModel:
        return AmplifierModel(gain_db=self.gain_db, noise_figure_db=self.noise_figure_db,
                              temperature_k=self.temperature_k, impedance_ohm=self.impedance_ohm,
                              bandwidth_hz=self.bandwidth_hz)

    def apply(self, sig, seed):
        return noisy_amplify(sig, self.model, seed)

    def fidelity(self):
        return {"amplifier.gain_db": "published", "amplifier.noise_figure_db": "published",
                "amplifier.noise_convention": "engineering"}


@register("awgn")
@dataclass(frozen=True)
class AwgnStage(Stage):
    snr_db: float = math.inf
    reference_bw_hz: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "snr_db", float(self.snr_db))
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigurationError(f"AWGN SNR must be a number or +inf, got {self.snr_db}")

    def apply(self, sig, seed):
        return add_awgn(sig, self.snr_db, seed, reference_bw_hz=self.reference_bw_hz)

    def fidelity(self):
        return {"awgn.snr_db": "engineering"}


@register("resample")
@dataclass(frozen=True)
class ResampleStage(Stage):
    """Rational rate change; pass_hz defaults to 0.4 x the lower of the two rates."""
    to_rate_hz: float = 10e9
    pass_hz: Optional[float] = None

    def output_rate(self, rate_hz):
        return self.to_rate_hz

    def apply(self, sig, seed):
        pass_hz = self.pass_hz or 0.4 * min(sig.rate_hz, self.to_rate_hz)
        y = rational_resample(sig.samples, sig.rate_hz, self.to_rate_hz, pass_hz)
        return sig.with_samples(y, step=f"resample[{self.to_rate_hz / 1e9:g}GS/s]", rate_hz=self.to_rate_hz)


@register("carrier_leak")
@dataclass(frozen=True)
class CarrierLeakStage(Stage):
    carrier_hz: float = 627e6
    level_db: float = -30.0

    def apply(self, sig, seed):
        return add_carrier_tone(sig, self.carrier_hz, self.level_db)


def stage_from_dict(d: Dict[str, Any]) -> Stage:
    d = dict(d)
    kind = d.pop("type", None)
    if kind not in STAGE_TYPES:
        raise ConfigurationError(f"Unknown stage type {kind!r}; valid: {sorted(STAGE_TYPES)}")
    cls = STAGE_TYPES[kind]
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigurationError(f"Stage {kind!r} does not take {sorted(unknown)}")
    if isinstance(d.get("snr_db"), str):
        try:
            d["snr_db"] = float(d["snr_db"])
        except ValueError:
            raise ConfigurationError(f"AWGN SNR must be a number or 'inf', got {d['snr_db']!r}")
    for key in ("response",):
        if d.get(key) is not None:
            d[key] = tuple(tuple(p) for p in d[key])
    try:
        return cls(**d)
    except TypeError as e:
        raise ConfigurationError(f"Bad parameters for stage {kind!r}: {e}")


@dataclass(frozen=True)
class ChannelChain:
    stages: Tuple[Stage, ...] = ()
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.seed < 0:
            raise ConfigurationError("Chain seed must be >= 0")

    @classmethod
    def from_dict(cls, d: Dict[str, Any], name: str = "custom") -> "ChannelChain":
        if not isinstance(d, dict) or "stages" not in d:
            raise ConfigurationError("Chain config must be an object with a 'stages' list")
        unknown = set(d) - {"seed", "stages", "name"}
        if unknown:
            raise ConfigurationError(f"Unknown chain keys {sorted(unknown)}")
        return cls(stages=tuple(stage_from_dict(s) for s in d["stages"]), seed=int(d.get("seed", 0)),
                   name=d.get("name", name))

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "seed": self.seed, "stages": [s.to_dict() for s in self.stages]}

    def with_seed(self, seed: int) -> "ChannelChain":
        return ChannelChain(stages=self.stages, seed=seed, name=self.name)

    def stage_seeds(self) -> List[np.random.SeedSequence]:
        return np.random.SeedSequence(self.seed).spawn(len(self.stages))

    def validate_rates(self, rate_hz: float) -> float:
        """Walk the rate through the stages; returns the output rate."""
        for i, st in enumerate(self.stages):
            if st.rate_hz is not None and not math.isclose(st.rate_hz, rate_hz, rel_tol=1e-12):
                raise ConfigurationError(f"Stage {i} ({st.label}) expects {st.rate_hz:g} Hz but receives "
                                         f"{rate_hz:g} Hz; insert a resample stage")
            rate_hz = st.output_rate(rate_hz)
        return rate_hz

    def fidelity(self) -> Dict[str, str]:
        out: Dict[str, str] = {}
        for st in self.stages:
            out.update(st.fidelity())
        return out


def run_chain(sig: SampledSignal, chain: ChannelChain) -> SampledSignal:
    """
    Apply the stages in order. The output meta["stage_powers"] lists, per stage, its label
    and the mean power after it.
    """
    chain.validate_rates(sig.rate_hz)
    trace = [{"stage": "input", "power": sig.power(), "rate_hz": sig.rate_hz}]
    for i, (st, seed) in enumerate(zip(chain.stages, chain.stage_seeds())):
        sig = SampledSignal(samples=sig.samples, rate_hz=sig.rate_hz, kind=sig.kind,
                            meta={k: v for k, v in sig.meta.items() if k not in STAGE_STAT_KEYS})
        try:
            sig = st.apply(sig, seed)
        except BenchException as e:
            raise e.with_stage(f"channel:{st.label}")
        p = sig.power()
        entry = {"stage": st.label, "power": p, "power_db": 10 * np.log10(p) if p > 0 else None,
                 "rate_hz": sig.rate_hz}
        entry.update({k: sig.meta[k] for k in STAGE_STAT_KEYS if k in sig.meta})
        trace.append(entry)
        log.log(TRACE, "chain %s stage %d %s: power %.6g", chain.name, i, st.label, p)
    return sig.with_meta(stage_powers=trace, chain=chain.name, chain_seed=chain.seed)
