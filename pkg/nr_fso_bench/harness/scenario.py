"""
Scenario: everything needed to reproduce one bench run.

Scenario files are JSON objects (see docs/scenario_schema.md). Missing fields fall back to the
``defaults`` section of the tool configuration; unknown keys are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from nr_fso_bench.channel.chain import ChannelChain
from nr_fso_bench.channel.presets import PRESETS, build_preset
from nr_fso_bench.common.bench_exception import ConfigurationError
from nr_fso_bench.common.config import DefaultsConfig
from nr_fso_bench.conformance.evm import EVM_DECISION, EVM_REFERENCE
from nr_fso_bench.conformance.limits import Limits
from nr_fso_bench.rx.costas import CostasConfig
from nr_fso_bench.rx.receiver import RxConfig
from nr_fso_bench.waveform.numerology import CarrierConfig, Numerology, make_numerology
from nr_fso_bench.waveform.test_models import TEST_MODEL_MODULATION, TestModelSpec

MEASUREMENTS = ("aclr", "evm")

_RX_KEYS = {f.name for f in fields(RxConfig)}
_COSTAS_KEYS = {f.name for f in fields(CostasConfig)}


def rx_config_from_dict(d: Optional[Dict[str, Any]]) -> RxConfig:
    if not d:
        return RxConfig()
    if not isinstance(d, dict):
        raise ConfigurationError("'rx' must be an object")
    unknown = set(d) - _RX_KEYS
    if unknown:
        raise ConfigurationError(f"Unknown rx keys {sorted(unknown)}")
    d = dict(d)
    costas = d.pop("costas", None) or {}
    unknown = set(costas) - _COSTAS_KEYS
    if unknown:
        raise ConfigurationError(f"Unknown costas keys {sorted(unknown)}")
    try:
        return RxConfig(costas=CostasConfig(**costas), **d)
    except TypeError as e:
        raise ConfigurationError(f"Bad rx parameters: {e}")


def rx_config_to_dict(cfg: RxConfig) -> Dict[str, Any]:
    out = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "costas"}
    out["costas"] = {f.name: getattr(cfg.costas, f.name) for f in fields(cfg.costas)}
    return out


@dataclass(frozen=True)
class Scenario:
    tm: str = "TM3.1a"
    scs_hz: float = 30e3
    bandwidth_hz: float = 20e6
    carrier_hz: float = 627e6
    passband_rate_hz: float = 2.4576e9
    preset: Optional[str] = "paper-fso"
    chain: Optional[Dict[str, Any]] = None
    snr_db: Optional[float] = None
    laser_mod_gain: Optional[float] = None
    response_file: Optional[str] = None
    rx: RxConfig = field(default_factory=RxConfig)
    limits: Limits = field(default_factory=Limits)
    seed: int = 1
    out_dir: Optional[str] = None
    n_frames: int = 1
    n_slots: Optional[int] = None
    window_overlap: Optional[int] = None
    carrier_leak_db: Optional[float] = None
    evm_mode: str = EVM_REFERENCE
    measurements: Tuple[str, ...] = MEASUREMENTS
    name: Optional[str] = None

    def __post_init__(self):
        if self.tm not in TEST_MODEL_MODULATION:
            raise ConfigurationError(f"Unknown test model {self.tm!r}; valid: {list(TEST_MODEL_MODULATION)}")
        if (self.preset is None) == (self.chain is None):
            raise ConfigurationError("A scenario names exactly one of 'preset' or 'chain'")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigurationError(f"Unknown preset {self.preset!r}; valid: {sorted(PRESETS)}")
        if self.snr_db is not None:
            try:
                object.__setattr__(self, "snr_db", float(self.snr_db))
            except (TypeError, ValueError):
                raise ConfigurationError(f"snr_db must be a number or 'inf', got {self.snr_db!r}")
        if self.seed < 0:
            raise ConfigurationError("Seed must be >= 0")
        if self.n_frames < 1 or (self.n_slots is not None and self.n_slots < 1):
            raise ConfigurationError("n_frames and n_slots must be >= 1")
        if self.evm_mode not in (EVM_REFERENCE, EVM_DECISION):
            raise ConfigurationError(f"Unknown EVM mode {self.evm_mode!r}")
        object.__setattr__(self, "measurements", tuple(self.measurements))
        bad = set(self.measurements) - set(MEASUREMENTS)
        if bad or not self.measurements:
            raise ConfigurationError(f"Measurements must be a non-empty subset of {list(MEASUREMENTS)}")
        if self.chain is not None:
            # fail early on a malformed chain
            ChannelChain.from_dict(self.chain)

    @property
    def id(self) -> str:
        return self.name or f"{self.tm}-{self.preset or 'custom'}-seed{self.seed}"

    def numerology(self) -> Numerology:
        return make_numerology(self.scs_hz, self.bandwidth_hz)

    def carrier(self, num: Optional[Numerology] = None) -> CarrierConfig:
        return CarrierConfig.for_numerology(num or self.numerology(), carrier_hz=self.carrier_hz,
                                            passband_rate_hz=self.passband_rate_hz)

    def test_model(self, num: Optional[Numerology] = None) -> TestModelSpec:
        return TestModelSpec.for_model(self.tm, (num or self.numerology()).n_rb, prbs_seed=self.seed)

    def channel_chain(self, occupied_bw_hz: Optional[float] = None) -> ChannelChain:
        """The preset or explicit chain, seeded with the scenario seed."""
        if self.chain is not None:
            return ChannelChain.from_dict(self.chain).with_seed(self.seed)
        occupied = occupied_bw_hz or self.carrier().occupied_bw_hz
        return build_preset(self.preset, seed=self.seed, snr_db=self.snr_db, occupied_bw_hz=occupied,
                            response_file=self.response_file, laser_mod_gain=self.laser_mod_gain)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["rx"] = rx_config_to_dict(self.rx)
        out["limits"] = {"aclr_min_db": self.limits.aclr_min_db,
                         "evm_conformance_pct": dict(self.limits.evm_conformance_pct),
                         "evm_minimum_pct": dict(self.limits.evm_minimum_pct)}
        out["measurements"] = list(self.measurements)
        return out

    @classmethod
    def from_dict(cls, d: Dict[str, Any], defaults: Optional[DefaultsConfig] = None) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigurationError("Scenario must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"Unknown scenario keys {sorted(unknown)}")
        base: Dict[str, Any] = {}
        if defaults is not None:
            base = {"tm": defaults.test_model, "scs_hz": defaults.scs_hz, "bandwidth_hz": defaults.bandwidth_hz,
                    "carrier_hz": defaults.carrier_hz, "passband_rate_hz": defaults.passband_rate_hz,
                    "preset": defaults.preset, "seed": defaults.seed, "n_frames": defaults.n_frames}
        merged = {**base, **d}
        if d.get("chain") is not None and "preset" not in d:
            merged["preset"] = None
        merged["rx"] = rx_config_from_dict(merged.get("rx"))
        merged["limits"] = Limits.from_dict(merged.get("limits"))
        try:
            return cls(**merged)
        except TypeError as e:
            raise ConfigurationError(f"Bad scenario: {e}")

    @classmethod
    def from_file(cls, path: Union[str, Path], defaults: Optional[DefaultsConfig] = None) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as e:
            raise ConfigurationError(f"Cannot read scenario file {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Scenario file {path} is not valid JSON: {e}")
        return cls.from_dict(data, defaults=defaults)
