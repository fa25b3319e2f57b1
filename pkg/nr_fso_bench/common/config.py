#!/usr/bin/env python3
"""
config.py

Typed loader for the bench tool configuration YAML.

Sections
--------
- runtime:  output directory and worker count for scenario matrices.
- defaults: numerology / carrier / preset / seed used when a scenario omits them.
- logging:  rotating file logger settings (see LogHelper).

Only the output directory may be overridden from the environment (NR_BENCH_OUT_DIR).

Usage:
    cfg = Config.load_from_file("config.yml")
    cfg.logging.apply()
    out = cfg.runtime.output_directory
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from nr_fso_bench.common.bench_exception import ConfigurationError
from nr_fso_bench.utils.log_helper import LogHelper

PACKAGED_CONFIG = Path(__file__).resolve().parent.parent / "config.yml"
DEFAULT_CONFIG_PATH = os.getenv("NR_BENCH_CONFIG_PATH", str(PACKAGED_CONFIG))
OUT_DIR_ENV = "NR_BENCH_OUT_DIR"


# ---------- helpers ----------
def _positive(x: Any, name: str, cast=float):
    try:
        v = cast(x)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{name}' must be a number, got {x!r}")
    if v <= 0:
        raise ConfigurationError(f"'{name}' must be > 0, got {v}")
    return v


# ---------- dataclasses ----------
@dataclass
class LoggingConfig:
    log_directory: Path
    log_file: str
    log_level: str = "INFO"
    log_retain: int = 5
    log_size: int = 5_000_000
    logger: str = "nr_fso_bench"

    def apply(self, console_level: Optional[Union[int, str]] = None):
        """
        Set up rotating file handlers based on this config.
        """
        return LogHelper.make_logger(
            log_dir=self.log_directory,
            log_file=self.log_file,
            log_level=self.log_level,
            log_retain=self.log_retain,
            log_size=self.log_size,
            logger=self.logger,
            console_level=console_level,
        )


@dataclass
class RuntimeConfig:
    output_directory: Path = Path("./bench-out")
    jobs: int = 1

    def __post_init__(self):
        env_out = os.getenv(OUT_DIR_ENV)
        if env_out:
            self.output_directory = Path(env_out)
        self.output_directory = Path(self.output_directory)
        self.jobs = int(_positive(self.jobs, "runtime.jobs", int))


@dataclass
class DefaultsConfig:
    preset: str = "paper-fso"
    test_model: str = "TM3.1a"
    seed: int = 1
    scs_hz: float = 30e3
    bandwidth_hz: float = 20e6
    carrier_hz: float = 627e6
    passband_rate_hz: float = 2.4576e9
    n_frames: int = 1

    def __post_init__(self):
        self.seed = int(self.seed)
        self.scs_hz = _positive(self.scs_hz, "defaults.scs-hz")
        self.bandwidth_hz = _positive(self.bandwidth_hz, "defaults.bandwidth-hz")
        self.carrier_hz = _positive(self.carrier_hz, "defaults.carrier-hz")
        self.passband_rate_hz = _positive(self.passband_rate_hz, "defaults.passband-rate-hz")
        self.n_frames = int(_positive(self.n_frames, "defaults.n-frames", int))


@dataclass
class Config:
    runtime: RuntimeConfig
    defaults: DefaultsConfig
    logging: LoggingConfig

    # ----------- loader -----------
    @classmethod
    def load_from_file(cls, path: str | Path) -> "Config":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except OSError as e:
            raise ConfigurationError(f"Cannot read config file {path}: {e}")
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in {path}: {e}")
        return cls.from_dict(data or {})

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigurationError("Top-level YAML must be a mapping")

        runtime_raw = data.get("runtime") or {}
        runtime = RuntimeConfig(
            output_directory=Path(runtime_raw.get("output-directory") or "./bench-out"),
            jobs=runtime_raw.get("jobs") or 1,
        )

        d = data.get("defaults") or {}
        defaults = DefaultsConfig(
            preset=d.get("preset") or "paper-fso",
            test_model=d.get("test-model") or "TM3.1a",
            seed=d.get("seed", 1),
            scs_hz=d.get("scs-hz") or 30e3,
            bandwidth_hz=d.get("bandwidth-hz") or 20e6,
            carrier_hz=d.get("carrier-hz") or 627e6,
            passband_rate_hz=d.get("passband-rate-hz") or 2.4576e9,
            n_frames=d.get("n-frames") or 1,
        )

        log_raw = data.get("logging") or {}
        logging_cfg = LoggingConfig(
            log_directory=Path(log_raw.get("log-directory") or runtime.output_directory / "logs"),
            log_file=log_raw.get("log-file") or "nr-fso-bench.log",
            log_level=log_raw.get("log-level") or "INFO",
            log_retain=int(log_raw.get("log-retain") or 5),
            log_size=int(log_raw.get("log-size") or 5_000_000),
            logger=log_raw.get("logger") or "nr_fso_bench",
        )

        return cls(runtime=runtime, defaults=defaults, logging=logging_cfg)


@lru_cache(maxsize=1)
def get_cfg(path: str | Path = DEFAULT_CONFIG_PATH) -> Config:
    """Load once, reuse everywhere."""
    return Config.load_from_file(path)


def init_cfg(path: str | Path) -> Config:
    """Call this once at startup if you want a non-default path or to reload."""
    get_cfg.cache_clear()
    return get_cfg(path)
