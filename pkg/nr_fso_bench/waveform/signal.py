"""
SampledSignal: a real or complex sample stream with its rate and provenance.

Instances are immutable: the sample array is stored as a read-only view and every
processing step returns a new signal whose ``meta["history"]`` names the step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from nr_fso_bench.common.bench_exception import InputError

REAL = "real"
COMPLEX = "complex"


def _readonly(x: np.ndarray) -> np.ndarray:
    v = x.view()
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class SampledSignal:
    samples: np.ndarray
    rate_hz: float
    kind: str = COMPLEX
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.rate_hz > 0):
            raise InputError(f"Sample rate must be > 0, got {self.rate_hz}")
        if self.kind not in (REAL, COMPLEX):
            raise InputError(f"Signal kind must be 'real' or 'complex', got {self.kind!r}")
        x = np.asarray(self.samples)
        if x.ndim != 1:
            raise InputError(f"Samples must be one-dimensional, got shape {x.shape}")
        if self.kind == REAL:
            if np.iscomplexobj(x):
                if np.any(x.imag != 0):
                    raise InputError("Real signal has a non-zero imaginary part")
                x = x.real
            x = x.astype(np.float64, copy=False)
        else:
            x = x.astype(np.complex128, copy=False)
        object.__setattr__(self, "samples", _readonly(x))
        object.__setattr__(self, "rate_hz", float(self.rate_hz))
        meta = dict(self.meta)
        meta.setdefault("history", [])
        meta["history"] = list(meta["history"])
        object.__setattr__(self, "meta", meta)

    # ---------- construction helpers ----------
    @classmethod
    def real(cls, samples, rate_hz: float, **meta) -> "SampledSignal":
        return cls(samples=np.asarray(samples, dtype=np.float64), rate_hz=rate_hz, kind=REAL, meta=meta)

    @classmethod
    def complex(cls, samples, rate_hz: float, **meta) -> "SampledSignal":
        return cls(samples=np.asarray(samples, dtype=np.complex128), rate_hz=rate_hz, kind=COMPLEX, meta=meta)

    def with_samples(self, samples: np.ndarray, *, step: Optional[str] = None, rate_hz: Optional[float] = None,
                     kind: Optional[str] = None, **meta_updates) -> "SampledSignal":
        meta = dict(self.meta)
        meta.update(meta_updates)
        meta["history"] = list(self.meta.get("history", [])) + ([step] if step else [])
        return SampledSignal(samples=samples, rate_hz=self.rate_hz if rate_hz is None else rate_hz,
                             kind=self.kind if kind is None else kind, meta=meta)

    def with_meta(self, **meta_updates) -> "SampledSignal":
        meta = dict(self.meta)
        meta.update(meta_updates)
        return SampledSignal(samples=self.samples, rate_hz=self.rate_hz, kind=self.kind, meta=meta)

    def as_float32(self) -> "SampledSignal":
        """Round samples through float32, the precision of the on-disk IQ format."""
        if self.kind == REAL:
            x = self.samples.astype(np.float32).astype(np.float64)
        else:
            x = self.samples.astype(np.complex64).astype(np.complex128)
        return SampledSignal(samples=x, rate_hz=self.rate_hz, kind=self.kind, meta=dict(self.meta))

    # ---------- measurements ----------
    @property
    def is_real(self) -> bool:
        return self.kind == REAL

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.rate_hz

    def power(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))

    def papr_db(self) -> float:
        p = self.power()
        if p <= 0:
            raise InputError("PAPR undefined for a zero-power signal")
        return float(10 * np.log10(np.max(np.abs(self.samples) ** 2) / p))
