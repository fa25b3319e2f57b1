"""
IQ capture files: raw little-endian float32 samples (interleaved I,Q for complex signals)
with a mandatory JSON sidecar {kind, sample_rate_hz, carrier_hz, seed, description, meta}.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from nr_fso_bench.common.bench_exception import FormatError
from nr_fso_bench.utils.serialization import dumps
from nr_fso_bench.waveform.signal import COMPLEX, REAL, SampledSignal

log = logging.getLogger(__name__)

SAMPLE_FORMAT = "float32le"
_DTYPE = np.dtype("<f4")
REQUIRED_FIELDS = ("kind", "sample_rate_hz")

PathLike = Union[str, Path]


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def write_iq(path: PathLike, sig: SampledSignal, seed: Optional[int] = None, description: str = "",
             meta_path: Optional[PathLike] = None) -> Tuple[Path, Path]:
    path = Path(path)
    meta_path = Path(meta_path) if meta_path else sidecar_path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if sig.is_real:
        raw = sig.samples.astype(_DTYPE)
    else:
        raw = np.empty(2 * len(sig), dtype=_DTYPE)
        raw[0::2] = sig.samples.real
        raw[1::2] = sig.samples.imag
    raw.tofile(path)
    sidecar = {
        "kind": sig.kind,
        "sample_rate_hz": sig.rate_hz,
        "carrier_hz": sig.meta.get("carrier_hz"),
        "seed": seed,
        "description": description,
        "format": SAMPLE_FORMAT,
        "n_samples": len(sig),
        "meta": {k: v for k, v in sig.meta.items() if k != "carrier_hz"},
    }
    meta_path.write_text(dumps(sidecar) + "\n")
    log.debug("Wrote %d %s samples to %s", len(sig), sig.kind, path)
    return path, meta_path


def read_sidecar(meta_path: PathLike) -> Dict[str, Any]:
    meta_path = Path(meta_path)
    try:
        side = json.loads(meta_path.read_text())
    except OSError as e:
        raise FormatError(f"Cannot read IQ sidecar {meta_path}: {e}")
    except json.JSONDecodeError as e:
        raise FormatError(f"IQ sidecar {meta_path} is not valid JSON: {e}")
    missing = [f for f in REQUIRED_FIELDS if f not in side]
    if missing:
        raise FormatError(f"IQ sidecar {meta_path} lacks {missing}")
    if side["kind"] not in (REAL, COMPLEX):
        raise FormatError(f"IQ sidecar {meta_path}: kind must be 'real' or 'complex'")
    if side.get("format", SAMPLE_FORMAT) != SAMPLE_FORMAT:
        raise FormatError(f"IQ sidecar {meta_path}: unsupported sample format {side['format']!r}")
    return side


def read_iq(path: PathLike, meta_path: Optional[PathLike] = None) -> SampledSignal:
    path = Path(path)
    side = read_sidecar(meta_path or sidecar_path(path))
    try:
        raw = np.fromfile(path, dtype=_DTYPE).astype(np.float64)
    except OSError as e:
        raise FormatError(f"Cannot read IQ samples {path}: {e}")
    if side["kind"] == COMPLEX:
        if len(raw) % 2:
            raise FormatError(f"{path}: odd number of floats in a complex capture")
        samples = raw[0::2] + 1j * raw[1::2]
    else:
        samples = raw
    if "n_samples" in side and side["n_samples"] != len(samples):
        raise FormatError(f"{path}: sidecar announces {side['n_samples']} samples, file holds {len(samples)}")
    meta = dict(side.get("meta") or {})
    if side.get("carrier_hz") is not None:
        meta["carrier_hz"] = side["carrier_hz"]
    if side.get("seed") is not None:
        meta["seed"] = side["seed"]
    return SampledSignal(samples=samples, rate_hz=float(side["sample_rate_hz"]), kind=side["kind"], meta=meta)

