"""
CSV exports of measurement artifacts.
"""
from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np

from nr_fso_bench.conformance.evm import EvmResult
from nr_fso_bench.conformance.psd import PsdEstimate
from nr_fso_bench.rx.costas import CostasTrace
from nr_fso_bench.rx.equalizer import ChannelEstimate, EqualizedGrid
from nr_fso_bench.waveform.test_models import ROLE_DATA, ResourceGrid

PathLike = Union[str, Path]
_FMT = "%.9g"


def _save(path: PathLike, header: str, columns, fmt=_FMT) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=header, comments="", fmt=fmt)
    return path


def write_psd_csv(path: PathLike, psd: PsdEstimate) -> Path:
    return _save(path, "freq_hz,psd_db", (psd.freq_hz, psd.density_db))


def write_constellation_csv(path: PathLike, eq: EqualizedGrid, reference: ResourceGrid) -> Path:
    """Equalized data REs as re,im,subcarrier,symbol (subcarrier counted from DC)."""
    data = (reference.role == ROLE_DATA) & eq.mask
    sym, col = np.nonzero(data)
    x = eq.symbols[sym, col]
    k = col - reference.n_subcarriers // 2
    return _save(path, "re,im,subcarrier,symbol", (x.real, x.imag, k, sym),
                 fmt=[_FMT, _FMT, "%d", "%d"])


def write_evm_csv(path: PathLike, evm: EvmResult) -> Path:
    n = len(evm.per_subcarrier_pct)
    return _save(path, "subcarrier,evm_pct", (np.arange(n) - n // 2, evm.per_subcarrier_pct), fmt=["%d", _FMT])


def write_trace_csv(path: PathLike, trace: CostasTrace) -> Path:
    """NCO frequency per loop sample."""
    return _save(path, "index,value", (np.arange(len(trace.freq_hz)), trace.freq_hz), fmt=["%d", _FMT])


def write_estimate_csv(path: PathLike, est: ChannelEstimate, slot: int = 0) -> Path:
    h = est.h[slot]
    k = np.arange(len(h)) - len(h) // 2
    return _save(path, "subcarrier,re,im", (k, h.real, h.imag), fmt=["%d", _FMT, _FMT])
