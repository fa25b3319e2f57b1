"""
PDSCH RMS EVM over data REs, with a per-subcarrier breakdown.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError, UndefinedEvmError
from nr_fso_bench.rx.equalizer import EqualizedGrid
from nr_fso_bench.waveform.modulation import order_of, qam_hard_decision
from nr_fso_bench.waveform.numerology import SUBCARRIERS_PER_RB
from nr_fso_bench.waveform.test_models import ROLE_DATA, ResourceGrid

EVM_REFERENCE = "reference"
EVM_DECISION = "decision"


@dataclass(frozen=True)
class EvmResult:
    evm_pct: float
    per_subcarrier_pct: np.ndarray
    per_modulation_pct: Dict[str, float] = field(default_factory=dict)
    n_symbols: int = 0
    mode: str = EVM_REFERENCE

    @property
    def dc_subcarrier_pct(self) -> float:
        return float(self.per_subcarrier_pct[len(self.per_subcarrier_pct) // 2])

    @property
    def median_subcarrier_pct(self) -> float:
        return float(np.nanmedian(self.per_subcarrier_pct))


def _decision_reference(x: np.ndarray, data: np.ndarray, order: int) -> np.ndarray:
    """Hard decisions after removing the per-RB RMS level, restored afterwards."""
    n_sc = x.shape[1]
    ref = np.zeros_like(x)
    for rb in range(n_sc // SUBCARRIERS_PER_RB):
        cols = slice(rb * SUBCARRIERS_PER_RB, (rb + 1) * SUBCARRIERS_PER_RB)
        sel = data[:, cols]
        if not np.any(sel):
            continue
        level = np.sqrt(np.mean(np.abs(x[:, cols][sel]) ** 2))
        if level > 0:
            ref[:, cols] = qam_hard_decision(x[:, cols] / level, order) * level
    return ref


def measure_evm(eq: EqualizedGrid, reference: ResourceGrid, mode: str = EVM_REFERENCE) -> EvmResult:
    """
    EVM = 100 sqrt(sum |X_eq - X_ref|^2 / sum |X_ref|^2) over data REs that the equalizer did
    not mask. DMRS REs are excluded. Subcarriers without data REs report NaN.
    """
    if eq.symbols.shape != reference.symbols.shape:
        raise InputError(f"Equalized grid {eq.symbols.shape} and reference {reference.symbols.shape} differ")
    if mode not in (EVM_REFERENCE, EVM_DECISION):
        raise ConfigurationError(f"Unknown EVM reference mode {mode!r}")
    data = (reference.role == ROLE_DATA) & eq.mask
    if mode == EVM_REFERENCE:
        x_ref = reference.reference
    else:
        x_ref = _decision_reference(eq.symbols, data, order_of(reference.modulation))

    err = np.where(data, np.abs(eq.symbols - x_ref) ** 2, 0.0)
    pwr = np.where(data, np.abs(x_ref) ** 2, 0.0)
    total = float(pwr.sum())
    if not total > 0:
        raise UndefinedEvmError("Reference power over the data REs is zero")
    evm = 100 * np.sqrt(err.sum() / total)

    col_pwr = pwr.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_sc = np.where(col_pwr > 0, 100 * np.sqrt(err.sum(axis=0) / col_pwr), np.nan)
    return EvmResult(evm_pct=float(evm), per_subcarrier_pct=per_sc,
                     per_modulation_pct={reference.modulation: float(evm)}, n_symbols=int(data.sum()), mode=mode)
