"""
NR modulation mapper: Gray-mapped square constellations at unit mean power.

For M = 2^(2m) each symbol takes 2m bits b0..b(2m-1); even bits drive I, odd bits drive Q:
    I = (1-2 b0) (2^(m-1) - (1-2 b2) (2^(m-2) - (1-2 b4) (... - (1-2 b(2m-2)))))
and likewise for Q, scaled by 1/sqrt(2 (M-1) / 3). QPSK reduces to ((1-2 b0) + j (1-2 b1)) / sqrt(2).
"""
from __future__ import annotations

from typing import Dict

import numpy as np

from nr_fso_bench.common.bench_exception import InputError

MODULATION_ORDERS: Dict[str, int] = {"QPSK": 4, "16QAM": 16, "64QAM": 64, "256QAM": 256}


def bits_per_symbol(order: int) -> int:
    if order not in MODULATION_ORDERS.values():
        raise InputError(f"Unsupported modulation order {order}; valid: {sorted(MODULATION_ORDERS.values())}")
    return int(np.log2(order))


def order_of(modulation: str) -> int:
    try:
        return MODULATION_ORDERS[modulation]
    except KeyError:
        raise InputError(f"Unknown modulation {modulation!r}; valid: {list(MODULATION_ORDERS)}")


def scale(order: int) -> float:
    return float(np.sqrt(2 * (order - 1) / 3))


def _axis_amplitude(axis_bits: np.ndarray) -> np.ndarray:
    """Odd-integer amplitude on one axis; axis_bits[:, 0] is the sign bit."""
    m = axis_bits.shape[1]
    s = 1 - 2 * axis_bits.astype(np.int64)
    level = np.ones(axis_bits.shape[0], dtype=np.int64)
    for i in range(m - 1, 0, -1):
        level = (1 << (m - i)) - s[:, i] * level
    return s[:, 0] * level


def qam_modulate(bits, order: int) -> np.ndarray:
    bits = np.asarray(bits).ravel()
    q = bits_per_symbol(order)
    if bits.size % q:
        raise InputError(f"Bit count {bits.size} is not divisible by {q} bits per symbol")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise InputError("Bits must be 0 or 1")
    groups = bits.reshape(-1, q)
    i = _axis_amplitude(groups[:, 0::2])
    qd = _axis_amplitude(groups[:, 1::2])
    return (i + 1j * qd) / scale(order)


def constellation(order: int) -> np.ndarray:
    """All M points, indexed by the integer value of their bit group (b0 = MSB)."""
    q = bits_per_symbol(order)
    idx = np.arange(order)
    bits = (idx[:, None] >> np.arange(q - 1, -1, -1)[None, :]) & 1
    return qam_modulate(bits.ravel(), order)


def qam_hard_decision(symbols, order: int) -> np.ndarray:
    """Nearest constellation point, sliced per axis (square constellations only)."""
    bits_per_symbol(order)
    side = int(np.sqrt(order))
    top = side - 1
    z = np.asarray(symbols) * scale(order)

    def _slice(v):
        return np.clip(2 * np.floor(v / 2) + 1, -top, top)

    return (_slice(z.real) + 1j * _slice(z.imag)) / scale(order)
