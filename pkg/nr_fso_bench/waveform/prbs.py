"""
Pseudo-random bit sources.

- PN23: b[n] = b[n-18] XOR b[n-23] (generator 1 + D^18 + D^23), period 2^23 - 1. The seed is
  mapped to the non-zero initial register ``seed mod (2^23 - 1) + 1`` (bit i = b[i]).
  Used for test-model payload bits.
- Gold sequence c(n) of the NR physical layer (two degree-31 m-sequences, Nc = 1600),
  used for DMRS.
"""
from __future__ import annotations

import numpy as np

from nr_fso_bench.common.bench_exception import InputError

PN23_DEGREE = 23
PN23_TAP = 18
PN23_PERIOD = (1 << PN23_DEGREE) - 1

GOLD_NC = 1600
_GOLD_BLOCK = 28


def pn23_state(seed: int) -> int:
    return int(seed) % PN23_PERIOD + 1


def pn23(n_bits: int, seed: int) -> np.ndarray:
    if n_bits < 0:
        raise InputError("Bit count must be >= 0")
    state = pn23_state(seed)
    total = PN23_DEGREE + n_bits
    buf = np.empty(total, dtype=np.uint8)
    buf[:PN23_DEGREE] = (state >> np.arange(PN23_DEGREE)) & 1
    pos = PN23_DEGREE
    k = 0
    while pos < total:
        # (1 + D^18 + D^23)^(2^k) = 1 + D^(18 2^k) + D^(23 2^k) over GF(2)
        while k < 14 and pos >= PN23_DEGREE << (k + 1):
            k += 1
        lag_a, lag_b = PN23_TAP << k, PN23_DEGREE << k
        blk = min(lag_a, total - pos)
        buf[pos:pos + blk] = buf[pos - lag_a:pos - lag_a + blk] ^ buf[pos - lag_b:pos - lag_b + blk]
        pos += blk
    return buf[PN23_DEGREE:]


def gold_sequence(n_bits: int, c_init: int) -> np.ndarray:
    if not 0 <= c_init < (1 << 31):
        raise InputError(f"c_init must fit in 31 bits, got {c_init}")
    total = GOLD_NC + n_bits + 31
    x1 = np.zeros(total, dtype=np.uint8)
    x2 = np.zeros(total, dtype=np.uint8)
    x1[0] = 1
    x2[:31] = (c_init >> np.arange(31)) & 1
    pos = 31
    while pos < total:
        blk = min(_GOLD_BLOCK, total - pos)
        n = np.arange(pos - 31, pos - 31 + blk)
        x1[pos:pos + blk] = x1[n + 3] ^ x1[n]
        x2[pos:pos + blk] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n]
        pos += blk
    return (x1[GOLD_NC:GOLD_NC + n_bits] ^ x2[GOLD_NC:GOLD_NC + n_bits]).astype(np.uint8)


def dmrs_c_init(slot: int, symbol: int, n_id: int, symbols_per_slot: int = 14) -> int:
    return ((1 << 17) * (symbols_per_slot * slot + symbol + 1) * (2 * n_id + 1) + 2 * n_id) % (1 << 31)
