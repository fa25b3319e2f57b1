"""
NR FR1 test models used by the bench (TM1.1, TM1.2, TM3.1, TM3.1a) and the resource grid
they produce.

The grid is a simplified test model: full-band PDSCH with the model's modulation plus one
DMRS symbol per slot. SSB, PDCCH and PT-RS are not generated.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from nr_fso_bench.common.bench_exception import ConfigurationError, InputError
from nr_fso_bench.waveform.modulation import bits_per_symbol, order_of, qam_modulate
from nr_fso_bench.waveform.numerology import Numerology
from nr_fso_bench.waveform.prbs import dmrs_c_init, gold_sequence, pn23

log = logging.getLogger(__name__)

ROLE_DATA = 0
ROLE_DMRS = 1

TEST_MODEL_MODULATION = {
    "TM1.1": "QPSK",
    "TM1.2": "QPSK",
    "TM3.1": "64QAM",
    "TM3.1a": "256QAM",
}

# TM1.2: the first 40 % of the RBs are boosted, the rest deboosted to keep TM1.1 total power
TM12_BOOSTED_FRACTION = 0.4
TM12_BOOST_DB = 3.0


@dataclass(frozen=True)
class DmrsConfig:
    symbols: Tuple[int, ...] = (2,)
    stride: int = 2
    n_id: int = 0

    def __post_init__(self):
        if not self.symbols:
            raise ConfigurationError("At least one DMRS symbol per slot is required")
        if any(s < 0 or s >= 14 for s in self.symbols):
            raise ConfigurationError(f"DMRS symbol indices must be within the slot, got {self.symbols}")
        if self.stride < 1:
            raise ConfigurationError("DMRS subcarrier stride must be >= 1")
        if not 0 <= self.n_id < 65536:
            raise ConfigurationError("DMRS scrambling id must be in [0, 65535]")


def tm12_power_pattern(n_rb: int, boost_db: float = TM12_BOOST_DB,
                       boosted_fraction: float = TM12_BOOSTED_FRACTION) -> Tuple[float, ...]:
    n_boost = int(round(boosted_fraction * n_rb))
    if not 0 < n_boost < n_rb:
        raise ConfigurationError(f"TM1.2 boosted RB count {n_boost} out of range for {n_rb} RBs")
    rest_lin = (n_rb - n_boost * 10 ** (boost_db / 10)) / (n_rb - n_boost)
    if rest_lin <= 0:
        raise ConfigurationError(f"A {boost_db} dB boost on {n_boost} RBs leaves no power for the rest")
    deboost_db = 10 * np.log10(rest_lin)
    return tuple([float(boost_db)] * n_boost + [float(deboost_db)] * (n_rb - n_boost))


@dataclass(frozen=True)
class TestModelSpec:
    id: str
    modulation: str
    power_pattern: Tuple[float, ...]
    prbs_seed: int = 0
    dmrs: DmrsConfig = field(default_factory=DmrsConfig)

    # keep pytest from collecting this class
    __test__ = False

    def __post_init__(self):
        if self.id not in TEST_MODEL_MODULATION:
            raise ConfigurationError(f"Unknown test model {self.id!r}; valid: {list(TEST_MODEL_MODULATION)}")
        if TEST_MODEL_MODULATION[self.id] != self.modulation:
            raise ConfigurationError(f"{self.id} carries {TEST_MODEL_MODULATION[self.id]}, not {self.modulation}")
        if self.id != "TM1.2" and any(p != 0 for p in self.power_pattern):
            raise ConfigurationError(f"{self.id} has a flat power pattern")
        object.__setattr__(self, "power_pattern", tuple(float(p) for p in self.power_pattern))

    @classmethod
    def for_model(cls, tm_id: str, n_rb: int, prbs_seed: int = 0, dmrs: Optional[DmrsConfig] = None,
                  power_pattern: Optional[Tuple[float, ...]] = None) -> "TestModelSpec":
        if tm_id not in TEST_MODEL_MODULATION:
            raise ConfigurationError(f"Unknown test model {tm_id!r}; valid: {list(TEST_MODEL_MODULATION)}")
        if power_pattern is None:
            power_pattern = tm12_power_pattern(n_rb) if tm_id == "TM1.2" else (0.0,) * n_rb
        return cls(id=tm_id, modulation=TEST_MODEL_MODULATION[tm_id], power_pattern=tuple(power_pattern),
                   prbs_seed=int(prbs_seed), dmrs=dmrs or DmrsConfig())

    @property
    def order(self) -> int:
        return order_of(self.modulation)

    @property
    def required_tests(self) -> Tuple[str, ...]:
        return ("aclr",) if self.id.startswith("TM1") else ("evm",)


@dataclass(frozen=True)
class ResourceGrid:
    """
    symbols[l, j]: RE of OFDM symbol l and grid column j (column n_sc/2 is DC).
    role[l, j]: ROLE_DATA or ROLE_DMRS.
    reference: exact copy of the transmitted symbols, kept for EVM.
    """
    symbols: np.ndarray
    role: np.ndarray
    reference: np.ndarray
    modulation: str = "QPSK"
    symbols_per_slot: int = 14

    def __post_init__(self):
        if self.symbols.shape != self.role.shape or self.symbols.shape != self.reference.shape:
            raise InputError("Grid symbols, roles and reference must share one shape")
        for name in ("symbols", "role", "reference"):
            v = getattr(self, name).view()
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.symbols.shape[1]

    @property
    def n_slots(self) -> int:
        return self.n_symbols // self.symbols_per_slot

    @property
    def data_mask(self) -> np.ndarray:
        return self.role == ROLE_DATA

    @property
    def dmrs_mask(self) -> np.ndarray:
        return self.role == ROLE_DMRS

    def with_symbols(self, symbols: np.ndarray) -> "ResourceGrid":
        return ResourceGrid(symbols=np.asarray(symbols, dtype=np.complex128), role=self.role,
                            reference=self.reference, modulation=self.modulation,
                            symbols_per_slot=self.symbols_per_slot)


def dmrs_sequence(slot: int, symbol: int, n_values: int, dmrs: DmrsConfig, symbols_per_slot: int = 14) -> np.ndarray:
    c = gold_sequence(2 * n_values, dmrs_c_init(slot, symbol, dmrs.n_id, symbols_per_slot))
    return ((1 - 2 * c[0::2].astype(np.float64)) + 1j * (1 - 2 * c[1::2].astype(np.float64))) / np.sqrt(2)


def dmrs_layout(n_symbols: int, n_subcarriers: int, dmrs: DmrsConfig, symbols_per_slot: int = 14) -> np.ndarray:
    role = np.full((n_symbols, n_subcarriers), ROLE_DATA, dtype=np.uint8)
    rows = [l for l in range(n_symbols) if l % symbols_per_slot in dmrs.symbols]
    cols = np.arange(0, n_subcarriers, dmrs.stride)
    role[np.ix_(rows, cols)] = ROLE_DMRS
    return role


def build_test_model_grid(tm: TestModelSpec, num: Numerology, n_frames: int = 1,
                          n_slots: Optional[int] = None) -> ResourceGrid:
    """
    Fill a grid for n_frames radio frames (or exactly n_slots slots when given).
    Data REs carry PN23 payload through the modulation mapper; DMRS REs carry the seeded
    QPSK Gold sequence. The TM1.2 power pattern scales every RE of an RB.
    """
    if n_slots is None:
        if n_frames < 1:
            raise InputError("n_frames must be >= 1")
        n_slots = n_frames * num.slots_per_frame
    if n_slots < 1:
        raise InputError("n_slots must be >= 1")
    if len(tm.power_pattern) != num.n_rb:
        raise ConfigurationError(f"Power pattern has {len(tm.power_pattern)} entries, numerology has {num.n_rb} RBs")

    n_sym = n_slots * num.symbols_per_slot
    n_sc = num.n_subcarriers
    role = dmrs_layout(n_sym, n_sc, tm.dmrs, num.symbols_per_slot)

    grid = np.zeros((n_sym, n_sc), dtype=np.complex128)
    data = role == ROLE_DATA
    n_data = int(np.count_nonzero(data))
    q = bits_per_symbol(tm.order)
    grid[data] = qam_modulate(pn23(n_data * q, tm.prbs_seed), tm.order)

    dmrs_cols = np.arange(0, n_sc, tm.dmrs.stride)
    for l in range(n_sym):
        sym_in_slot = l % num.symbols_per_slot
        if sym_in_slot in tm.dmrs.symbols:
            grid[l, dmrs_cols] = dmrs_sequence(l // num.symbols_per_slot, sym_in_slot, len(dmrs_cols), tm.dmrs,
                                               num.symbols_per_slot)

    if any(p != 0 for p in tm.power_pattern):
        amp = np.repeat(10 ** (np.asarray(tm.power_pattern) / 20), 12)
        grid *= amp[None, :]

    log.debug("Built %s grid: %d slots, %d data REs, %s", tm.id, n_slots, n_data, tm.modulation)
    return ResourceGrid(symbols=grid, role=role, reference=grid.copy(), modulation=tm.modulation,
                        symbols_per_slot=num.symbols_per_slot)
