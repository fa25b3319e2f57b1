"""
Transmitter limits and pass/fail evaluation.

EVM has two tiers: the conformance-test limit (minimum requirement plus test tolerance)
and the minimum requirement itself. The minimum tier maps 8 % to 64QAM and 3.5 % to 256QAM.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from nr_fso_bench.common.bench_exception import ConfigurationError, IncompleteTestError
from nr_fso_bench.conformance.aclr import AclrResult
from nr_fso_bench.conformance.evm import EvmResult
from nr_fso_bench.waveform.test_models import TestModelSpec

TIER_CONFORMANCE = "conformance"
TIER_MINIMUM = "minimum"


@dataclass(frozen=True)
class Limits:
    aclr_min_db: float = 44.2
    evm_conformance_pct: Dict[str, float] = field(
        default_factory=lambda: {"QPSK": 18.5, "16QAM": 13.5, "64QAM": 9.0, "256QAM": 4.5})
    evm_minimum_pct: Dict[str, float] = field(
        default_factory=lambda: {"QPSK": 17.5, "16QAM": 12.5, "64QAM": 8.0, "256QAM": 3.5})

    def __post_init__(self):
        if not self.aclr_min_db > 0:
            raise ConfigurationError("ACLR limit must be > 0 dB")
        for mod, minimum in self.evm_minimum_pct.items():
            conf = self.evm_conformance_pct.get(mod)
            if conf is None or conf < minimum:
                raise ConfigurationError(f"{mod}: conformance EVM limit must exist and be >= the minimum requirement")

    @classmethod
    def from_dict(cls, d: Optional[Dict]) -> "Limits":
        if not d:
            return cls()
        base = cls()
        unknown = set(d) - {"aclr_min_db", "evm_conformance_pct", "evm_minimum_pct"}
        if unknown:
            raise ConfigurationError(f"Unknown limit keys {sorted(unknown)}")
        return cls(aclr_min_db=float(d.get("aclr_min_db", base.aclr_min_db)),
                   evm_conformance_pct={**base.evm_conformance_pct, **d.get("evm_conformance_pct", {})},
                   evm_minimum_pct={**base.evm_minimum_pct, **d.get("evm_minimum_pct", {})})


@dataclass(frozen=True)
class Verdict:
    test: str
    tier: str
    measured: float
    limit: float
    unit: str
    margin: float
    passed: bool


@dataclass(frozen=True)
class VerdictSet:
    verdicts: List[Verdict]
    required: List[str]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def by_test(self, test: str, tier: str = TIER_CONFORMANCE) -> Optional[Verdict]:
        return next((v for v in self.verdicts if v.test == test and v.tier == tier), None)


def _aclr_verdicts(aclr: AclrResult, limits: Limits) -> List[Verdict]:
    out = []
    for side, value in (("aclr_lower", aclr.aclr_lower_db), ("aclr_upper", aclr.aclr_upper_db)):
        margin = round(value - limits.aclr_min_db, 9)
        out.append(Verdict(test=side, tier=TIER_CONFORMANCE, measured=value, limit=limits.aclr_min_db, unit="dB",
                           margin=margin, passed=margin >= 0))
    return out


def _evm_verdicts(evm: EvmResult, modulation: str, limits: Limits) -> List[Verdict]:
    out = []
    for tier, table in ((TIER_CONFORMANCE, limits.evm_conformance_pct), (TIER_MINIMUM, limits.evm_minimum_pct)):
        if modulation not in table:
            raise ConfigurationError(f"No {tier} EVM limit for {modulation}")
        margin = round(table[modulation] - evm.evm_pct, 9)
        out.append(Verdict(test="evm", tier=tier, measured=evm.evm_pct, limit=table[modulation], unit="%",
                           margin=margin, passed=margin >= 0))
    return out


def evaluate_limits(aclr: Optional[AclrResult], evm: Optional[EvmResult], tm: TestModelSpec,
                    limits: Optional[Limits] = None) -> VerdictSet:
    """TM1.x require ACLR, TM3.x require EVM; any measurement present is evaluated."""
    limits = limits or Limits()
    required = list(tm.required_tests)
    present = {"aclr": aclr is not None, "evm": evm is not None}
    missing = [t for t in required if not present[t]]
    if missing:
        raise IncompleteTestError(f"{tm.id} requires {', '.join(missing)} but it was not measured")
    verdicts: List[Verdict] = []
    if aclr is not None:
        verdicts += _aclr_verdicts(aclr, limits)
    if evm is not None:
        verdicts += _evm_verdicts(evm, tm.modulation, limits)
    return VerdictSet(verdicts=verdicts, required=required)
