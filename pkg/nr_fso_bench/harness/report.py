"""
Conformance report: JSON document plus a plain-text summary rendered from it.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from nr_fso_bench import __version__
from nr_fso_bench.common.bench_exception import FormatError
from nr_fso_bench.conformance.aclr import AclrResult
from nr_fso_bench.conformance.evm import EvmResult
from nr_fso_bench.conformance.limits import Verdict, VerdictSet
from nr_fso_bench.utils.serialization import deep_to_dict, dumps

log = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.txt"


def evm_summary(evm: EvmResult) -> Dict[str, Any]:
    """Scalar part of an EVM result; the per-subcarrier vector goes to CSV."""
    return {"evm_pct": evm.evm_pct, "per_modulation_pct": dict(evm.per_modulation_pct), "n_symbols": evm.n_symbols,
            "mode": evm.mode, "dc_subcarrier_pct": evm.dc_subcarrier_pct,
            "median_subcarrier_pct": evm.median_subcarrier_pct}


def aclr_summary(aclr: AclrResult) -> Dict[str, Any]:
    d = deep_to_dict(aclr)
    d["worst_db"] = aclr.worst_db
    return d


@dataclass
class ConformanceReport:
    scenario_id: str
    scenario: Dict[str, Any]
    test_model: str
    modulation: str
    seed: int
    verdicts: List[Verdict]
    required: List[str]
    carrier_path: Optional[str] = None
    aclr: Optional[Dict[str, Any]] = None
    evm: Optional[Dict[str, Any]] = None
    sync: Optional[Dict[str, Any]] = None
    costas: Optional[Dict[str, Any]] = None
    stage_powers: List[Dict[str, Any]] = field(default_factory=list)
    fidelity: Dict[str, str] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @classmethod
    def build(cls, scenario_id: str, scenario: Dict[str, Any], tm, seed: int, verdicts: VerdictSet,
              aclr: Optional[AclrResult] = None, evm: Optional[EvmResult] = None, **kwargs) -> "ConformanceReport":
        return cls(scenario_id=scenario_id, scenario=scenario, test_model=tm.id, modulation=tm.modulation, seed=seed,
                   verdicts=list(verdicts.verdicts), required=list(verdicts.required),
                   aclr=aclr_summary(aclr) if aclr is not None else None,
                   evm=evm_summary(evm) if evm is not None else None, **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        d = {
            "scenario_id": self.scenario_id,
            "scenario": self.scenario,
            "test_model": self.test_model,
            "modulation": self.modulation,
            "seed": self.seed,
            "version": self.version,
            "passed": self.passed,
            "required": self.required,
            "verdicts": [deep_to_dict(v) for v in self.verdicts],
            "carrier_path": self.carrier_path,
            "aclr": self.aclr,
            "evm": self.evm,
            "sync": self.sync,
            "costas": self.costas,
            "stage_powers": self.stage_powers,
            "fidelity": self.fidelity,
            "artifacts": self.artifacts,
        }
        return deep_to_dict(d)

    def write(self, out_dir: Union[str, Path]) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = self.to_dict()
        path = out_dir / REPORT_FILE
        path.write_text(dumps(doc) + "\n")
        (out_dir / SUMMARY_FILE).write_text(render_summary(doc))
        log.info("Report for %s written to %s", self.scenario_id, path)
        return path


def load_report(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise FormatError(f"Cannot read report {path}: {e}")
    except json.JSONDecodeError as e:
        raise FormatError(f"Report {path} is not valid JSON: {e}")
    if not isinstance(doc, dict) or "verdicts" not in doc:
        raise FormatError(f"{path} is not a conformance report")
    return doc


def report_passed(doc: Dict[str, Any]) -> bool:
    return all(v.get("passed") for v in doc.get("verdicts", []))


def _fmt(x, spec: str = ".2f") -> str:
    return "n/a" if x is None else format(x, spec)


def render_summary(doc: Dict[str, Any]) -> str:
    """Plain-text summary of a report dict (as produced by ConformanceReport.to_dict or load_report)."""
    lines = [f"Scenario   : {doc.get('scenario_id', '?')}",
             f"Test model : {doc.get('test_model', '?')} ({doc.get('modulation', '?')})",
             f"Seed       : {doc.get('seed', '?')}",
             f"Version    : {doc.get('version', '?')}"]
    if doc.get("carrier_path"):
        lines.append(f"Carrier    : {doc['carrier_path']}")
    aclr = doc.get("aclr")
    if aclr:
        cap = " (capped)" if aclr.get("capped_lower") or aclr.get("capped_upper") else ""
        lines.append(f"ACLR       : lower {_fmt(aclr.get('aclr_lower_db'))} dB, "
                     f"upper {_fmt(aclr.get('aclr_upper_db'))} dB{cap}")
    evm = doc.get("evm")
    if evm:
        lines.append(f"EVM        : {_fmt(evm.get('evm_pct'), '.3f')} % over {evm.get('n_symbols', 0)} REs "
                     f"({evm.get('mode', '?')}); DC subcarrier {_fmt(evm.get('dc_subcarrier_pct'), '.3f')} %")
    lines.append("")
    lines.append(f"{'test':<12}{'tier':<13}{'measured':>12}{'limit':>10}{'margin':>10}  verdict")
    for v in doc.get("verdicts", []):
        measured = f"{_fmt(v['measured'], '.3f')} {v['unit']}"
        lines.append(f"{v['test']:<12}{v['tier']:<13}{measured:>12}"
                     f"{_fmt(v['limit'], '.2f'):>10}{_fmt(v['margin'], '+.3f'):>10}  "
                     f"{'PASS' if v['passed'] else 'FAIL'}")
    stages = doc.get("stage_powers") or []
    if stages:
        lines.append("")
        lines.append("Stage powers:")
        for st in stages:
            lines.append(f"  {st.get('stage', '?'):<28}{_fmt(st.get('power_db'), '8.2f')} dB")
    synthetic = sorted(k for k, v in (doc.get("fidelity") or {}).items() if v == "synthetic")
    if synthetic:
        lines.append("")
        lines.append(f"Synthetic parameters: {', '.join(synthetic)}")
    lines.append("")
    lines.append(f"Overall: {'PASS' if report_passed(doc) else 'FAIL'}")
    return "\n".join(lines) + "\n"
