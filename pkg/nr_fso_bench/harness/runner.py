"""
Scenario execution: generate -> upconvert -> channel -> rx -> measure -> evaluate.

Every signal that the file-based CLI path would write to disk is rounded through float32
here too, so ``run`` and ``generate`` + ``channel`` + ``measure`` agree bit for bit.
"""
from __future__ import annotations

import logging
from concurrent.futures import FIRST_COMPLETED, Future, ProcessPoolExecutor, wait
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from nr_fso_bench.channel.chain import ChannelChain, run_chain
from nr_fso_bench.common.bench_exception import BenchException
from nr_fso_bench.common.graceful_interrupt_handler import GracefulInterruptHandler
from nr_fso_bench.conformance.aclr import AclrResult, aclr_segment_len, measure_aclr
from nr_fso_bench.conformance.evm import EvmResult, measure_evm
from nr_fso_bench.conformance.limits import evaluate_limits
from nr_fso_bench.conformance.psd import welch_psd
from nr_fso_bench.harness.report import ConformanceReport
from nr_fso_bench.harness.scenario import Scenario
from nr_fso_bench.rx.receiver import Receiver, RxResult
from nr_fso_bench.utils import csv_export
from nr_fso_bench.utils.grid_file import save_grids
from nr_fso_bench.utils.iq_file import write_iq
from nr_fso_bench.waveform.numerology import CarrierConfig, Numerology
from nr_fso_bench.waveform.ofdm import add_dc_leak, ofdm_modulate
from nr_fso_bench.waveform.passband import upconvert_to_passband
from nr_fso_bench.waveform.signal import SampledSignal
from nr_fso_bench.waveform.test_models import ResourceGrid, TestModelSpec, build_test_model_grid

log = logging.getLogger(__name__)

# bench-wide parameters without a published value
SCENARIO_FIDELITY = {
    "rx.costas_loop": "engineering",
    "tx.window_overlap": "engineering",
    "rx.fft_backoff": "engineering",
    "evm.reference": "engineering",
}


@contextmanager
def pipeline_stage(name: str, scenario_id: str):
    log.info("%s: %s", scenario_id, name)
    try:
        yield
    except BenchException as e:
        raise e.with_stage(name)
    log.debug("%s: %s done", scenario_id, name)


@dataclass(frozen=True)
class Transmission:
    num: Numerology
    carrier: CarrierConfig
    tm: TestModelSpec
    grid: ResourceGrid
    baseband: SampledSignal
    passband: SampledSignal

    @property
    def window_overlap(self) -> int:
        return int(self.baseband.meta.get("window_overlap", 0))


def generate(s: Scenario) -> Transmission:
    """Test-model grid, OFDM baseband and the float32-rounded passband waveform."""
    with pipeline_stage("generate", s.id):
        num = s.numerology()
        carrier = s.carrier(num)
        tm = s.test_model(num)
        grid = build_test_model_grid(tm, num, n_frames=s.n_frames, n_slots=s.n_slots)
        bb = add_dc_leak(ofdm_modulate(grid, num, s.window_overlap), s.carrier_leak_db).with_meta(test_model=tm.id)
    with pipeline_stage("upconvert", s.id):
        pb = upconvert_to_passband(bb, carrier).as_float32()
    return Transmission(num=num, carrier=carrier, tm=tm, grid=grid, baseband=bb, passband=pb)


def apply_channel(sig: SampledSignal, chain: ChannelChain, scenario_id: str = "") -> SampledSignal:
    with pipeline_stage("channel", scenario_id):
        return run_chain(sig, chain).as_float32()


def receive(sig: SampledSignal, tx: Transmission, s: Scenario) -> RxResult:
    with pipeline_stage("rx", s.id):
        rcv = Receiver(tx.num, tx.carrier, tx.grid, s.rx, window_overlap=tx.window_overlap)
        return rcv.receive(sig)


def write_artifacts(out_dir: Path, s: Scenario, tx: Transmission, rx_sig: SampledSignal,
                    rx: Optional[RxResult], evm: Optional[EvmResult]) -> Dict[str, str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    art: Dict[str, Path] = {}
    art["tx_iq"], _ = write_iq(out_dir / "tx.iq", tx.passband, seed=s.seed, description=f"{tx.tm.id} transmit")
    art["rx_iq"], _ = write_iq(out_dir / "rx.iq", rx_sig, seed=s.seed, description=f"{tx.tm.id} after channel")
    if len(rx_sig) >= aclr_segment_len(rx_sig.rate_hz):
        psd = welch_psd(rx_sig, segment_len=aclr_segment_len(rx_sig.rate_hz))
        art["psd"] = csv_export.write_psd_csv(out_dir / "psd.csv", psd)
    if rx is not None:
        art["constellation"] = csv_export.write_constellation_csv(out_dir / "constellation.csv", rx.equalized,
                                                                  rx.reference)
        art["channel_estimate"] = csv_export.write_estimate_csv(out_dir / "channel_estimate.csv", rx.estimate)
        art["grids"] = save_grids(out_dir / "grids.npz", rx.equalized, rx.reference, test_model=s.tm, seed=s.seed)
        if rx.costas_trace is not None:
            art["costas_trace"] = csv_export.write_trace_csv(out_dir / "costas_trace.csv", rx.costas_trace)
    if evm is not None:
        art["evm_subcarrier"] = csv_export.write_evm_csv(out_dir / "evm_subcarrier.csv", evm)
    return {k: v.name for k, v in art.items()}


def run_scenario(s: Scenario, out_dir: Optional[Union[str, Path]] = None,
                 write_report: bool = True) -> ConformanceReport:
    """
    Run one scenario end to end. With an output directory, IQ captures, CSV exports, the
    grid file and (unless write_report is False) the report are written there.
    """
    out_dir = Path(out_dir) if out_dir is not None else (Path(s.out_dir) if s.out_dir else None)
    tx = generate(s)
    chain = s.channel_chain(tx.carrier.occupied_bw_hz)
    rx_sig = apply_channel(tx.passband, chain, s.id)

    rx: Optional[RxResult] = None
    aclr: Optional[AclrResult] = None
    evm: Optional[EvmResult] = None
    if "evm" in s.measurements:
        rx = receive(rx_sig, tx, s)
    with pipeline_stage("measure", s.id):
        if "aclr" in s.measurements:
            aclr = measure_aclr(rx_sig, tx.carrier)
        if rx is not None:
            evm = measure_evm(rx.equalized, rx.reference, mode=s.evm_mode)
    with pipeline_stage("evaluate", s.id):
        verdicts = evaluate_limits(aclr, evm, tx.tm, s.limits)

    artifacts: Dict[str, str] = {}
    if out_dir is not None:
        artifacts = write_artifacts(out_dir, s, tx, rx_sig, rx, evm)

    costas = None
    if rx is not None and rx.costas_trace is not None:
        t = rx.costas_trace
        costas = {"locked": t.locked, "coarse_offset_hz": t.coarse_offset_hz, "error_variance": t.error_variance,
                  "loop_rate_hz": t.loop_rate_hz}
    report = ConformanceReport.build(
        s.id, s.to_dict(), tx.tm, s.seed, verdicts, aclr=aclr, evm=evm,
        carrier_path=rx.carrier_path if rx is not None else None,
        sync={"start": rx.sync.start, "cfo_hz": rx.sync.cfo_hz, "metric": rx.sync.metric,
              "frac_timing": rx.sync.frac_timing, "coarse_symbol_start": rx.sync.coarse_symbol_start,
              "bounded": rx.sync.bounded} if rx is not None else None,
        costas=costas,
        stage_powers=list(rx_sig.meta.get("stage_powers", [])),
        fidelity={**SCENARIO_FIDELITY, **chain.fidelity()},
        artifacts=artifacts)
    log.info("%s: %s", s.id, "PASS" if report.passed else "FAIL")
    if out_dir is not None and write_report:
        report.write(out_dir)
    return report


def derive_seeds(master_seed: int, n: int) -> List[int]:
    """Independent per-run seeds spawned from one master seed."""
    return [int(ss.generate_state(1)[0]) for ss in np.random.SeedSequence(master_seed).spawn(n)]


def _run_in_worker(s: Scenario, out_dir: Optional[str]) -> ConformanceReport:
    return run_scenario(s, out_dir=out_dir, write_report=False)


def run_matrix(scenarios: Sequence[Scenario], out_dir: Optional[Union[str, Path]] = None, jobs: int = 1,
               master_seed: Optional[int] = None) -> List[ConformanceReport]:
    """
    Run independent scenarios, in parallel when jobs > 1. Each run writes its artifacts to
    out_dir/<scenario id>; reports are written by this process as runs complete. The first
    interrupt cancels scenarios that have not started.
    """
    scenarios = list(scenarios)
    if master_seed is not None:
        scenarios = [s.with_seed(seed) for s, seed in zip(scenarios, derive_seeds(master_seed, len(scenarios)))]
    ids = [s.id for s in scenarios]
    if len(set(ids)) != len(ids):
        scenarios = [s if s.name else _named(s, i) for i, s in enumerate(scenarios)]
    dirs = [str(Path(out_dir) / s.id) if out_dir is not None else None for s in scenarios]

    results: Dict[int, ConformanceReport] = {}

    def _collect(i: int, report: ConformanceReport):
        results[i] = report
        if dirs[i] is not None:
            report.write(dirs[i])

    with GracefulInterruptHandler() as h:
        if jobs <= 1:
            for i, (s, d) in enumerate(zip(scenarios, dirs)):
                if h.interrupted:
                    log.warning("Interrupted; skipping %d remaining scenarios", len(scenarios) - i)
                    break
                _collect(i, _run_in_worker(s, d))
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                pending: Dict[Future, int] = {pool.submit(_run_in_worker, s, d): i
                                              for i, (s, d) in enumerate(zip(scenarios, dirs))}
                while pending:
                    done, _ = wait(pending, timeout=0.5, return_when=FIRST_COMPLETED)
                    for fut in done:
                        _collect(pending.pop(fut), fut.result())
                    if h.interrupted:
                        cancelled = [f for f in pending if f.cancel()]
                        for f in cancelled:
                            pending.pop(f)
                        if cancelled:
                            log.warning("Interrupted; cancelled %d pending scenarios", len(cancelled))
    return [results[i] for i in sorted(results)]


def _named(s: Scenario, i: int) -> Scenario:
    return replace(s, name=f"{s.id}-{i}")
