#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 NR FSO Bench contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
"""Command-line front end of the bench.

Subcommands:
  generate  test-model waveform -> passband IQ capture (+ scenario.json)
  channel   IQ capture -> channel preset / chain -> IQ capture
  receive   IQ capture -> carrier recovery, sync, demodulation, equalization -> grids.npz
  measure   ACLR on an IQ capture and/or EVM on a grid file -> report
  report    re-render a report.json
  run       full scenario (several --tm values run as a matrix)

Exit codes: 0 all verdicts pass, 1 a verdict fails, 2 execution or usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from nr_fso_bench import __version__
from nr_fso_bench.channel.presets import OCCUPIED_BW_HZ, PRESETS
from nr_fso_bench.common.bench_exception import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, BenchException, \
    ConfigurationError, UsageError
from nr_fso_bench.common.config import DEFAULT_CONFIG_PATH
from nr_fso_bench.common.globals import TRACE, init_globals
from nr_fso_bench.conformance.evm import EVM_DECISION, EVM_REFERENCE, measure_evm
from nr_fso_bench.conformance.aclr import measure_aclr
from nr_fso_bench.conformance.limits import evaluate_limits
from nr_fso_bench.harness import runner
from nr_fso_bench.harness.report import ConformanceReport, load_report, render_summary, report_passed
from nr_fso_bench.harness.scenario import Scenario
from nr_fso_bench.rx.receiver import CARRIER_RECOVERY_MODES
from nr_fso_bench.utils import csv_export
from nr_fso_bench.utils.grid_file import load_grid_info, load_grids, save_grids
from nr_fso_bench.utils.iq_file import read_iq, write_iq
from nr_fso_bench.utils.serialization import dumps
from nr_fso_bench.waveform.numerology import CarrierConfig, make_numerology
from nr_fso_bench.waveform.test_models import TEST_MODEL_MODULATION, TestModelSpec

log = logging.getLogger("nr_fso_bench.cli")

SCENARIO_FILE = "scenario.json"

# argparse dest -> scenario key
_SCENARIO_FLAGS = {
    "carrier_hz": "carrier_hz", "passband_rate_hz": "passband_rate_hz", "n_slots": "n_slots",
    "n_frames": "n_frames", "window_overlap": "window_overlap", "carrier_leak_db": "carrier_leak_db",
    "seed": "seed", "snr_db": "snr_db", "response_file": "response_file", "laser_mod_gain": "laser_mod_gain",
    "evm_mode": "evm_mode",
}

# scenario fields a capture carries from generate through channel to receive
CAPTURE_KEYS = ("tm", "seed", "scs_hz", "bandwidth_hz", "carrier_hz", "passband_rate_hz", "n_frames", "n_slots",
                "window_overlap", "carrier_leak_db")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=DEFAULT_CONFIG_PATH, help="bench configuration YAML")
    p.add_argument("--seed", type=int, help="master seed (default: from configuration)")
    p.add_argument("--out", help="output directory (default: runtime.output-directory)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="console logging: -v INFO, -vv DEBUG, "
                                                                      "-vvv TRACE")


def _waveform(p: argparse.ArgumentParser, multi_tm: bool = False):
    p.add_argument("--scenario", help="scenario JSON file; flags override its fields")
    if multi_tm:
        p.add_argument("--tm", action="append", choices=list(TEST_MODEL_MODULATION),
                       help="test model; repeat to run a matrix")
    else:
        p.add_argument("--tm", choices=list(TEST_MODEL_MODULATION), help="test model")
    p.add_argument("--scs-khz", type=float, help="subcarrier spacing in kHz")
    p.add_argument("--bw-mhz", type=float, help="channel bandwidth in MHz")
    p.add_argument("--carrier-hz", type=float)
    p.add_argument("--passband-rate-hz", type=float)
    p.add_argument("--n-frames", type=int)
    p.add_argument("--n-slots", type=int, help="generate exactly this many slots instead of whole frames")
    p.add_argument("--window-overlap", type=int, help="transmit raised-cosine overlap in samples")
    p.add_argument("--carrier-leak-db", type=float, help="residual carrier relative to signal power")


def _link(p: argparse.ArgumentParser):
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--chain", help="channel chain JSON file (instead of --preset)")
    p.add_argument("--snr-db", type=float, help="receiver-noise SNR in the occupied bandwidth")
    p.add_argument("--response-file", help="detector frequency response CSV, or 'synthetic'")
    p.add_argument("--laser-mod-gain", type=float, help="laser drive scale in mA per unit amplitude")


def _rx(p: argparse.ArgumentParser):
    p.add_argument("--carrier-recovery", choices=list(CARRIER_RECOVERY_MODES))
    p.add_argument("--evm-mode", choices=[EVM_REFERENCE, EVM_DECISION])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nr_fso_bench", description="NR FR1 conformance bench over an analog radio-over-FSO link")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a test-model passband capture")
    _common(p)
    _waveform(p)

    p = sub.add_parser("channel", help="pass a capture through a channel preset or chain")
    _common(p)
    _link(p)
    p.add_argument("--in", dest="input", required=True, help="input IQ file")
    p.add_argument("--meta", help="input sidecar (default: <input>.json)")

    p = sub.add_parser("receive", help="demodulate and equalize a capture")
    _common(p)
    _waveform(p)
    _rx(p)
    p.add_argument("--in", dest="input", required=True, help="input IQ file")
    p.add_argument("--meta", help="input sidecar (default: <input>.json)")

    p = sub.add_parser("measure", help="ACLR on a capture and/or EVM on a grid file")
    _common(p)
    p.add_argument("--aclr", action="store_true", help="measure ACLR on --in")
    p.add_argument("--evm", action="store_true", help="measure EVM on --grids")
    p.add_argument("--in", dest="input", help="input IQ file")
    p.add_argument("--meta", help="input sidecar (default: <input>.json)")
    p.add_argument("--grids", help="grid file written by 'receive'")
    p.add_argument("--tm", choices=list(TEST_MODEL_MODULATION), help="test model the limits apply to")
    p.add_argument("--carrier-hz", type=float, help="carrier of the capture (default: from the sidecar)")
    p.add_argument("--occupied-bw-hz", type=float, default=OCCUPIED_BW_HZ)
    p.add_argument("--evm-mode", choices=[EVM_REFERENCE, EVM_DECISION], default=EVM_REFERENCE)

    p = sub.add_parser("report", help="print the summary of a report")
    p.add_argument("--in", dest="input", required=True, help="report.json or a directory holding it")

    p = sub.add_parser("run", help="run a full scenario")
    _common(p)
    _waveform(p, multi_tm=True)
    _link(p)
    _rx(p)
    p.add_argument("--jobs", type=int, help="worker processes for a matrix (default: runtime.jobs)")
    return parser


def _load_json(path: str, what: str) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigurationError(f"Cannot read {what} {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{what} {path} is not valid JSON: {e}")


def capture_fields(s: Scenario) -> Dict[str, Any]:
    return {k: getattr(s, k) for k in CAPTURE_KEYS if getattr(s, k) is not None}


def capture_of(meta: Dict[str, Any]) -> Dict[str, Any]:
    """Scenario fields recorded in a capture sidecar; older captures only carry test_model and seed."""
    d = dict(meta.get("scenario") or {})
    if "tm" not in d and meta.get("test_model"):
        d["tm"] = meta["test_model"]
    if "seed" not in d and meta.get("seed") is not None:
        d["seed"] = int(meta["seed"])
    return d


def scenario_from_args(args: argparse.Namespace, defaults, tm: Optional[str] = None,
                       capture: Optional[Dict[str, Any]] = None) -> Scenario:
    """
    Precedence: configuration defaults < fields recorded in a capture sidecar < scenario file
    < command-line flags.
    """
    d: Dict[str, Any] = {k: v for k, v in (capture or {}).items() if k in CAPTURE_KEYS}
    if getattr(args, "scenario", None):
        d.update(_load_json(args.scenario, "scenario file"))
    if tm is not None:
        d["tm"] = tm
    elif isinstance(getattr(args, "tm", None), str):
        d["tm"] = args.tm
    if getattr(args, "scs_khz", None) is not None:
        d["scs_hz"] = args.scs_khz * 1e3
    if getattr(args, "bw_mhz", None) is not None:
        d["bandwidth_hz"] = args.bw_mhz * 1e6
    for dest, key in _SCENARIO_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            d[key] = value
    if getattr(args, "chain", None):
        d["chain"] = _load_json(args.chain, "chain file")
        d["preset"] = None
    elif getattr(args, "preset", None):
        d["preset"] = args.preset
        d["chain"] = None
    if getattr(args, "carrier_recovery", None):
        d["rx"] = {**(d.get("rx") or {}), "carrier_recovery": args.carrier_recovery}
    return Scenario.from_dict(d, defaults=defaults)


def _out_dir(args, cfg) -> Path:
    return Path(args.out) if getattr(args, "out", None) else Path(cfg.runtime.output_directory)


def cmd_generate(args, cfg) -> int:
    s = scenario_from_args(args, cfg.defaults)
    out = _out_dir(args, cfg)
    tx = runner.generate(s)
    sig = tx.passband.with_meta(occupied_bw_hz=tx.carrier.occupied_bw_hz, scenario=capture_fields(s))
    path, meta = write_iq(out / "tx.iq", sig, seed=s.seed, description=f"{s.tm} transmit")
    (out / SCENARIO_FILE).write_text(dumps(s.to_dict()) + "\n")
    print(f"Wrote {path} ({len(sig)} samples at {sig.rate_hz / 1e6:g} MS/s) and {meta}")
    return EXIT_PASS


def cmd_channel(args, cfg) -> int:
    sig = read_iq(args.input, args.meta)
    s = scenario_from_args(args, cfg.defaults, capture=capture_of(sig.meta))
    chain = s.channel_chain(sig.meta.get("occupied_bw_hz"))
    out = runner.apply_channel(sig, chain, s.id)
    path, _ = write_iq(_out_dir(args, cfg) / "rx.iq", out, seed=s.seed, description=f"after {chain.name}")
    print(f"Wrote {path} after {len(chain.stages)} stages of {chain.name}")
    return EXIT_PASS


def cmd_receive(args, cfg) -> int:
    sig = read_iq(args.input, args.meta)
    s = scenario_from_args(args, cfg.defaults, capture=capture_of(sig.meta))
    tx = runner.generate(s)
    rx = runner.receive(sig, tx, s)
    out = _out_dir(args, cfg)
    save_grids(out / "grids.npz", rx.equalized, rx.reference, test_model=s.tm, seed=s.seed)
    csv_export.write_constellation_csv(out / "constellation.csv", rx.equalized, rx.reference)
    csv_export.write_estimate_csv(out / "channel_estimate.csv", rx.estimate)
    if rx.costas_trace is not None:
        csv_export.write_trace_csv(out / "costas_trace.csv", rx.costas_trace)
    print(f"Received {rx.received.n_slots} slots via {rx.carrier_path}; grids in {out / 'grids.npz'}")
    return EXIT_PASS


def cmd_measure(args, cfg) -> int:
    if not (args.aclr or args.evm):
        raise UsageError("measure needs --aclr and/or --evm")
    if args.aclr and not args.input:
        raise UsageError("--aclr needs --in")
    if args.evm and not args.grids:
        raise UsageError("--evm needs --grids")
    meta: Dict[str, Any] = {}
    aclr = evm = None
    if args.aclr:
        sig = read_iq(args.input, args.meta)
        meta = sig.meta
        carrier_hz = args.carrier_hz or meta.get("carrier_hz") or cfg.defaults.carrier_hz
        rate = sig.rate_hz if sig.is_real else cfg.defaults.passband_rate_hz
        carrier = CarrierConfig(carrier_hz=carrier_hz, passband_rate_hz=rate, occupied_bw_hz=args.occupied_bw_hz)
        aclr = measure_aclr(sig, carrier)
    if args.evm:
        eq, ref = load_grids(args.grids)
        meta = {**load_grid_info(args.grids), **meta}
        evm = measure_evm(eq, ref, mode=args.evm_mode)
    recorded = capture_of(meta)
    tm_id = args.tm or recorded.get("tm") or ("TM1.1" if not args.evm else cfg.defaults.test_model)
    tm = TestModelSpec.for_model(tm_id, make_numerology(cfg.defaults.scs_hz, cfg.defaults.bandwidth_hz).n_rb)
    verdicts = evaluate_limits(aclr, evm, tm)
    seed = args.seed if args.seed is not None else int(recorded.get("seed", 0))
    report = ConformanceReport.build(Path(args.input or args.grids).stem, {"input": args.input, "grids": args.grids},
                                     tm, seed, verdicts, aclr=aclr, evm=evm,
                                     stage_powers=list(meta.get("stage_powers", [])))
    if args.out:
        if evm is not None:
            csv_export.write_evm_csv(Path(args.out) / "evm_subcarrier.csv", evm)
        report.write(args.out)
    print(render_summary(report.to_dict()), end="")
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_report(args, cfg) -> int:
    doc = load_report(args.input)
    print(render_summary(doc), end="")
    return EXIT_PASS if report_passed(doc) else EXIT_FAIL


def cmd_run(args, cfg) -> int:
    tms: List[Optional[str]] = args.tm or [None]
    scenarios = [scenario_from_args(args, cfg.defaults, tm=tm) for tm in tms]
    out = _out_dir(args, cfg)
    if len(scenarios) == 1:
        reports = [runner.run_scenario(scenarios[0], out_dir=out)]
    else:
        reports = runner.run_matrix(scenarios, out_dir=out, jobs=args.jobs or cfg.runtime.jobs,
                                    master_seed=scenarios[0].seed)
    for r in reports:
        print(render_summary(r.to_dict()))
    if len(reports) < len(scenarios):
        log.warning("%d of %d scenarios did not run", len(scenarios) - len(reports), len(scenarios))
        return EXIT_ERROR
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


COMMANDS = {"generate": cmd_generate, "channel": cmd_channel, "receive": cmd_receive, "measure": cmd_measure,
            "report": cmd_report, "run": cmd_run}


def _console_level(verbose: int) -> int:
    return {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}.get(verbose, TRACE)


def cli(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.get_exit_code()
    except SystemExit as e:
        # --help / --version
        return int(e.code or 0)

    try:
        cfg = None
        if args.command != "report":
            cfg = init_globals(args.config, console_level=_console_level(args.verbose)).config
        return COMMANDS[args.command](args, cfg)
    except BenchException as e:
        log.exception("%s failed", args.command)
        print(f"error: {e}", file=sys.stderr)
        return e.get_exit_code()
    except Exception as e:
        log.exception("%s failed", args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
