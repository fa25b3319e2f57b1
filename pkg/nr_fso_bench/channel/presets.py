"""
Shipping channel presets.

- ideal: no impairments.
- paper-fso: 10-bit AWG -> directly modulated laser -> FSO path -> detector (720 MHz) ->
  receiver noise -> 30 dB / 6 dB NF amplifier -> 8-bit scope.
- paper-fso-wireless: paper-fso plus a wireless hop (path loss, 622 MHz band-pass,
  second 30 dB / 6 dB NF amplifier) ahead of the scope.
- paper-fso-highrate: paper-fso with the scope resampled to 10 GS/s.

The receiver-noise SNR is a tuned free parameter; it is counted in the occupied bandwidth.
"""
from __future__ import annotations

from typing import Callable, Dict, List, Optional

from nr_fso_bench.common.bench_exception import ConfigurationError
from nr_fso_bench.channel.chain import (AmplifierStage, AwgnStage, ChannelChain, DetectorStage, FirStage, FsoStage,
                                        GainStage, LaserStage, NormalizeStage, QuantizerStage, ResampleStage, Stage)

AWG_BITS = 10
AWG_LOADING_DB = 13.0
SCOPE_BITS = 8
SCOPE_LOADING_DB = 12.0
SCOPE_HIGHRATE_HZ = 10e9
# drive scale giving occasional excursions below threshold
LASER_MOD_GAIN_MA = 30.0
RX_SNR_DB = 48.0
OCCUPIED_BW_HZ = 18.36e6
WIRELESS_PATH_LOSS_DB = 60.0
WIRELESS_BPF_CENTER_HZ = 622e6
WIRELESS_BPF_WIDTH_HZ = 40e6


def _link_stages(snr_db: float, occupied_bw_hz: float, response_file: Optional[str],
                 laser_mod_gain: float) -> List[Stage]:
    return [
        NormalizeStage(name="awg_level", target_rms=1.0),
        QuantizerStage(name="awg", bits=AWG_BITS, loading_db=AWG_LOADING_DB),
        LaserStage(name="qcl", mod_gain_ma_per_unit=laser_mod_gain),
        FsoStage(name="fso", attenuation_db=0.0),
        DetectorStage(name="mct", response_file=response_file),
        AwgnStage(name="rx_noise", snr_db=snr_db, reference_bw_hz=occupied_bw_hz),
        AmplifierStage(name="amp", gain_db=30.0, noise_figure_db=6.0),
    ]


def _scope() -> Stage:
    return QuantizerStage(name="dso", bits=SCOPE_BITS, loading_db=SCOPE_LOADING_DB)


def _ideal(**_) -> List[Stage]:
    return []


def _paper_fso(snr_db, occupied_bw_hz, response_file, laser_mod_gain) -> List[Stage]:
    return _link_stages(snr_db, occupied_bw_hz, response_file, laser_mod_gain) + [_scope()]


def _paper_fso_wireless(snr_db, occupied_bw_hz, response_file, laser_mod_gain) -> List[Stage]:
    return _link_stages(snr_db, occupied_bw_hz, response_file, laser_mod_gain) + [
        GainStage(name="path_loss", gain_db=-WIRELESS_PATH_LOSS_DB),
        FirStage(name="bpf", band_pass={"center_hz": WIRELESS_BPF_CENTER_HZ, "width_hz": WIRELESS_BPF_WIDTH_HZ}),
        AmplifierStage(name="ea", gain_db=30.0, noise_figure_db=6.0),
        _scope(),
    ]


def _paper_fso_highrate(snr_db, occupied_bw_hz, response_file, laser_mod_gain) -> List[Stage]:
    return _link_stages(snr_db, occupied_bw_hz, response_file, laser_mod_gain) + [
        ResampleStage(name="dso_rate", to_rate_hz=SCOPE_HIGHRATE_HZ), _scope()]


PRESETS: Dict[str, Callable[..., List[Stage]]] = {
    "ideal": _ideal,
    "paper-fso": _paper_fso,
    "paper-fso-wireless": _paper_fso_wireless,
    "paper-fso-highrate": _paper_fso_highrate,
}


def build_preset(name: str, seed: int = 0, snr_db: Optional[float] = None,
                 occupied_bw_hz: float = OCCUPIED_BW_HZ, response_file: Optional[str] = None,
                 laser_mod_gain: Optional[float] = None) -> ChannelChain:
    if name not in PRESETS:
        raise ConfigurationError(f"Unknown preset {name!r}; valid: {sorted(PRESETS)}")
    stages = PRESETS[name](snr_db=RX_SNR_DB if snr_db is None else snr_db, occupied_bw_hz=occupied_bw_hz,
                           response_file=response_file,
                           laser_mod_gain=LASER_MOD_GAIN_MA if laser_mod_gain is None else laser_mod_gain)
    return ChannelChain(stages=tuple(stages), seed=seed, name=name)
