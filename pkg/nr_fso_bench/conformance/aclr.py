"""
Adjacent channel leakage ratio from a Welch PSD.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from nr_fso_bench.common.bench_exception import MeasurementError
from nr_fso_bench.conformance.psd import PsdEstimate, welch_psd
from nr_fso_bench.waveform.numerology import CarrierConfig
from nr_fso_bench.waveform.signal import SampledSignal

log = logging.getLogger(__name__)

ACLR_CAP_DB = 80.0
CHANNEL_SPACING_HZ = 20e6
MAX_RBW_HZ = 100e3


def aclr_segment_len(rate_hz: float, max_rbw_hz: float = MAX_RBW_HZ) -> int:
    return 1 << int(math.ceil(math.log2(rate_hz / max_rbw_hz)))


@dataclass(frozen=True)
class AclrResult:
    assigned_power: float
    lower_power: float
    upper_power: float
    aclr_lower_db: float
    aclr_upper_db: float
    capped_lower: bool
    capped_upper: bool
    cap_db: float
    integration_bw_hz: float
    channel_spacing_hz: float
    rbw_hz: float

    @property
    def worst_db(self) -> float:
        return min(self.aclr_lower_db, self.aclr_upper_db)


def _ratio_db(assigned: float, adjacent: float, cap_db: float):
    if adjacent <= 0 or 10 * math.log10(assigned / adjacent) >= cap_db:
        return cap_db, True
    return 10 * math.log10(assigned / adjacent), False


def aclr_from_psd(psd: PsdEstimate, center_hz: float, channel_spacing_hz: float = CHANNEL_SPACING_HZ,
                  integration_bw_hz: float = 18.36e6, cap_db: float = ACLR_CAP_DB) -> AclrResult:
    half = integration_bw_hz / 2
    assigned = psd.band_power(center_hz - half, center_hz + half)
    lower = psd.band_power(center_hz - channel_spacing_hz - half, center_hz - channel_spacing_hz + half)
    upper = psd.band_power(center_hz + channel_spacing_hz - half, center_hz + channel_spacing_hz + half)
    if not assigned > 0:
        raise MeasurementError("No power in the assigned channel")
    lo_db, lo_cap = _ratio_db(assigned, lower, cap_db)
    up_db, up_cap = _ratio_db(assigned, upper, cap_db)
    return AclrResult(assigned_power=assigned, lower_power=lower, upper_power=upper, aclr_lower_db=lo_db,
                      aclr_upper_db=up_db, capped_lower=lo_cap, capped_upper=up_cap, cap_db=cap_db,
                      integration_bw_hz=integration_bw_hz, channel_spacing_hz=channel_spacing_hz,
                      rbw_hz=psd.rbw_hz)


def measure_aclr(sig: SampledSignal, carrier: CarrierConfig, channel_spacing_hz: float = CHANNEL_SPACING_HZ,
                 segment_len: Optional[int] = None, cap_db: float = ACLR_CAP_DB) -> AclrResult:
    """
    Assigned channel: carrier +- occupied/2 (real passband) or DC +- occupied/2 (complex
    baseband). Adjacent channels: the same width centred channel_spacing_hz away.
    """
    center = carrier.carrier_hz if sig.is_real else 0.0
    half = carrier.occupied_bw_hz / 2
    reach = channel_spacing_hz + half
    lo_edge = 0.0 if sig.is_real else -sig.rate_hz / 2
    if center - reach < lo_edge or center + reach > sig.rate_hz / 2:
        raise MeasurementError(f"Signal at {sig.rate_hz / 1e6:g} MS/s does not span both adjacent channels "
                               f"around {center / 1e6:g} MHz")
    seg = segment_len or aclr_segment_len(sig.rate_hz)
    if sig.rate_hz / seg > MAX_RBW_HZ:
        raise MeasurementError(f"PSD resolution {sig.rate_hz / seg / 1e3:g} kHz is coarser than "
                               f"{MAX_RBW_HZ / 1e3:g} kHz")
    if len(sig) < seg:
        raise MeasurementError(f"ACLR needs at least {seg} samples, capture holds {len(sig)}")
    result = aclr_from_psd(welch_psd(sig, segment_len=seg), center, channel_spacing_hz, carrier.occupied_bw_hz,
                           cap_db)
    log.debug("ACLR lower %.2f dB upper %.2f dB (rbw %.1f kHz)", result.aclr_lower_db, result.aclr_upper_db,
              result.rbw_hz / 1e3)
    return result
