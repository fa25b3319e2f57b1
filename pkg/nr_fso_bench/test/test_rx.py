import math
import unittest

import numpy as np
import pytest

from nr_fso_bench.common.bench_exception import ConfigurationError, EqualizationError, InputError, NoLockError, \
    SyncError, TruncationError
from nr_fso_bench.rx.costas import CostasConfig, coarse_frequency, costas_downconvert, costas_track
from nr_fso_bench.rx.demodulator import ReceivedGrid, ofdm_demodulate, whole_slots_available
from nr_fso_bench.rx.equalizer import estimate_channel_ls, zf_equalize
from nr_fso_bench.rx.receiver import PATH_BASEBAND, PATH_NOMINAL, Receiver, RxConfig
from nr_fso_bench.channel.impairments import add_awgn
from nr_fso_bench.rx.sync import SyncResult, correct_cfo, symbol_grid_mask, time_synchronize
from nr_fso_bench.waveform.numerology import CarrierConfig, make_numerology
from nr_fso_bench.waveform.ofdm import dmrs_time_reference, ofdm_modulate
from nr_fso_bench.waveform.passband import upconvert_to_passband
from nr_fso_bench.waveform.signal import SampledSignal
from nr_fso_bench.waveform.test_models import ROLE_DATA, TestModelSpec, build_test_model_grid

NUM = make_numerology(30e3, 20e6)
LOOP_RATE = 1.92e6


def _grid(tm_id="TM1.1", n_slots=2, seed=0):
    return build_test_model_grid(TestModelSpec.for_model(tm_id, NUM.n_rb, prbs_seed=seed), NUM, n_slots=n_slots)


def _tone(freq_hz, phase_rad, duration_s, rate=LOOP_RATE):
    n = np.arange(int(duration_s * rate))
    return SampledSignal.complex(np.exp(1j * (2 * np.pi * freq_hz * n / rate + phase_rad)), rate)


def _evm(eq, ref, mask=None):
    data = ref.role[:eq.shape[0]] == ROLE_DATA
    if mask is not None:
        data &= mask
    r = ref.reference[:eq.shape[0]][data]
    return 100 * math.sqrt(np.mean(np.abs(eq[data] - r) ** 2) / np.mean(np.abs(r) ** 2))


class TestCostas(unittest.TestCase):
    def test_frequency_offset(self):
        cfg = CostasConfig(output_rate_hz=LOOP_RATE)
        out, trace = costas_track(_tone(1e3, 0.0, 20e-3), cfg)
        self.assertTrue(trace.locked)
        self.assertAlmostEqual(trace.coarse_offset_hz, 1e3, delta=5.0)
        self.assertAlmostEqual(out.meta["carrier_offset_hz"], 1e3, delta=1.0)

    def test_phase_offset(self):
        cfg = CostasConfig(output_rate_hz=LOOP_RATE, settle_s=10e-3)
        out, trace = costas_track(_tone(0.0, math.radians(30), 20e-3), cfg)
        self.assertTrue(trace.locked)
        tail = out.samples[-int(2e-3 * LOOP_RATE):]
        # a Costas loop settles modulo pi
        residual = np.angle(np.mean(tail ** 2)) / 2
        self.assertLess(abs(math.degrees(residual)), 1.0)

    def test_zero_input(self):
        with self.assertRaises(NoLockError):
            costas_track(SampledSignal.complex(np.zeros(40000), LOOP_RATE), CostasConfig(output_rate_hz=LOOP_RATE))

    def test_capture_shorter_than_settle(self):
        with self.assertRaises(NoLockError):
            costas_track(_tone(0.0, 0.0, 0.5e-3), CostasConfig(output_rate_hz=LOOP_RATE))

    def test_coarse_frequency(self):
        z = _tone(-12.5e3, 0.3, 5e-3).samples
        self.assertAlmostEqual(coarse_frequency(z, LOOP_RATE, 50e3), -12.5e3, delta=20.0)
        self.assertEqual(coarse_frequency(z, LOOP_RATE, 0.0), 0.0)

    def test_config_validation(self):
        with self.assertRaises(ConfigurationError):
            CostasConfig(order=3)
        with self.assertRaises(ConfigurationError):
            CostasConfig(loop_bandwidth_hz=10e3, prefilter_bw_hz=5e3)
        kp, ki = CostasConfig().loop_gains(100e3)
        self.assertGreater(kp, ki)
        self.assertGreater(ki, 0)


@pytest.mark.slow
def test_costas_passband_tone_1khz_above_carrier():
    cfg = CostasConfig()
    rate = CarrierConfig().passband_rate_hz
    n = np.arange(int(3e-3 * rate))
    tone = SampledSignal.real(np.cos(2 * np.pi * np.mod(n * ((cfg.nominal_carrier_hz + 1e3) / rate), 1.0)), rate,
                              carrier_hz=cfg.nominal_carrier_hz)
    out, trace = costas_downconvert(tone, cfg)
    assert trace.locked
    steady = trace.freq_hz[trace.time_s >= 2e-3]
    assert np.max(np.abs(steady - 1e3)) < 10.0
    assert out.meta["carrier_offset_hz"] == pytest.approx(1e3, abs=10.0)
    assert out.rate_hz == cfg.output_rate_hz


class TestSync(unittest.TestCase):
    def setUp(self):
        self.grid = _grid(n_slots=2)
        self.bb = ofdm_modulate(self.grid, NUM, 0)
        self.dmrs = dmrs_time_reference(self.grid, NUM)

    def _delayed(self, delay, cfo_hz=0.0):
        x = np.concatenate((np.zeros(delay), self.bb.samples))
        sig = SampledSignal.complex(x, NUM.sample_rate_hz)
        if cfo_hz:
            sig = correct_cfo(sig, -cfo_hz)
        return sig

    def test_delay_found(self):
        sync = time_synchronize(self._delayed(1000), NUM, self.dmrs)
        self.assertEqual(sync.start, 1000)
        # data shares the DMRS symbol on the other comb
        self.assertGreater(sync.metric, 0.6)
        self.assertAlmostEqual(sync.cfo_hz, 0.0, delta=1e-6)
        self.assertTrue(sync.bounded)

    def test_cfo(self):
        sync = time_synchronize(self._delayed(500, cfo_hz=3e3), NUM, self.dmrs)
        self.assertEqual(sync.start, 500)
        self.assertAlmostEqual(sync.cfo_hz, 3e3, delta=1.0)

    def test_windowed_cfo(self):
        bb = ofdm_modulate(self.grid, NUM, 36)
        sig = correct_cfo(bb, -2e3)
        sync = time_synchronize(sig, NUM, self.dmrs, window_overlap=36)
        self.assertEqual(sync.start, 0)
        self.assertAlmostEqual(sync.cfo_hz, 2e3, delta=1.0)

    def test_cp_timing_rejects_off_grid_decoy(self):
        # DMRS body with a noise CP ahead of the frame: strong DMRS match, no CP structure
        ref = self.dmrs.samples
        cp = len(ref) - NUM.fft_size
        rms = np.sqrt(np.mean(np.abs(ref) ** 2))
        rng = np.random.default_rng(3)
        decoy = np.concatenate((rms * (rng.normal(size=cp) + 1j * rng.normal(size=cp)) / np.sqrt(2), ref[cp:]))
        delay = len(decoy) + 500
        x = np.concatenate((decoy, np.zeros(500), self.bb.samples))
        sync = time_synchronize(SampledSignal.complex(x, NUM.sample_rate_hz), NUM, self.dmrs)
        self.assertTrue(sync.bounded)
        self.assertEqual(sync.start, delay)
        self.assertGreaterEqual(sync.coarse_symbol_start, delay)

    def test_symbol_grid_mask(self):
        starts = NUM.symbol_starts(NUM.symbols_per_slot)
        coarse = 1000 + int(starts[3])
        mask = symbol_grid_mask(4 * NUM.samples_per_slot, coarse, NUM, self.dmrs.offset, tolerance=0)
        self.assertTrue(mask[1000 + self.dmrs.offset])
        # one candidate frame start per symbol boundary at or before the coarse timing
        self.assertEqual(int(mask.sum()), 4)
        self.assertFalse(mask[:self.dmrs.offset].any())

    def test_noise_only(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=3 * NUM.samples_per_slot) + 1j * rng.normal(size=3 * NUM.samples_per_slot)
        with self.assertRaises(SyncError):
            time_synchronize(SampledSignal.complex(x, NUM.sample_rate_hz), NUM, self.dmrs)

    def test_short_capture(self):
        with self.assertRaises(SyncError):
            time_synchronize(SampledSignal.complex(self.bb.samples[:1000], NUM.sample_rate_hz), NUM, self.dmrs)

    def test_real_input(self):
        with self.assertRaises(InputError):
            time_synchronize(SampledSignal.real(np.ones(NUM.samples_per_slot), NUM.sample_rate_hz), NUM, self.dmrs)


@pytest.mark.slow
def test_sync_at_20db_over_seeded_trials():
    grid = _grid(n_slots=1)
    bb = ofdm_modulate(grid, NUM, 36)
    dmrs = dmrs_time_reference(grid, NUM)
    rng = np.random.default_rng(20)
    for seed in range(100):
        delay = int(rng.integers(0, 2000))
        sig = SampledSignal.complex(np.concatenate((np.zeros(delay), bb.samples)), NUM.sample_rate_hz)
        noisy = add_awgn(sig, 20.0, seed)
        sync = time_synchronize(noisy, NUM, dmrs, window_overlap=36)
        assert abs(sync.start - delay) <= 1, seed


class TestDemodulator(unittest.TestCase):
    def setUp(self):
        self.grid = _grid(n_slots=2)

    def test_loopback(self):
        rx = ofdm_demodulate(ofdm_modulate(self.grid, NUM, 0), NUM, SyncResult(start=0), fft_backoff=0)
        self.assertEqual(rx.n_slots, 2)
        np.testing.assert_allclose(rx.symbols, self.grid.symbols, atol=1e-10)

    def test_backoff_inside_untouched_cp(self):
        rx = ofdm_demodulate(ofdm_modulate(self.grid, NUM, 36), NUM, SyncResult(start=0), fft_backoff=8)
        np.testing.assert_allclose(rx.symbols, self.grid.symbols, atol=1e-10)

    def test_one_sample_early(self):
        bb = ofdm_modulate(self.grid, NUM, 0)
        x = SampledSignal.complex(np.concatenate(([0], bb.samples)), NUM.sample_rate_hz)
        rx = ofdm_demodulate(x, NUM, SyncResult(start=0), fft_backoff=0)
        ramp = np.exp(-2j * np.pi * NUM.subcarrier_indices() / NUM.fft_size)
        np.testing.assert_allclose(rx.symbols, self.grid.symbols * ramp[None, :], atol=1e-10)

    def test_delay_beyond_cp(self):
        bb = ofdm_modulate(self.grid, NUM, 0)
        x = SampledSignal.complex(np.concatenate((np.zeros(100), bb.samples)), NUM.sample_rate_hz)
        rx = ofdm_demodulate(x, NUM, SyncResult(start=0), fft_backoff=0)
        ramp = np.exp(-2j * np.pi * 100 * NUM.subcarrier_indices() / NUM.fft_size)
        err = np.abs(rx.symbols - self.grid.symbols * ramp[None, :])
        self.assertGreater(float(np.mean(err ** 2)), 1e-3)

    def test_truncated(self):
        bb = ofdm_modulate(self.grid, NUM, 0)
        short = SampledSignal.complex(bb.samples[:NUM.samples_per_slot - 1], NUM.sample_rate_hz)
        with self.assertRaises(TruncationError):
            ofdm_demodulate(short, NUM, SyncResult(start=0))
        with self.assertRaises(TruncationError):
            ofdm_demodulate(short, NUM, SyncResult(start=0), n_symbols=14)
        self.assertEqual(whole_slots_available(len(bb), NUM, 0), 2)
        self.assertEqual(whole_slots_available(len(bb), NUM, 1), 1)

    def test_backoff_range(self):
        with self.assertRaises(ConfigurationError):
            ofdm_demodulate(ofdm_modulate(self.grid, NUM, 0), NUM, SyncResult(start=0), fft_backoff=100)


class TestEqualizer(unittest.TestCase):
    def setUp(self):
        self.grid = _grid(n_slots=2)

    def _rx(self, symbols):
        return ReceivedGrid(symbols=symbols, symbols_per_slot=NUM.symbols_per_slot)

    def test_identity(self):
        est = estimate_channel_ls(self._rx(np.array(self.grid.symbols)), self.grid)
        np.testing.assert_allclose(est.h, 1.0, atol=1e-12)
        eq = zf_equalize(self._rx(np.array(self.grid.symbols)), est)
        self.assertTrue(np.all(eq.mask))
        np.testing.assert_allclose(eq.symbols, self.grid.symbols, atol=1e-12)

    def test_delay_slope(self):
        cols = np.arange(self.grid.n_subcarriers)
        ramp = np.exp(-2j * np.pi * 3 * cols / NUM.fft_size)
        rx = self._rx(self.grid.symbols * ramp[None, :])
        est = estimate_channel_ls(rx, self.grid, fft_size=NUM.fft_size)
        np.testing.assert_allclose(est.delay_samples, 3.0, atol=1e-9)
        np.testing.assert_allclose(zf_equalize(rx, est).symbols, self.grid.symbols, atol=1e-9)

    def test_linear_channel_between_pilots(self):
        n_sc = self.grid.n_subcarriers
        h = 1.0 + np.arange(n_sc) / n_sc
        est = estimate_channel_ls(self._rx(self.grid.symbols * h[None, :]), self.grid)
        np.testing.assert_allclose(est.h[0], h, atol=1e-9)
        np.testing.assert_allclose(est.h[1], h, atol=1e-9)

    def test_zero_gain_subcarrier_masked(self):
        h = np.ones(self.grid.n_subcarriers)
        h[10] = 0.0
        rx = self._rx(self.grid.symbols * h[None, :])
        eq = zf_equalize(rx, estimate_channel_ls(rx, self.grid, delay_compensation=False))
        self.assertFalse(np.any(eq.mask[:, 10]))
        self.assertTrue(np.all(eq.symbols[:, 10] == 0))
        self.assertTrue(np.all(np.delete(eq.mask, 10, axis=1)))

    def test_all_masked(self):
        rx = self._rx(np.zeros(self.grid.symbols.shape, dtype=complex))
        with self.assertRaises(EqualizationError):
            zf_equalize(rx, estimate_channel_ls(rx, self.grid))

    def test_noise_30db(self):
        rng = np.random.default_rng(11)
        shape = self.grid.symbols.shape
        noise = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * math.sqrt(1e-3 / 2)
        rx = self._rx(self.grid.symbols + noise)
        eq = zf_equalize(rx, estimate_channel_ls(rx, self.grid, fft_size=NUM.fft_size))
        self.assertTrue(3.5 < _evm(eq.symbols, self.grid) < 4.8)


class TestReceiver(unittest.TestCase):
    def test_baseband_input(self):
        grid = _grid(n_slots=2)
        bb = ofdm_modulate(grid, NUM)
        res = Receiver(NUM, CarrierConfig(), grid, window_overlap=36).receive(bb)
        self.assertEqual(res.carrier_path, PATH_BASEBAND)
        self.assertEqual(res.sync.start, 0)
        self.assertLess(_evm(res.equalized.symbols, res.reference), 1e-6)

    def test_short_passband_falls_back_to_nominal(self):
        grid = _grid(n_slots=2)
        carrier = CarrierConfig()
        pb = upconvert_to_passband(ofdm_modulate(grid, NUM), carrier)
        res = Receiver(NUM, carrier, grid, window_overlap=36).receive(pb)
        self.assertEqual(res.carrier_path, PATH_NOMINAL)
        self.assertIsNone(res.costas_trace)
        self.assertLess(_evm(res.equalized.symbols, res.reference), 2.0)

    def test_costas_required(self):
        grid = _grid(n_slots=1)
        carrier = CarrierConfig()
        pb = upconvert_to_passband(ofdm_modulate(grid, NUM), carrier)
        with self.assertRaises(NoLockError):
            Receiver(NUM, carrier, grid, RxConfig(carrier_recovery="costas"), window_overlap=36).receive(pb)

    def test_overlap_plus_backoff_limit(self):
        with self.assertRaises(ConfigurationError):
            Receiver(NUM, CarrierConfig(), _grid(n_slots=1), RxConfig(fft_backoff=40), window_overlap=36)


@pytest.mark.parametrize("mode", ["auto", "costas", "nominal"])
def test_rx_config_modes(mode):
    assert RxConfig(carrier_recovery=mode).carrier_recovery == mode


def test_rx_config_rejects_unknown_mode():
    with pytest.raises(ConfigurationError):
        RxConfig(carrier_recovery="pll")
