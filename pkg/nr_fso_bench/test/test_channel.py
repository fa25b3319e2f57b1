import math
import unittest

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from nr_fso_bench.channel.chain import SYNTHETIC_RESPONSE, SYNTHETIC_RESPONSE_FILE, AwgnStage, ChannelChain, \
    DetectorStage, FirStage, FsoStage, GainStage, LaserStage, NormalizeStage, QuantizerStage, ResampleStage, \
    run_chain, stage_from_dict
from nr_fso_bench.channel.impairments import add_awgn, add_carrier_tone, fir_from_measured_response, \
    laser_pi_transfer, noisy_amplify, quantize
from nr_fso_bench.channel.models import BOLTZMANN, T0_KELVIN, AmplifierModel, FrequencyResponse, LaserModel, \
    QuantizerModel
from nr_fso_bench.channel.presets import PRESETS, build_preset
from nr_fso_bench.common.bench_exception import ConfigurationError, FormatError, InputError, UndefinedSnrError
from nr_fso_bench.waveform.signal import SampledSignal

PB_RATE = 2.4576e9


def _noise(n=1 << 16, seed=0, rate=PB_RATE):
    return SampledSignal.real(np.random.default_rng(seed).normal(0.0, 1.0, n), rate)


class TestQuantizer(unittest.TestCase):
    def test_zero_and_clip(self):
        q = QuantizerModel(bits=8, full_scale=1.0)
        y = quantize(SampledSignal.real([0.0, 2.0, -2.0], 1e6), q)
        self.assertEqual(y.samples[0], 0.0)
        self.assertAlmostEqual(y.samples[1], 127 * q.step)
        self.assertAlmostEqual(y.samples[2], -128 * q.step)
        self.assertEqual(y.meta["quantizer_clipped"], 2)

    def test_sqnr_10_bit(self):
        bits, fs = 10, 1.0
        q = QuantizerModel(bits=bits, full_scale=fs)
        n = np.arange(1 << 18)
        x = fs * (1 - 2.0 ** -bits) * np.sin(2 * np.pi * 0.1234567 * n)
        y = quantize(SampledSignal.real(x, 1.0), q).samples
        sqnr = 10 * np.log10(np.mean(x ** 2) / np.mean((y - x) ** 2))
        self.assertAlmostEqual(sqnr, 61.96, delta=0.3)
        self.assertEqual(quantize(SampledSignal.real(x, 1.0), q).meta["quantizer_clipped"], 0)

    def test_rejects_complex(self):
        with self.assertRaises(InputError):
            quantize(SampledSignal.complex([1j], 1.0), QuantizerModel(bits=8, full_scale=1.0))

    def test_bad_model(self):
        with self.assertRaises(ConfigurationError):
            QuantizerModel(bits=1, full_scale=1.0)
        with self.assertRaises(ConfigurationError):
            QuantizerModel(bits=8, full_scale=0.0)

    def test_stage_loading(self):
        sig = _noise()
        out = run_chain(sig, ChannelChain(stages=(QuantizerStage(bits=8, loading_db=12.0),)))
        self.assertAlmostEqual(out.meta["quantizer_full_scale"], math.sqrt(sig.power()) * 10 ** 0.6)
        with self.assertRaises(ConfigurationError):
            QuantizerStage(bits=8, full_scale=1.0, loading_db=12.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-0.99, max_value=0.99), min_size=1, max_size=64))
def test_quantizer_error_within_half_step(values):
    q = QuantizerModel(bits=6, full_scale=1.0)
    y = quantize(SampledSignal.real(values, 1.0), q).samples
    assert np.all(np.abs(y - np.asarray(values)) <= q.step / 2 + 1e-12)


class TestLaser(unittest.TestCase):
    def test_operating_points(self):
        m = LaserModel()
        np.testing.assert_allclose(m.power_mw([420.0, 670.0, 545.0, 300.0]), [0.0, 21.0, 10.5, 0.0], atol=1e-9)

    def test_clipping_stats(self):
        m = LaserModel(mod_gain_ma_per_unit=28.0)
        y = laser_pi_transfer(SampledSignal.real([0.0, -10.0, 1.0, -10.0], 1e9), m)
        self.assertEqual(y.meta["laser_clip_fraction"], 0.5)
        self.assertAlmostEqual(y.meta["laser_min_current_ma"], 545.0 - 280.0)
        self.assertEqual(y.samples[1], 0.0)
        self.assertAlmostEqual(m.linear_drive_limit, 125.0 / 28.0)

    def test_bias_below_threshold(self):
        with self.assertRaises(ConfigurationError):
            LaserModel(i_bias_ma=400.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-20.0, max_value=20.0), min_size=2, max_size=256),
       st.floats(min_value=1.0, max_value=60.0))
def test_laser_monotone_in_drive(drive, mod_gain):
    m = LaserModel(mod_gain_ma_per_unit=mod_gain)
    y = laser_pi_transfer(SampledSignal.real(np.sort(drive), 1e9), m).samples
    assert np.all(np.diff(y) >= 0)
    assert np.all(y >= 0)


class TestFrequencyResponse(unittest.TestCase):
    def test_flat_gives_impulse(self):
        taps = fir_from_measured_response(FrequencyResponse.flat(), PB_RATE, 255)
        self.assertAlmostEqual(taps[127], 1.0, places=3)
        self.assertLess(np.max(np.abs(np.delete(taps, 127))), 1e-3)

    def test_single_pole_corner(self):
        taps = fir_from_measured_response(FrequencyResponse.single_pole(720e6), PB_RATE)
        _, h = signal.freqz(taps, worN=[1e6, 720e6], fs=PB_RATE)
        db = 20 * np.log10(np.abs(h))
        self.assertAlmostEqual(db[0], 0.0, delta=0.1)
        self.assertAlmostEqual(db[1], -3.0, delta=0.5)

    def test_even_taps_rejected(self):
        with self.assertRaises(ConfigurationError):
            fir_from_measured_response(FrequencyResponse.flat(), PB_RATE, 256)

    def test_descending_table(self):
        with self.assertRaises(FormatError):
            FrequencyResponse(points=((1e9, 0.0), (0.0, -3.0)))

    def test_mixed_phase(self):
        with self.assertRaises(FormatError):
            FrequencyResponse(points=((0.0, 0.0, 0.0), (1e9, -3.0, None)))

    def test_synthetic_csv(self):
        r = FrequencyResponse.from_csv(SYNTHETIC_RESPONSE_FILE)
        self.assertEqual(r.freq_hz[0], 0.0)
        self.assertIsNone(r.phase_deg)
        self.assertLess(r.magnitude_db_at(1.2e9), -3.0)


def test_bad_csv_header(tmp_path):
    p = tmp_path / "resp.csv"
    p.write_text("f,m\n0,0\n1e9,-3\n")
    with pytest.raises(FormatError):
        FrequencyResponse.from_csv(p)


def test_csv_with_phase(tmp_path):
    p = tmp_path / "resp.csv"
    p.write_text("freq_hz,mag_db,phase_deg\n0,0,0\n1e9,-3,-45\n")
    r = FrequencyResponse.from_csv(p)
    assert r.phase_deg is not None
    taps = fir_from_measured_response(r, PB_RATE, 255)
    assert len(taps) == 255


class TestAmplifier(unittest.TestCase):
    def test_noiseless_is_pure_gain(self):
        sig = _noise(1000)
        y = noisy_amplify(sig, AmplifierModel(gain_db=30.0, noise_figure_db=0.0), seed=1)
        np.testing.assert_allclose(y.samples, sig.samples * 10 ** 1.5)

    def test_noise_power_convention(self):
        rate = 1e9
        a = AmplifierModel(gain_db=30.0, noise_figure_db=6.0)
        y = noisy_amplify(SampledSignal.real(np.zeros(1_000_000), rate), a, seed=2)
        expected = 10 ** 3 * BOLTZMANN * T0_KELVIN * rate * (10 ** 0.6 - 1)
        self.assertAlmostEqual(y.power() / expected, 1.0, delta=0.01)

    def test_seeded(self):
        sig = _noise(1000)
        a = AmplifierModel(gain_db=10.0, noise_figure_db=6.0, impedance_ohm=1e18)
        np.testing.assert_array_equal(noisy_amplify(sig, a, 5).samples, noisy_amplify(sig, a, 5).samples)
        self.assertFalse(np.array_equal(noisy_amplify(sig, a, 5).samples, noisy_amplify(sig, a, 6).samples))

    def test_negative_nf(self):
        with self.assertRaises(ConfigurationError):
            AmplifierModel(gain_db=30.0, noise_figure_db=-1.0)


class TestAwgn(unittest.TestCase):
    def test_noise_variance(self):
        sig = SampledSignal.real(np.ones(1_000_000), 1e6)
        y = add_awgn(sig, 20.0, seed=3)
        self.assertAlmostEqual(float(np.var(y.samples - sig.samples)) / 0.01, 1.0, delta=0.01)

    def test_complex_variance(self):
        sig = SampledSignal.complex(np.ones(1_000_000), 1e6)
        y = add_awgn(sig, 10.0, seed=3)
        self.assertAlmostEqual(float(np.mean(np.abs(y.samples - sig.samples) ** 2)) / 0.1, 1.0, delta=0.01)

    def test_reference_bandwidth(self):
        sig = SampledSignal.real(np.ones(1_000_000), 1e6)
        y = add_awgn(sig, 20.0, seed=3, reference_bw_hz=50e3)
        self.assertAlmostEqual(y.meta["awgn_noise_power"], 0.01 * 10)
        with self.assertRaises(ConfigurationError):
            add_awgn(sig, 20.0, seed=3, reference_bw_hz=2e6)

    def test_infinite_snr(self):
        sig = _noise(100)
        np.testing.assert_array_equal(add_awgn(sig, math.inf, seed=0).samples, sig.samples)

    def test_zero_signal(self):
        with self.assertRaises(UndefinedSnrError):
            add_awgn(SampledSignal.real(np.zeros(10), 1.0), 20.0, seed=0)


def test_carrier_tone_level():
    sig = _noise(1 << 16)
    y = add_carrier_tone(sig, 627e6, -20.0)
    assert y.power() == pytest.approx(sig.power() * 1.01, rel=2e-2)


class TestChain(unittest.TestCase):
    def test_empty_chain(self):
        sig = _noise(1000)
        out = run_chain(sig, ChannelChain())
        np.testing.assert_array_equal(out.samples, sig.samples)
        self.assertEqual([e["stage"] for e in out.meta["stage_powers"]], ["input"])

    def test_gain_6db(self):
        sig = SampledSignal.real(np.ones(100), 1e6)
        out = run_chain(sig, ChannelChain(stages=(GainStage(gain_db=20 * math.log10(2)),)))
        self.assertAlmostEqual(out.power(), 4.0, delta=1e-6)

    def test_deterministic(self):
        sig = _noise(4096)
        chain = ChannelChain(stages=(AwgnStage(snr_db=10.0), AwgnStage(snr_db=20.0)), seed=9)
        a, b = run_chain(sig, chain), run_chain(sig, chain)
        np.testing.assert_array_equal(a.samples, b.samples)
        c = run_chain(sig, chain.with_seed(10))
        self.assertFalse(np.array_equal(a.samples, c.samples))

    def test_rate_mismatch(self):
        chain = ChannelChain(stages=(GainStage(gain_db=1.0, rate_hz=1e9),))
        with self.assertRaises(ConfigurationError):
            run_chain(_noise(100, rate=2e9), chain)
        self.assertEqual(ChannelChain(stages=(ResampleStage(to_rate_hz=10e9),)).validate_rates(PB_RATE), 10e9)

    def test_stage_error_names_stage(self):
        chain = ChannelChain(stages=(NormalizeStage(name="awg_level"),))
        with self.assertRaises(ConfigurationError) as cm:
            run_chain(SampledSignal.real(np.zeros(8), 1e6), chain)
        self.assertEqual(cm.exception.stage, "channel:awg_level")

    def test_from_dict(self):
        chain = ChannelChain.from_dict({"seed": 4, "stages": [{"type": "gain", "gain_db": -3.0},
                                                              {"type": "awgn", "snr_db": "inf"}]})
        self.assertEqual(chain.seed, 4)
        self.assertEqual([s.kind for s in chain.stages], ["gain", "awgn"])
        self.assertTrue(math.isinf(chain.stages[1].snr_db))
        again = ChannelChain.from_dict(chain.to_dict())
        self.assertEqual(again.stages, chain.stages)

    def test_bad_stage(self):
        with self.assertRaises(ConfigurationError):
            stage_from_dict({"type": "teleport"})
        with self.assertRaises(ConfigurationError):
            stage_from_dict({"type": "gain", "gain": 3})
        with self.assertRaises(ConfigurationError):
            ChannelChain.from_dict({"stages": [], "extra": 1})


class TestPresets(unittest.TestCase):
    def test_all_build(self):
        for name in PRESETS:
            chain = build_preset(name, seed=1)
            self.assertEqual(chain.name, name)
        self.assertEqual(len(build_preset("ideal").stages), 0)

    def test_unknown(self):
        with self.assertRaises(ConfigurationError):
            build_preset("nosuch")

    def test_fidelity(self):
        fid = build_preset("paper-fso").fidelity()
        self.assertEqual(fid["detector.f3db_hz"], "published")
        self.assertEqual(fid["awgn.snr_db"], "engineering")
        fid = build_preset("paper-fso", response_file=SYNTHETIC_RESPONSE).fidelity()
        self.assertEqual(fid["detector.response"], "synthetic")

    def test_paper_fso_stage_trace(self):
        chain = build_preset("paper-fso", seed=3)
        out = run_chain(_noise(1 << 15, seed=4), chain)
        trace = out.meta["stage_powers"]
        self.assertEqual(len(trace), len(chain.stages) + 1)
        self.assertEqual([e["stage"] for e in trace[1:4]], ["awg_level", "awg", "qcl"])
        self.assertAlmostEqual(trace[1]["power"], 1.0)
        self.assertLess(trace[3]["laser_clip_fraction"], 1e-3)
        self.assertIn("quantizer_clipped", trace[-1])
        self.assertEqual(out.rate_hz, PB_RATE)

    def test_highrate_rate(self):
        out = run_chain(_noise(1 << 14), build_preset("paper-fso-highrate"))
        self.assertEqual(out.rate_hz, 10e9)
        self.assertAlmostEqual(len(out) / (1 << 14), 10e9 / PB_RATE, delta=1e-3)


# laser kept above threshold, no quantizer: affine up to the detector DC block, linear after it
LINEAR_CHAIN = ChannelChain(stages=(
    LaserStage(mod_gain_ma_per_unit=28.0),
    FsoStage(attenuation_db=3.0),
    DetectorStage(f3db_hz=720e6, n_taps=129),
    FirStage(band_pass={"center_hz": 627e6, "width_hz": 100e6}, n_taps=129),
    GainStage(gain_db=30.0),
))


def _tone_at(freq_hz, amplitude, n=1 << 13):
    t = np.arange(n) / PB_RATE
    return amplitude * np.cos(2 * np.pi * freq_hz * t + 0.3)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=-1.5, max_value=1.5), st.floats(min_value=-1.5, max_value=1.5))
def test_chain_superposition_without_clipping(a, b):
    x1, x2 = _tone_at(620e6, 1.0), _tone_at(641e6, 1.0)
    assert abs(a) + abs(b) < LaserModel(mod_gain_ma_per_unit=28.0).linear_drive_limit

    def out(x):
        return run_chain(SampledSignal.real(x, PB_RATE), LINEAR_CHAIN).samples

    y = out(a * x1 + b * x2)
    expected = a * out(x1) + b * out(x2)
    np.testing.assert_allclose(y, expected, atol=1e-9 * max(1.0, np.max(np.abs(expected))))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-30.0, max_value=0.0), min_size=2, max_size=6))
def test_passive_fir_does_not_add_power(mags_db):
    freqs = np.linspace(0.0, PB_RATE / 2, len(mags_db))
    stage = FirStage(response=tuple(zip(freqs, mags_db)), n_taps=201)
    assert stage.frequency_response().is_passive
    taps = fir_from_measured_response(stage.frequency_response(), PB_RATE, stage.n_taps)
    # white-noise power gain
    assert np.sum(taps ** 2) <= 1.01
    sig = _noise(1 << 16, seed=3)
    assert stage.apply(sig, np.random.SeedSequence(0)).power() <= 1.05 * sig.power()
