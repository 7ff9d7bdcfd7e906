"""Delta-sigma modulator and the full converter chain.

In-band noise is measured on the modulator output after subtracting a
least-squares tone fit and applying a Hann window; without the
subtraction, spectral leakage from the tone buries the shaped noise
floor entirely.
"""

from __future__ import annotations

import numpy as np
import pytest

from excessband import (AdcChain, AdcChainConfig, ConfigError,
                        DeltaSigmaModulator, MeasurementError, OfdmConfig,
                        RngSpec, SampleStream, adc_chain, band_power,
                        design_analog_front, dsm_process, gen_ofdm,
                        gen_thermal, run_filter)
from oracles import fit_tone

FS = 16.0


def inband_power(y: np.ndarray, f_tone: float, f_band: float) -> float:
    """Noise power inside [0, f_band] with the tone removed first."""
    _, resid = fit_tone(y, f_tone, 1.0)
    w = np.hanning(resid.size)
    spec = np.abs(np.fft.rfft(resid * w)) ** 2
    freqs = np.fft.rfftfreq(resid.size)
    sel = (freqs > 0) & (freqs <= f_band)
    return float(np.sum(spec[sel]) * 2.0 / (resid.size ** 2 * np.mean(w ** 2)))


# ===========================================================================
# modulator
# ===========================================================================

def test_dsm_output_is_pure_two_level():
    rng = np.random.default_rng(50)
    mod = DeltaSigmaModulator(2.0)
    out = mod.process(0.5 * rng.standard_normal(10000))
    assert set(np.unique(out)) == {-2.0, 2.0}


def test_dsm_zero_input_zero_mean():
    mod = DeltaSigmaModulator(1.0)
    out = mod.process(np.zeros(10000))
    assert out.mean() == 0.0


def test_dsm_dc_input_mean():
    mod = DeltaSigmaModulator(1.0)
    out = mod.process(np.full(200000, 0.5))
    assert out.mean() == pytest.approx(0.5, abs=0.005)


def test_dsm_overflow_raises():
    mod = DeltaSigmaModulator(1.0)
    with pytest.raises(MeasurementError):
        mod.process(np.full(5000, 5.0))


def test_dsm_reset_and_oneshot_agree():
    rng = np.random.default_rng(51)
    x = 0.4 * rng.standard_normal(5000)
    mod = DeltaSigmaModulator(1.0)
    a = mod.process(x.copy())
    mod.reset()
    b = mod.process(x.copy())
    np.testing.assert_array_equal(a, b)
    c = dsm_process(SampleStream(x, 1.0)).samples
    np.testing.assert_array_equal(a, c)


def test_dsm_rejects_bad_vref():
    with pytest.raises(ValueError):
        DeltaSigmaModulator(0.0)


def test_dsm_tone_snr():
    """A slow half-scale tone survives one-bit quantization with better
    than 60 dB of in-band SNR at 200x oversampling."""
    osr = 200
    f_tone = 0.3 / (2.0 * osr)
    n = 2_000_000
    t = np.arange(n)
    x = 0.5 * np.sin(2.0 * np.pi * f_tone * t)
    y = dsm_process(SampleStream(x, 1.0)).samples[500:]
    amp, _ = fit_tone(y, f_tone, 1.0, t0=500.0)
    p_noise = inband_power(y, f_tone, 1.0 / (2.0 * osr))
    snr_db = 10.0 * np.log10((amp ** 2 / 2.0) / p_noise)
    assert amp == pytest.approx(0.5, rel=0.01)
    assert snr_db >= 60.0


def test_dsm_noise_shaping_vs_oversampling():
    """Each doubling of the oversampling ratio drops the in-band noise of
    a second-order loop by at least 12 dB."""
    n = 1 << 20
    t = np.arange(n)
    powers = []
    for osr in (32, 64, 128):
        f_tone = 0.3 / (2.0 * osr)
        x = 0.5 * np.sin(2.0 * np.pi * f_tone * t)
        y = dsm_process(SampleStream(x, 1.0)).samples[500:]
        powers.append(inband_power(y, f_tone, 1.0 / (2.0 * osr)))
    drop1 = 10.0 * np.log10(powers[0] / powers[1])
    drop2 = 10.0 * np.log10(powers[1] / powers[2])
    assert drop1 >= 12.0
    assert drop2 >= 12.0


# ===========================================================================
# chain configuration
# ===========================================================================

def test_config_fills_defaults():
    cfg = AdcChainConfig(1.0, FS)
    assert cfg.pair_lo == pytest.approx(0.8)
    assert cfg.pair_hi == pytest.approx(1.2)
    assert cfg.protect_band < 0.5 * FS / cfg.decim_factor
    assert 0.0 < cfg.agc_q < 1.0


def test_config_rejects_undersampling():
    with pytest.raises(ConfigError):
        AdcChainConfig(1.0, 15.0)


def test_config_rejects_unknown_caf_mode():
    with pytest.raises(ConfigError):
        AdcChainConfig(1.0, FS, caf_mode="sometimes")


def test_config_rejects_clip_above_quantizer():
    with pytest.raises(ConfigError):
        AdcChainConfig(1.0, FS, clip_level=3.0, quantizer_level=2.0)


def test_chain_delay_is_sum_of_fir_stages():
    chain = AdcChain(AdcChainConfig(1.0, FS))
    want = chain.caf.delay_samples + chain.decimator.delay_samples
    assert chain.delay_samples == want
    bypass = AdcChain(AdcChainConfig(1.0, FS, caf_mode="delay"))
    assert bypass.delay_samples == chain.delay_samples


def test_chain_output_rate():
    chain = AdcChain(AdcChainConfig(1.0, FS, decim_factor=4))
    assert chain.output_rate == FS / 4


def test_chain_rejects_rate_mismatch():
    chain = AdcChain(AdcChainConfig(1.0, FS))
    with pytest.raises(ValueError):
        chain.run(SampleStream(np.zeros(64), 8.0))


# ===========================================================================
# chain behavior
# ===========================================================================

def test_linear_chain_superposition():
    """With the clipper, modulator, and blanking all off the chain is a
    linear system: responses add."""
    rng = np.random.default_rng(52)
    cfg = AdcChainConfig(1.0, FS, clipper_enabled=False,
                         modulator_enabled=False, caf_mode="wide")
    a = rng.standard_normal(20000)
    b = rng.standard_normal(20000)
    out_a = adc_chain(SampleStream(a, FS), cfg).samples
    out_b = adc_chain(SampleStream(b, FS), cfg).samples
    out_ab = adc_chain(SampleStream(a + b, FS), cfg).samples
    np.testing.assert_allclose(out_ab, out_a + out_b, atol=1e-10)


def test_fixed_gain_is_transparent_without_modulator():
    rng = np.random.default_rng(53)
    x = rng.standard_normal(20000)
    base = AdcChainConfig(1.0, FS, clipper_enabled=False,
                          modulator_enabled=False, caf_mode="delay")
    scaled = AdcChainConfig(1.0, FS, clipper_enabled=False,
                            modulator_enabled=False, caf_mode="delay",
                            fixed_gain=5.0)
    out_base = adc_chain(SampleStream(x, FS), base).samples
    out_scaled = adc_chain(SampleStream(x, FS), scaled).samples
    np.testing.assert_allclose(out_scaled, out_base, atol=1e-12)


def test_chain_block_split_invariance():
    rng = np.random.default_rng(54)
    x = 0.3 * rng.standard_normal(30000)
    c1 = AdcChain(AdcChainConfig(1.0, FS))
    c2 = AdcChain(AdcChainConfig(1.0, FS))
    whole = c1.process(x)
    parts = np.concatenate([c2.process(x[:7000]), c2.process(x[7000:])])
    np.testing.assert_allclose(parts, whole, atol=1e-10)


def test_chain_blanking_is_intermittent_on_clean_signal():
    """On impulse-free multicarrier input plus thermal noise the
    self-tuned fences blank less than one percent of samples once the
    trackers have settled.

    The input goes through the analog band model first; without that,
    the raw guard-edge steps of the synthetic waveform read as wideband
    transients and get blanked by design.
    """
    fc = 1.0
    ofdm = OfdmConfig(fc, rng=RngSpec(11, 0))
    clean = gen_ofdm(ofdm, 26)
    th = gen_thermal(clean.duration, FS, RngSpec(11, 1))
    ts = np.sqrt(band_power(clean, ofdm.band)
                 / band_power(th, ofdm.band) / 1e3)
    mix = SampleStream(clean.samples + ts * th.samples, FS)
    cfg = AdcChainConfig(fc=fc, sample_rate=FS, modulator_enabled=False,
                         caf_mode="on")
    chain = AdcChain(cfg)
    pre = run_filter(design_analog_front(cfg), mix)
    settle = 6 * ofdm.frame_samples
    chain.process(pre.samples[:settle])
    b0, t0 = chain.caf.blanked_samples, chain.caf.total_samples
    chain.process(pre.samples[settle:])
    b1, t1 = chain.caf.blanked_samples, chain.caf.total_samples
    assert (b1 - b0) / (t1 - t0) < 0.01
