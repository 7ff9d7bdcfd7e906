"""Stream container, delay lines, mixing, raw file I/O, rng plumbing."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from excessband import (DelayLine, RngSpec, SampleStream, delay, iter_blocks,
                        mix, read_raw, write_raw)
from excessband.streams import BLOCK_SIZE


def make_stream(samples, fs=1.0):
    return SampleStream(np.asarray(samples, dtype=np.float64), fs)


# ===========================================================================
# SampleStream basics
# ===========================================================================

def test_stream_rejects_bad_rate():
    with pytest.raises(ValueError):
        SampleStream(np.zeros(4), 0.0)
    with pytest.raises(ValueError):
        SampleStream(np.zeros(4), -1.0)


def test_stream_duration_and_dt():
    s = make_stream(np.zeros(800), fs=16.0)
    assert s.duration == pytest.approx(50.0)
    assert s.dt == pytest.approx(1.0 / 16.0)


def test_stream_slice_keeps_rate():
    s = make_stream(np.arange(10.0), fs=4.0)
    part = s.slice(2, 5)
    assert part.sample_rate == 4.0
    np.testing.assert_array_equal(part.samples, [2.0, 3.0, 4.0])


def test_stream_copy_is_independent():
    s = make_stream([1.0, 2.0])
    c = s.copy()
    c.samples[0] = 99.0
    assert s.samples[0] == 1.0


# ===========================================================================
# delay
# ===========================================================================

def test_delay_identity():
    s = make_stream([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(delay(s, 0).samples, [1.0, 2.0, 3.0])


def test_delay_shift_with_zero_fill():
    s = make_stream([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(delay(s, 1).samples, [0.0, 1.0, 2.0])


def test_delay_impulse_shift():
    imp = np.zeros(16)
    imp[0] = 1.0
    out = delay(make_stream(imp), 5).samples
    expected = np.zeros(16)
    expected[5] = 1.0
    np.testing.assert_array_equal(out, expected)


def test_delay_negative_rejected():
    with pytest.raises(ValueError):
        delay(make_stream([1.0]), -1)


@given(a=st.integers(0, 20), b=st.integers(0, 20))
@settings(max_examples=40, deadline=None)
def test_delay_composes_exactly(a, b):
    rng = np.random.default_rng(0)
    s = make_stream(rng.standard_normal(64))
    lhs = delay(delay(s, a), b).samples
    rhs = delay(s, a + b).samples
    np.testing.assert_array_equal(lhs, rhs)


def test_delayline_matches_batch_delay_across_blocks():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(1000)
    line = DelayLine(37)
    pieces = [line.process(x[i:i + 130]) for i in range(0, len(x), 130)]
    got = np.concatenate(pieces)
    want = delay(make_stream(x), 37).samples
    np.testing.assert_array_equal(got, want)
    assert line.length == 37


# ===========================================================================
# mix
# ===========================================================================

def test_mix_additive_identity():
    s = make_stream([1.0, -2.0, 3.0])
    z = make_stream([0.0, 0.0, 0.0])
    np.testing.assert_array_equal(mix(s, z, 1.0).samples, s.samples)


def test_mix_cancellation():
    s = make_stream([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(mix(s, s, -1.0).samples, np.zeros(3))


def test_mix_rejects_mismatch():
    a = make_stream(np.zeros(4), fs=1.0)
    with pytest.raises(ValueError):
        mix(a, make_stream(np.zeros(5), fs=1.0), 1.0)
    with pytest.raises(ValueError):
        mix(a, make_stream(np.zeros(4), fs=2.0), 1.0)


@given(g1=st.floats(-3, 3), g2=st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_mix_gain_linearity(g1, g2):
    rng = np.random.default_rng(2)
    a = make_stream(rng.standard_normal(128))
    b = make_stream(rng.standard_normal(128))
    lhs = mix(a, b, g1 + g2).samples
    rhs = mix(mix(a, b, g1), b, g2).samples
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_mix_snr_calibration_closes():
    """Choosing the gain from a power ratio reproduces that ratio."""
    from oracles import rect_band_power

    rng = np.random.default_rng(3)
    fs = 8.0
    s = np.sin(2 * np.pi * 0.7 * np.arange(4096) / fs)
    n = rng.standard_normal(4096)
    band = (0.6, 0.8)
    snr_db = 20.0
    ps = rect_band_power(s, fs, band)
    pn = rect_band_power(n, fs, band)
    g = np.sqrt(ps / pn / 10 ** (snr_db / 10))
    out = mix(make_stream(s, fs), make_stream(n, fs), g)
    achieved = 10 * np.log10(ps / rect_band_power(out.samples - s, fs, band))
    assert achieved == pytest.approx(snr_db, abs=1e-9)


# ===========================================================================
# rng plumbing, raw I/O, blocks
# ===========================================================================

def test_rngspec_bit_identical():
    a = RngSpec(1234, 5).rng().standard_normal(100)
    b = RngSpec(1234, 5).rng().standard_normal(100)
    np.testing.assert_array_equal(a, b)


def test_rngspec_streams_differ():
    a = RngSpec(1234, 0).rng().standard_normal(100)
    b = RngSpec(1234, 1).rng().standard_normal(100)
    assert not np.array_equal(a, b)


def test_rngspec_derive():
    d = RngSpec(7, 1).derive(3)
    assert (d.seed, d.stream_id) == (7, 4)


def test_raw_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    s = make_stream(rng.standard_normal(513), fs=3.5)
    path = tmp_path / "x.f64"
    write_raw(s, path)
    back = read_raw(path, 3.5)
    np.testing.assert_array_equal(back.samples, s.samples)
    assert back.sample_rate == 3.5
    assert path.stat().st_size == 513 * 8


def test_iter_blocks_covers_everything():
    x = np.arange(float(2 * BLOCK_SIZE + 17))
    blocks = list(iter_blocks(x))
    assert sum(len(b) for b in blocks) == len(x)
    assert all(len(b) <= BLOCK_SIZE for b in blocks)
    np.testing.assert_array_equal(np.concatenate(blocks), x)
