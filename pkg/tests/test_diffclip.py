"""Differential clipper, complementary graph, and the Hampel cross-check.

The level dynamics are compared against the analytic first-order lowpass
response, and impulse suppression is measured by differencing runs with
and without the impulse so the chirp itself cancels exactly.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from excessband import (AdicState, ComplementaryClipper, ConfigError,
                        DifferentialClipper, QuantileTracker, SampleStream,
                        adic_fence_update, adic_step, caf_process, delay,
                        design_bessel_lowpass, design_complementary_pair,
                        gen_chirp, hampel_filter)

# ===========================================================================
# scalar stepping
# ===========================================================================

def test_adic_step_in_range_is_identity():
    state = AdicState(tau=100.0, fences=(-1.0, 1.0), level=0.0, started=True)
    out, new = adic_step(state, 0.5, 1.0)
    assert out == 0.5
    assert not new.blanking
    assert new.level == pytest.approx(0.005)


def test_adic_step_out_of_range_freezes_level():
    state = AdicState(tau=100.0, fences=(-1.0, 1.0), level=0.2, started=True)
    out, new = adic_step(state, 50.0, 1.0)
    assert out == 0.2
    assert new.level == 0.2
    assert new.blanking


def test_adic_step_first_sample_seeds_level():
    state = AdicState(tau=100.0, fences=(-0.1, 0.1))
    out, new = adic_step(state, 7.0, 1.0)
    assert out == 7.0
    assert new.level == pytest.approx(7.0)
    assert not new.blanking


def test_adic_step_level_follows_first_order_lowpass():
    tau, dt = 1.0, 0.01
    state = AdicState(tau=tau)
    out, state = adic_step(state, 0.0, dt)    # seed at zero
    n = 100                                    # one time constant
    for _ in range(n):
        _, state = adic_step(state, 1.0, dt)
    want = 1.0 - np.exp(-n * dt / tau)
    assert state.level == pytest.approx(want, rel=0.01)


def test_adic_step_rejects_coarse_dt():
    with pytest.raises(ConfigError):
        adic_step(AdicState(tau=1.0), 0.0, 0.1)
    with pytest.raises(ValueError):
        adic_step(AdicState(tau=1.0), 0.0, 0.0)


def test_adic_state_validation():
    with pytest.raises(ValueError):
        AdicState(tau=0.0)
    with pytest.raises(ValueError):
        AdicState(tau=1.0, fences=(0.5, 1.0))


def test_adic_fence_update_scales_tracked_level():
    state = AdicState(tau=1.0)
    new = adic_fence_update(state, 1.0, beta=3.0)
    assert new.fences == (-7.0, 7.0)
    floored = adic_fence_update(state, 0.0, beta=3.0, floor=0.25)
    assert floored.fences == (-0.25, 0.25)
    with pytest.raises(ValueError):
        adic_fence_update(state, 1.0, beta=-1.0)


def test_adic_fence_update_reads_tracker_average():
    tracker = QuantileTracker(0.5, 0.1, 1.0, window=4, initial=2.0)
    tracker.process(np.full(16, 2.0))
    new = adic_fence_update(AdicState(tau=1.0), tracker, beta=3.0)
    assert new.fences[1] == pytest.approx(7.0 * tracker.window_avg)


# ===========================================================================
# block clipper
# ===========================================================================

def test_block_fixed_fences_matches_scalar_steps():
    rng = np.random.default_rng(40)
    x = np.cumsum(0.02 * rng.standard_normal(400))
    x[150] += 5.0
    clip = DifferentialClipper(60.0, 1.0, fences=(-0.5, 0.5))
    out_block, blanked = clip.process(x)
    state = AdicState(tau=60.0, fences=(-0.5, 0.5))
    for i, v in enumerate(x):
        y, state = adic_step(state, float(v), 1.0)
        assert y == out_block[i]
        assert state.blanking == bool(blanked[i])


def test_block_split_determinism():
    rng = np.random.default_rng(41)
    x = np.cumsum(0.02 * rng.standard_normal(3000))
    c1 = DifferentialClipper(60.0, 1.0, fences=None, beta=3.0,
                             fence_floor=1e-9, qtf_mu=1e-3, window=128,
                             qtf_init=0.05)
    c2 = DifferentialClipper(60.0, 1.0, fences=None, beta=3.0,
                             fence_floor=1e-9, qtf_mu=1e-3, window=128,
                             qtf_init=0.05)
    whole, whole_b = c1.process(x)
    parts = [c2.process(x[:700]), c2.process(x[700:])]
    np.testing.assert_array_equal(
        np.concatenate([p[0] for p in parts]), whole)
    np.testing.assert_array_equal(
        np.concatenate([p[1] for p in parts]), whole_b)


def test_adaptive_fences_rarely_blank_smooth_noise():
    """On outlier-free smoothed noise the adaptive fence sits far out in
    the tail, so blanking is a sub-0.1% event."""
    rng = np.random.default_rng(42)
    smoother = design_bessel_lowpass(2, 0.005, 1.0)
    base = 0.3 * smoother.process(rng.standard_normal(120000))
    clip = DifferentialClipper(60.0, 1.0, fences=None, beta=3.0,
                               fence_floor=1e-9, qtf_mu=1e-3, window=512,
                               qtf_init=0.05)
    _, blanked = clip.process(base)
    skip = 2000
    assert np.mean(blanked[skip:]) < 0.001


def test_clipper_rejects_coarse_dt():
    with pytest.raises(ConfigError):
        DifferentialClipper(1.0, 0.1)


# ===========================================================================
# complementary graph
# ===========================================================================

def test_graph_with_open_fences_is_pure_delay():
    rng = np.random.default_rng(43)
    fs = 16.0
    x = rng.standard_normal(20000)
    pair = design_complementary_pair(0.8, 1.2, fs)
    clip = DifferentialClipper(64.0 / fs, 1.0 / fs,
                               fences=(-np.inf, np.inf))
    graph = ComplementaryClipper(pair, clip)
    out = graph.process(x)
    want = delay(SampleStream(x, fs), graph.delay_samples).samples
    assert np.max(np.abs(out - want)) < 1e-12
    assert graph.blanking_duty == 0.0


def test_graph_zero_in_zero_out():
    fs = 16.0
    pair = design_complementary_pair(0.8, 1.2, fs)
    clip = DifferentialClipper(64.0 / fs, 1.0 / fs, fences=(-1.0, 1.0))
    graph = ComplementaryClipper(pair, clip)
    out = graph.process(np.zeros(5000))
    np.testing.assert_array_equal(out, np.zeros(5000))


def test_graph_trace_capture():
    rng = np.random.default_rng(44)
    fs = 16.0
    pair = design_complementary_pair(0.8, 1.2, fs)
    clip = DifferentialClipper(64.0 / fs, 1.0 / fs, fences=(-0.01, 0.01))
    graph = ComplementaryClipper(pair, clip, keep_trace=True)
    x = rng.standard_normal(1000)
    out = graph.process(x)
    tr = graph.last_trace
    np.testing.assert_array_equal(tr.input, x)
    np.testing.assert_array_equal(tr.caf_out, out)
    np.testing.assert_allclose(tr.bandpass + tr.bandstop,
                               delay(SampleStream(x, fs), graph.delay_samples
                                     ).samples, atol=1e-12)
    cols = tr.as_columns()
    assert len(cols) == len(tr.COLUMNS)
    assert all(c.size == x.size for c in cols)


def test_graph_reset_clears_counters():
    fs = 16.0
    pair = design_complementary_pair(0.8, 1.2, fs)
    clip = DifferentialClipper(64.0 / fs, 1.0 / fs, fences=(-1e-6, 1e-6))
    graph = ComplementaryClipper(pair, clip)
    graph.process(np.random.default_rng(45).standard_normal(2000))
    assert graph.blanking_duty > 0.0
    graph.reset()
    assert graph.blanking_duty == 0.0
    assert graph.total_samples == 0


def test_caf_process_rejects_rate_mismatch():
    fs = 16.0
    pair = design_complementary_pair(0.8, 1.2, fs)
    clip = DifferentialClipper(64.0 / fs, 1.0 / fs, fences=(-1.0, 1.0))
    graph = ComplementaryClipper(pair, clip)
    with pytest.raises(ValueError):
        caf_process(graph, SampleStream(np.zeros(64), 8.0))


def test_single_impulse_energy_reduction():
    """An isolated impulse riding on an in-band sweep loses at least 20 dB
    of its energy, while the sweep itself passes undistorted."""
    fs = 1.0
    fc = fs / 200.0
    n = 1 << 17
    sweep = gen_chirp(fc / 50.0, fc, n / fs, fs).samples
    k0 = 60000
    dirty = sweep.copy()
    dirty[k0] += 30.0

    def run(x):
        pair = design_complementary_pair(fc / 5.0, fc, fs)
        clip = DifferentialClipper(320.0, 1.0, fences=None, beta=3.0,
                                   fence_floor=1e-9, qtf_mu=1e-3,
                                   window=1 << 12, qtf_init=0.1)
        graph = ComplementaryClipper(pair, clip)
        return graph.process(x), graph.delay_samples

    out_clean, d = run(sweep)
    out_dirty, _ = run(dirty)

    # impulse contribution isolated by differencing; the sweep cancels
    contrib = out_dirty - out_clean
    w0, w1 = k0 + d - 5000, k0 + d + 8000
    e_in = 30.0 ** 2
    e_out = float(np.sum(contrib[w0:w1] ** 2))
    assert 10.0 * np.log10(e_in / e_out) >= 20.0

    # transparency on the clean sweep away from startup
    want = np.concatenate([np.zeros(d), sweep])[:n]
    sl = slice(12000, 55000)
    rms_sig = np.sqrt(np.mean(want[sl] ** 2))
    rms_err = np.sqrt(np.mean((out_clean[sl] - want[sl]) ** 2))
    assert 20.0 * np.log10(1.0 + rms_err / rms_sig) < 0.1


# ===========================================================================
# Hampel reference
# ===========================================================================

def test_hampel_constant_stream_unchanged():
    s = SampleStream(np.full(100, 3.0), 1.0)
    out = hampel_filter(s)
    np.testing.assert_array_equal(out.samples, s.samples)


def test_hampel_replaces_isolated_spike():
    x = np.full(101, 2.0)
    x[50] = 99.0
    out = hampel_filter(SampleStream(x, 1.0), window=11, n_sigma=3.0)
    assert out.samples[50] == pytest.approx(2.0)
    assert np.count_nonzero(out.samples != x) == 1


def test_hampel_rejects_bad_window():
    with pytest.raises(ValueError):
        hampel_filter(SampleStream(np.zeros(32), 1.0), window=4)
    with pytest.raises(ValueError):
        hampel_filter(SampleStream(np.zeros(32), 1.0), n_sigma=0.0)


def test_hampel_and_adic_agree_on_impulse_set():
    """Both detectors should flag (nearly) the same impulse arrivals."""
    rng = np.random.default_rng(46)
    n = 120000
    smoother = design_bessel_lowpass(2, 0.005, 1.0)
    base = 0.3 * smoother.process(rng.standard_normal(n))
    pos = np.flatnonzero(rng.random(n) < 0.002)
    pos = pos[pos > 2000]
    x = base.copy()
    x[pos] += 5.0 * rng.choice([-1.0, 1.0], size=pos.size)

    clip = DifferentialClipper(60.0, 1.0, fences=None, beta=3.0,
                               fence_floor=1e-9, qtf_mu=1e-3, window=512,
                               qtf_init=0.05)
    _, blanked = clip.process(x)
    smoothed = hampel_filter(SampleStream(x, 1.0), window=11, n_sigma=3.0)
    hampel_flags = smoothed.samples != x

    hits_adic = sum(1 for p in pos if blanked[p:p + 4].any())
    hits_hamp = sum(1 for p in pos if hampel_flags[p])
    agree = sum(1 for p in pos
                if blanked[p:p + 4].any() == bool(hampel_flags[p]))
    assert hits_adic / pos.size >= 0.9
    assert hits_hamp / pos.size >= 0.9
    assert agree / pos.size >= 0.9
