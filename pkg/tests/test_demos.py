"""Self-contained demo studies: statistics morphing and the swept-tone run."""

from __future__ import annotations

import numpy as np
import pytest

from excessband import ConfigError
from excessband.demos import (ChirpDemoConfig, MorphConfig, run_demo_chirp,
                              run_demo_morph)


@pytest.fixture(scope="module")
def morph():
    return run_demo_morph(MorphConfig())


@pytest.fixture(scope="module")
def chirp_clean():
    return run_demo_chirp(ChirpDemoConfig(noise=False))


@pytest.fixture(scope="module")
def chirp_noisy():
    return run_demo_chirp(ChirpDemoConfig())


def test_morph_trace_structure(morph):
    names = {"interference_wide", "interference_mid",
             "interference_pileup", "signal"}
    assert set(morph.traces) == names
    n = len(morph.traces["signal"])
    assert all(len(tr) == n for tr in morph.traces.values())
    assert set(morph.kurtosis) == names
    assert set(morph.rate_over_threshold) == names - {"signal"}


def test_morph_kurtosis_ordering(morph):
    """Narrowing the band Gaussianizes the filtered event train while the
    band-limited signal stays Gaussian throughout."""
    k = morph.kurtosis
    assert k["interference_wide"] > k["interference_mid"] \
        > k["interference_pileup"]
    assert k["interference_wide"] > 10.0
    assert k["interference_pileup"] < 2.0
    assert abs(k["signal"]) < 1.0


def test_morph_rate_ratios_bracket_threshold(morph):
    r = morph.rate_over_threshold
    assert r["interference_wide"] < 0.3
    assert r["interference_pileup"] > 3.0
    assert r["interference_wide"] < r["interference_mid"] \
        < r["interference_pileup"]


def test_morph_rejects_bad_corners():
    with pytest.raises(ConfigError):
        MorphConfig(corner_mid=0.5)


def test_chirp_clean_run_is_transparent(chirp_clean):
    """Without interference the complementary graph reproduces the delayed
    sweep to machine precision."""
    assert chirp_clean.delta_caf_rms_rel < 1e-9


def test_chirp_noisy_run_improves_snr(chirp_noisy):
    res = chirp_noisy
    assert res.snr_caf_db > res.snr_linear_db + 0.5
    assert 0.0 < res.blanking_duty < 0.2


def test_chirp_wide_fences_change_nothing():
    wide = run_demo_chirp(ChirpDemoConfig(wide_fences=True))
    assert wide.blanking_duty == 0.0
    assert wide.snr_caf_db == pytest.approx(wide.snr_linear_db, abs=0.1)


def test_chirp_trace_columns(chirp_noisy):
    cols = chirp_noisy.trace_columns()
    assert len(cols) == len(chirp_noisy.TRACE_COLUMNS)
    n = chirp_noisy.trace.input.size
    assert all(c.size == n for c in cols)
    flags = chirp_noisy.trace.blanking_flag
    assert np.mean(flags) == pytest.approx(chirp_noisy.blanking_duty)
    # wherever nothing was blanked the graph output is branch-exact
    keep = flags == 0
    diff = chirp_noisy.trace.caf_out - (chirp_noisy.trace.bandpass
                                        + chirp_noisy.trace.adic_out)
    assert np.max(np.abs(diff)) < 1e-12
    assert keep.any()
