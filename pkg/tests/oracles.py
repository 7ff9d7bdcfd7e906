"""Independent reference implementations used as test oracles.

Everything here is deliberately written against numpy/scipy primitives
rather than the package's own streaming code, so a bug in the production
path cannot hide behind the same bug in the check.
"""

from __future__ import annotations

import numpy as np
from scipy import signal as sig


def direct_convolve(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Causal FIR filtering as plain convolution, truncated to len(x)."""
    return np.convolve(x, taps)[: len(x)]


def sorted_quantile(data: np.ndarray, q: float) -> float:
    """Quantile by sorting the whole sample, no streaming approximation."""
    return float(np.quantile(np.asarray(data, dtype=np.float64), q))


def rect_band_power(x: np.ndarray, sample_rate: float,
                    band: tuple[float, float]) -> float:
    """Mean-square power inside a band via plain rectangular-window FFT."""
    spec = np.fft.rfft(np.asarray(x, dtype=np.float64))
    freqs = np.fft.rfftfreq(len(x), 1.0 / sample_rate)
    sel = (freqs >= band[0]) & (freqs <= band[1])
    # Parseval with the one-sided spectrum: interior bins count twice.
    w = np.full(len(freqs), 2.0)
    w[0] = 1.0
    if len(x) % 2 == 0:
        w[-1] = 1.0
    return float(np.sum(w[sel] * np.abs(spec[sel]) ** 2) / len(x) ** 2)


def fit_tone(x: np.ndarray, freq: float, sample_rate: float,
             t0: float = 0.0) -> tuple[float, np.ndarray]:
    """Least-squares single-tone fit; returns (amplitude, residual)."""
    t = t0 + np.arange(len(x)) / sample_rate
    c = np.cos(2.0 * np.pi * freq * t)
    s = np.sin(2.0 * np.pi * freq * t)
    basis = np.stack([c, s, np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
    fit = basis @ coef
    return float(np.hypot(coef[0], coef[1])), x - fit


def numeric_group_delay(h: np.ndarray, sample_rate: float,
                        nfft: int = 1 << 16) -> tuple[np.ndarray, np.ndarray]:
    """Group delay by numeric differentiation of the unwrapped FFT phase."""
    spec = np.fft.rfft(h, nfft)
    freqs = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    phase = np.unwrap(np.angle(spec))
    gd = -np.gradient(phase, freqs[1] - freqs[0]) / (2.0 * np.pi)
    return freqs, gd


def running_mean(x: np.ndarray, window: int) -> np.ndarray:
    """Moving average with a growing head, matching a ring that fills up."""
    out = np.empty(len(x))
    csum = np.cumsum(x)
    for k in range(len(x)):
        lo = max(0, k - window + 1)
        total = csum[k] - (csum[lo - 1] if lo > 0 else 0.0)
        out[k] = total / (k - lo + 1)
    return out


def analog_bessel_time_bandwidth(order: int) -> float:
    """Time-bandwidth product of an analog Bessel lowpass, no DSP involved.

    Duration is the full width 2*sqrt(2 ln 2) times the RMS width of
    |h(t)|^2; bandwidth is the two-sided half-power width from the analog
    frequency response.  Everything is computed with scipy's analog
    prototypes and trapezoid integration.
    """
    z, p, k = sig.besselap(order, norm="mag")
    b, a = sig.zpk2tf(z, p, k)
    t = np.linspace(0.0, 60.0, 600_000)
    _, h = sig.impulse((b, a), T=t)
    w = np.abs(h) ** 2
    mu = np.trapezoid(t * w, t) / np.trapezoid(w, t)
    var = np.trapezoid((t - mu) ** 2 * w, t) / np.trapezoid(w, t)
    duration = 2.0 * np.sqrt(2.0 * np.log(2.0)) * np.sqrt(var)
    # besselap(norm="mag") puts the -3 dB point at 1 rad/s
    bandwidth = 2.0 * (1.0 / (2.0 * np.pi))
    return float(duration * bandwidth)


def gaussian_fir_taps(sigma_samples: float, half_len: int) -> np.ndarray:
    """Unit-gain symmetric Gaussian FIR, the minimum time-bandwidth shape."""
    n = np.arange(-half_len, half_len + 1)
    taps = np.exp(-0.5 * (n / sigma_samples) ** 2)
    return taps / taps.sum()
