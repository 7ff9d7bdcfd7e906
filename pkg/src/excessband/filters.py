"""Filter design and streaming execution.

IIR cascades are held as normalized second-order sections and run through
scipy's sosfilt with carried state; FIR filters run through lfilter the same
way, so output never depends on block boundaries.  Designs cover the
maximally-flat-delay (Bessel) lowpass family, the band-limiting front end,
the co-designed split of a lowpass into two matched halves, complementary
FIR pairs, time-bandwidth measurement and decimation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sig

from .errors import ConfigError, MeasurementError
from .streams import SampleStream


# ===========================================================================
# Streaming filter containers
# ===========================================================================

@dataclass
class FilterCascade:
    """IIR filter as second-order sections with streaming state.

    ``sos`` has shape (n_sections, 6) with each denominator normalized to
    a0 = 1.  ``design_meta`` records family, order and corner frequencies as
    fractions of the sample rate, for the describe/digest output.
    """

    sos: np.ndarray
    sample_rate: float
    design_meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.sos = np.atleast_2d(np.asarray(self.sos, dtype=np.float64))
        if self.sos.ndim != 2 or self.sos.shape[1] != 6:
            raise ValueError(f"sos must have shape (n, 6), got {self.sos.shape}")
        if self.sample_rate <= 0.0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        # Normalize a0 to 1 per section.
        a0 = self.sos[:, 3:4]
        if np.any(a0 == 0.0):
            raise ConfigError("section with zero leading denominator coefficient")
        self.sos = self.sos / a0
        for row in self.sos:
            roots = np.roots(row[3:6])
            if roots.size and np.max(np.abs(roots)) >= 1.0:
                raise ConfigError(
                    f"unstable section: pole magnitude {np.max(np.abs(roots)):.6f} >= 1"
                )
        self._zi = np.zeros((self.sos.shape[0], 2), dtype=np.float64)

    @property
    def order(self) -> int:
        return int(self.design_meta.get("order", 2 * self.sos.shape[0]))

    def reset(self) -> None:
        self._zi[:] = 0.0

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        y, self._zi = sig.sosfilt(self.sos, x, zi=self._zi)
        return y

    def frequency_response(self, freqs: np.ndarray) -> np.ndarray:
        """Complex response at the given frequencies in Hz."""
        w = 2.0 * np.pi * np.asarray(freqs, dtype=np.float64) / self.sample_rate
        _, h = sig.sosfreqz(self.sos, worN=w)
        return h

    def impulse_response(self, length: int) -> np.ndarray:
        imp = np.zeros(int(length), dtype=np.float64)
        imp[0] = 1.0
        y, _ = sig.sosfilt(self.sos, imp, zi=np.zeros((self.sos.shape[0], 2)))
        return y

    def describe(self) -> str:
        """Structured text export: family, order, sections, digest."""
        meta = dict(self.design_meta)
        payload = {
            "kind": "iir_cascade",
            "family": meta.get("family", "custom"),
            "order": self.order,
            "corners": meta.get("corners", {}),
            "sample_rate": self.sample_rate,
            "sections": [[float(c) for c in row] for row in self.sos],
        }
        payload["digest"] = self.digest()
        return json.dumps(payload, indent=2, sort_keys=True)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.sos, dtype="<f8").tobytes())
        h.update(np.float64(self.sample_rate).tobytes())
        return h.hexdigest()


@dataclass
class FirFilter:
    """FIR filter with carried state; linear-phase when taps are symmetric."""

    taps: np.ndarray
    sample_rate: float
    design_meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.taps = np.asarray(self.taps, dtype=np.float64)
        if self.taps.ndim != 1 or self.taps.size == 0:
            raise ValueError("taps must be a nonempty 1-D array")
        if self.sample_rate <= 0.0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self._zi = np.zeros(self.taps.size - 1, dtype=np.float64)

    @property
    def group_delay_samples(self) -> int:
        """Integer group delay of a symmetric odd-length design."""
        return (self.taps.size - 1) // 2

    def reset(self) -> None:
        self._zi[:] = 0.0

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if self.taps.size == 1:
            return self.taps[0] * x
        y, self._zi = sig.lfilter(self.taps, [1.0], x, zi=self._zi)
        return y

    def frequency_response(self, freqs: np.ndarray) -> np.ndarray:
        w = 2.0 * np.pi * np.asarray(freqs, dtype=np.float64) / self.sample_rate
        _, h = sig.freqz(self.taps, worN=w)
        return h

    def impulse_response(self, length: int) -> np.ndarray:
        out = np.zeros(int(length), dtype=np.float64)
        n = min(out.size, self.taps.size)
        out[:n] = self.taps[:n]
        return out

    def describe(self) -> str:
        payload = {
            "kind": "fir",
            "family": self.design_meta.get("family", "custom"),
            "num_taps": int(self.taps.size),
            "corners": self.design_meta.get("corners", {}),
            "sample_rate": self.sample_rate,
            "taps_digest": self.digest(),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.taps, dtype="<f8").tobytes())
        h.update(np.float64(self.sample_rate).tobytes())
        return h.hexdigest()


@dataclass
class ComplementaryPair:
    """Bandpass FIR and its exact complement.

    The bandstop taps are the negated bandpass taps with one added at the
    center, so bandpass + bandstop is a pure delay of (num_taps-1)/2 samples
    by construction, at tap level rather than merely in response.
    """

    bandpass: FirFilter
    bandstop: FirFilter

    def __post_init__(self) -> None:
        bp, bs = self.bandpass.taps, self.bandstop.taps
        if bp.size != bs.size or bp.size % 2 == 0:
            raise ConfigError("pair taps must be equal odd lengths")
        mid = bp.size // 2
        ssum = bp + bs
        ok = ssum[mid] == 1.0 and not np.any(ssum[:mid]) and not np.any(ssum[mid + 1:])
        if not ok:
            raise ConfigError("bandstop taps are not the exact complement")

    @property
    def delay_samples(self) -> int:
        return self.bandpass.group_delay_samples

    @property
    def sample_rate(self) -> float:
        return self.bandpass.sample_rate

    def reset(self) -> None:
        self.bandpass.reset()
        self.bandstop.reset()

    def process(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.bandpass.process(x), self.bandstop.process(x)


# ===========================================================================
# Designs
# ===========================================================================

def design_bessel_lowpass(order: int, f3db: float, sample_rate: float) -> FilterCascade:
    """Maximally-flat-delay lowpass with its -3 dB point at ``f3db``.

    Discretized by the bilinear transform with the corner prewarped, so the
    half-power point lands on ``f3db`` exactly.  The flat-delay character of
    the analog prototype survives only while the corner is well below the
    sample rate; keep f3db under about 0.05 * sample_rate when group-delay
    flatness matters.
    """
    order = int(order)
    if not 1 <= order <= 8:
        raise ValueError(f"order must be in 1..8, got {order}")
    if not 0.0 < f3db < 0.5 * sample_rate:
        raise ValueError(
            f"f3db must be in (0, sample_rate/2), got {f3db} at fs={sample_rate}"
        )
    sos = sig.bessel(order, f3db, btype="low", analog=False, output="sos",
                     norm="mag", fs=sample_rate)
    meta = {
        "family": "bessel_lowpass",
        "order": order,
        "corners": {"f3db": f3db / sample_rate},
    }
    return FilterCascade(sos, sample_rate, meta)


def design_highpass_corner(f3db: float, sample_rate: float) -> FilterCascade:
    """First-order highpass with its -3 dB point at ``f3db``."""
    if not 0.0 < f3db < 0.5 * sample_rate:
        raise ValueError(f"f3db out of range: {f3db} at fs={sample_rate}")
    sos = sig.butter(1, f3db, btype="high", analog=False, output="sos",
                     fs=sample_rate)
    meta = {"family": "highpass1", "order": 1, "corners": {"f3db": f3db / sample_rate}}
    return FilterCascade(sos, sample_rate, meta)


def design_front_end(fc: float, sample_rate: float) -> FilterCascade:
    """Band-limiting receiver model for a carrier at ``fc``.

    First-order highpass at fc/75 stacked with a fourth-order
    maximally-flat-delay lowpass at 4*fc.  Requires sample_rate >= 16*fc so
    the upper corner keeps a factor-two margin to the Nyquist frequency.
    """
    if fc <= 0.0:
        raise ValueError(f"fc must be positive, got {fc}")
    if sample_rate < 16.0 * fc:
        raise ConfigError(
            f"sample_rate must be >= 16*fc, got {sample_rate} < {16.0 * fc}"
        )
    hp = design_highpass_corner(fc / 75.0, sample_rate)
    lp = design_bessel_lowpass(4, 4.0 * fc, sample_rate)
    sos = np.vstack([hp.sos, lp.sos])
    meta = {
        "family": "front_end",
        "order": 5,
        "corners": {"f_lo3db": fc / 75.0 / sample_rate,
                    "f_hi3db": 4.0 * fc / sample_rate},
    }
    return FilterCascade(sos, sample_rate, meta)


def design_codesigned_pair(f_target: float,
                           sample_rate: float) -> tuple[FilterCascade, FilterCascade]:
    """Split a 4th-order flat-delay lowpass into two matched biquad halves.

    The analog prototype's two pole pairs are separated by quality factor:
    the gentler pair becomes the first half (an analog anti-alias model),
    the sharper pair the second (the wideband digital stage).  Both are
    discretized with the same prewarped bilinear map, so cascading them
    reproduces the directly designed 4th-order lowpass at ``f_target``.
    Each half is normalized to unit DC gain.
    """
    if not 0.0 < f_target < 0.1 * sample_rate:
        raise ConfigError(
            f"f_target must be in (0, 0.1*sample_rate), got {f_target} "
            f"at fs={sample_rate}"
        )
    _, p, _ = sig.besselap(4, norm="mag")
    # Scale the normalized prototype to the prewarped corner.
    warped = 2.0 * sample_rate * math.tan(math.pi * f_target / sample_rate)
    p = p * warped
    # Group conjugate poles, sort the pairs by quality factor.
    pairs = []
    used = np.zeros(p.size, dtype=bool)
    for i in range(p.size):
        if used[i]:
            continue
        used[i] = True
        for j in range(i + 1, p.size):
            if not used[j] and np.isclose(p[j], np.conj(p[i])):
                used[j] = True
                pairs.append((p[i], p[j]))
                break
        else:
            raise ConfigError("prototype has an unpaired pole")
    pairs.sort(key=lambda pr: abs(pr[0]) / (2.0 * abs(pr[0].real)))
    cascades = []
    for name, pole_pair in zip(("antialias_half", "wideband_half"), pairs):
        poles = np.asarray(pole_pair)
        # Gain chosen for exactly unit DC response of this half.
        kk = abs(np.prod(-poles))
        zd, pd, kd = sig.bilinear_zpk([], poles, kk, sample_rate)
        sos = sig.zpk2sos(zd, pd, kd)
        meta = {
            "family": name,
            "order": 2,
            "corners": {"f_target": f_target / sample_rate},
        }
        cascades.append(FilterCascade(sos, sample_rate, meta))
    return cascades[0], cascades[1]


def design_complementary_pair(f_lo: float, f_hi: float, sample_rate: float,
                              num_taps: int | None = None) -> ComplementaryPair:
    """Linear-phase bandpass FIR plus its exact delay complement.

    The bandpass is a windowed design with 60 dB stopband rejection; the
    bandstop is its tap-level complement.  ``num_taps`` must be odd; the
    default scales with the lower edge so the passband skirt resolves.
    """
    if not 0.0 < f_lo < f_hi < 0.5 * sample_rate:
        raise ValueError(
            f"need 0 < f_lo < f_hi < sample_rate/2, got {f_lo}, {f_hi}"
        )
    if num_taps is None:
        num_taps = int(math.ceil(8.0 * sample_rate / f_lo))
        if num_taps % 2 == 0:
            num_taps += 1
    num_taps = int(num_taps)
    if num_taps % 2 == 0:
        raise ValueError(f"num_taps must be odd, got {num_taps}")
    if num_taps < 9:
        raise ValueError(f"num_taps too small to shape a band: {num_taps}")
    beta = sig.kaiser_beta(60.0)
    bp = sig.firwin(num_taps, [f_lo, f_hi], window=("kaiser", beta),
                    pass_zero=False, fs=sample_rate)
    bs = -bp
    bs[num_taps // 2] += 1.0
    corners = {"f_lo": f_lo / sample_rate, "f_hi": f_hi / sample_rate}
    fir_bp = FirFilter(bp, sample_rate, {"family": "pair_bandpass", "corners": corners})
    fir_bs = FirFilter(bs, sample_rate, {"family": "pair_bandstop", "corners": corners})
    return ComplementaryPair(fir_bp, fir_bs)


# ===========================================================================
# Measurements
# ===========================================================================

def measure_bandwidth_3db(cascade: FilterCascade,
                          n_grid: int = 1 << 16) -> tuple[float, float]:
    """Two-sided half-power band (f_lo, f_hi) of a filter's response.

    Scans a dense frequency grid for the outermost -3 dB crossings around
    the peak, refining each by local linear interpolation.  A lowpass
    reports f_lo = 0.
    """
    freqs = np.linspace(0.0, 0.5 * cascade.sample_rate, n_grid, endpoint=False)
    mag2 = np.abs(cascade.frequency_response(freqs)) ** 2
    peak = np.max(mag2)
    if peak <= 0.0:
        raise MeasurementError("filter response is identically zero")
    half = 0.5 * peak
    kpk = int(np.argmax(mag2))
    above = mag2 >= half

    def cross(k0: int, step: int) -> float:
        k = k0
        while 0 <= k + step < n_grid and above[k + step]:
            k += step
        k2 = k + step
        if k2 < 0 or k2 >= n_grid:
            return freqs[k]
        f1, f2 = freqs[k], freqs[k2]
        m1, m2 = mag2[k], mag2[k2]
        if m1 == m2:
            return f1
        return f1 + (half - m1) * (f2 - f1) / (m2 - m1)

    f_lo = cross(kpk, -1)
    f_hi = cross(kpk, +1)
    if above[0]:
        f_lo = 0.0
    return float(f_lo), float(f_hi)


def measure_time_bandwidth(cascade: FilterCascade) -> tuple[float, float, float]:
    """Impulse-width, bandwidth and their product for a lowpass cascade.

    Duration is the Gaussian-equivalent full width of the impulse-response
    energy profile: 2*sqrt(2 ln 2) times the root-mean-square width of
    |h(t)|^2 treated as a density.  Bandwidth is the two-sided half-power
    width of |H(f)|^2, twice the one-sided lowpass width, since a real
    baseband response occupies both signs of frequency.  For a Gaussian
    response the product is 2 ln 2 / pi ~= 0.4413, the minimum;
    fast-settling causal filters land within ten percent of it, and the
    reciprocal of the duration is the rate at which unit-area pulses start
    to overlap (about 2.27 times the one-sided width for near-Gaussian
    shapes).

    Returns (duration_seconds, bandwidth_hz, product).  Raises
    MeasurementError if the impulse response has not decayed to 1e-8 of its
    peak within the probe window (non-decaying or marginal filter).
    """
    fs = cascade.sample_rate
    length = 1 << 12
    h = None
    for _ in range(8):
        h = cascade.impulse_response(length)
        peak = np.max(np.abs(h))
        if peak == 0.0:
            raise MeasurementError("impulse response is identically zero")
        tail = np.max(np.abs(h[-length // 16:]))
        if tail <= 1e-8 * peak:
            break
        length *= 2
    else:
        raise MeasurementError(
            "impulse response did not decay within the probe window"
        )
    e = h * h
    total = float(np.sum(e))
    t = np.arange(h.size) / fs
    t0 = float(np.sum(t * e)) / total
    var = float(np.sum((t - t0) ** 2 * e)) / total
    duration = 2.0 * math.sqrt(2.0 * math.log(2.0)) * math.sqrt(var)
    f_lo, f_hi = measure_bandwidth_3db(cascade)
    bandwidth = 2.0 * (f_hi - f_lo)
    return duration, bandwidth, duration * bandwidth


def run_filter(filt, stream: SampleStream) -> SampleStream:
    """Run any stateful filter object over a stream from reset state."""
    if hasattr(filt, "sample_rate") and filt.sample_rate != stream.sample_rate:
        raise ValueError(
            f"filter designed at fs={filt.sample_rate}, stream at {stream.sample_rate}"
        )
    filt.reset()
    return SampleStream(filt.process(stream.samples), stream.sample_rate)


# ===========================================================================
# Decimation
# ===========================================================================

class Decimator:
    """Anti-alias FIR plus downsampler with streaming phase tracking.

    ``protect_band`` is the top frequency that must come through flat; the
    FIR transition runs from there to the output Nyquist frequency with at
    least 60 dB of stop rejection.  factor=1 degenerates to an exact
    passthrough with zero delay.
    """

    def __init__(self, factor: int, protect_band: float, sample_rate: float):
        factor = int(factor)
        if factor < 1:
            raise ValueError(f"factor must be >= 1, got {factor}")
        if not 0.0 < protect_band < 0.5 * sample_rate:
            raise ValueError(
                f"protect_band must be in (0, sample_rate/2), got {protect_band}"
            )
        out_nyq = 0.5 * sample_rate / factor
        if factor > 1 and protect_band >= out_nyq:
            raise ConfigError(
                f"protect_band {protect_band} reaches the output Nyquist {out_nyq}"
            )
        self.factor = factor
        self.input_rate = float(sample_rate)
        self.output_rate = float(sample_rate) / factor
        if factor == 1:
            self.fir = None
            self._phase = 0
            return
        width = out_nyq - protect_band
        numtaps, beta = sig.kaiserord(60.0, width / (0.5 * sample_rate))
        numtaps += (numtaps + 1) % 2  # force odd
        cutoff = 0.5 * (protect_band + out_nyq)
        taps = sig.firwin(numtaps, cutoff, window=("kaiser", beta), fs=sample_rate)
        self.fir = FirFilter(taps, sample_rate,
                             {"family": "decimator_lowpass",
                              "corners": {"pass": protect_band / sample_rate,
                                          "stop": out_nyq / sample_rate}})
        self._phase = 0

    @property
    def delay_samples(self) -> int:
        """Group delay of the anti-alias FIR, in input samples."""
        return 0 if self.fir is None else self.fir.group_delay_samples

    def reset(self) -> None:
        if self.fir is not None:
            self.fir.reset()
        self._phase = 0

    def process(self, x: np.ndarray) -> np.ndarray:
        if self.fir is None:
            return np.ascontiguousarray(x, dtype=np.float64).copy()
        y = self.fir.process(x)
        start = (-self._phase) % self.factor
        out = y[start::self.factor].copy()
        self._phase = (self._phase + y.shape[0]) % self.factor
        return out


def decimate(stream: SampleStream, factor: int, protect_band: float) -> SampleStream:
    """One-shot decimation of a whole stream."""
    dec = Decimator(factor, protect_band, stream.sample_rate)
    return SampleStream(dec.process(stream.samples), dec.output_rate)
