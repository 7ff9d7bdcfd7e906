"""Signal and interference generators plus power-calibrated mixing.

Everything is deterministic given its RngSpec.  Amplitude units are
arbitrary but consistent: generators emit convenient scales (multicarrier
signal at unit active RMS, raw interference at unit strength) and
calibrate_mix rescales components so the requested in-band power ratios
hold exactly as measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .metrics import band_power
from .streams import RngSpec, SampleStream


@dataclass
class OfdmConfig:
    """Multicarrier scenario geometry.

    The defaults follow the stock study: bandwidth fc/3 split over 256
    QPSK subcarriers, silent guard of 0.46 of the symbol duration, sampled
    at 16*fc.  Subcarriers sit on exact FFT bins of the per-symbol
    transform, so each symbol is perfectly periodic in its active window.
    """

    fc: float
    sample_rate: float | None = None
    bandwidth: float | None = None
    n_subcarriers: int = 256
    guard_fraction: float = 0.46
    rng: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self) -> None:
        if self.fc <= 0.0:
            raise ValueError(f"fc must be positive, got {self.fc}")
        if self.sample_rate is None:
            self.sample_rate = 16.0 * self.fc
        if self.sample_rate < 16.0 * self.fc:
            raise ConfigError(
                f"sample_rate must be >= 16*fc, got {self.sample_rate}"
            )
        if self.bandwidth is None:
            self.bandwidth = self.fc / 3.0
        if not 0.0 < self.bandwidth < 2.0 * self.fc:
            raise ConfigError(f"bad bandwidth {self.bandwidth}")
        if self.n_subcarriers < 2:
            raise ConfigError(f"need >= 2 subcarriers, got {self.n_subcarriers}")
        if not 0.0 < self.guard_fraction < 1.0:
            raise ConfigError(f"bad guard_fraction {self.guard_fraction}")
        spacing = self.bandwidth / self.n_subcarriers
        ns = self.sample_rate / spacing
        if abs(ns - round(ns)) > 1e-9 * ns:
            raise ConfigError(
                "symbol length is not a whole number of samples; adjust "
                f"bandwidth or sample_rate (got {ns})"
            )
        self.symbol_samples = int(round(ns))
        base = (self.fc - 0.5 * self.bandwidth) / spacing
        if abs(base - round(base)) > 1e-9 * max(base, 1.0):
            raise ConfigError(
                "subcarriers do not fall on whole FFT bins; adjust fc or "
                f"bandwidth (got base bin {base})"
            )
        self.base_bin = int(round(base))
        if self.base_bin < 1:
            raise ConfigError("band reaches down to DC")
        if self.base_bin + self.n_subcarriers > self.symbol_samples // 2:
            raise ConfigError("band reaches the Nyquist frequency")
        self.guard_samples = int(round(self.guard_fraction * self.symbol_samples))
        self.frame_samples = self.symbol_samples + self.guard_samples

    @property
    def subcarrier_spacing(self) -> float:
        return self.bandwidth / self.n_subcarriers

    @property
    def symbol_duration(self) -> float:
        return self.symbol_samples / self.sample_rate

    @property
    def guard_duration(self) -> float:
        return self.guard_samples / self.sample_rate

    @property
    def band(self) -> tuple[float, float]:
        """Occupied band (f_lo, f_hi) for power accounting."""
        return (self.fc - 0.5 * self.bandwidth, self.fc + 0.5 * self.bandwidth)


@dataclass
class OutlierNoiseSpec:
    """Interference description for the sweep scenarios.

    ``rate`` is in events per second (the sweep layer converts from
    fractions of the pileup threshold before building the spec).  For
    bursts, each period 1/rate carries one burst of length duty_cycle/rate.
    ``power_db_rel_thermal`` is bookkeeping used by the mixing step.
    """

    kind: str
    rate: float
    duty_cycle: float = 0.10
    power_db_rel_thermal: float = 0.0
    rng: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self) -> None:
        if self.kind not in ("poisson-normal", "periodic-gaussian-burst"):
            raise ValueError(f"unknown interference kind {self.kind!r}")
        if self.rate <= 0.0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not 0.0 < self.duty_cycle <= 1.0:
            raise ValueError(f"duty_cycle must be in (0, 1], got {self.duty_cycle}")


def gen_chirp(f0: float, f1: float, duration: float, sample_rate: float,
              phase0: float = 0.0) -> SampleStream:
    """Unit-amplitude linear frequency sweep from f0 to f1.

    f0 = f1 degenerates to a pure tone.  The instantaneous frequency is
    exactly linear in time.
    """
    if not 0.0 < f0 <= f1 < 0.5 * sample_rate:
        raise ValueError(
            f"need 0 < f0 <= f1 < Nyquist, got f0={f0}, f1={f1} at "
            f"fs={sample_rate}"
        )
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    phase = 2.0 * np.pi * (f0 * t + 0.5 * (f1 - f0) * t * t / duration) + phase0
    return SampleStream(np.sin(phase), sample_rate)


def gen_ofdm(cfg: OfdmConfig, n_symbols: int) -> SampleStream:
    """Real passband multicarrier signal, unit RMS over active intervals.

    Each symbol places an independent QPSK point on every subcarrier bin
    and inverse-transforms; guard gaps are exactly zero.  The deterministic
    scale 1/sqrt(n_subcarriers/2) sets active RMS to one without measuring
    the realization, keeping generation linear in the constellation.
    """
    n_symbols = int(n_symbols)
    if n_symbols < 1:
        raise ValueError(f"n_symbols must be >= 1, got {n_symbols}")
    rng = cfg.rng.rng()
    ns = cfg.symbol_samples
    out = np.zeros(n_symbols * cfg.frame_samples, dtype=np.float64)
    scale = 1.0 / math.sqrt(cfg.n_subcarriers / 2.0)
    # QPSK points at unit magnitude, 45-degree constellation.
    points = np.exp(1j * (np.pi / 4.0 + np.pi / 2.0 * np.arange(4)))
    for s in range(n_symbols):
        sym = rng.integers(0, 4, size=cfg.n_subcarriers)
        spectrum = np.zeros(ns // 2 + 1, dtype=np.complex128)
        spectrum[cfg.base_bin: cfg.base_bin + cfg.n_subcarriers] = points[sym]
        # One bin of unit magnitude maps to a unit-amplitude cosine.
        wave = np.fft.irfft(spectrum, ns) * (ns / 2.0) * scale
        start = s * cfg.frame_samples
        out[start: start + ns] = wave
    return SampleStream(out, cfg.sample_rate)


def gen_thermal(duration: float, sample_rate: float, rng: RngSpec) -> SampleStream:
    """Unit-variance white Gaussian noise."""
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = int(round(duration * sample_rate))
    return SampleStream(rng.rng().standard_normal(n), sample_rate)


def gen_poisson_impulses(spec: OutlierNoiseSpec, duration: float,
                         sample_rate: float) -> SampleStream:
    """Impulse train: Poisson arrivals, independent normal amplitudes.

    Multiple arrivals inside one sample period add in power (the sample
    value is normal with variance equal to the arrival count), so the
    construction stays exact deep into pileup where rate * dt >> 1.
    """
    if spec.kind != "poisson-normal":
        raise ValueError(f"spec.kind must be poisson-normal, got {spec.kind!r}")
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = int(round(duration * sample_rate))
    rng = spec.rng.rng()
    counts = rng.poisson(spec.rate / sample_rate, size=n)
    amps = rng.standard_normal(n) * np.sqrt(counts)
    return SampleStream(amps, sample_rate)


def gen_gaussian_bursts(spec: OutlierNoiseSpec, duration: float,
                        sample_rate: float) -> SampleStream:
    """Periodically gated white Gaussian noise.

    One burst per period 1/rate, active for the first duty_cycle fraction
    of the period, zero elsewhere.  duty_cycle = 1 degenerates to
    continuous white noise.
    """
    if spec.kind != "periodic-gaussian-burst":
        raise ValueError(
            f"spec.kind must be periodic-gaussian-burst, got {spec.kind!r}"
        )
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = int(round(duration * sample_rate))
    period = sample_rate / spec.rate
    if period < 2.0:
        raise ValueError(
            f"burst period shorter than two samples (rate {spec.rate} at "
            f"fs={sample_rate})"
        )
    phase = np.arange(n) % period
    gate = phase < spec.duty_cycle * period
    noise = spec.rng.rng().standard_normal(n)
    return SampleStream(np.where(gate, noise, 0.0), sample_rate)


def gen_outliers(spec: OutlierNoiseSpec, duration: float,
                 sample_rate: float) -> SampleStream:
    """Dispatch on the interference kind."""
    if spec.kind == "poisson-normal":
        return gen_poisson_impulses(spec, duration, sample_rate)
    return gen_gaussian_bursts(spec, duration, sample_rate)


def calibrate_components(signal: SampleStream, thermal: SampleStream,
                         outlier: SampleStream | None, snr_thermal_db: float,
                         outlier_rel_db: float,
                         band: tuple[float, float]) -> tuple[float, float]:
    """Scale factors making the requested in-band power ratios hold.

    Returns (thermal_scale, outlier_scale).  The thermal component is scaled
    so the in-band signal-to-thermal ratio is snr_thermal_db; the outlier
    component so its in-band power sits outlier_rel_db above the scaled
    thermal's.  outlier_rel_db = -inf (or a missing outlier) gives scale 0.
    """
    p_sig = band_power(signal, band)
    p_th = band_power(thermal, band)
    if p_sig <= 0.0 or p_th <= 0.0:
        raise ValueError("zero in-band power in signal or thermal component")
    p_th_target = p_sig * 10.0 ** (-snr_thermal_db / 10.0)
    thermal_scale = math.sqrt(p_th_target / p_th)
    if outlier is None or outlier_rel_db == -math.inf:
        return thermal_scale, 0.0
    p_out = band_power(outlier, band)
    if p_out <= 0.0:
        raise ValueError("zero in-band power in outlier component")
    p_out_target = p_th_target * 10.0 ** (outlier_rel_db / 10.0)
    return thermal_scale, math.sqrt(p_out_target / p_out)


def calibrate_mix(signal: SampleStream, thermal: SampleStream,
                  outlier: SampleStream | None, snr_thermal_db: float,
                  outlier_rel_db: float,
                  band: tuple[float, float]) -> SampleStream:
    """Sum of signal plus calibrated noise components.

    See calibrate_components for the power conventions.  Rates and lengths
    must agree.
    """
    if thermal.sample_rate != signal.sample_rate or len(thermal) != len(signal):
        raise ValueError("thermal component rate/length mismatch")
    if outlier is not None and (outlier.sample_rate != signal.sample_rate
                                or len(outlier) != len(signal)):
        raise ValueError("outlier component rate/length mismatch")
    th_scale, out_scale = calibrate_components(
        signal, thermal, outlier, snr_thermal_db, outlier_rel_db, band)
    mixed = signal.samples + th_scale * thermal.samples
    if outlier is not None and out_scale != 0.0:
        mixed = mixed + out_scale * outlier.samples
    return SampleStream(mixed, signal.sample_rate)
