"""Oversampled converter chain with clip, modulate, filter and blank stages.

Order of stages, after the analog band-limiting model that the caller
applies up front:

    AGC clipper -> delta-sigma modulator -> gain undo -> reconstruction
    lowpass -> complementary clipper (or plain delay, or nothing) ->
    decimator

The AGC keeps the working scale pinned so both the clipper and the fence
logic see a known level; the gain undo after the modulator returns the
stream to input units so downstream references need no rescaling.  The
reconstruction lowpass is one half of a co-designed split whose other half
belongs in the analog model, keeping the end-to-end linear response equal
to the single full filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .diffclip import ComplementaryClipper, DifferentialClipper, MIN_TAU_SAMPLES
from .errors import ConfigError, MeasurementError
from .filters import (FilterCascade, Decimator, design_codesigned_pair,
                      design_complementary_pair, design_highpass_corner)
from .robust import AgcClipper, agc_target, ofdm_quantile
from .streams import DelayLine, SampleStream


@dataclass
class DeltaSigmaModulator:
    """Second-order single-bit modulator.

    Output samples are exactly +-v_ref.  Stable for inputs bounded well
    inside the reference (about 0.7 * v_ref); a MeasurementError reports
    state overflow beyond 10 * v_ref, which indicates instability rather
    than a recoverable condition.
    """

    v_ref: float = 1.0

    def __post_init__(self) -> None:
        if self.v_ref <= 0.0:
            raise ValueError(f"v_ref must be positive, got {self.v_ref}")
        self._fstate = np.zeros(4, dtype=np.float64)

    @property
    def max_abs_state(self) -> float:
        return float(self._fstate[3])

    def reset(self) -> None:
        self._fstate[:] = 0.0

    def process(self, u: np.ndarray) -> np.ndarray:
        u = np.ascontiguousarray(u, dtype=np.float64)
        out = np.empty_like(u)
        _kernels.dsm_block(u, self.v_ref, self._fstate, out)
        if self._fstate[3] > 10.0 * self.v_ref:
            raise MeasurementError(
                f"modulator state overflow: |state| reached "
                f"{self._fstate[3]:.3g} > {10.0 * self.v_ref:.3g}"
            )
        return out


def dsm_process(stream: SampleStream, v_ref: float = 1.0) -> SampleStream:
    """One-shot modulation of a whole stream from reset state."""
    mod = DeltaSigmaModulator(v_ref)
    return SampleStream(mod.process(stream.samples), stream.sample_rate)


@dataclass
class AdcChainConfig:
    """Parameters of the converter chain.

    The sample rate is the modulator rate; ``decim_factor`` takes the
    output down to sample_rate / decim_factor.  Guard: the complementary
    pair's band and the decimator's protected band must fit under the
    output Nyquist frequency.

    ``caf_mode``:
      * "on"    - complementary clipper with self-tuning fences
      * "wide"  - same structure, fences pinned at +-infinity (never blanks)
      * "delay" - plain delay matching the pair's group delay
      * "off"   - stage absent entirely (no delay inserted)
    """

    fc: float
    sample_rate: float
    decim_factor: int = 4
    clip_level: float = 1.0
    quantizer_level: float = 2.0
    clipper_enabled: bool = True
    # Applied when the AGC clipper is disabled: static scale into the
    # quantizer, undone after it.  Lets an all-linear chain keep the
    # modulator inside its stable input range.
    fixed_gain: float = 1.0
    modulator_enabled: bool = True
    caf_mode: str = "on"
    fence_beta: float = 3.0
    pair_lo: float | None = None
    pair_hi: float | None = None
    pair_taps: int | None = None
    adic_tau: float | None = None
    wideband_corner: float | None = None
    protect_band: float | None = None
    window_seconds: float | None = None
    agc_q: float | None = None
    trace: bool = False

    def __post_init__(self) -> None:
        if self.fc <= 0.0:
            raise ValueError(f"fc must be positive, got {self.fc}")
        if self.sample_rate < 16.0 * self.fc:
            raise ConfigError(
                f"sample_rate must be >= 16*fc, got {self.sample_rate}"
            )
        if self.caf_mode not in ("on", "wide", "delay", "off"):
            raise ConfigError(f"unknown caf_mode {self.caf_mode!r}")
        if self.clip_level <= 0.0 or self.quantizer_level <= 0.0:
            raise ValueError("levels must be positive")
        if self.fixed_gain <= 0.0:
            raise ValueError(f"fixed_gain must be positive, got {self.fixed_gain}")
        if self.clip_level > self.quantizer_level:
            raise ConfigError(
                "clip_level must not exceed quantizer_level: the clipper "
                "bounds the modulator input inside its stable range"
            )
        if self.decim_factor < 1:
            raise ValueError(f"decim_factor must be >= 1, got {self.decim_factor}")
        if self.pair_lo is None:
            self.pair_lo = 0.8 * self.fc
        if self.pair_hi is None:
            self.pair_hi = 1.2 * self.fc
        if not 0.0 < self.pair_lo < self.pair_hi:
            raise ConfigError(f"bad pair band ({self.pair_lo}, {self.pair_hi})")
        out_nyq = 0.5 * self.sample_rate / self.decim_factor
        if self.pair_hi >= out_nyq:
            raise ConfigError(
                f"pair band top {self.pair_hi} reaches output Nyquist {out_nyq}"
            )
        if self.wideband_corner is None:
            # Five times the output Nyquist when oversampling allows, else
            # as wide as the co-designed split supports.
            self.wideband_corner = min(5.0 * out_nyq, 0.095 * self.sample_rate)
        if not self.pair_hi < 10.0 * self.wideband_corner:
            raise ConfigError(
                f"wideband corner {self.wideband_corner} far below the pair "
                f"band top {self.pair_hi}"
            )
        if self.protect_band is None:
            self.protect_band = min(1.5 * self.pair_hi, 0.8 * out_nyq)
        if self.decim_factor > 1 and self.protect_band >= out_nyq:
            raise ConfigError(
                f"protect_band {self.protect_band} reaches output Nyquist {out_nyq}"
            )
        if self.window_seconds is None:
            # Default averaging horizon: one frame of the stock multicarrier
            # scenario on this carrier (active 768/fc plus its guard).
            ts = 768.0 / self.fc
            self.window_seconds = 1.46 * ts
        if self.window_seconds <= 0.0:
            raise ValueError("window_seconds must be positive")
        if self.agc_q is None:
            self.agc_q = ofdm_quantile(1.0, 0.46)
        dt = 1.0 / self.sample_rate
        tau_floor = MIN_TAU_SAMPLES * dt
        if self.adic_tau is None:
            self.adic_tau = max(1.0 / (2.0 * math.pi * 4.0 * self.fc), tau_floor)
        if self.adic_tau < tau_floor:
            raise ConfigError(
                f"adic_tau={self.adic_tau} below {MIN_TAU_SAMPLES:g} sample "
                f"periods at fs={self.sample_rate}"
            )


class AdcChain:
    """Streaming converter chain; single-use state, block split invariant."""

    def __init__(self, cfg: AdcChainConfig):
        self.cfg = cfg
        fs = cfg.sample_rate
        dt = 1.0 / fs
        window = int(round(cfg.window_seconds * fs))
        window = max(window, 16)
        self.window_samples = window

        if cfg.clipper_enabled:
            # Loop rate a quarter of the averaging window keeps the gain
            # servo well damped against the window's group delay.
            self.agc = AgcClipper(
                clip_level=cfg.clip_level,
                target=agc_target(cfg.clip_level, cfg.fence_beta),
                adaptation_rate=0.25 / cfg.window_seconds,
                dt=dt, qtf_q=cfg.agc_q, window=window,
            )
        else:
            self.agc = None

        self.modulator = DeltaSigmaModulator(cfg.quantizer_level) \
            if cfg.modulator_enabled else None

        _, stage_b = design_codesigned_pair(cfg.wideband_corner, fs)
        self.recon = stage_b

        if cfg.caf_mode in ("on", "wide"):
            pair = design_complementary_pair(cfg.pair_lo, cfg.pair_hi, fs,
                                             cfg.pair_taps)
            if cfg.caf_mode == "on":
                floor = 1e-9 * cfg.clip_level
                mu = 0.1 * cfg.clip_level / cfg.window_seconds
                clip = DifferentialClipper(
                    cfg.adic_tau, dt, fences=None, beta=cfg.fence_beta,
                    fence_floor=floor, qtf_mu=mu, window=window,
                )
            else:
                clip = DifferentialClipper(
                    cfg.adic_tau, dt, fences=(-math.inf, math.inf),
                )
            self.caf = ComplementaryClipper(pair, clip, keep_trace=cfg.trace)
            self.caf_delay = None
        elif cfg.caf_mode == "delay":
            pair_taps = cfg.pair_taps
            if pair_taps is None:
                pair_taps = int(math.ceil(8.0 * fs / cfg.pair_lo))
                if pair_taps % 2 == 0:
                    pair_taps += 1
            self.caf = None
            self.caf_delay = DelayLine((pair_taps - 1) // 2)
        else:
            self.caf = None
            self.caf_delay = None

        self.decimator = Decimator(cfg.decim_factor, cfg.protect_band, fs)
        self.output_rate = self.decimator.output_rate

        # Per-run bookkeeping at the modulator rate.
        self.clip_flags: list[np.ndarray] = []
        self.gain_trace: list[np.ndarray] = []

    @property
    def delay_samples(self) -> int:
        """Group delay at the modulator rate contributed by FIR stages."""
        d = self.decimator.delay_samples
        if self.caf is not None:
            d += self.caf.delay_samples
        elif self.caf_delay is not None:
            d += self.caf_delay.length
        return d

    @property
    def blanking_duty(self) -> float:
        if self.caf is None:
            return 0.0
        return self.caf.blanking_duty

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if self.agc is not None:
            y, flags, gains = self.agc.process(x)
            self.clip_flags.append(flags)
            self.gain_trace.append(gains)
        elif self.cfg.fixed_gain != 1.0:
            g = self.cfg.fixed_gain
            y, gains = g * x, np.full(x.shape, g)
        else:
            y, gains = x, None
        if self.modulator is not None:
            y = self.modulator.process(y)
        if gains is not None:
            y = y / gains
        y = self.recon.process(y)
        if self.caf is not None:
            y = self.caf.process(y)
        elif self.caf_delay is not None:
            y = self.caf_delay.process(y)
        return self.decimator.process(y)

    def run(self, stream: SampleStream) -> SampleStream:
        if stream.sample_rate != self.cfg.sample_rate:
            raise ValueError(
                f"chain at fs={self.cfg.sample_rate}, stream at "
                f"{stream.sample_rate}"
            )
        return SampleStream(self.process(stream.samples), self.output_rate)


def adc_chain(stream: SampleStream, cfg: AdcChainConfig) -> SampleStream:
    """Run a freshly built chain over a whole stream."""
    return AdcChain(cfg).run(stream)


def design_analog_front(cfg: AdcChainConfig) -> FilterCascade:
    """Analog-side band model matched to a chain configuration.

    Highpass corner at fc/75 plus the anti-alias half of the co-designed
    split at the chain's wideband corner.  Apply this to the raw mixture
    before the chain; together with the chain's internal wideband half the
    linear path reproduces the full 4th-order band-limiting response.
    """
    hp = design_highpass_corner(cfg.fc / 75.0, cfg.sample_rate)
    stage_a, _ = design_codesigned_pair(cfg.wideband_corner, cfg.sample_rate)
    sos = np.vstack([hp.sos, stage_a.sos])
    meta = {
        "family": "analog_front_half",
        "order": 3,
        "corners": {"f_lo3db": cfg.fc / 75.0 / cfg.sample_rate,
                    "f_target": cfg.wideband_corner / cfg.sample_rate},
    }
    return FilterCascade(sos, cfg.sample_rate, meta)
