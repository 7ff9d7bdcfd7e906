"""Intermittent nonlinear filtering built around a differential clipper.

The differential clipper compares each input sample with a slow internal
level (a first-order lowpass of the samples it accepts).  While the
difference stays inside the fences the sample passes through bit-identical
and the level relaxes toward it; when the difference jumps the fence the
output freezes at the level, blanking the excursion.  Fences either stay
fixed or follow a robust estimate of the difference magnitude, so the
clipper engages only on statistical outliers and is transparent otherwise.

The complementary arrangement routes a signal through a bandpass/bandstop
FIR pair, clips only the stopband branch, and adds back the delayed
passband.  Outliers are wideband, so most of their energy crosses into the
stopband branch and gets blanked there, while the protected band rejoins
the output untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import ConfigError
from .filters import ComplementaryPair
from .streams import DelayLine, SampleStream

# The level lowpass must be slow relative to sampling for the discrete
# update to approximate its continuous behavior.
MIN_TAU_SAMPLES = 50.0


@dataclass
class AdicState:
    """State and parameters of a scalar differential clipper.

    ``fences`` are absolute bounds on (input - level); either side may be
    infinite.  ``level`` holds the internal lowpass state; ``started``
    is False until the first sample seeds it.  ``blanking`` reports whether
    the previous step blanked.
    """

    tau: float
    fences: tuple[float, float] = (-math.inf, math.inf)
    level: float = 0.0
    started: bool = False
    blanking: bool = False

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        lo, hi = self.fences
        if not lo <= 0.0 <= hi:
            raise ValueError(f"fences must bracket zero, got {self.fences}")


def adic_step(state: AdicState, x: float, dt: float) -> tuple[float, AdicState]:
    """One differential-clipper update; returns (output, new state)."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > state.tau / MIN_TAU_SAMPLES:
        raise ConfigError(
            f"dt={dt} too coarse for tau={state.tau}; need dt <= tau/{MIN_TAU_SAMPLES:g}"
        )
    level = state.level
    if not state.started:
        level = x
    d = x - level
    lo, hi = state.fences
    if lo <= d <= hi:
        out = x
        level = level + (dt / state.tau) * d
        blanking = False
    else:
        out = level
        blanking = True
    return out, replace(state, level=level, started=True, blanking=blanking)


def adic_fence_update(state: AdicState, tracked_abs_diff, beta: float,
                      floor: float = 0.0) -> AdicState:
    """Refresh fences from a tracked median of |input - level|.

    ``tracked_abs_diff`` is either a float or an object with a
    ``window_avg`` attribute (a QuantileTracker).  The fence magnitude is
    (1 + 2*beta) times that value, floored at ``floor``.
    """
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    level = getattr(tracked_abs_diff, "window_avg", tracked_abs_diff)
    fence = max((1.0 + 2.0 * beta) * float(level), float(floor))
    return replace(state, fences=(-fence, fence))


class DifferentialClipper:
    """Block-mode differential clipper, fixed or self-tuning fences.

    With ``fences`` given, they stay put.  With ``fences=None`` the clipper
    tracks the median of |input - level| through a quantile tracker and sets
    the fences to (1 + 2*beta) times its moving average each sample, floored
    at ``fence_floor``.  Block splits do not affect output; repeated
    adic_step calls with matching parameters produce the same samples.
    """

    def __init__(self, tau: float, dt: float,
                 fences: tuple[float, float] | None = None,
                 beta: float = 3.0, fence_floor: float = 0.0,
                 qtf_mu: float | None = None, window: int = 1024,
                 qtf_init: float = 0.0):
        if tau <= 0.0 or dt <= 0.0:
            raise ValueError(f"tau and dt must be positive, got {tau}, {dt}")
        if dt > tau / MIN_TAU_SAMPLES:
            raise ConfigError(
                f"dt={dt} too coarse for tau={tau}; need dt <= tau/{MIN_TAU_SAMPLES:g}"
            )
        self.tau = float(tau)
        self.dt = float(dt)
        self.adaptive = fences is None
        if self.adaptive:
            if beta < 0.0:
                raise ValueError(f"beta must be >= 0, got {beta}")
            window = int(window)
            if window < 1:
                raise ValueError(f"window must be >= 1, got {window}")
            if qtf_mu is None or qtf_mu <= 0.0:
                raise ValueError(
                    "self-tuning fences need a positive qtf_mu slew rate"
                )
            self.beta = float(beta)
            self.fence_floor = float(fence_floor)
            self.qtf_mu = float(qtf_mu)
            self.window = window
            self._fixed = (0.0, 0.0)
        else:
            lo, hi = fences
            if not lo <= 0.0 <= hi:
                raise ValueError(f"fences must bracket zero, got {fences}")
            self.beta = float(beta)
            self.fence_floor = 0.0
            self.qtf_mu = 1.0
            self.window = 1
            self._fixed = (float(lo), float(hi))
        self._ring = np.zeros(self.window, dtype=np.float64)
        self._fstate = np.zeros(4, dtype=np.float64)
        self._fstate[2] = float(qtf_init)
        self._qtf_init = float(qtf_init)
        self._istate = np.zeros(2, dtype=np.int64)

    @property
    def level(self) -> float:
        return float(self._fstate[0])

    @property
    def current_fence(self) -> float:
        """Fence magnitude the next sample will see (self-tuning mode)."""
        if not self.adaptive:
            return self._fixed[1]
        count = int(self._istate[1])
        avg = float(self._fstate[3]) / count if count else 0.0
        return max((1.0 + 2.0 * self.beta) * avg, self.fence_floor)

    def reset(self) -> None:
        self._ring[:] = 0.0
        self._fstate[:] = 0.0
        self._fstate[2] = self._qtf_init
        self._istate[:] = 0

    def process(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Run a block; returns (output, blank flags)."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        out = np.empty_like(x)
        blanked = np.empty(x.shape[0], dtype=np.uint8)
        _kernels.adic_block(
            x, self.dt / self.tau,
            1.0 + 2.0 * self.beta, self.fence_floor,
            self._fixed[0], self._fixed[1],
            1 if self.adaptive else 0,
            0.5, self.qtf_mu * self.dt,
            self._ring, self._fstate, self._istate, out, blanked,
        )
        return out, blanked


@dataclass
class CafTrace:
    """Per-sample intermediate signals of one complementary-filter run."""

    input: np.ndarray
    bandpass: np.ndarray
    bandstop: np.ndarray
    adic_out: np.ndarray
    caf_out: np.ndarray
    blanking_flag: np.ndarray

    COLUMNS = ("input", "bandpass", "bandstop", "adic_out", "caf_out",
               "blanking_flag")

    def as_columns(self) -> list[np.ndarray]:
        return [self.input, self.bandpass, self.bandstop, self.adic_out,
                self.caf_out, self.blanking_flag.astype(np.float64)]


class ComplementaryClipper:
    """Complementary pair with a differential clipper on the stopband branch.

    Output = bandpass(x) + clip(bandstop(x)); since the pair sums to a pure
    delay, the output equals the delayed input exactly wherever the clipper
    did not blank.  ``delay_samples`` is the pair's group delay.
    """

    def __init__(self, pair: ComplementaryPair, clipper: DifferentialClipper,
                 keep_trace: bool = False):
        self.pair = pair
        self.clipper = clipper
        self.keep_trace = keep_trace
        self.blanked_samples = 0
        self.total_samples = 0
        self.last_trace: CafTrace | None = None

    @property
    def delay_samples(self) -> int:
        return self.pair.delay_samples

    @property
    def sample_rate(self) -> float:
        return self.pair.sample_rate

    @property
    def blanking_duty(self) -> float:
        """Fraction of processed samples blanked so far."""
        if self.total_samples == 0:
            return 0.0
        return self.blanked_samples / self.total_samples

    def reset(self) -> None:
        self.pair.reset()
        self.clipper.reset()
        self.blanked_samples = 0
        self.total_samples = 0
        self.last_trace = None

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        bp, bs = self.pair.process(x)
        clipped, blanked = self.clipper.process(bs)
        out = bp + clipped
        self.blanked_samples += int(np.sum(blanked))
        self.total_samples += x.shape[0]
        if self.keep_trace:
            self.last_trace = CafTrace(x.copy(), bp, bs, clipped, out, blanked)
        return out


def caf_process(graph: ComplementaryClipper, stream: SampleStream) -> SampleStream:
    """Run a complementary clipper over a whole stream."""
    if graph.sample_rate != stream.sample_rate:
        raise ValueError(
            f"graph at fs={graph.sample_rate}, stream at {stream.sample_rate}"
        )
    return SampleStream(graph.process(stream.samples), stream.sample_rate)


def hampel_filter(stream: SampleStream, window: int = 11,
                  n_sigma: float = 3.0) -> SampleStream:
    """Rolling-median spike suppressor, for cross-checking blank decisions.

    Each sample farther than n_sigma robust standard deviations (1.4826 *
    rolling MAD) from the rolling median is replaced by that median.  Batch
    only; the streaming clippers are the production path.
    """
    window = int(window)
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if n_sigma <= 0.0:
        raise ValueError(f"n_sigma must be positive, got {n_sigma}")
    x = stream.samples
    half = window // 2
    padded = np.pad(x, half, mode="edge")
    shape = (x.size, window)
    strides = (padded.strides[0], padded.strides[0])
    windows = np.lib.stride_tricks.as_strided(padded, shape=shape, strides=strides)
    med = np.median(windows, axis=1)
    mad = np.median(np.abs(windows - med[:, None]), axis=1)
    sigma = 1.4826 * mad
    out = np.where(np.abs(x - med) > n_sigma * sigma, med, x)
    return SampleStream(out, stream.sample_rate)
