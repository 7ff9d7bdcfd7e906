"""Robust order statistics for streaming use.

Covers the blanking nonlinearity, Tukey-style fence construction, the
quantile tracking filter (a one-state estimator whose equilibrium is the
running q-th quantile of its input), and the quantile-driven AGC clipper
that normalizes signal scale ahead of the nonlinear stages.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels


def blank(x, alpha_minus: float, alpha_plus: float):
    """Pass values inside [alpha_minus, alpha_plus], zero the rest.

    Works on scalars and arrays.  The fences may be infinite, in which case
    the input comes back unchanged.
    """
    if not alpha_minus <= alpha_plus:
        raise ValueError(
            f"need alpha_minus <= alpha_plus, got {alpha_minus} > {alpha_plus}"
        )
    arr = np.asarray(x, dtype=np.float64)
    out = np.where((arr >= alpha_minus) & (arr <= alpha_plus), arr, 0.0)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def tukey_fences(q1: float, q3: float, beta: float = 1.5) -> tuple[float, float]:
    """Classic quartile fences: (q1 - beta*iqr, q3 + beta*iqr)."""
    if q3 < q1:
        raise ValueError(f"need q1 <= q3, got q1={q1}, q3={q3}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    iqr = q3 - q1
    return (q1 - beta * iqr, q3 + beta * iqr)


def symmetric_fence(q2_abs: float, beta: float) -> float:
    """Fence magnitude (1 + 2*beta) * q2_abs for a symmetric distribution.

    ``q2_abs`` is the median of the absolute value.  For zero-centered data
    the absolute-value median equals half the interquartile range, so this
    reproduces the Tukey fence without needing both quartiles.
    """
    if q2_abs < 0.0:
        raise ValueError(f"q2_abs must be >= 0, got {q2_abs}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return (1.0 + 2.0 * beta) * q2_abs


def ofdm_quantile(ts: float, tg: float) -> float:
    """Quantile level that maps to the active-interval median.

    A frame alternates an active interval of length ``ts`` with a silent
    guard of length ``tg``.  Over the whole frame, |x| has a point mass of
    weight tg/(ts+tg) at zero, so the quantile of the full stream that
    corresponds to the median of the active part is shifted upward:
    q = (tg + ts/2) / (ts + tg).
    """
    if ts <= 0.0 or tg < 0.0:
        raise ValueError(f"need ts > 0 and tg >= 0, got ts={ts}, tg={tg}")
    return (tg + 0.5 * ts) / (ts + tg)


# ---------------------------------------------------------------------------
# Quantile tracking filter
# ---------------------------------------------------------------------------

@dataclass
class QtfState:
    """State of the scalar quantile tracking filter.

    estimate moves by mu*dt*(sign(y - estimate) + 2q - 1) per sample, with
    sign(0) = 0.  mu is the slew rate in amplitude per second; it bounds the
    tracker's response to any single sample, which is what makes the
    estimate robust to outliers.
    """

    q: float
    mu: float
    estimate: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {self.q}")
        if self.mu <= 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")


def qtf_step(state: QtfState, y: float, dt: float) -> QtfState:
    """One update of the quantile tracking filter."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    s = float(np.sign(y - state.estimate))
    est = state.estimate + state.mu * dt * (s + 2.0 * state.q - 1.0)
    return replace(state, estimate=est)


class QuantileTracker:
    """Block-mode quantile tracking filter with a moving-average readout.

    Wraps the compiled kernel; repeated scalar qtf_step calls produce the
    same estimate sequence.  ``window`` sets the length (in samples) of the
    moving average of the estimate, which downstream consumers read instead
    of the raw estimate to suppress its limit-cycle jitter.
    """

    def __init__(self, q: float, mu: float, dt: float, window: int,
                 initial: float = 0.0):
        if not 0.0 < q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {q}")
        if mu <= 0.0 or dt <= 0.0:
            raise ValueError(f"mu and dt must be positive, got mu={mu}, dt={dt}")
        window = int(window)
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.q = float(q)
        self.mu = float(mu)
        self.dt = float(dt)
        self.window = window
        self._ring = np.zeros(window, dtype=np.float64)
        self._fstate = np.array([float(initial), 0.0], dtype=np.float64)
        self._istate = np.zeros(2, dtype=np.int64)

    @property
    def estimate(self) -> float:
        return float(self._fstate[0])

    @property
    def window_avg(self) -> float:
        count = int(self._istate[1])
        if count == 0:
            return float(self._fstate[0])
        return float(self._fstate[1]) / count

    def process(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Run a block; returns (estimate series, moving-average series)."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        out_q = np.empty_like(x)
        out_avg = np.empty_like(x)
        _kernels.qtf_block(x, self.q, self.mu * self.dt, self._ring,
                           self._fstate, self._istate, out_q, out_avg)
        return out_q, out_avg


# ---------------------------------------------------------------------------
# AGC clipper
# ---------------------------------------------------------------------------

def agc_target(clip_level: float, beta: float = 3.0, headroom: float = 1.25) -> float:
    """Target for the tracked |x| median so fences fit under the clip level.

    Solves (1 + 2*beta) * headroom * target = clip_level: once the AGC
    settles, a symmetric fence built from the tracked median sits a factor
    ``headroom`` below the clip level.
    """
    if clip_level <= 0.0:
        raise ValueError(f"clip_level must be positive, got {clip_level}")
    if beta < 0.0 or headroom < 1.0:
        raise ValueError(f"bad beta={beta} or headroom={headroom}")
    return clip_level / ((1.0 + 2.0 * beta) * headroom)


class AgcClipper:
    """Slow AGC in front of a hard clipper at +-clip_level.

    The gain multiplies the input before clipping.  A quantile tracker runs
    on the magnitude of the clipped output and the gain relaxes the tracked
    level toward ``target`` geometrically at rate ``adaptation_rate`` (per
    second, in log-gain units).  Downstream stages that need the original
    scale divide by the per-sample gain that ``process`` reports.

    Multiplying the input by any constant leaves the settled output
    unchanged up to that same constant in the reported gain: the loop is
    scale equivariant.
    """

    def __init__(self, clip_level: float, target: float, adaptation_rate: float,
                 dt: float, qtf_q: float = 0.5, qtf_mu: float | None = None,
                 window: int = 1024, gain: float = 1.0):
        if clip_level <= 0.0:
            raise ValueError(f"clip_level must be positive, got {clip_level}")
        if target <= 0.0 or target >= clip_level:
            raise ValueError(
                f"target must be in (0, clip_level), got {target}"
            )
        if adaptation_rate <= 0.0 or dt <= 0.0:
            raise ValueError("adaptation_rate and dt must be positive")
        if not 0.0 < qtf_q < 1.0:
            raise ValueError(f"qtf_q must be in (0, 1), got {qtf_q}")
        window = int(window)
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        if qtf_mu is None:
            # Slew across the full clip range per window by default: the
            # tracker must settle much faster than the gain loop it feeds,
            # or the combined lag turns the loop into an oscillator.
            qtf_mu = clip_level / (window * dt)
        if qtf_mu <= 0.0:
            raise ValueError(f"qtf_mu must be positive, got {qtf_mu}")
        if gain <= 0.0:
            raise ValueError(f"initial gain must be positive, got {gain}")
        self.clip_level = float(clip_level)
        self.target = float(target)
        self.adaptation_rate = float(adaptation_rate)
        self.dt = float(dt)
        self.qtf_q = float(qtf_q)
        self.qtf_mu = float(qtf_mu)
        self.window = window
        self._ring = np.zeros(window, dtype=np.float64)
        self._fstate = np.array([float(gain), 0.0, 0.0], dtype=np.float64)
        self._istate = np.zeros(2, dtype=np.int64)

    @property
    def gain(self) -> float:
        return float(self._fstate[0])

    @property
    def tracked_level(self) -> float:
        count = int(self._istate[1])
        if count == 0:
            return float(self._fstate[1])
        return float(self._fstate[2]) / count

    def process(self, x: np.ndarray):
        """Run a block; returns (clipped, clip_flags, gains)."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        out = np.empty_like(x)
        flags = np.empty(x.shape[0], dtype=np.uint8)
        gains = np.empty_like(x)
        _kernels.agc_clip_block(
            x, self.clip_level, self.target,
            self.adaptation_rate * self.dt, self.qtf_q,
            self.qtf_mu * self.dt, self._ring, self._fstate, self._istate,
            out, flags, gains,
        )
        return out, flags, gains


def agc_clip_step(clipper: AgcClipper, x: float) -> tuple[float, bool]:
    """Feed one sample through an AgcClipper; returns (clipped, clip flag).

    Identical arithmetic to ``process`` on a length-1 block, so scalar and
    block use can be mixed freely.
    """
    out, flags, _ = clipper.process(np.array([float(x)]))
    return float(out[0]), bool(flags[0])
