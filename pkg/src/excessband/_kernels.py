"""Compiled per-sample loops.

Everything here is a plain numerical kernel: state comes in as small arrays
that are mutated in place, outputs are preallocated by the caller.  The
Python classes in robust.py / diffclip.py / adc.py own allocation, parameter
validation and the public API; these functions own only the arithmetic.

The exact operation order inside each loop is part of the contract.  In
particular the in-range branch of the differential clipper assigns the input
sample through untouched (bit identity), and the quantile trackers read
their window average before pushing the new estimate, so results do not
depend on how the input was split into blocks.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def qtf_block(x, q, mu_dt, ring, fstate, istate, out_q, out_avg):
    """Quantile tracking filter over one block.

    fstate = [estimate, ring_sum]; istate = [ring_index, ring_count].
    ``ring`` holds the last ``len(ring)`` estimates for the moving average.
    out_q gets the post-update estimate per sample, out_avg the moving
    average including that estimate.
    """
    est = fstate[0]
    rsum = fstate[1]
    ridx = istate[0]
    rcount = istate[1]
    w = ring.shape[0]
    drift = 2.0 * q - 1.0
    for k in range(x.shape[0]):
        v = x[k]
        if v > est:
            s = 1.0
        elif v < est:
            s = -1.0
        else:
            s = 0.0
        est = est + mu_dt * (s + drift)
        if rcount == w:
            rsum -= ring[ridx]
        else:
            rcount += 1
        ring[ridx] = est
        rsum += est
        ridx += 1
        if ridx == w:
            ridx = 0
        out_q[k] = est
        out_avg[k] = rsum / rcount
    fstate[0] = est
    fstate[1] = rsum
    istate[0] = ridx
    istate[1] = rcount


@njit(cache=True, nogil=True)
def agc_clip_block(x, clip_level, target, eta_dt, q, mu_dt, ring, fstate,
                   istate, out, flags, gains):
    """AGC plus hard clipper over one block.

    fstate = [gain, qtf_estimate, ring_sum]; istate = [ring_index, ring_count].
    The quantile tracker runs on |clipped sample| and its moving average
    drives a multiplicative gain update toward ``target``.  ``out`` receives
    the clipped samples (already scaled by the gain), ``gains`` the gain that
    was applied to each sample, ``flags`` 1 where the clipper engaged.
    """
    gain = fstate[0]
    est = fstate[1]
    rsum = fstate[2]
    ridx = istate[0]
    rcount = istate[1]
    w = ring.shape[0]
    drift = 2.0 * q - 1.0
    for k in range(x.shape[0]):
        v = gain * x[k]
        clipped = 0
        if v > clip_level:
            v = clip_level
            clipped = 1
        elif v < -clip_level:
            v = -clip_level
            clipped = 1
        out[k] = v
        flags[k] = clipped
        gains[k] = gain
        a = abs(v)
        if a > est:
            s = 1.0
        elif a < est:
            s = -1.0
        else:
            s = 0.0
        est = est + mu_dt * (s + drift)
        if rcount == w:
            rsum -= ring[ridx]
        else:
            rcount += 1
        ring[ridx] = est
        rsum += est
        ridx += 1
        if ridx == w:
            ridx = 0
        avg = rsum / rcount
        if avg < 1e-12:
            avg = 1e-12
        # Clamp the log error so a cold (near-zero) tracker cannot slew the
        # gain off to infinity before the ring fills with real estimates.
        err = np.log(target / avg)
        if err > 2.0:
            err = 2.0
        elif err < -2.0:
            err = -2.0
        gain = gain * np.exp(eta_dt * err)
    fstate[0] = gain
    fstate[1] = est
    fstate[2] = rsum
    istate[0] = ridx
    istate[1] = rcount


@njit(cache=True, nogil=True)
def adic_block(x, dt_over_tau, fence_gain, fence_floor, fixed_lo, fixed_hi,
               adaptive, q, mu_dt, ring, fstate, istate, out, blanked):
    """Analog differential clipper over one block.

    fstate = [level, started, qtf_estimate, ring_sum];
    istate = [ring_index, ring_count].

    Per sample: d = x - level.  If d sits inside the fences the input passes
    through bit-identical and the level relaxes toward the input by
    d * dt/tau; otherwise the output is the frozen level and the sample is
    flagged as blanked.  With ``adaptive`` nonzero the fences are
    +-max(fence_gain * avg, fence_floor) where avg is the moving average of a
    quantile tracker running on |d|; the tracker is read before it absorbs
    the current sample.  With ``adaptive`` zero the fixed fences apply
    (either may be infinite).
    """
    level = fstate[0]
    started = fstate[1]
    est = fstate[2]
    rsum = fstate[3]
    ridx = istate[0]
    rcount = istate[1]
    w = ring.shape[0]
    drift = 2.0 * q - 1.0
    for k in range(x.shape[0]):
        xv = x[k]
        if started == 0.0:
            level = xv
            started = 1.0
        d = xv - level
        if adaptive != 0:
            if rcount > 0:
                avg = rsum / rcount
            else:
                avg = 0.0
            fence = fence_gain * avg
            if fence < fence_floor:
                fence = fence_floor
            lo = -fence
            hi = fence
        else:
            lo = fixed_lo
            hi = fixed_hi
        if d >= lo and d <= hi:
            out[k] = xv
            blanked[k] = 0
            level = level + dt_over_tau * d
        else:
            out[k] = level
            blanked[k] = 1
        if adaptive != 0:
            a = abs(d)
            if a > est:
                s = 1.0
            elif a < est:
                s = -1.0
            else:
                s = 0.0
            est = est + mu_dt * (s + drift)
            if rcount == w:
                rsum -= ring[ridx]
            else:
                rcount += 1
            ring[ridx] = est
            rsum += est
            ridx += 1
            if ridx == w:
                ridx = 0
    fstate[0] = level
    fstate[1] = started
    fstate[2] = est
    fstate[3] = rsum
    istate[0] = ridx
    istate[1] = rcount


@njit(cache=True, nogil=True)
def dsm_block(u, v_ref, fstate, out):
    """Second-order delta-sigma modulator over one block.

    fstate = [integrator1, integrator2, last_output, max_abs_state].
    Both integrators update from the input minus the fed-back quantized
    output (the second with feedback weight 2), then the comparator emits
    +-v_ref from the second integrator sign.  max_abs_state tracks the
    largest |integrator2| seen, for overflow detection by the caller.
    """
    i1 = fstate[0]
    i2 = fstate[1]
    y = fstate[2]
    mx = fstate[3]
    for k in range(u.shape[0]):
        i1 = i1 + u[k] - y
        i2 = i2 + i1 - 2.0 * y
        if i2 >= 0.0:
            y = v_ref
        else:
            y = -v_ref
        out[k] = y
        a = abs(i2)
        if a > mx:
            mx = a
    fstate[0] = i1
    fstate[1] = i2
    fstate[2] = y
    fstate[3] = mx
