from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch every compiled kernel once so timed tests never pay for JIT."""
    from excessband import (AgcClipper, DeltaSigmaModulator,
                            DifferentialClipper, QuantileTracker, agc_target)

    x = np.linspace(-1.0, 1.0, 64)
    QuantileTracker(q=0.5, mu=0.1, dt=1.0, window=8).process(np.abs(x))
    AgcClipper(clip_level=1.0, target=agc_target(1.0), adaptation_rate=0.1,
               dt=1.0, window=8).process(x)
    DifferentialClipper(64.0, 1.0, fences=(-1.0, 1.0)).process(x)
    DifferentialClipper(64.0, 1.0, fences=None, beta=3.0, qtf_mu=0.1,
                        window=8).process(x)
    DeltaSigmaModulator(2.0).process(x)
