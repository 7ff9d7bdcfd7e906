"""Streaming DSP toolkit for hidden-outlier interference mitigation.

Core pieces: complementary band-split filtering with an adaptive
differential clipper on the low-signal branch, a clip-and-modulate
converter chain built around it, robust streaming statistics (quantile
tracking, adaptive fences, AGC), scenario generators (chirp, multicarrier
QPSK, thermal noise, impulsive and burst interference) and a sweep
harness that compares linear and nonlinear chain variants.
"""

from .adc import (AdcChain, AdcChainConfig, DeltaSigmaModulator, adc_chain,
                  design_analog_front, dsm_process)
from .diffclip import (AdicState, CafTrace, ComplementaryClipper,
                       DifferentialClipper, adic_fence_update, adic_step,
                       caf_process, hampel_filter)
from .errors import ConfigError, MeasurementError
from .filters import (ComplementaryPair, Decimator, FilterCascade, FirFilter,
                      decimate, design_bessel_lowpass,
                      design_codesigned_pair, design_complementary_pair,
                      design_front_end, design_highpass_corner,
                      measure_bandwidth_3db, measure_time_bandwidth,
                      run_filter)
from .metrics import (average_slew_rate, band_power, capacity_proxy,
                      excess_kurtosis, passband_snr, pileup_threshold)
from .robust import (AgcClipper, QtfState, QuantileTracker, agc_clip_step,
                     agc_target, blank, ofdm_quantile, qtf_step,
                     symmetric_fence, tukey_fences)
from .scenarios import (OfdmConfig, OutlierNoiseSpec, calibrate_components,
                        calibrate_mix, gen_chirp, gen_gaussian_bursts,
                        gen_ofdm, gen_outliers, gen_poisson_impulses,
                        gen_thermal)
from .streams import (DelayLine, RngSpec, SampleStream, delay, iter_blocks,
                      mix, read_raw, write_raw)
from .sweep import (MetricsRecord, SweepGrid, SweepPoint, records_to_csv,
                    run_sweep)

__version__ = "0.1.0"

__all__ = [
    "AdcChain", "AdcChainConfig", "AdicState", "AgcClipper", "CafTrace",
    "ComplementaryClipper", "ComplementaryPair", "ConfigError", "Decimator",
    "DelayLine", "DeltaSigmaModulator", "DifferentialClipper",
    "FilterCascade", "FirFilter", "MeasurementError", "MetricsRecord",
    "OfdmConfig", "OutlierNoiseSpec", "QtfState", "QuantileTracker",
    "RngSpec", "SampleStream", "SweepGrid", "SweepPoint", "adc_chain",
    "adic_fence_update", "adic_step", "agc_clip_step", "agc_target",
    "average_slew_rate", "band_power", "blank", "caf_process",
    "calibrate_components", "calibrate_mix", "capacity_proxy", "decimate",
    "delay", "design_analog_front", "design_bessel_lowpass",
    "design_codesigned_pair", "design_complementary_pair",
    "design_front_end", "design_highpass_corner", "dsm_process",
    "excess_kurtosis", "gen_chirp", "gen_gaussian_bursts", "gen_ofdm",
    "gen_outliers", "gen_poisson_impulses", "gen_thermal", "hampel_filter",
    "iter_blocks", "measure_bandwidth_3db", "measure_time_bandwidth", "mix",
    "ofdm_quantile", "passband_snr", "pileup_threshold", "qtf_step",
    "read_raw", "records_to_csv", "run_filter", "run_sweep",
    "symmetric_fence", "tukey_fences", "write_raw",
]
