"""Comparison sweeps: linear vs clipper vs clipper-plus-complementary.

One grid point is a scenario (interference kind, rate, duty, power, thermal
SNR, replicate seed); every point runs all requested chain variants over
the same mixture realization and reports passband SNR, capacity proxy,
error kurtosis and blanking duty against a clean reference propagated
through the identical all-linear chain.  Chain parameters are fixed
functions of the carrier geometry; nothing is tuned per point.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adc import AdcChain, AdcChainConfig, design_analog_front
from .errors import MeasurementError
from .filters import FilterCascade, measure_bandwidth_3db, run_filter
from .metrics import (capacity_proxy, excess_kurtosis, passband_snr,
                      pileup_threshold)
from .scenarios import (OfdmConfig, OutlierNoiseSpec, calibrate_components,
                        gen_ofdm, gen_outliers, gen_thermal)
from .streams import RngSpec, SampleStream

VARIANTS = ("linear", "clipper", "clipper+caf")
# Extra variant used by no-harm checks: full chain with fences pinned open.
WIDE_VARIANT = "clipper+widecaf"

_VARIANT_SWITCHES = {
    "linear": {"clipper_enabled": False, "caf_mode": "delay"},
    "clipper": {"clipper_enabled": True, "caf_mode": "delay"},
    "clipper+caf": {"clipper_enabled": True, "caf_mode": "on"},
    WIDE_VARIANT: {"clipper_enabled": True, "caf_mode": "wide"},
}


@dataclass(frozen=True)
class SweepGrid:
    """Full cross product of scenario axes, each point every variant."""

    kind: str = "poisson-normal"
    rates_rel: tuple = (0.01, 0.05)
    outlier_rel_db: tuple = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0,
                             15.0, 20.0, 25.0, 30.0)
    duties: tuple = (0.10,)
    thermal_snr_db: tuple = (30.0, 10.0)
    repetitions: int = 4
    base_seed: int = 20260801
    n_symbols: int = 50
    fc: float = 1.0
    modulator_enabled: bool = False
    variants: tuple = VARIANTS
    settle_frames: int = 6

    def __post_init__(self) -> None:
        if self.kind not in ("poisson-normal", "periodic-gaussian-burst"):
            raise ValueError(f"unknown interference kind {self.kind!r}")
        for v in self.variants:
            if v not in _VARIANT_SWITCHES:
                raise ValueError(f"unknown variant {v!r}")
        if self.repetitions < 1 or self.n_symbols < 2:
            raise ValueError("need repetitions >= 1 and n_symbols >= 2")

    def points(self) -> list["SweepPoint"]:
        """Grid points in canonical order."""
        pts = []
        idx = 0
        for thermal in self.thermal_snr_db:
            for rate_rel in self.rates_rel:
                for duty in self.duties:
                    for rel in self.outlier_rel_db:
                        for rep in range(self.repetitions):
                            pts.append(SweepPoint(
                                index=idx, rate_rel=float(rate_rel),
                                duty=float(duty), outlier_rel_db=float(rel),
                                thermal_snr_db=float(thermal), rep=rep))
                            idx += 1
        return pts


@dataclass(frozen=True)
class SweepPoint:
    index: int
    rate_rel: float
    duty: float
    outlier_rel_db: float
    thermal_snr_db: float
    rep: int

    def scenario_id(self, kind: str) -> str:
        return (f"{kind}:rate{self.rate_rel:g}:duty{self.duty:g}:"
                f"rel{self.outlier_rel_db:g}:th{self.thermal_snr_db:g}:"
                f"rep{self.rep}")


@dataclass
class MetricsRecord:
    """One variant at one grid point.  ``note`` is empty unless the point
    failed; it travels in the manifest, not the CSV."""

    scenario_id: str
    rate_rel: float
    duty_cycle: float
    outlier_rel_db: float
    thermal_snr_db: float
    variant: str
    passband_snr_db: float
    capacity_proxy_bits_s_hz: float
    excess_kurtosis: float
    blanking_duty: float
    note: str = ""

    CSV_COLUMNS = ("scenario_id", "rate_rel", "duty_cycle", "outlier_rel_db",
                   "thermal_snr_db", "variant", "passband_snr_db",
                   "capacity_proxy_bits_s_hz", "excess_kurtosis",
                   "blanking_duty")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.10g}"
    return str(value)


def records_to_csv(records: list[MetricsRecord]) -> str:
    """Serialize records with the fixed column order, one line each."""
    lines = [",".join(MetricsRecord.CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt(getattr(rec, col))
                              for col in MetricsRecord.CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def chain_config(grid: SweepGrid, variant: str) -> AdcChainConfig:
    """Chain switches for one variant; everything else is grid defaults."""
    switches = _VARIANT_SWITCHES[variant]
    return AdcChainConfig(
        fc=grid.fc, sample_rate=16.0 * grid.fc, decim_factor=4,
        modulator_enabled=grid.modulator_enabled, **switches)


def grid_pileup_threshold(grid: SweepGrid) -> float:
    """Pileup threshold of the sweep chain's composite linear band."""
    cfg = chain_config(grid, "linear")
    front = design_analog_front(cfg)
    chain = AdcChain(cfg)
    composite = FilterCascade(
        np.vstack([front.sos, chain.recon.sos]), cfg.sample_rate,
        {"family": "sweep_composite", "order": 5})
    f_lo, f_hi = measure_bandwidth_3db(composite)
    return pileup_threshold(f_hi - f_lo)


def _point_records(grid: SweepGrid, pt: SweepPoint,
                   lambda_c: float) -> list[MetricsRecord]:
    """Run one grid point: shared mixture, all variants, full metrics."""
    fs = 16.0 * grid.fc
    base_stream = pt.index * 8
    ofdm = OfdmConfig(grid.fc, rng=RngSpec(grid.base_seed, base_stream))
    clean = gen_ofdm(ofdm, grid.n_symbols)
    duration = clean.duration
    thermal = gen_thermal(duration, fs, RngSpec(grid.base_seed, base_stream + 1))
    rate = pt.rate_rel * lambda_c
    noise_spec = OutlierNoiseSpec(
        kind=grid.kind, rate=rate, duty_cycle=pt.duty,
        power_db_rel_thermal=pt.outlier_rel_db,
        rng=RngSpec(grid.base_seed, base_stream + 2))
    outlier = gen_outliers(noise_spec, duration, fs)
    th_scale, out_scale = calibrate_components(
        clean, thermal, outlier, pt.thermal_snr_db, pt.outlier_rel_db,
        ofdm.band)
    mixture = SampleStream(
        clean.samples + th_scale * thermal.samples
        + out_scale * outlier.samples, fs)

    ref_cfg = chain_config(grid, "linear")
    pre_mix = run_filter(design_analog_front(ref_cfg), mixture)
    pre_clean = run_filter(design_analog_front(ref_cfg), clean)
    ref_out = AdcChain(ref_cfg).run(pre_clean)

    # Discard AGC/tracker convergence plus filter flush before measuring.
    chain_probe = AdcChain(ref_cfg)
    settle_in = (grid.settle_frames * ofdm.frame_samples
                 + 4 * chain_probe.delay_samples)
    skip = settle_in // ref_cfg.decim_factor
    if skip >= len(ref_out) - 4096:
        raise MeasurementError(
            "run too short to settle; increase n_symbols"
        )
    ref_tail = ref_out.slice(skip)

    records = []
    for variant in grid.variants:
        chain = AdcChain(chain_config(grid, variant))
        out = chain.run(pre_mix)
        out_tail = out.slice(skip)
        snr = passband_snr(out_tail, ref_tail, ofdm.band)
        err = SampleStream(out_tail.samples - ref_tail.samples, out.sample_rate)
        try:
            kurt = excess_kurtosis(err)
        except MeasurementError:
            kurt = math.nan
        records.append(MetricsRecord(
            scenario_id=pt.scenario_id(grid.kind),
            rate_rel=pt.rate_rel, duty_cycle=pt.duty,
            outlier_rel_db=pt.outlier_rel_db,
            thermal_snr_db=pt.thermal_snr_db, variant=variant,
            passband_snr_db=snr,
            capacity_proxy_bits_s_hz=capacity_proxy(snr),
            excess_kurtosis=kurt,
            blanking_duty=chain.blanking_duty))
    return records


def _point_task(args) -> list[MetricsRecord]:
    grid, pt, lambda_c = args
    try:
        return _point_records(grid, pt, lambda_c)
    except Exception as exc:  # per-point failure: record and continue
        return [MetricsRecord(
            scenario_id=pt.scenario_id(grid.kind), rate_rel=pt.rate_rel,
            duty_cycle=pt.duty, outlier_rel_db=pt.outlier_rel_db,
            thermal_snr_db=pt.thermal_snr_db, variant=variant,
            passband_snr_db=math.nan, capacity_proxy_bits_s_hz=math.nan,
            excess_kurtosis=math.nan, blanking_duty=math.nan,
            note=f"{type(exc).__name__}: {exc}")
            for variant in grid.variants]


def run_sweep(grid: SweepGrid, workers: int = 1) -> list[MetricsRecord]:
    """Run every grid point and variant; records in canonical grid order.

    ``workers`` > 1 distributes points over a process pool; results are
    merged by point index so output order and content never depend on
    completion order.
    """
    lambda_c = grid_pileup_threshold(grid)
    points = grid.points()
    tasks = [(grid, pt, lambda_c) for pt in points]
    if workers <= 1:
        per_point = [_point_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(_point_task, tasks))
    records = []
    for recs in per_point:
        records.extend(recs)
    return records
