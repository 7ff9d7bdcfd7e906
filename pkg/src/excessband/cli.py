"""Command-line front door: demos, sweeps, one-off chain runs.

Subcommands
    demo-morph   one event train through three band-limiting filters
    demo-chirp   complementary clipper vs plain delay on a noisy sweep
    sweep        grid comparison of chain variants, CSV output
    filter       apply a configured chain to a raw float64 file

Configuration is ``key = value`` text; named presets supply defaults and
file values override them, command-line flags override both.  Every
command drops a ``manifest.json`` capturing the resolved configuration,
seeds and filter digests, enough to reproduce its outputs bit for bit.

Exit codes: 0 success, 1 invariant or measurement failure, 2 bad
configuration or arguments.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .adc import AdcChain, AdcChainConfig, design_analog_front
from .demos import (ChirpDemoConfig, MorphConfig, build_chirp_caf,
                    run_demo_chirp, run_demo_morph)
from .errors import ConfigError, MeasurementError
from .filters import design_bessel_lowpass, run_filter
from .streams import SampleStream, read_raw, write_raw
from .sweep import SweepGrid, chain_config, records_to_csv, run_sweep

TOOL_NAME = "excessband"


# ===========================================================================
# Config file handling
# ===========================================================================

class ConfigSource:
    """Parsed key=value file plus override bookkeeping.

    Keeps the source line of every entry so type errors can point at the
    offending line.  Flag overrides are added with line 0.
    """

    def __init__(self, path: str | None = None):
        self.path = path or "<flags>"
        self.entries: dict[str, tuple[str, int]] = {}
        if path is not None:
            self._parse(path)

    def _parse(self, path: str) -> None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}"
                )
            if key in self.entries:
                first = self.entries[key][1]
                raise ConfigError(
                    f"{path}:{lineno}: duplicate key {key!r} "
                    f"(first set on line {first})"
                )
            self.entries[key] = (value, lineno)

    def override(self, key: str, value) -> None:
        if value is not None:
            self.entries[key] = (str(value), 0)

    def _context(self, key: str) -> str:
        lineno = self.entries[key][1]
        return f"{self.path}:{lineno}" if lineno else f"flag --{key}"

    def consume(self, key: str):
        return self.entries.pop(key, (None, 0))[0]

    def reject_leftovers(self, known: set) -> None:
        for key in self.entries:
            raise ConfigError(
                f"{self._context(key)}: unknown key {key!r}; "
                f"expected one of {sorted(known)}"
            )

    # -- typed getters ----------------------------------------------------

    def _typed(self, key: str, caster, kind: str):
        raw, lineno = self.entries.pop(key)
        try:
            return caster(raw)
        except (ValueError, TypeError) as exc:
            where = f"{self.path}:{lineno}" if lineno else f"flag --{key}"
            raise ConfigError(
                f"{where}: {key} wants {kind}, got {raw!r}"
            ) from exc

    def take(self, key: str, kind: str):
        """Pop ``key`` cast per ``kind`` tag, or None when absent."""
        if key not in self.entries:
            return None
        casters = {
            "int": ("an integer", int),
            "float": ("a number", float),
            "bool": ("true/false", _parse_bool),
            "str": ("a string", str),
            "floats": ("comma-separated numbers",
                       lambda s: tuple(float(p) for p in _split(s))),
            "strs": ("comma-separated names",
                     lambda s: tuple(_split(s))),
        }
        kindname, caster = casters[kind]
        return self._typed(key, caster, kindname)


def _split(s: str) -> list[str]:
    parts = [p.strip() for p in s.split(",")]
    if any(not p for p in parts):
        raise ValueError("empty element")
    return parts


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(s)


def _apply_keys(source: ConfigSource, schema: dict) -> dict:
    """Pull every schema key from the source; error on leftovers."""
    out = {}
    for key, kind in schema.items():
        value = source.take(key, kind)
        if value is not None:
            out[key] = value
    source.reject_leftovers(set(schema))
    return out


# ===========================================================================
# Presets
# ===========================================================================

# Sweep presets.  "poisson" and "bursts" share the amplitude axis and the
# two thermal levels; "duty" walks the burst duty cycle at fixed rate and
# power; "smoke" is a seconds-long grid for determinism checks.
SWEEP_PRESETS = {
    "poisson": {},
    "bursts": {"kind": "periodic-gaussian-burst"},
    "duty": {
        "kind": "periodic-gaussian-burst",
        "rates_rel": (0.05,),
        "duties": (0.10, 0.20, 0.40, 0.60, 0.80),
        "outlier_rel_db": (20.0,),
        "thermal_snr_db": (30.0,),
    },
    "smoke": {
        "rates_rel": (0.01,),
        "outlier_rel_db": (0.0, 30.0),
        "thermal_snr_db": (30.0,),
        "repetitions": 1,
        "n_symbols": 8,
        "settle_frames": 2,
    },
}

_SWEEP_SCHEMA = {
    "kind": "str", "rates_rel": "floats", "outlier_rel_db": "floats",
    "duties": "floats", "thermal_snr_db": "floats", "repetitions": "int",
    "base_seed": "int", "n_symbols": "int", "fc": "float",
    "modulator_enabled": "bool", "variants": "strs", "settle_frames": "int",
}

_MORPH_SCHEMA = {
    "n_samples": "int", "sample_rate": "float", "event_rate": "float",
    "corner_wide": "float", "corner_mid": "float", "corner_narrow": "float",
    "seed": "int",
}

_CHIRP_SCHEMA = {
    "n_samples": "int", "sample_rate": "float", "noise": "bool",
    "wide_fences": "bool", "thermal_snr_db": "float",
    "impulse_rel_db": "float", "rate_rel": "float", "fence_beta": "float",
    "seed": "int",
}

_FILTER_SCHEMA = {
    "fc": "float", "sample_rate": "float", "decim_factor": "int",
    "clip_level": "float", "quantizer_level": "float",
    "clipper_enabled": "bool", "fixed_gain": "float",
    "modulator_enabled": "bool",
    "caf_mode": "str", "fence_beta": "float", "pair_lo": "float",
    "pair_hi": "float", "pair_taps": "int", "adic_tau": "float",
    "wideband_corner": "float", "protect_band": "float",
    "window_seconds": "float", "agc_q": "float", "analog_front": "bool",
}


def build_sweep_grid(args) -> tuple[SweepGrid, str]:
    preset = args.preset or "poisson"
    if preset not in SWEEP_PRESETS:
        raise ConfigError(
            f"unknown sweep preset {preset!r}; "
            f"choose from {sorted(SWEEP_PRESETS)}"
        )
    source = ConfigSource(args.config)
    if args.seed is not None:
        source.override("base_seed", args.seed)
    kwargs = dict(SWEEP_PRESETS[preset])
    kwargs.update(_apply_keys(source, _SWEEP_SCHEMA))
    try:
        return SweepGrid(**kwargs), preset
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_demo_config(args, schema: dict, cls, expect_preset: str):
    if args.preset is not None and args.preset != expect_preset:
        raise ConfigError(
            f"this command only knows preset {expect_preset!r}, "
            f"got {args.preset!r}"
        )
    source = ConfigSource(args.config)
    if args.seed is not None:
        source.override("seed", args.seed)
    kwargs = _apply_keys(source, schema)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ===========================================================================
# Manifest
# ===========================================================================

@dataclasses.dataclass
class RunManifest:
    """Everything needed to reproduce one command's outputs."""

    command: str
    preset: str | None
    version: str
    started: str
    finished: str = ""
    seed: int | None = None
    config: dict = dataclasses.field(default_factory=dict)
    filter_digests: dict = dataclasses.field(default_factory=dict)
    outputs: dict = dataclasses.field(default_factory=dict)
    results: dict = dataclasses.field(default_factory=dict)
    notes: list = dataclasses.field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2,
                          sort_keys=True) + "\n"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _start_manifest(command: str, preset: str | None, cfg_obj) -> RunManifest:
    from . import __version__
    return RunManifest(
        command=command, preset=preset, version=__version__,
        started=_now(), config=_jsonable(dataclasses.asdict(cfg_obj)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _finish(manifest: RunManifest, out_dir: Path) -> Path:
    manifest.finished = _now()
    path = out_dir / "manifest.json"
    path.write_text(manifest.to_json())
    return path


def _chain_digests(chain: AdcChain) -> dict:
    d = {"reconstruction": chain.recon.digest()}
    if chain.caf is not None:
        d["pair_bandpass"] = chain.caf.pair.bandpass.digest()
        d["pair_bandstop"] = chain.caf.pair.bandstop.digest()
    if chain.decimator.fir is not None:
        d["decimator"] = chain.decimator.fir.digest()
    return d


def _write_columns(path: Path, names, columns) -> None:
    table = np.column_stack([np.asarray(c, dtype=np.float64)
                             for c in columns])
    np.savetxt(path, table, fmt="%.10g", delimiter=",",
               header=",".join(names), comments="")


# ===========================================================================
# Commands
# ===========================================================================

def cmd_demo_morph(args) -> int:
    cfg = build_demo_config(args, _MORPH_SCHEMA, MorphConfig, "morph")
    out_dir = _ensure_out(args.out)
    manifest = _start_manifest("demo-morph", "morph", cfg)
    manifest.seed = cfg.seed

    result = run_demo_morph(cfg)
    fs = cfg.sample_rate
    names = ["time"] + list(result.traces)
    n = len(next(iter(result.traces.values())))
    columns = [np.arange(n) / fs] + [tr.samples for tr in result.traces.values()]
    trace_path = Path(out_dir) / "morph_traces.csv"
    _write_columns(trace_path, names, columns)

    filters = {
        "interference_wide": design_bessel_lowpass(1, cfg.corner_wide * fs, fs),
        "interference_mid": design_bessel_lowpass(2, cfg.corner_mid * fs, fs),
        "interference_pileup": design_bessel_lowpass(2, cfg.corner_narrow * fs, fs),
    }
    manifest.filter_digests = {k: f.digest() for k, f in filters.items()}
    manifest.outputs = {"traces": trace_path.name}
    manifest.results = {
        "excess_kurtosis": _jsonable(result.kurtosis),
        "rate_over_pileup_threshold": _jsonable(result.rate_over_threshold),
    }
    _finish(manifest, out_dir)

    for name, k in result.kurtosis.items():
        print(f"{name}: excess kurtosis {k:+.3f}")
    print(f"wrote {trace_path}")
    return 0


def cmd_demo_chirp(args) -> int:
    cfg = build_demo_config(args, _CHIRP_SCHEMA, ChirpDemoConfig, "chirp")
    out_dir = _ensure_out(args.out)
    manifest = _start_manifest("demo-chirp", "chirp", cfg)
    manifest.seed = cfg.seed

    result = run_demo_chirp(cfg)
    names = ["time"] + list(result.TRACE_COLUMNS)
    cols = result.trace_columns()
    columns = [np.arange(len(cols[0])) / cfg.sample_rate] + cols
    trace_path = Path(out_dir) / "chirp_traces.csv"
    _write_columns(trace_path, names, columns)

    caf = build_chirp_caf(cfg, keep_trace=False)
    manifest.filter_digests = {
        "pair_bandpass": caf.pair.bandpass.digest(),
        "pair_bandstop": caf.pair.bandstop.digest(),
    }
    manifest.outputs = {"traces": trace_path.name}
    manifest.results = {
        "snr_linear_db": result.snr_linear_db,
        "snr_caf_db": result.snr_caf_db,
        "delta_caf_rms_rel": result.delta_caf_rms_rel,
        "blanking_duty": result.blanking_duty,
    }
    _finish(manifest, out_dir)

    print(f"linear path passband SNR: {result.snr_linear_db:.2f} dB")
    print(f"caf path passband SNR:    {result.snr_caf_db:.2f} dB")
    print(f"blanking duty: {result.blanking_duty:.4f}")
    print(f"wrote {trace_path}")
    return 0


def cmd_sweep(args) -> int:
    grid, preset = build_sweep_grid(args)
    out_dir = _ensure_out(args.out)
    manifest = _start_manifest("sweep", preset, grid)
    manifest.seed = grid.base_seed

    records = run_sweep(grid, workers=args.workers)
    csv_path = Path(out_dir) / "sweep_records.csv"
    csv_path.write_text(records_to_csv(records))

    digests = {}
    for variant in grid.variants:
        chain = AdcChain(chain_config(grid, variant))
        digests[variant] = _chain_digests(chain)
    digests["analog_front"] = design_analog_front(
        chain_config(grid, "linear")).digest()
    manifest.filter_digests = digests
    manifest.outputs = {"csv": csv_path.name}
    manifest.notes = [f"{r.scenario_id}/{r.variant}: {r.note}"
                      for r in records if r.note]
    n_fail = len(manifest.notes)
    manifest.results = {"records": len(records), "failed_points": n_fail}
    _finish(manifest, out_dir)

    print(f"wrote {len(records)} records to {csv_path}")
    if n_fail:
        print(f"{n_fail} record(s) failed; see manifest notes",
              file=sys.stderr)
        return 1
    return 0


def cmd_filter(args) -> int:
    source = ConfigSource(args.config)
    values = _apply_keys(source, _FILTER_SCHEMA)
    if "fc" not in values or "sample_rate" not in values:
        raise ConfigError("filter needs at least fc and sample_rate set")
    apply_front = values.pop("analog_front", False)
    values["trace"] = args.trace
    try:
        cfg = AdcChainConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    in_path = Path(args.input)
    if not in_path.is_file():
        raise ConfigError(f"input file not found: {args.input}")
    out_dir = _ensure_out(args.out)
    manifest = _start_manifest("filter", None, cfg)
    stream = read_raw(in_path, cfg.sample_rate)
    n_in = len(stream)
    if apply_front:
        stream = run_filter(design_analog_front(cfg), stream)
    chain = AdcChain(cfg)
    out = chain.run(stream)
    out_path = Path(out_dir) / "filtered.f64"
    write_raw(out, out_path)

    manifest.filter_digests = _chain_digests(chain)
    if apply_front:
        manifest.filter_digests["analog_front"] = \
            design_analog_front(cfg).digest()
    manifest.outputs = {"filtered": out_path.name}
    manifest.results = {
        "input_samples": n_in,
        "output_samples": len(out),
        "output_rate": out.sample_rate,
        "blanking_duty": chain.blanking_duty,
        "delay_samples": chain.delay_samples,
    }
    if args.trace and chain.caf is not None and chain.caf.last_trace is not None:
        trace = chain.caf.last_trace
        trace_path = Path(out_dir) / "chain_trace.csv"
        _write_columns(trace_path, trace.COLUMNS, trace.as_columns())
        manifest.outputs["trace"] = trace_path.name
    _finish(manifest, out_dir)
    print(f"wrote {len(out)} samples to {out_path}")
    return 0


def _ensure_out(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ===========================================================================
# Entry points
# ===========================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="band-split outlier filtering demos and sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_workers=False, with_trace=False):
        p.add_argument("--config", metavar="PATH",
                       help="key = value settings file")
        p.add_argument("--preset", metavar="NAME",
                       help="named parameter set")
        p.add_argument("--seed", type=int, metavar="N",
                       help="override the run seed")
        p.add_argument("--out", default=".", metavar="DIR",
                       help="output directory (default: current)")
        if with_workers:
            p.add_argument("--workers", type=int, default=1, metavar="N",
                           help="parallel grid workers (default 1)")
        if with_trace:
            p.add_argument("--trace", action="store_true",
                           help="dump internal stage traces")

    p = sub.add_parser("demo-morph",
                       help="one event train through three filters")
    common(p)
    p.set_defaults(func=cmd_demo_morph)

    p = sub.add_parser("demo-chirp",
                       help="complementary clipper on a noisy sweep")
    common(p)
    p.set_defaults(func=cmd_demo_chirp)

    p = sub.add_parser("sweep", help="variant comparison grid, CSV output")
    common(p, with_workers=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("filter", help="run the chain over a raw f64 file")
    p.add_argument("input", help="headerless little-endian float64 file")
    common(p, with_trace=True)
    p.set_defaults(func=cmd_filter)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{TOOL_NAME}: config error: {exc}", file=sys.stderr)
        return 2
    except MeasurementError as exc:
        print(f"{TOOL_NAME}: measurement failure: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
