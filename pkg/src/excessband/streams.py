"""Sample streams and the small operations every other module builds on.

A stream is a 1-D float64 array tagged with a sample rate.  Stateful
processors elsewhere in the package all follow the same block contract:
feeding a signal through in one call or split at arbitrary points yields
bit-identical output.  The helpers here (delay lines, mixing, raw file I/O,
seeded RNG handles) are deliberately boring; correctness of everything
downstream leans on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Default block length for chunked processing.  Nothing in the package
# depends on the value; it only bounds per-call working memory.
BLOCK_SIZE = 4096


@dataclass
class SampleStream:
    """A finite run of real samples at a fixed rate.

    ``samples`` is always a 1-D float64 array; anything array-like is
    converted on construction.  ``sample_rate`` is in hertz and must be
    positive.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {self.samples.shape}")
        self.sample_rate = float(self.sample_rate)
        if not self.sample_rate > 0.0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dt(self) -> float:
        """Sample period in seconds."""
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        """Stream length in seconds."""
        return len(self) / self.sample_rate

    def copy(self) -> "SampleStream":
        return SampleStream(self.samples.copy(), self.sample_rate)

    def slice(self, start: int, stop: int | None = None) -> "SampleStream":
        """A copy of samples[start:stop] as a new stream at the same rate."""
        return SampleStream(self.samples[start:stop].copy(), self.sample_rate)


@dataclass(frozen=True)
class RngSpec:
    """Deterministic handle for a random stream.

    The same (seed, stream_id) pair always yields the same generator, and
    distinct stream ids derived from one seed are statistically independent.
    Components that need several independent streams (signal bits, thermal
    noise, outliers) derive one id per role instead of sharing a generator,
    so adding a consumer never perturbs the others.
    """

    seed: int
    stream_id: int = 0

    def rng(self) -> np.random.Generator:
        seq = np.random.SeedSequence((int(self.seed), int(self.stream_id)))
        return np.random.default_rng(seq)

    def derive(self, offset: int) -> "RngSpec":
        """A sibling spec with stream_id shifted by ``offset``."""
        return RngSpec(self.seed, self.stream_id + int(offset))


class DelayLine:
    """Integer-sample delay with internal history, zero initial state."""

    def __init__(self, length: int):
        length = int(length)
        if length < 0:
            raise ValueError(f"delay length must be >= 0, got {length}")
        self.length = length
        self._hist = np.zeros(length, dtype=np.float64)

    def process(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.length == 0:
            return x.copy()
        joined = np.concatenate([self._hist, x])
        self._hist = joined[joined.shape[0] - self.length:].copy()
        return joined[: x.shape[0]].copy()

    def reset(self) -> None:
        self._hist[:] = 0.0


def delay(stream: SampleStream, num_samples: int) -> SampleStream:
    """Shift a stream right by ``num_samples``, zero-filling the front.

    Length and sample rate are preserved; the trailing samples fall off.
    """
    num_samples = int(num_samples)
    if num_samples < 0:
        raise ValueError(f"delay must be >= 0, got {num_samples}")
    n = len(stream)
    out = np.zeros(n, dtype=np.float64)
    if num_samples < n:
        out[num_samples:] = stream.samples[: n - num_samples]
    return SampleStream(out, stream.sample_rate)


def mix(a: SampleStream, b: SampleStream, gain_b: float = 1.0) -> SampleStream:
    """Sample-wise a + gain_b * b.  Rates and lengths must match."""
    if a.sample_rate != b.sample_rate:
        raise ValueError(
            f"sample rates differ: {a.sample_rate} vs {b.sample_rate}"
        )
    if len(a) != len(b):
        raise ValueError(f"lengths differ: {len(a)} vs {len(b)}")
    return SampleStream(a.samples + float(gain_b) * b.samples, a.sample_rate)


def write_raw(stream: SampleStream, path) -> None:
    """Write samples as little-endian float64, no header."""
    stream.samples.astype("<f8").tofile(path)


def read_raw(path, sample_rate: float) -> SampleStream:
    """Read a headerless little-endian float64 file as a stream."""
    data = np.fromfile(path, dtype="<f8")
    return SampleStream(data.astype(np.float64), sample_rate)


def iter_blocks(x: np.ndarray, block_size: int = BLOCK_SIZE):
    """Yield consecutive views of ``x`` no longer than ``block_size``."""
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    for start in range(0, x.shape[0], block_size):
        yield x[start: start + block_size]
