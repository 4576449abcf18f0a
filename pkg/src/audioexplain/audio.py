"""Audio samples, framing, frame masks and 16-bit PCM WAV I/O."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "Audio",
    "FrameGrid",
    "FrameMask",
    "WavError",
    "WavFormatError",
    "WavChannelError",
    "WavBitDepthError",
    "WavTruncatedError",
    "frame_grid",
    "apply_mask",
    "read_wav",
    "write_wav",
]


def _audio_id(samples: np.ndarray, sample_rate: int) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<I", sample_rate))
    h.update(samples.astype("<i2", copy=False).tobytes())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class Audio:
    """Mono signed 16-bit PCM audio.

    The sample array is copied and made read-only, so an ``Audio`` can be
    shared freely between threads.
    """

    samples: np.ndarray
    sample_rate: int = 16000
    id: str = field(init=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.int16, copy=True).ravel()
        if samples.size == 0:
            raise ValueError("audio must contain at least one sample")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "id", _audio_id(samples, self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Audio):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)

    def __hash__(self) -> int:
        return hash(self.id)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class FrameGrid:
    frame_length: int
    n_samples: int

    def __post_init__(self):
        if self.frame_length < 1:
            raise ValueError(f"frame_length must be >= 1, got {self.frame_length}")
        if self.n_samples < 1:
            raise ValueError("grid needs at least one sample")

    @property
    def n_frames(self) -> int:
        return -(-self.n_samples // self.frame_length)

    def bounds(self, i: int) -> tuple[int, int]:
        """Sample range ``[start, stop)`` covered by frame ``i``."""
        if not 0 <= i < self.n_frames:
            raise IndexError(f"frame {i} out of range [0, {self.n_frames})")
        start = i * self.frame_length
        return start, min(start + self.frame_length, self.n_samples)

    def frame_of(self, sample_index: int) -> int:
        return sample_index // self.frame_length


@dataclass(frozen=True)
class FrameMask:
    """Set of masked frame indices; the empty mask is the original audio."""

    masked: frozenset[int] = frozenset()

    def __init__(self, masked: Iterable[int] = ()):
        object.__setattr__(self, "masked", frozenset(int(i) for i in masked))

    def __len__(self) -> int:
        return len(self.masked)

    def __iter__(self):
        return iter(sorted(self.masked))

    def __contains__(self, i) -> bool:
        return i in self.masked

    @classmethod
    def complement(cls, keep: Iterable[int], n_frames: int) -> "FrameMask":
        keep = set(keep)
        return cls(i for i in range(n_frames) if i not in keep)

    def validate(self, grid: FrameGrid) -> None:
        bad = [i for i in self.masked if not 0 <= i < grid.n_frames]
        if bad:
            raise IndexError(f"mask indices {sorted(bad)} out of range [0, {grid.n_frames})")

    def digest(self) -> str:
        """Canonical hash of the sorted masked indices."""
        text = ",".join(str(i) for i in sorted(self.masked))
        return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


def frame_grid(audio: Audio, frame_length: int = 512) -> FrameGrid:
    return FrameGrid(int(frame_length), len(audio))


def apply_mask(audio: Audio, grid: FrameGrid, mask: FrameMask) -> Audio:
    """Return a copy of ``audio`` with every sample in a masked frame set to 0."""
    if grid.n_samples != len(audio):
        raise ValueError("grid does not match audio length")
    mask.validate(grid)
    if not mask.masked:
        return audio
    out = audio.samples.copy()
    for i in mask.masked:
        start, stop = grid.bounds(i)
        out[start:stop] = 0
    return Audio(out, audio.sample_rate)


# --- WAV ------------------------------------------------------------------


class WavError(ValueError):
    """Base class for WAV parsing failures."""


class WavFormatError(WavError):
    pass


class WavChannelError(WavError):
    pass


class WavBitDepthError(WavError):
    pass


class WavTruncatedError(WavError):
    pass


_PCM = 1


def write_wav(audio: Audio) -> bytes:
    data = audio.samples.astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        _PCM,
        1,
        audio.sample_rate,
        audio.sample_rate * 2,
        2,
        16,
        b"data",
        len(data),
    )
    return header + data


def read_wav(data: bytes) -> Audio:
    """Parse a RIFF/WAVE container holding 16-bit mono PCM."""
    if len(data) < 12:
        raise WavTruncatedError("file shorter than the RIFF header")
    riff, _size, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE container")

    pos = 12
    fmt = None
    while pos < len(data):
        if pos + 8 > len(data):
            raise WavTruncatedError(f"chunk header at byte {pos} is truncated")
        cid, csize = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + csize > len(data):
            raise WavTruncatedError(
                f"chunk {cid!r} declares {csize} bytes but only {len(data) - body} remain"
            )
        if cid == b"fmt ":
            if csize < 16:
                raise WavTruncatedError("fmt chunk shorter than 16 bytes")
            code, channels, rate, _brate, _align, bits = struct.unpack_from("<HHIIHH", data, body)
            if code != _PCM:
                raise WavFormatError(f"unsupported format code {code}; only PCM (1) is accepted")
            if channels != 1:
                raise WavChannelError(f"expected mono audio, got {channels} channels")
            if bits != 16:
                raise WavBitDepthError(f"expected 16-bit samples, got {bits}-bit")
            fmt = rate
        elif cid == b"data":
            if fmt is None:
                raise WavFormatError("data chunk appears before fmt chunk")
            if csize % 2:
                raise WavTruncatedError("data chunk has an odd byte count")
            samples = np.frombuffer(data, dtype="<i2", count=csize // 2, offset=body)
            return Audio(samples, fmt)
        # chunks are word aligned
        pos = body + csize + (csize & 1)
    raise WavFormatError("no data chunk found")
