"""Mono audio I/O.

Reads PCM WAV files (8/16/24/32-bit integer or 32-bit float) into
normalized float signals and writes 16-bit PCM mono WAV files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile


class WavFormatError(ValueError):
    """Raised for malformed or unsupported WAV encodings."""


@dataclass(eq=False)
class Signal:
    """Time-domain mono audio: samples nominally in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("signal samples must be one-dimensional")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        self.sample_rate = int(self.sample_rate)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate


def read_wav(path: str | os.PathLike) -> Signal:
    """Read a WAV file as a normalized mono signal.

    Integer PCM is scaled by 2^(bits-1) so full scale maps to [-1, 1)
    (8-bit unsigned data is re-centered first); float data is passed
    through unscaled. Multichannel input is averaged to mono. The sample
    rate is taken from the header; no resampling happens here.

    Raises FileNotFoundError for a missing file and WavFormatError for
    anything scipy cannot parse as PCM/float WAV.
    """
    try:
        rate, data = wavfile.read(os.fspath(path))
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise WavFormatError(f"{path}: {exc}") from exc

    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype.kind == "i":
        # scipy left-justifies sub-32-bit depths (e.g. 24-bit) inside the
        # container type, so the container's full scale is the right divisor.
        samples = data.astype(np.float64) / float(2 ** (8 * data.dtype.itemsize - 1))
    elif data.dtype.kind == "f":
        samples = data.astype(np.float64)
    else:
        raise WavFormatError(f"{path}: unsupported sample dtype {data.dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise WavFormatError(f"{path}: no audio samples")
    return Signal(samples, int(rate))


def write_wav(signal: Signal, path: str | os.PathLike) -> None:
    """Write a signal as 16-bit PCM mono WAV.

    Samples are hard-clipped to [-1, 1], scaled by 2^15 and rounded;
    +1.0 saturates at the int16 maximum. Non-finite samples are rejected.
    """
    samples = np.asarray(signal.samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("refusing to write an empty signal")
    if not np.isfinite(samples).all():
        raise ValueError("signal contains non-finite samples")
    clipped = np.clip(samples, -1.0, 1.0)
    quantized = np.clip(np.rint(clipped * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(os.fspath(path), signal.sample_rate, quantized)
