"""Forward STFT and least-squares inverse STFT.

The transform pair used throughout this package:

    stft    - frame, window, real-input FFT (one-sided bins)
    istft   - inverse FFT, synthesis windowing, overlap-add, squared-window
              normalization (the least-squares inverse of stft)

Framing convention: the signal is zero-padded by (frame_length - frame_shift)
samples on each side, then extended so the last frame is complete. Every
original sample therefore receives full window coverage, which keeps the
overlap-add normalization well conditioned at the signal edges and makes
istft(stft(x)) == x for any window/shift with nonvanishing squared-window sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .io import Signal

# Overlap-add positions where no window energy lands are clamped to this
# before dividing; they only occur inside the trimmed edge padding.
_WINDOW_SUM_FLOOR = 1e-12


def hann_window(length: int) -> np.ndarray:
    """Periodic Hann window (DFT-even variant used for spectral analysis)."""
    n = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))


def sqrt_hann_window(length: int) -> np.ndarray:
    """Square root of the periodic Hann window.

    Used for both analysis and synthesis, so the effective (squared) window
    is Hann and the overlap-add sum is constant at standard shifts.
    """
    return np.sqrt(hann_window(length))


def rectangular_window(length: int) -> np.ndarray:
    """All-ones window (rectangular)."""
    return np.ones(length)


@dataclass(eq=False)
class StftConfig:
    """Analysis parameters: frame length/shift and FFT size in samples.

    The window must have frame_length real, nonnegative entries; it defaults
    to the square-root Hann window. fft_size defaults to frame_length.
    sample_rate is carried along so inverse transforms can produce complete
    signals.
    """

    frame_length: int
    frame_shift: int
    sample_rate: int
    fft_size: int | None = None
    window: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.frame_length = int(self.frame_length)
        self.frame_shift = int(self.frame_shift)
        self.sample_rate = int(self.sample_rate)
        if self.fft_size is None:
            self.fft_size = self.frame_length
        self.fft_size = int(self.fft_size)
        if not 0 < self.frame_shift <= self.frame_length <= self.fft_size:
            raise ValueError(
                "need 0 < frame_shift <= frame_length <= fft_size, got "
                f"shift={self.frame_shift} length={self.frame_length} fft={self.fft_size}"
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.window is None:
            self.window = sqrt_hann_window(self.frame_length)
        self.window = np.asarray(self.window, dtype=np.float64)
        if self.window.shape != (self.frame_length,):
            raise ValueError("window length must equal frame_length")
        if not np.isfinite(self.window).all() or (self.window < 0).any():
            raise ValueError("window values must be finite and nonnegative")

    @classmethod
    def from_milliseconds(
        cls,
        sample_rate: int,
        frame_ms: float = 32.0,
        shift_ms: float = 8.0,
        fft_size: int | None = None,
        window: np.ndarray | None = None,
    ) -> "StftConfig":
        """Build a config from durations in milliseconds (rounded to samples)."""
        frame = int(round(frame_ms * sample_rate / 1000.0))
        shift = int(round(shift_ms * sample_rate / 1000.0))
        return cls(frame, shift, sample_rate, fft_size=fft_size, window=window)

    @property
    def num_bins(self) -> int:
        """One-sided bin count, fft_size // 2 + 1."""
        return self.fft_size // 2 + 1

    def window_sq_sum(self, num_frames: int) -> np.ndarray:
        """Overlap-added squared window for a given frame count (cached).

        This is the denominator of the least-squares inverse; it only
        depends on the config and the frame count, and istft sits in the
        innermost loop of every algorithm, so memoize it.
        """
        cache = self.__dict__.setdefault("_wss_cache", {})
        hit = cache.get(num_frames)
        if hit is None:
            length = (num_frames - 1) * self.frame_shift + self.frame_length
            hit = np.zeros(length)
            win_sq = self.window**2
            for k in range(num_frames):
                start = k * self.frame_shift
                hit[start:start + self.frame_length] += win_sq
            np.maximum(hit, _WINDOW_SUM_FLOOR, out=hit)
            cache[num_frames] = hit
        return hit

    @property
    def edge_padding(self) -> int:
        """Zero-padding added on each side of the signal before framing."""
        return self.frame_length - self.frame_shift

    def num_frames(self, num_samples: int) -> int:
        """Frame count produced by stft for a signal of the given length."""
        base = num_samples + 2 * self.edge_padding
        q, r = divmod(base - self.frame_length, self.frame_shift)
        return max(1, q + 1 + (1 if r else 0))


@dataclass(eq=False)
class Spectrogram:
    """Complex one-sided spectrogram, shape (num_frames, fft_size // 2 + 1)."""

    bins: np.ndarray
    config: StftConfig
    original_length: int

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim != 2 or self.bins.shape[0] < 1:
            raise ValueError("spectrogram bins must be a (frames, bins) matrix")
        if self.bins.shape[1] != self.config.num_bins:
            raise ValueError(
                f"expected {self.config.num_bins} one-sided bins, got {self.bins.shape[1]}"
            )
        self.original_length = int(self.original_length)

    @property
    def num_frames(self) -> int:
        return self.bins.shape[0]

    @property
    def num_bins(self) -> int:
        return self.bins.shape[1]

    def with_bins(self, bins: np.ndarray) -> "Spectrogram":
        """New spectrogram with the same config/length but different bins."""
        return Spectrogram(bins, self.config, self.original_length)


@dataclass(eq=False)
class MagnitudeSpectrogram:
    """Nonnegative real spectrogram magnitudes plus analysis metadata."""

    mags: np.ndarray
    config: StftConfig
    original_length: int

    def __post_init__(self):
        self.mags = np.asarray(self.mags, dtype=np.float64)
        if self.mags.ndim != 2 or self.mags.shape[0] < 1:
            raise ValueError("magnitudes must be a (frames, bins) matrix")
        if self.mags.shape[1] != self.config.num_bins:
            raise ValueError(
                f"expected {self.config.num_bins} one-sided bins, got {self.mags.shape[1]}"
            )
        if not np.isfinite(self.mags).all() or (self.mags < 0).any():
            raise ValueError("magnitudes must be finite and nonnegative")
        self.original_length = int(self.original_length)

    @property
    def peak(self) -> float:
        """Largest magnitude entry (cached; the matrix is treated as immutable)."""
        cached = self.__dict__.get("_peak")
        if cached is None:
            cached = float(self.mags.max(initial=0.0))
            self.__dict__["_peak"] = cached
        return cached


def stft(signal: Signal, config: StftConfig) -> Spectrogram:
    """Forward short-time Fourier transform.

    Pads the signal by (frame_length - frame_shift) zeros on each side plus
    whatever is needed to complete the last frame, applies the analysis
    window per frame and keeps the one-sided real-FFT bins. The pre-padding
    sample count is recorded so istft can restore the exact length.
    """
    x = np.asarray(signal.samples, dtype=np.float64)
    if x.size < config.frame_shift:
        raise ValueError(
            f"signal of {x.size} samples is shorter than one frame shift "
            f"({config.frame_shift} samples)"
        )
    if not np.isfinite(x).all():
        raise ValueError("signal contains non-finite samples")

    pad = config.edge_padding
    frames_count = config.num_frames(x.size)
    padded_len = (frames_count - 1) * config.frame_shift + config.frame_length
    padded = np.zeros(padded_len)
    padded[pad:pad + x.size] = x

    frames = sliding_window_view(padded, config.frame_length)[::config.frame_shift]
    frames = frames * config.window
    bins = np.fft.rfft(frames, n=config.fft_size, axis=1)
    return Spectrogram(bins, config, original_length=x.size)


def _overlap_add(frames: np.ndarray, shift: int) -> np.ndarray:
    """Sum frames at multiples of shift; returns (F-1)*shift + L samples."""
    num_frames, frame_length = frames.shape
    length = (num_frames - 1) * shift + frame_length
    total = np.zeros(length)
    if frame_length % shift == 0:
        # vectorized: split frames into frame_length // shift shift-sized
        # lanes; lane j of frame k lands at (k + j) * shift
        lanes = frames.reshape(num_frames, frame_length // shift, shift)
        for j in range(frame_length // shift):
            total[j * shift:(j + num_frames) * shift] += lanes[:, j, :].reshape(-1)
        return total
    for k in range(num_frames):
        start = k * shift
        total[start:start + frame_length] += frames[k]
    return total


def istft(spec: Spectrogram) -> Signal:
    """Least-squares inverse STFT.

    Each frame is inverse-transformed, truncated to the frame length and
    multiplied by the synthesis window (identical to the analysis window),
    then overlap-added; the sum is divided by the overlap-added squared
    window. Dividing by the squared-window sum makes this the least-squares
    signal estimate for the spectrogram, so stft(istft(.)) is an orthogonal
    projection. The stft edge padding is trimmed and the output is cut or
    zero-extended to the recorded original length.
    """
    if not np.isfinite(spec.bins).all():
        raise ValueError("spectrogram contains non-finite bins")
    cfg = spec.config
    frames = np.fft.irfft(spec.bins, n=cfg.fft_size, axis=1)[:, :cfg.frame_length]
    frames = frames * cfg.window

    total = _overlap_add(frames, cfg.frame_shift)
    total /= cfg.window_sq_sum(spec.num_frames)

    out = np.zeros(spec.original_length)
    pad = cfg.edge_padding
    n = min(spec.original_length, total.size - pad)
    out[:n] = total[pad:pad + n]
    return Signal(out, cfg.sample_rate)


def magnitude(spec: Spectrogram) -> MagnitudeSpectrogram:
    """Elementwise complex modulus of a spectrogram."""
    if not np.isfinite(spec.bins).all():
        raise ValueError("spectrogram contains non-finite bins")
    return MagnitudeSpectrogram(np.abs(spec.bins), spec.config, spec.original_length)
