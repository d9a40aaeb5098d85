"""Constraint-set projections and reflections.

Two sets of complex spectrograms matter here: those whose elementwise
modulus equals a known magnitude matrix, and those that are consistent,
i.e. equal the STFT of some time-domain signal. All iterative algorithms
in this package are built from the projections onto these two sets and
their reflections. Every function returns a fresh spectrogram; inputs are
never mutated.
"""

from __future__ import annotations

import numpy as np

from .stft import MagnitudeSpectrogram, Spectrogram, istft, stft

# Bins at or below this fraction of the largest target magnitude count as
# zero and keep their input value, so the phase of numerically dead bins
# is never manufactured from denormal noise.
_ZERO_BIN_RELATIVE = 1e-15


def _check_compatible(x: Spectrogram, a: MagnitudeSpectrogram) -> None:
    if x.bins.shape != a.mags.shape:
        raise ValueError(
            f"spectrogram shape {x.bins.shape} does not match magnitudes {a.mags.shape}"
        )
    if x.config is not a.config and (
        x.config.frame_length != a.config.frame_length
        or x.config.frame_shift != a.config.frame_shift
        or x.config.fft_size != a.config.fft_size
    ):
        raise ValueError("spectrogram and magnitudes carry different analysis configs")


def project_magnitude(x: Spectrogram, a: MagnitudeSpectrogram) -> Spectrogram:
    """Replace bin magnitudes with the target values, keeping phases.

    Bins whose current magnitude is (numerically) zero are returned
    unchanged, since they carry no phase to preserve.
    """
    _check_compatible(x, a)
    absx = np.abs(x.bins)
    zero = absx <= _ZERO_BIN_RELATIVE * a.peak
    np.copyto(absx, 1.0, where=zero)
    bins = x.bins * (a.mags / absx)
    if zero.any():
        bins[zero] = x.bins[zero]
    return x.with_bins(bins)


def project_consistency(x: Spectrogram) -> Spectrogram:
    """Project onto the set of consistent spectrograms: stft(istft(x)).

    The least-squares istft makes this an orthogonal (hence idempotent and
    linear) projection.
    """
    out = stft(istft(x), x.config)
    if out.bins.shape != x.bins.shape:
        raise ValueError(
            "inconsistent spectrogram metadata: original_length "
            f"{x.original_length} implies {out.bins.shape[0]} frames, got {x.bins.shape[0]}"
        )
    return out


def reflect_magnitude(x: Spectrogram, a: MagnitudeSpectrogram) -> Spectrogram:
    """Reflection about the magnitude set: 2 * project_magnitude(x, a) - x."""
    return x.with_bins(2.0 * project_magnitude(x, a).bins - x.bins)


def reflect_consistency(x: Spectrogram) -> Spectrogram:
    """Reflection about the consistency set: 2 * project_consistency(x) - x."""
    return x.with_bins(2.0 * project_consistency(x).bins - x.bins)
