"""Reconstruction-quality metrics and per-iteration traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .io import Signal
from .projections import project_consistency
from .stft import MagnitudeSpectrogram, Spectrogram


@dataclass(frozen=True)
class TraceRecord:
    """One iteration's worth of bookkeeping for an algorithm run."""

    iteration: int
    spectral_convergence: float
    cumulative_projections: int
    wall_time: float


@dataclass
class IterationTrace:
    """Per-iteration metric records, indices strictly increasing from 1."""

    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("iteration indices must be strictly increasing")
        if not (math.isfinite(record.spectral_convergence) and record.spectral_convergence >= 0):
            raise ValueError("spectral convergence must be finite and nonnegative")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def final_spectral_convergence(self) -> float:
        if not self.records:
            raise ValueError("trace is empty")
        return self.records[-1].spectral_convergence

    def at_iteration(self, iteration: int) -> TraceRecord:
        for rec in self.records:
            if rec.iteration == iteration:
                return rec
        raise KeyError(f"no record for iteration {iteration}")


def spectral_convergence(x: Spectrogram, a: MagnitudeSpectrogram) -> float:
    """Normalized Frobenius distance between target magnitudes and the
    magnitudes of the consistency-projected spectrogram.

    Computed as ||A - |P_consistency(x)||_F / ||A||_F; lower is better and
    0 means x is consistent with exactly the target magnitudes.
    """
    if x.bins.shape != a.mags.shape:
        raise ValueError(
            f"spectrogram shape {x.bins.shape} does not match magnitudes {a.mags.shape}"
        )
    denom = np.linalg.norm(a.mags)
    if denom == 0.0:
        raise ValueError("spectral convergence is undefined for all-zero magnitudes")
    consistent = project_consistency(x)
    return float(np.linalg.norm(a.mags - np.abs(consistent.bins)) / denom)


def si_sdr(reference: Signal, estimate: Signal) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    The estimate is projected onto the reference; the ratio of projected
    (target) energy to residual energy is reported. Invariant to rescaling
    of the estimate. Returns +inf for a perfect (scaled) match and -inf for
    an estimate orthogonal to the reference. Both signals are truncated to
    the shorter length before comparison.
    """
    n = min(len(reference), len(estimate))
    if n == 0:
        raise ValueError("cannot compare empty signals")
    ref = np.asarray(reference.samples[:n], dtype=np.float64)
    est = np.asarray(estimate.samples[:n], dtype=np.float64)
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ValueError("reference signal has zero energy")
    target = (np.dot(est, ref) / ref_energy) * ref
    residual = est - target
    target_energy = float(np.dot(target, target))
    residual_energy = float(np.dot(residual, residual))
    if target_energy == 0.0:
        return -math.inf
    if residual_energy == 0.0:
        return math.inf
    return 10.0 * math.log10(target_energy / residual_energy)
