"""STFT phase retrieval for audio via iterative projection algorithms."""

from .algorithms import (
    AlgorithmKind,
    AlgorithmSpec,
    AlgorithmState,
    PhaseInit,
    PhaseMethod,
    initialize,
    run,
    step,
    step_admm,
    step_dm,
    step_fgla,
    step_gla,
    step_hybrid,
    step_projection_cost,
    step_raar,
)
from .io import Signal, WavFormatError, read_wav, write_wav
from .metrics import IterationTrace, TraceRecord, si_sdr, spectral_convergence
from .projections import (
    project_consistency,
    project_magnitude,
    reflect_consistency,
    reflect_magnitude,
)
from .stft import (
    MagnitudeSpectrogram,
    Spectrogram,
    StftConfig,
    hann_window,
    istft,
    magnitude,
    rectangular_window,
    sqrt_hann_window,
    stft,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmKind",
    "AlgorithmSpec",
    "AlgorithmState",
    "IterationTrace",
    "MagnitudeSpectrogram",
    "PhaseInit",
    "PhaseMethod",
    "Signal",
    "Spectrogram",
    "StftConfig",
    "TraceRecord",
    "WavFormatError",
    "hann_window",
    "initialize",
    "istft",
    "magnitude",
    "project_consistency",
    "project_magnitude",
    "read_wav",
    "rectangular_window",
    "reflect_consistency",
    "reflect_magnitude",
    "run",
    "si_sdr",
    "spectral_convergence",
    "sqrt_hann_window",
    "step",
    "step_admm",
    "step_dm",
    "step_fgla",
    "step_gla",
    "step_hybrid",
    "step_projection_cost",
    "step_raar",
    "stft",
    "write_wav",
]
