"""Iterative phase-retrieval algorithms over STFT magnitude spectrograms.

All algorithms share the same skeleton: start from the known magnitudes with
some initial phase, then repeatedly combine the magnitude projection and the
consistency projection. They differ in how the two projections are composed:

    gla     alternate the two projections
    fgla    gla with momentum extrapolation on an auxiliary iterate
    raar    relaxed average of the input and the double reflection
    dm      difference of cross-projected estimate maps, relaxation beta
    admm    method-of-multipliers update on a consolidated variable
    hybrid  dm or raar for the first m0 iterations, then fgla

Each step function maps an AlgorithmState to the next; `run` drives a full
reconstruction and records a per-iteration trace.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .io import Signal
from .metrics import IterationTrace, TraceRecord, spectral_convergence
from .projections import (
    project_consistency,
    project_magnitude,
    reflect_consistency,
    reflect_magnitude,
)
from .stft import MagnitudeSpectrogram, Spectrogram, istft


class AlgorithmKind(str, Enum):
    GLA = "gla"
    FGLA = "fgla"
    RAAR = "raar"
    DM = "dm"
    ADMM = "admm"
    HYBRID = "hybrid"


# Kinds allowed as the exploratory first phase of the hybrid schedule.
_HYBRID_FIRST = (AlgorithmKind.DM, AlgorithmKind.RAAR)

_DEFAULT_ALPHA = 0.99
_DEFAULT_BETA = {AlgorithmKind.RAAR: 0.9, AlgorithmKind.DM: 0.8, AlgorithmKind.HYBRID: 1.0}


@dataclass(frozen=True)
class AlgorithmSpec:
    """Which algorithm to run and with what parameters.

    alpha is the fgla momentum weight, beta the raar/dm relaxation, m0 the
    hybrid switch iteration, and first the algorithm used before the switch.
    Only the parameters relevant to `kind` are consulted.
    """

    kind: AlgorithmKind
    alpha: float = _DEFAULT_ALPHA
    beta: float = 1.0
    m0: int = 0
    first: AlgorithmKind = AlgorithmKind.DM

    def __post_init__(self):
        if self.kind in (AlgorithmKind.FGLA, AlgorithmKind.HYBRID) and self.alpha < 0:
            raise ValueError("fgla momentum alpha must be >= 0")
        if self.kind == AlgorithmKind.RAAR and not 0 < self.beta <= 1:
            raise ValueError("raar relaxation beta must satisfy 0 < beta <= 1")
        if self.kind == AlgorithmKind.DM and self.beta == 0:
            raise ValueError("dm relaxation beta must be nonzero")
        if self.kind == AlgorithmKind.HYBRID:
            if self.first not in _HYBRID_FIRST:
                raise ValueError("hybrid first phase must be dm or raar")
            if self.m0 < 0:
                raise ValueError("hybrid switch point m0 must be >= 0")
            # validate the first phase's beta under that algorithm's rules
            AlgorithmSpec(kind=self.first, beta=self.beta)

    @classmethod
    def parse(cls, text: str) -> "AlgorithmSpec":
        """Parse a compact spec string.

        Examples: "gla", "fgla:alpha=0.99", "raar:beta=0.9", "dm:beta=-1",
        "admm", "hybrid:first=dm,beta=1,m0=60".
        """
        name, _, params = text.strip().partition(":")
        try:
            kind = AlgorithmKind(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown algorithm {name!r}") from None
        kwargs: dict = {"kind": kind}
        if kind in _DEFAULT_BETA:
            kwargs["beta"] = _DEFAULT_BETA[kind]
        if kind == AlgorithmKind.HYBRID:
            kwargs["m0"] = 60
        if params:
            for item in params.split(","):
                key, eq, value = item.partition("=")
                key = key.strip().lower()
                if not eq:
                    raise ValueError(f"malformed parameter {item!r} in {text!r}")
                if key == "alpha":
                    kwargs["alpha"] = float(value)
                elif key == "beta":
                    kwargs["beta"] = float(value)
                elif key == "m0":
                    kwargs["m0"] = int(value)
                elif key == "first":
                    kwargs["first"] = AlgorithmKind(value.strip().lower())
                else:
                    raise ValueError(f"unknown parameter {key!r} in {text!r}")
        return cls(**kwargs)

    def label(self) -> str:
        """Short filesystem-safe name including the relevant parameters."""
        if self.kind == AlgorithmKind.GLA:
            return "gla"
        if self.kind == AlgorithmKind.FGLA:
            return f"fgla_alpha{self.alpha:g}"
        if self.kind == AlgorithmKind.RAAR:
            return f"raar_beta{self.beta:g}"
        if self.kind == AlgorithmKind.DM:
            return f"dm_beta{self.beta:g}"
        if self.kind == AlgorithmKind.ADMM:
            return "admm"
        return f"hybrid_{self.first.value}_beta{self.beta:g}_m0{self.m0}"

    def validate_for(self, iterations: int) -> None:
        if iterations < 0:
            raise ValueError("iteration count must be nonnegative")
        if self.kind == AlgorithmKind.HYBRID and self.m0 > iterations:
            raise ValueError(
                f"hybrid switch point m0={self.m0} exceeds total iterations {iterations}"
            )


class PhaseMethod(str, Enum):
    UNIFORM_RANDOM = "uniform_random"
    ZERO_PHASE = "zero_phase"
    PROVIDED = "provided"


@dataclass(eq=False)
class PhaseInit:
    """Initial-phase policy: seeded uniform noise, zeros, or given phases.

    Uniform phases are drawn i.i.d. from [-pi, pi) with numpy's seeded PCG64
    generator, so the phase field depends only on (seed, shape) and is
    bit-reproducible across algorithms and runs.
    """

    seed: int = 0
    method: PhaseMethod = PhaseMethod.UNIFORM_RANDOM
    phases: np.ndarray | None = None

    def phase_field(self, shape: tuple[int, int]) -> np.ndarray:
        if self.method == PhaseMethod.UNIFORM_RANDOM:
            rng = np.random.Generator(np.random.PCG64(self.seed))
            return rng.uniform(-np.pi, np.pi, size=shape)
        if self.method == PhaseMethod.ZERO_PHASE:
            return np.zeros(shape)
        if self.phases is None:
            raise ValueError("PROVIDED phase init requires a phases array")
        phases = np.asarray(self.phases, dtype=np.float64)
        if phases.shape != shape:
            raise ValueError(f"provided phases shape {phases.shape} != spectrogram {shape}")
        return phases


@dataclass(eq=False)
class AlgorithmState:
    """Iterate bundle: x is the current estimate; y is the fgla/hybrid
    momentum auxiliary; w is the admm consolidated variable. For admm, x
    holds the consistency projection of w once stepping has begun (it is
    the raw initialization before the first step)."""

    x: Spectrogram
    iteration: int = 0
    y: Spectrogram | None = None
    w: Spectrogram | None = None


def initialize(a: MagnitudeSpectrogram, init: PhaseInit, spec: AlgorithmSpec) -> AlgorithmState:
    """Build the starting state: magnitudes with the chosen initial phases.

    The phase field depends only on (seed, shape), never on the algorithm,
    so runs with different algorithms but the same seed start identically.
    """
    phi = init.phase_field(a.mags.shape)
    x = Spectrogram(a.mags * np.exp(1j * phi), a.config, a.original_length)
    y = x if spec.kind in (AlgorithmKind.FGLA, AlgorithmKind.HYBRID) else None
    w = x if spec.kind == AlgorithmKind.ADMM else None
    return AlgorithmState(x=x, iteration=0, y=y, w=w)


def step_gla(state: AlgorithmState, a: MagnitudeSpectrogram) -> AlgorithmState:
    """Alternating projections: consistency of the magnitude-projected iterate."""
    x = project_consistency(project_magnitude(state.x, a))
    return replace(state, x=x, iteration=state.iteration + 1)


def step_fgla(
    state: AlgorithmState, a: MagnitudeSpectrogram, alpha: float = _DEFAULT_ALPHA
) -> AlgorithmState:
    """Momentum-accelerated alternating projections.

    The projections are applied to the extrapolated auxiliary, and the
    auxiliary is pushed past the new iterate by alpha times the last move.
    """
    if state.y is None:
        raise ValueError("fgla state is missing the momentum auxiliary")
    x_next = project_consistency(project_magnitude(state.y, a))
    y_next = x_next.with_bins(x_next.bins + alpha * (x_next.bins - state.x.bins))
    return replace(state, x=x_next, y=y_next, iteration=state.iteration + 1)


def step_raar(state: AlgorithmState, a: MagnitudeSpectrogram, beta: float) -> AlgorithmState:
    """Relaxed averaged alternating reflections.

    Averages the iterate with its double reflection (magnitude first, then
    consistency) and blends in the magnitude projection with weight 1-beta.
    """
    if not 0 < beta <= 1:
        raise ValueError("raar relaxation beta must satisfy 0 < beta <= 1")
    pa = project_magnitude(state.x, a)
    ra = state.x.with_bins(2.0 * pa.bins - state.x.bins)
    rc_ra = reflect_consistency(ra)
    bins = 0.5 * beta * (state.x.bins + rc_ra.bins) + (1.0 - beta) * pa.bins
    return replace(state, x=state.x.with_bins(bins), iteration=state.iteration + 1)


def step_dm(state: AlgorithmState, a: MagnitudeSpectrogram, beta: float) -> AlgorithmState:
    """Difference-map update with relaxation beta.

    Two estimate maps overshoot each constraint set by 1/beta; the update
    moves the iterate by beta times the difference of their cross
    projections. For |beta| == 1 the algebra collapses to two projections
    per step, which this implementation uses; otherwise four are needed.
    """
    if beta == 0:
        raise ValueError("dm relaxation beta must be nonzero")
    x = state.x
    if beta == 1.0:
        # estimate map toward magnitudes is the reflection; the other is identity
        pa = project_magnitude(x, a)
        ra = x.with_bins(2.0 * pa.bins - x.bins)
        bins = x.bins + project_consistency(ra).bins - pa.bins
    elif beta == -1.0:
        # estimate map toward consistency is the reflection; the other is identity
        pc = project_consistency(x)
        rc = x.with_bins(2.0 * pc.bins - x.bins)
        bins = x.bins + project_magnitude(rc, a).bins - pc.bins
    else:
        pa = project_magnitude(x, a)
        est_a = x.with_bins(pa.bins + (pa.bins - x.bins) / beta)
        pc = project_consistency(x)
        est_c = x.with_bins(pc.bins - (pc.bins - x.bins) / beta)
        bins = x.bins + beta * (
            project_consistency(est_a).bins - project_magnitude(est_c, a).bins
        )
    return replace(state, x=x.with_bins(bins), iteration=state.iteration + 1)


def step_admm(state: AlgorithmState, a: MagnitudeSpectrogram) -> AlgorithmState:
    """Method-of-multipliers update on the consolidated variable w.

    w moves by the gap between the magnitude projection of the reflected
    consistent iterate and the consistent iterate itself. The consistency
    projection of the updated w is stored as the reported iterate x and
    reused as next step's consistent iterate, so each step costs one
    magnitude and one consistency projection after the first.
    """
    if state.w is None:
        raise ValueError("admm state is missing the consolidated variable")
    w = state.w
    z = project_consistency(w) if state.iteration == 0 else state.x
    reflected = w.with_bins(2.0 * z.bins - w.bins)
    w_next = w.with_bins(w.bins + project_magnitude(reflected, a).bins - z.bins)
    z_next = project_consistency(w_next)
    return replace(state, x=z_next, w=w_next, iteration=state.iteration + 1)


def step_hybrid(
    state: AlgorithmState,
    a: MagnitudeSpectrogram,
    spec: AlgorithmSpec,
    total_iterations: int,
) -> AlgorithmState:
    """Exploratory first phase (dm or raar) for m0 steps, then fgla.

    During the first phase the momentum auxiliary shadows the iterate, so
    the fgla phase starts from y == x exactly as a fresh fgla run would.
    """
    if spec.kind != AlgorithmKind.HYBRID:
        raise ValueError("step_hybrid requires a hybrid spec")
    spec.validate_for(total_iterations)
    if state.iteration < spec.m0:
        if spec.first == AlgorithmKind.DM:
            nxt = step_dm(state, a, spec.beta)
        else:
            nxt = step_raar(state, a, spec.beta)
        return replace(nxt, y=nxt.x)
    return step_fgla(state, a, spec.alpha)


def step(
    state: AlgorithmState,
    a: MagnitudeSpectrogram,
    spec: AlgorithmSpec,
    total_iterations: int | None = None,
) -> AlgorithmState:
    """Apply one iteration of the algorithm described by spec."""
    if spec.kind == AlgorithmKind.GLA:
        return step_gla(state, a)
    if spec.kind == AlgorithmKind.FGLA:
        return step_fgla(state, a, spec.alpha)
    if spec.kind == AlgorithmKind.RAAR:
        return step_raar(state, a, spec.beta)
    if spec.kind == AlgorithmKind.DM:
        return step_dm(state, a, spec.beta)
    if spec.kind == AlgorithmKind.ADMM:
        return step_admm(state, a)
    if total_iterations is None:
        raise ValueError("hybrid stepping needs the total iteration count")
    return step_hybrid(state, a, spec, total_iterations)


def step_projection_cost(spec: AlgorithmSpec, iteration: int) -> int:
    """Projection evaluations performed by the step taken at `iteration`.

    Counts what the implementation actually computes: dm needs four
    projections per step unless |beta| == 1, admm pays one extra consistency
    projection on its first step to seed the cached consistent iterate, and
    everything else costs two.
    """
    kind = spec.kind
    if kind == AlgorithmKind.HYBRID:
        if iteration < spec.m0:
            return step_projection_cost(replace_kind(spec, spec.first), iteration)
        return 2
    if kind == AlgorithmKind.DM:
        return 2 if abs(spec.beta) == 1.0 else 4
    if kind == AlgorithmKind.ADMM:
        return 3 if iteration == 0 else 2
    return 2


def replace_kind(spec: AlgorithmSpec, kind: AlgorithmKind) -> AlgorithmSpec:
    """Spec for the same parameters under a different algorithm kind."""
    return AlgorithmSpec(kind=kind, alpha=spec.alpha, beta=spec.beta)


def run(
    a: MagnitudeSpectrogram,
    spec: AlgorithmSpec,
    init: PhaseInit,
    iterations: int,
    observer=None,
) -> tuple[Signal, IterationTrace]:
    """Reconstruct a signal from magnitudes with the chosen algorithm.

    Starts from the initial phase field, applies `iterations` steps, and
    records spectral convergence, cumulative projection count and elapsed
    wall time after each one. `observer(iteration, spectrogram)`, if given,
    is called after every step with the metric iterate (x, which for admm is
    the consistency projection of w); observer exceptions abort the run.

    The returned waveform is the inverse STFT of the magnitude-projected
    final iterate, so its analysis magnitudes honor the targets as closely
    as consistency allows. With iterations == 0 the trace is empty and the
    output is synthesized directly from the initialization.
    """
    spec.validate_for(iterations)
    state = initialize(a, init, spec)
    trace = IterationTrace()
    cumulative = 0
    started = time.perf_counter()
    for _ in range(iterations):
        cumulative += step_projection_cost(spec, state.iteration)
        state = step(state, a, spec, iterations)
        sc = spectral_convergence(state.x, a)
        trace.append(
            TraceRecord(
                iteration=state.iteration,
                spectral_convergence=sc,
                cumulative_projections=cumulative,
                wall_time=time.perf_counter() - started,
            )
        )
        if observer is not None:
            observer(state.iteration, state.x)
    out = istft(project_magnitude(state.x, a))
    return out, trace
