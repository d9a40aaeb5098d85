"""Synthetic speech-like utterances for tests.

Seeded generator producing mono signals with the gross structure of
spoken speech: voiced segments (harmonic stacks with gliding pitch shaped
by a few formant resonances), unvoiced fricative-like noise bursts, short
silences, syllable-rate amplitude envelopes and a low noise floor. Nothing
here is meant to sound natural; the point is spectrogram statistics that
exercise phase retrieval the way speech recordings do.
"""

import numpy as np


def _formant_envelope(freqs, formants, bandwidths, gains):
    env = np.zeros_like(freqs)
    for f0, bw, g in zip(formants, bandwidths, gains):
        env += g / (1.0 + ((freqs - f0) / bw) ** 2)
    return env


def _voiced_segment(rng, n, sample_rate):
    f0_start = rng.uniform(85.0, 230.0)
    f0_end = f0_start * rng.uniform(0.75, 1.3)
    f0 = np.linspace(f0_start, f0_end, n)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate

    formants = rng.uniform([250.0, 800.0, 1800.0], [800.0, 1800.0, 3200.0])
    bandwidths = rng.uniform(80.0, 260.0, size=3)
    gains = rng.uniform(0.4, 1.0, size=3)

    max_harmonic = int((0.45 * sample_rate) / f0.max())
    out = np.zeros(n)
    for k in range(1, max_harmonic + 1):
        fk = k * f0.mean()
        tilt = (1.0 + 0.12 * k) ** -1.0
        amp = tilt * (_formant_envelope(np.array([fk]), formants, bandwidths, gains)[0] + 0.02)
        out += amp * np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi))
    rms = np.sqrt(np.mean(out**2))
    return out / max(rms, 1e-9)


def _unvoiced_segment(rng, n, sample_rate):
    noise = rng.standard_normal(n)
    spectrum = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    lo = rng.uniform(1200.0, 2800.0)
    hi = lo + rng.uniform(1500.0, 4000.0)
    center = 0.5 * (lo + hi)
    width = 0.5 * (hi - lo)
    mask = np.exp(-0.5 * ((freqs - center) / width) ** 2)
    shaped = np.fft.irfft(spectrum * mask, n=n)
    rms = np.sqrt(np.mean(shaped**2))
    return shaped / max(rms, 1e-9)


def _segment_envelope(rng, n, sample_rate):
    edge = min(int(0.018 * sample_rate), max(1, n // 3))
    env = np.ones(n)
    ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
    env[:edge] = ramp
    env[n - edge:] = ramp[::-1]
    return env * rng.uniform(0.35, 1.0)


def make_utterance(seed, sample_rate=16000, duration=1.0):
    """Deterministic speech-like signal, peak-normalized to 0.5."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    pos = 0
    while pos < n:
        seg = int(rng.uniform(0.09, 0.22) * sample_rate)
        seg = min(seg, n - pos)
        if seg < 32:
            break
        kind = rng.choice(["voiced", "unvoiced", "silence"], p=[0.6, 0.25, 0.15])
        if kind == "voiced":
            chunk = _voiced_segment(rng, seg, sample_rate)
        elif kind == "unvoiced":
            chunk = 0.45 * _unvoiced_segment(rng, seg, sample_rate)
        else:
            chunk = None
        if chunk is not None:
            out[pos:pos + seg] += chunk * _segment_envelope(rng, seg, sample_rate)
        pos += seg
    # low noise floor: keeps every frame's magnitudes nonzero
    out += 1e-4 * rng.standard_normal(n)
    peak = np.abs(out).max()
    return out * (0.5 / max(peak, 1e-9))
