"""Oscillators, ADSR envelopes, and melody rendering.

Timbre is set by the oscillator waveshape (sine, square, sawtooth,
triangle) and loudness by a piecewise-linear ADSR gain envelope applied
over the whole clip. Oscillators default to their ideal closed forms,
sampled directly; at the fundamentals used here (<= 523.25 Hz against a
16 kHz rate) the aliased components of square/sawtooth are far below the
test thresholds. Set RenderConfig.band_limited for additive synthesis
that truncates the harmonic series at Nyquist instead.

Rendering is stateless and deterministic: the same spec and config always
produce the same sample sequence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import ceil
from typing import Sequence

import numpy as np

from .melodygen import MelodySpec

__all__ = [
    "Waveshape",
    "AdsrProfile",
    "ADSR_PROFILES",
    "RenderConfig",
    "AudioClip",
    "oscillate",
    "adsr_gain_curve",
    "render_chord",
    "render_melody",
    "CROSSFADE_SECONDS",
]

# Linear fade applied at every chord boundary to suppress clicks.
CROSSFADE_SECONDS = 0.002


class Waveshape(str, enum.Enum):
    SINE = "sine"
    SQUARE = "square"
    SAWTOOTH = "sawtooth"
    TRIANGLE = "triangle"


@dataclass(frozen=True)
class AdsrProfile:
    """Attack-decay-sustain-release envelope parameters (times in seconds)."""

    attack: float
    decay: float
    sustain: float
    release: float
    name: str = "custom"

    def __post_init__(self) -> None:
        if min(self.attack, self.decay, self.release) < 0:
            raise ValueError("attack, decay, and release must be >= 0")
        if not 0.0 <= self.sustain <= 1.0:
            raise ValueError(f"sustain must be in [0, 1], got {self.sustain}")


# Named amplitude-change profiles: "stable" holds full gain for the whole
# clip, "increase" ramps up over a 2-second attack, "decrease" fades out
# over a 2-second release.
ADSR_PROFILES = {
    "stable": AdsrProfile(attack=0.01, decay=0.01, sustain=1.0, release=0.01, name="stable"),
    "increase": AdsrProfile(attack=2.0, decay=0.01, sustain=1.0, release=0.01, name="increase"),
    "decrease": AdsrProfile(attack=0.01, decay=0.01, sustain=1.0, release=2.0, name="decrease"),
}


@dataclass(frozen=True)
class RenderConfig:
    """Parameters of one rendering pass: format, timbre, and loudness."""

    sample_rate: int = 16_000
    clip_seconds: float = 4.0
    waveshape: Waveshape = Waveshape.SINE
    adsr: AdsrProfile = ADSR_PROFILES["stable"]
    peak_level: float = 0.8
    band_limited: bool = False

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        n = self.sample_rate * self.clip_seconds
        if abs(n - round(n)) > 1e-9:
            raise ValueError(
                f"sample_rate * clip_seconds must be an integer sample count, got {n}"
            )
        if not 0.0 < self.peak_level <= 1.0:
            raise ValueError(f"peak_level must be in (0, 1], got {self.peak_level}")

    @property
    def n_samples(self) -> int:
        return round(self.sample_rate * self.clip_seconds)


@dataclass
class AudioClip:
    """A rendered mono clip: samples in [-1, 1] plus render provenance."""

    samples: np.ndarray
    sample_rate: int
    metadata: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def _cycles(freq: float, phase: float, n_samples: int, sample_rate: int) -> np.ndarray:
    t = np.arange(n_samples, dtype=np.float64) / sample_rate
    return freq * t + phase / (2.0 * np.pi)


def _band_limited(shape: Waveshape, cycles: np.ndarray, freq: float, nyquist: float) -> np.ndarray:
    """Additive synthesis truncated below Nyquist (Fourier series partial sums)."""
    max_k = int(nyquist / freq)
    if max_k * freq >= nyquist:
        max_k -= 1
    out = np.zeros_like(cycles)
    if shape is Waveshape.SQUARE:
        for k in range(1, max_k + 1, 2):
            out += (4.0 / (np.pi * k)) * np.sin(2.0 * np.pi * k * cycles)
    elif shape is Waveshape.SAWTOOTH:
        for k in range(1, max_k + 1):
            out -= (2.0 / (np.pi * k)) * np.sin(2.0 * np.pi * k * cycles)
    elif shape is Waveshape.TRIANGLE:
        for i, k in enumerate(range(1, max_k + 1, 2)):
            sign = 1.0 if i % 2 == 0 else -1.0
            out += sign * (8.0 / (np.pi * k) ** 2) * np.sin(2.0 * np.pi * k * cycles)
    else:
        raise AssertionError(shape)
    return out


def oscillate(
    shape: Waveshape,
    freq: float,
    amplitude: float = 1.0,
    phase: float = 0.0,
    n_samples: int = 64_000,
    sample_rate: int = 16_000,
    band_limited: bool = False,
) -> np.ndarray:
    """Generate one periodic waveform at a given frequency and amplitude.

    Shapes follow the ideal definitions: sine = A*sin(2*pi*f*t + phase),
    square is the sign of that sine, sawtooth rises linearly -A..+A over
    each period, and triangle is the symmetric zigzag aligned with sine
    (zero and rising at phase 0).

    Raises:
        ValueError: if freq is not strictly between 0 and Nyquist, or
            amplitude is negative.
    """
    nyquist = sample_rate / 2.0
    if not 0.0 < freq < nyquist:
        raise ValueError(f"freq must be in (0, {nyquist}) Hz, got {freq}")
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    shape = Waveshape(shape)
    cycles = _cycles(freq, phase, n_samples, sample_rate)
    if shape is Waveshape.SINE:
        wave = np.sin(2.0 * np.pi * cycles)
    elif band_limited:
        wave = _band_limited(shape, cycles, freq, nyquist)
    elif shape is Waveshape.SQUARE:
        wave = np.sign(np.sin(2.0 * np.pi * cycles))
    elif shape is Waveshape.SAWTOOTH:
        wave = 2.0 * np.mod(cycles, 1.0) - 1.0
    else:  # triangle
        wave = 4.0 * np.abs(np.mod(cycles - 0.25, 1.0) - 0.5) - 1.0
    return amplitude * wave


def adsr_gain_curve(profile: AdsrProfile, duration: float, sample_rate: int) -> np.ndarray:
    """Sample the piecewise-linear ADSR gain over a duration.

    Gain ramps 0 -> 1 over the attack, 1 -> sustain over the decay, holds,
    and falls to 0 over the final `release` seconds. If the duration is too
    short for all segments, they are clipped in order; the release is
    realised as a multiplicative ramp over the last `release` seconds so
    the curve stays continuous in that case too.
    """
    n = round(duration * sample_rate)
    t = np.arange(n, dtype=np.float64) / sample_rate
    gain = np.ones(n)
    a, d, s, r = profile.attack, profile.decay, profile.sustain, profile.release
    if a > 0:
        m = t < a
        gain[m] = t[m] / a
    if d > 0:
        m = (t >= a) & (t < a + d)
        gain[m] = 1.0 + (s - 1.0) * (t[m] - a) / d
    gain[t >= a + d] = s
    if r > 0:
        m = t >= duration - r
        gain[m] *= (duration - t[m]) / r
    return gain


def render_chord(
    freqs: Sequence[float],
    duration: float,
    config: RenderConfig,
    phase: float = 0.0,
) -> np.ndarray:
    """Render one chord: per-note oscillations mixed with equal weights.

    The mix is scaled by 1/len(freqs) and then by config.peak_level, which
    bounds every sample by peak_level regardless of note count. A short
    linear fade-in/out (CROSSFADE_SECONDS) removes boundary clicks. Every
    note's oscillator restarts at `phase` at the chord onset.
    """
    if len(freqs) == 0:
        raise ValueError("chord must contain at least one frequency")
    n = round(duration * config.sample_rate)
    mix = np.zeros(n)
    for f in freqs:
        mix += oscillate(
            config.waveshape,
            f,
            amplitude=1.0,
            phase=phase,
            n_samples=n,
            sample_rate=config.sample_rate,
            band_limited=config.band_limited,
        )
    mix *= config.peak_level / len(freqs)
    fade_n = min(round(CROSSFADE_SECONDS * config.sample_rate), n // 2)
    if fade_n > 0:
        ramp = np.linspace(0.0, 1.0, fade_n, endpoint=False)
        mix[:fade_n] *= ramp
        mix[-fade_n:] *= ramp[::-1]
    return mix


def render_melody(spec: MelodySpec, config: RenderConfig | None = None) -> AudioClip:
    """Render a symbolic melody to a fixed-length clip.

    Chords are rendered in order and concatenated; the whole sequence is
    looped until it reaches the target length and truncated to exactly
    config.n_samples. The ADSR gain curve spans the full clip (so a
    2-second attack shapes the melody as a whole, not each chord).
    """
    if config is None:
        config = RenderConfig()
    if not spec.chords:
        raise ValueError("melody spec has no chords")
    one_pass = np.concatenate(
        [render_chord(ch.frequencies, ch.duration, config) for ch in spec.chords]
    )
    target = config.n_samples
    reps = max(1, ceil(target / len(one_pass)))
    samples = np.tile(one_pass, reps)[:target]
    samples = samples * adsr_gain_curve(config.adsr, config.clip_seconds, config.sample_rate)
    return AudioClip(
        samples=samples,
        sample_rate=config.sample_rate,
        metadata={
            "seed": spec.seed,
            "label": spec.label.value,
            "key": spec.key.name,
            "waveshape": config.waveshape.value,
            "adsr": config.adsr.name,
            "peak_level": config.peak_level,
        },
    )
