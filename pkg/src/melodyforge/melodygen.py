"""Seeded symbolic melody generation.

Given a seed and a label (major/minor), builds a chord sequence that is
guaranteed to be in a single key whose mode equals the label:

1. draw a tonic uniformly among the 12 pitch classes;
2. build the key's scale (major or harmonic minor);
3. draw the number of chords N uniformly from the configured set;
4. draw N triads uniformly with replacement from the mode's 7 triads;
5. force the cadence triads (I, IV, V in major; i, iv, V in minor) to be
   present by replacing chords at uniformly drawn, not-yet-replaced slots;
6. flip a fair coin: on 1, every degree-2/5/7 triad becomes its seventh;
7. move every chord note to a uniformly drawn power-of-two multiple of
   its octave-4 frequency that lies inside the frequency range;
8. draw each chord's duration uniformly from the duration range;
9. if the total falls short of the target length, mark the melody as
   repeating until it reaches it.

Randomness comes from one numpy PCG64 generator per melody, seeded solely
by the sample seed, with the draw order fixed exactly as listed above
(step 7 draws all octaves chord by chord, then step 8 draws all
durations), so a seed identifies one melody forever. Changing the draw
order or generator is a format-version bump.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Sequence

import numpy as np

from .theory import (
    ChordSymbol,
    KeyId,
    Mode,
    PitchClass,
    build_scale,
    chord_degree_numbers,
    chord_pitch_classes,
    pitch_frequency,
    seventh,
    triad,
)

__all__ = [
    "GenConfig",
    "DEFAULT_GEN_CONFIG",
    "ChordInstance",
    "MelodySpec",
    "FREQ_EDGE_TOLERANCE_HZ",
    "generate_melody",
    "force_cadence_chords",
    "randomize_octaves",
    "octave_choices",
    "repeats_to_reach",
]

# Frequency-range bounds are quoted to two decimal places (130.81 Hz is C3
# rounded, 523.25 Hz is C5 rounded), so range membership is tested to half
# of the last printed digit; otherwise C5 itself (523.2512 Hz) would fall
# outside the default range that is meant to end at C5.
FREQ_EDGE_TOLERANCE_HZ = 0.005

# Degrees whose triads are upgraded to sevenths by the coin flip.
SEVENTH_DEGREES = (2, 5, 7)

# Cadence degrees forced into every melody: I/IV/V (major), i/iv/V (minor).
CADENCE_DEGREES = (1, 4, 5)


@dataclass(frozen=True)
class GenConfig:
    """Sampling ranges for melody generation."""

    freq_range: tuple[float, float] = (130.81, 523.25)
    chord_counts: tuple[int, ...] = (3, 4, 5, 6, 7)
    duration_range: tuple[float, float] = (0.2, 0.9)
    target_seconds: float = 4.0

    def __post_init__(self) -> None:
        lo, hi = self.freq_range
        if not lo < hi:
            raise ValueError(f"freq_range must satisfy min < max, got {self.freq_range}")
        if len(self.chord_counts) == 0:
            raise ValueError("chord_counts must be non-empty")
        if min(self.chord_counts) < 3:
            raise ValueError("chord_counts below 3 cannot hold the forced cadence triads")
        t_lo, t_hi = self.duration_range
        if not 0 < t_lo <= t_hi <= self.target_seconds:
            raise ValueError(
                f"duration_range must lie within (0, {self.target_seconds}], "
                f"got {self.duration_range}"
            )

    def contains_freq(self, freq: float) -> bool:
        lo, hi = self.freq_range
        return lo - FREQ_EDGE_TOLERANCE_HZ <= freq <= hi + FREQ_EDGE_TOLERANCE_HZ


DEFAULT_GEN_CONFIG = GenConfig()


@dataclass(frozen=True)
class ChordInstance:
    """One sounded chord: its symbol, octave-resolved note frequencies, duration."""

    symbol: ChordSymbol
    frequencies: tuple[float, ...]
    duration: float


@dataclass(frozen=True)
class MelodySpec:
    """Symbolic melody: everything needed to render audio except the timbre.

    `chords` holds a single pass; `repeats` says how many times the pass is
    played back-to-back so that `total_duration = repeats * pass duration`
    reaches the target length.
    """

    seed: int
    label: Mode
    key: KeyId
    chords: tuple[ChordInstance, ...]
    total_duration: float
    repeats: int

    @property
    def pass_duration(self) -> float:
        return sum(ch.duration for ch in self.chords)

    def pitch_class_set(self) -> frozenset[PitchClass]:
        pcs: set[PitchClass] = set()
        for ch in self.chords:
            pcs.update(chord_pitch_classes(build_scale(self.key), ch.symbol))
        return frozenset(pcs)


def octave_choices(freq: float, config: GenConfig) -> tuple[float, ...]:
    """All power-of-two multiples of freq inside the config's range, ascending."""
    choices = []
    for k in range(-6, 7):
        f = freq * 2.0**k
        if config.contains_freq(f):
            choices.append(f)
    return tuple(choices)


def randomize_octaves(note_freq: float, config: GenConfig, rng: np.random.Generator) -> float:
    """Pick uniformly among the in-range octave placements of a note.

    Raises:
        ValueError: if no power-of-two multiple of note_freq is in range.
    """
    choices = octave_choices(note_freq, config)
    if not choices:
        raise ValueError(
            f"no octave of {note_freq} Hz lies within {config.freq_range}"
        )
    return choices[int(rng.integers(len(choices)))]


def force_cadence_chords(
    chords: Sequence[ChordSymbol], mode: Mode, rng: np.random.Generator
) -> list[ChordSymbol]:
    """Ensure the cadence triads are all present, by uniform replacement.

    While any of the cadence triads is missing, a slot is drawn uniformly
    among those not replaced earlier in this pass and overwritten with the
    first missing cadence triad; the slot is then retired, so a forced
    triad is never itself overwritten.

    Raises:
        ValueError: if fewer than 3 chords are supplied.
    """
    if len(chords) < 3:
        raise ValueError(f"need at least 3 chords to force the cadence, got {len(chords)}")
    out = list(chords)
    required = [triad(mode, d) for d in CADENCE_DEGREES]
    open_slots = list(range(len(out)))
    while not all(req in out for req in required):
        slot = open_slots.pop(int(rng.integers(len(open_slots))))
        for req in required:
            if req not in out:
                out[slot] = req
                break
    return out


def repeats_to_reach(pass_duration: float, target_seconds: float) -> int:
    """How many back-to-back passes reach the target duration."""
    if pass_duration <= 0:
        raise ValueError("pass duration must be positive")
    return max(1, ceil(target_seconds / pass_duration))


def generate_melody(
    seed: int, label: Mode | str, config: GenConfig | None = None
) -> MelodySpec:
    """Generate the melody identified by (seed, label) under a config.

    Deterministic: the same arguments always return the same spec. The
    label selects the mode; the tonic is drawn uniformly among 12, so each
    label covers its 12 keys.
    """
    if config is None:
        config = DEFAULT_GEN_CONFIG
    label = Mode(label)
    rng = np.random.default_rng(seed)

    tonic = PitchClass(int(rng.integers(12)))
    key = KeyId(tonic=tonic, mode=label)
    scale = build_scale(key)

    n_chords = int(config.chord_counts[int(rng.integers(len(config.chord_counts)))])
    symbols: list[ChordSymbol] = [
        triad(label, int(d)) for d in rng.integers(1, 8, size=n_chords)
    ]
    symbols = force_cadence_chords(symbols, label, rng)

    if int(rng.integers(2)) == 1:
        symbols = [
            seventh(label, sym.degree) if sym.degree in SEVENTH_DEGREES else sym
            for sym in symbols
        ]

    voiced: list[tuple[float, ...]] = []
    for sym in symbols:
        base = [
            pitch_frequency(scale.degrees[d - 1], octave=4)
            for d in chord_degree_numbers(sym)
        ]
        voiced.append(tuple(randomize_octaves(f, config, rng) for f in base))

    t_lo, t_hi = config.duration_range
    durations = [float(rng.uniform(t_lo, t_hi)) for _ in symbols]

    chords = tuple(
        ChordInstance(symbol=sym, frequencies=freqs, duration=dur)
        for sym, freqs, dur in zip(symbols, voiced, durations)
    )
    pass_duration = sum(durations)
    repeats = repeats_to_reach(pass_duration, config.target_seconds)
    return MelodySpec(
        seed=seed,
        label=label,
        key=key,
        chords=chords,
        total_duration=repeats * pass_duration,
        repeats=repeats,
    )
