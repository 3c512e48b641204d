"""Equal-temperament tuning, scale construction, and chord spelling.

Covers the 24 Western keys used by the generator: 12 major keys and 12
harmonic-minor keys. Frequencies come from a fixed octave-4 reference table
(concert pitch, A4 = 440 Hz) and extend to other octaves by exact doubling
or halving, so octave-4 values match the reference table digit for digit.

Pitch classes are stored as integer indices 0-11 (C = 0) and rendered with
flat spellings (Db, Eb, Gb, Ab, Bb); sharp spellings are accepted on input
and normalised.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = [
    "PitchClass",
    "Mode",
    "Quality",
    "Extension",
    "KeyId",
    "Scale",
    "ChordSymbol",
    "ALL_KEYS",
    "OCTAVE4_HZ",
    "pitch_frequency",
    "build_scale",
    "chord_degree_numbers",
    "chord_pitch_classes",
    "allowed_chords",
    "triad",
    "seventh",
    "parse_chord_name",
]


class PitchClass(enum.IntEnum):
    """The 12 pitch classes, indexed chromatically from C."""

    C = 0
    Db = 1
    D = 2
    Eb = 3
    E = 4
    F = 5
    Gb = 6
    G = 7
    Ab = 8
    A = 9
    Bb = 10
    B = 11

    @classmethod
    def from_name(cls, name: str) -> "PitchClass":
        """Look up a pitch class by name, normalising sharp spellings."""
        try:
            return cls[_SHARP_ALIASES.get(name, name)]
        except KeyError:
            raise ValueError(f"unknown pitch class name: {name!r}") from None


_SHARP_ALIASES = {"C#": "Db", "D#": "Eb", "F#": "Gb", "G#": "Ab", "A#": "Bb"}

# Octave-4 reference frequencies in Hz, indexed by PitchClass: 12-TET
# concert pitch at four decimal places, held as exact literals so octave-4
# outputs reproduce these values digit for digit.
OCTAVE4_HZ = (
    261.6256,  # C4
    277.1826,  # Db4
    293.6648,  # D4
    311.1270,  # Eb4
    329.6276,  # E4
    349.2282,  # F4
    369.9944,  # Gb4
    391.9954,  # G4
    415.3047,  # Ab4
    440.0000,  # A4
    466.1638,  # Bb4
    493.8833,  # B4
)


class Mode(str, enum.Enum):
    MAJOR = "major"
    MINOR = "minor"


class Quality(str, enum.Enum):
    MAJOR = "major"
    MINOR = "minor"
    DIMINISHED = "diminished"
    AUGMENTED = "augmented"
    HALF_DIMINISHED = "half-diminished"


class Extension(str, enum.Enum):
    TRIAD = "triad"
    SEVENTH = "seventh"


# Scale interval patterns in semitones. Minor keys use the harmonic minor
# scale (raised 7th degree).
MAJOR_STEPS = (2, 2, 1, 2, 2, 2, 1)
HARMONIC_MINOR_STEPS = (2, 1, 2, 2, 1, 3, 1)

# Triad quality by scale degree, implied by the scale's interval content.
_TRIAD_QUALITY = {
    Mode.MAJOR: {
        1: Quality.MAJOR,
        2: Quality.MINOR,
        3: Quality.MINOR,
        4: Quality.MAJOR,
        5: Quality.MAJOR,
        6: Quality.MINOR,
        7: Quality.DIMINISHED,
    },
    Mode.MINOR: {
        1: Quality.MINOR,
        2: Quality.DIMINISHED,
        3: Quality.AUGMENTED,
        4: Quality.MINOR,
        5: Quality.MAJOR,
        6: Quality.MAJOR,
        7: Quality.DIMINISHED,
    },
}

# Seventh chords are only available on degrees 2, 5, and 7.
_SEVENTH_QUALITY = {
    Mode.MAJOR: {
        2: Quality.MINOR,            # ii7
        5: Quality.MAJOR,            # V7 (dominant)
        7: Quality.HALF_DIMINISHED,  # viio/7
    },
    Mode.MINOR: {
        2: Quality.HALF_DIMINISHED,  # iio/7
        5: Quality.MAJOR,            # V7 (dominant)
        7: Quality.DIMINISHED,       # vii(dim)7
    },
}

# Interval profile (semitones above the chord root) implied by each
# (quality, extension) pair. Used to validate spelled chords against the
# scale content they were built from.
_INTERVAL_PROFILE = {
    (Quality.MAJOR, Extension.TRIAD): (0, 4, 7),
    (Quality.MINOR, Extension.TRIAD): (0, 3, 7),
    (Quality.DIMINISHED, Extension.TRIAD): (0, 3, 6),
    (Quality.AUGMENTED, Extension.TRIAD): (0, 4, 8),
    (Quality.MAJOR, Extension.SEVENTH): (0, 4, 7, 10),      # dominant seventh
    (Quality.MINOR, Extension.SEVENTH): (0, 3, 7, 10),
    (Quality.HALF_DIMINISHED, Extension.SEVENTH): (0, 3, 6, 10),
    (Quality.DIMINISHED, Extension.SEVENTH): (0, 3, 6, 9),
}

_ROMAN = {1: "i", 2: "ii", 3: "iii", 4: "iv", 5: "v", 6: "vi", 7: "vii"}


@dataclass(frozen=True)
class KeyId:
    """One of the 24 keys: a tonic pitch class plus major/minor mode."""

    tonic: PitchClass
    mode: Mode

    @property
    def name(self) -> str:
        return f"{self.tonic.name} {self.mode.value}"


ALL_KEYS = tuple(
    KeyId(PitchClass(i), mode) for mode in (Mode.MAJOR, Mode.MINOR) for i in range(12)
)


@dataclass(frozen=True)
class Scale:
    """The 7 ordered pitch classes of a key, starting at the tonic."""

    key: KeyId
    degrees: tuple[PitchClass, ...]

    def pitch_class_set(self) -> frozenset[PitchClass]:
        return frozenset(self.degrees)


@dataclass(frozen=True)
class ChordSymbol:
    """A chord named by scale degree, quality, and triad/seventh extension.

    Only the 10 chords available per mode are constructible; use triad() /
    seventh() or parse_chord_name() rather than instantiating directly.
    """

    degree: int
    quality: Quality
    extension: Extension

    def __post_init__(self) -> None:
        if not 1 <= self.degree <= 7:
            raise ValueError(f"chord degree must be 1..7, got {self.degree}")

    @property
    def name(self) -> str:
        """Roman-numeral name, e.g. 'IV', 'vii°', 'V7', 'viiø7'."""
        numeral = _ROMAN[self.degree]
        if self.quality in (Quality.MAJOR, Quality.AUGMENTED):
            numeral = numeral.upper()
        suffix = {
            Quality.DIMINISHED: "°",
            Quality.AUGMENTED: "+",
            Quality.HALF_DIMINISHED: "ø",
        }.get(self.quality, "")
        if self.extension is Extension.SEVENTH:
            suffix += "7"
        return numeral + suffix

    def __str__(self) -> str:
        return self.name


def triad(mode: Mode, degree: int) -> ChordSymbol:
    """The mode's triad on a scale degree (1..7), with its implied quality."""
    quality = _TRIAD_QUALITY[Mode(mode)].get(degree)
    if quality is None:
        raise ValueError(f"no triad on degree {degree}")
    return ChordSymbol(degree, quality, Extension.TRIAD)


def seventh(mode: Mode, degree: int) -> ChordSymbol:
    """The mode's seventh chord on a degree; only degrees 2, 5, 7 exist."""
    quality = _SEVENTH_QUALITY[Mode(mode)].get(degree)
    if quality is None:
        raise ValueError(f"no seventh chord on degree {degree} in {Mode(mode).value} keys")
    return ChordSymbol(degree, quality, Extension.SEVENTH)


def allowed_chords(mode: Mode) -> tuple[ChordSymbol, ...]:
    """The 10 chords available in a mode: 7 triads plus 3 sevenths."""
    mode = Mode(mode)
    triads = tuple(triad(mode, d) for d in range(1, 8))
    sevenths = tuple(seventh(mode, d) for d in (2, 5, 7))
    return triads + sevenths


def parse_chord_name(name: str, mode: Mode) -> ChordSymbol:
    """Inverse of ChordSymbol.name within a mode's 10 allowed chords."""
    for sym in allowed_chords(mode):
        if sym.name == name:
            return sym
    raise ValueError(f"unknown chord {name!r} in {Mode(mode).value} keys")


def pitch_frequency(pitch_class: PitchClass, octave: int) -> float:
    """Frequency in Hz of a pitch, by exact octave doubling of the reference table.

    Args:
        pitch_class: chromatic index or PitchClass member.
        octave: scientific octave number, 0..8.
    """
    if not 0 <= octave <= 8:
        raise ValueError(f"octave must be 0..8, got {octave}")
    return OCTAVE4_HZ[PitchClass(pitch_class)] * 2.0 ** (octave - 4)


def build_scale(key: KeyId) -> Scale:
    """Construct the 7-degree scale of a key (major or harmonic minor)."""
    steps = MAJOR_STEPS if key.mode is Mode.MAJOR else HARMONIC_MINOR_STEPS
    degrees = [key.tonic]
    for step in steps[:-1]:
        degrees.append(PitchClass((degrees[-1] + step) % 12))
    return Scale(key=key, degrees=tuple(degrees))


def chord_degree_numbers(sym: ChordSymbol) -> tuple[int, ...]:
    """Scale-degree numbers (1-based) covered by a chord: stacked thirds."""
    count = 3 if sym.extension is Extension.TRIAD else 4
    return tuple((sym.degree - 1 + 2 * k) % 7 + 1 for k in range(count))


def chord_pitch_classes(scale: Scale, sym: ChordSymbol) -> tuple[PitchClass, ...]:
    """Spell a chord inside a scale and validate its quality.

    Thirds are stacked on the chord's scale degree; the resulting interval
    profile must match the quality the symbol claims, so the quality tables
    act as an oracle over the scale construction rather than trusted input.

    Raises:
        ValueError: if sym is not one of the mode's 10 allowed chords, or
            if the spelled intervals contradict the symbol's quality.
    """
    if sym not in allowed_chords(scale.key.mode):
        raise ValueError(
            f"chord {sym.name} is not available in {scale.key.mode.value} keys"
        )
    pcs = tuple(scale.degrees[d - 1] for d in chord_degree_numbers(sym))
    intervals = tuple((pc - pcs[0]) % 12 for pc in pcs)
    expected = _INTERVAL_PROFILE[(sym.quality, sym.extension)]
    if intervals != expected:
        raise ValueError(
            f"chord {sym.name} in {scale.key.name} spelled {intervals}, "
            f"expected {expected}"
        )
    return pcs
