"""Dataset manifest format: per-sample provenance in line-oriented text.

A manifest is the authoritative listing of one dataset: a versioned
header carrying the fully resolved configuration (so the dataset can be
regenerated from the manifest alone) followed by one tab-separated row
per emitted sample. Rows are sorted by (seed, timbre) and keyed by
(seed, timbre, split); the chord cell serialises the symbolic melody with
full float precision so read(write(m)) == m exactly.

Layout of a dataset root:

    <root>/<timbre>/<split>/<seed>.wav
    <root>/*.manifest.tsv
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import GENERATOR_VERSION, MANIFEST_FORMAT_VERSION
from .melodygen import ChordInstance, MelodySpec, repeats_to_reach
from .synth import Waveshape
from .theory import KeyId, Mode, PitchClass, parse_chord_name

__all__ = [
    "Split",
    "ShiftRole",
    "SampleRecord",
    "ManifestHeader",
    "DatasetManifest",
    "ManifestError",
    "ManifestVersionError",
    "DuplicateRecordError",
    "serialize_manifest",
    "parse_manifest",
    "write_manifest",
    "read_manifest",
    "wav_relative_path",
]

_MAGIC = "#%melodyforge-manifest"
_COLUMNS = (
    "seed", "label", "tonic", "mode", "timbre", "amplitude",
    "split", "shift_role", "path", "chords",
)


class ManifestError(Exception):
    pass


class ManifestVersionError(ManifestError):
    pass


class DuplicateRecordError(ManifestError):
    pass


class Split(str, enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class ShiftRole(str, enum.Enum):
    CLEAN = "clean"
    BIAS_ALIGNED = "bias_aligned"
    BIAS_REVERTED = "bias_reverted"
    DOMAIN_REPLACED = "domain_replaced"


def wav_relative_path(timbre: Waveshape, split: Split, seed: int) -> str:
    return f"{Waveshape(timbre).value}/{Split(split).value}/{seed:08d}.wav"


@dataclass(frozen=True)
class SampleRecord:
    """One emitted sample: identity, rendering choices, and its symbolic melody."""

    seed: int
    label: Mode
    key: KeyId
    timbre: Waveshape
    amplitude: str
    split: Split
    shift_role: ShiftRole
    path: str
    chords: tuple[ChordInstance, ...]

    @property
    def record_key(self) -> tuple[int, str, str]:
        return (self.seed, self.timbre.value, self.split.value)

    def to_melody_spec(self, target_seconds: float = 4.0) -> MelodySpec:
        pass_duration = sum(ch.duration for ch in self.chords)
        repeats = repeats_to_reach(pass_duration, target_seconds)
        return MelodySpec(
            seed=self.seed,
            label=self.label,
            key=self.key,
            chords=self.chords,
            total_duration=repeats * pass_duration,
            repeats=repeats,
        )

    def with_timbre(self, timbre: Waveshape, shift_role: ShiftRole) -> "SampleRecord":
        """The same sample re-pointed at another timbre's rendering."""
        return replace(
            self,
            timbre=timbre,
            shift_role=shift_role,
            path=wav_relative_path(timbre, self.split, self.seed),
        )


@dataclass(frozen=True)
class ManifestHeader:
    """Manifest metadata: dataset kind plus the full resolved configuration."""

    kind: str
    config: dict = field(default_factory=dict)
    shift: dict | None = None
    generator_version: str = GENERATOR_VERSION
    format_version: int = MANIFEST_FORMAT_VERSION

    @property
    def config_hash(self) -> str:
        payload = {
            "kind": self.kind,
            "config": self.config,
            "shift": self.shift,
            "generator_version": self.generator_version,
            "format_version": self.format_version,
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class DatasetManifest:
    header: ManifestHeader
    records: list[SampleRecord]

    def __len__(self) -> int:
        return len(self.records)

    def filter(self, **fields) -> list[SampleRecord]:
        """Records matching every given field, e.g. filter(split=Split.TRAIN)."""
        out = self.records
        for name, want in fields.items():
            out = [r for r in out if getattr(r, name) == want]
        return out


def _format_chords(chords: tuple[ChordInstance, ...]) -> str:
    return "|".join(
        f"{ch.symbol.name}:{','.join(repr(f) for f in ch.frequencies)}:{ch.duration!r}"
        for ch in chords
    )


def _parse_chords(cell: str, mode: Mode) -> tuple[ChordInstance, ...]:
    chords = []
    for part in cell.split("|"):
        name, freqs, duration = part.split(":")
        chords.append(
            ChordInstance(
                symbol=parse_chord_name(name, mode),
                frequencies=tuple(float(f) for f in freqs.split(",")),
                duration=float(duration),
            )
        )
    return tuple(chords)


def _check_duplicates(records: list[SampleRecord]) -> None:
    seen: dict[tuple, int] = {}
    for i, rec in enumerate(records):
        first = seen.setdefault(rec.record_key, i)
        if first != i:
            raise DuplicateRecordError(
                f"duplicate (seed, timbre, split) key {rec.record_key} "
                f"at rows {first + 1} and {i + 1}"
            )


def serialize_manifest(manifest: DatasetManifest) -> str:
    records = sorted(
        manifest.records, key=lambda r: (r.seed, r.timbre.value, r.split.value)
    )
    _check_duplicates(records)
    meta = {
        "kind": manifest.header.kind,
        "generator_version": manifest.header.generator_version,
        "config_hash": manifest.header.config_hash,
        "config": manifest.header.config,
        "shift": manifest.header.shift,
    }
    lines = [
        f"{_MAGIC} {manifest.header.format_version}",
        "#meta " + json.dumps(meta, sort_keys=True),
        "#columns " + "\t".join(_COLUMNS),
    ]
    for r in records:
        lines.append(
            "\t".join(
                (
                    str(r.seed),
                    r.label.value,
                    r.key.tonic.name,
                    r.key.mode.value,
                    r.timbre.value,
                    r.amplitude,
                    r.split.value,
                    r.shift_role.value,
                    r.path,
                    _format_chords(r.chords),
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> DatasetManifest:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_MAGIC):
        raise ManifestError("not a melodyforge manifest (bad magic line)")
    version = lines[0][len(_MAGIC):].strip()
    if version != str(MANIFEST_FORMAT_VERSION):
        raise ManifestVersionError(
            f"manifest format {version!r} unsupported, expected {MANIFEST_FORMAT_VERSION}"
        )
    if len(lines) < 2 or not lines[1].startswith("#meta "):
        raise ManifestError("missing #meta line")
    meta = json.loads(lines[1][len("#meta "):])
    header = ManifestHeader(
        kind=meta["kind"],
        config=meta.get("config", {}),
        shift=meta.get("shift"),
        generator_version=meta.get("generator_version", GENERATOR_VERSION),
        format_version=int(version),
    )
    if meta.get("config_hash") not in (None, header.config_hash):
        raise ManifestError("config_hash does not match the stored configuration")

    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line or line.startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) != len(_COLUMNS):
            raise ManifestError(f"row {lineno}: expected {len(_COLUMNS)} columns, got {len(cells)}")
        seed, label, tonic, mode, timbre, amplitude, split, role, path, chords = cells
        label_mode = Mode(label)
        records.append(
            SampleRecord(
                seed=int(seed),
                label=label_mode,
                key=KeyId(PitchClass.from_name(tonic), Mode(mode)),
                timbre=Waveshape(timbre),
                amplitude=amplitude,
                split=Split(split),
                shift_role=ShiftRole(role),
                path=path,
                chords=_parse_chords(chords, label_mode),
            )
        )
    _check_duplicates(records)
    return DatasetManifest(header=header, records=records)


def write_manifest(
    manifest: DatasetManifest, path: str | Path, only_if_changed: bool = False
) -> bool:
    """Serialise to disk; returns whether bytes were written."""
    path = Path(path)
    payload = serialize_manifest(manifest).encode()
    if only_if_changed and path.exists() and path.read_bytes() == payload:
        return False
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    return True


def read_manifest(path: str | Path) -> DatasetManifest:
    return parse_manifest(Path(path).read_text())
