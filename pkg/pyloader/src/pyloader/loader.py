"""Dataset handle and sample iteration over manifest + WAV trees.

Supported manifest format: `#%melodyforge-manifest 1` magic line, a JSON
`#meta` line, a `#columns` line, then one tab-separated row per sample
(seed, label, tonic, mode, timbre, amplitude, split, shift_role, path,
chords). WAV files are RIFF/WAVE PCM16 mono.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

MANIFEST_MAGIC = "#%melodyforge-manifest"
SUPPORTED_FORMAT = "1"

_COLUMNS = (
    "seed", "label", "tonic", "mode", "timbre", "amplitude",
    "split", "shift_role", "path", "chords",
)

# Fixed label encoding: classifiers score major close to 1.
LABEL_TO_INT = {"minor": 0, "major": 1}


class ManifestFormatError(Exception):
    pass


class ManifestVersionError(ManifestFormatError):
    pass


class MissingFilesError(Exception):
    def __init__(self, missing: list[str]):
        self.missing = missing
        preview = ", ".join(missing[:5])
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        super().__init__(f"{len(missing)} referenced files missing: {preview}{more}")


class CorruptSampleError(Exception):
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")


@dataclass(frozen=True)
class Row:
    """One manifest row, as written by the generator."""

    seed: int
    label: str
    tonic: str
    mode: str
    timbre: str
    amplitude: str
    split: str
    shift_role: str
    path: str
    chords: str


@dataclass
class LoadedSample:
    """One training sample: waveform in [-1, 1], int label, row metadata."""

    waveform: np.ndarray
    label: int  # minor=0, major=1
    metadata: dict


def _decode_wav(raw: bytes, path: str) -> tuple[np.ndarray, int]:
    if len(raw) < 44 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptSampleError(path, "not a RIFF/WAVE file")
    offset = 12
    fmt = None
    while offset + 8 <= len(raw):
        chunk_id, chunk_size = struct.unpack_from("<4sI", raw, offset)
        body = offset + 8
        if body + chunk_size > len(raw):
            raise CorruptSampleError(path, f"chunk {chunk_id!r} overruns file")
        if chunk_id == b"fmt ":
            fmt = struct.unpack_from("<HHIIHH", raw, body)
        elif chunk_id == b"data":
            if fmt is None:
                raise CorruptSampleError(path, "data chunk before fmt chunk")
            audio_format, channels, rate, _, _, bits = fmt
            if (audio_format, channels, bits) != (1, 1, 16):
                raise CorruptSampleError(
                    path, f"need PCM16 mono, got format={audio_format} ch={channels} bits={bits}"
                )
            pcm = np.frombuffer(raw, dtype="<i2", count=chunk_size // 2, offset=body)
            return pcm.astype(np.float64) / 32767.0, rate
        offset = body + chunk_size + (chunk_size % 2)
    raise CorruptSampleError(path, "no data chunk")


def _parse_manifest(text: str, source: str) -> tuple[dict, list[Row]]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MANIFEST_MAGIC):
        raise ManifestFormatError(f"{source}: not a melodyforge manifest")
    version = lines[0][len(MANIFEST_MAGIC):].strip()
    if version != SUPPORTED_FORMAT:
        raise ManifestVersionError(
            f"{source}: manifest format {version!r}, this loader supports {SUPPORTED_FORMAT}"
        )
    if len(lines) < 2 or not lines[1].startswith("#meta "):
        raise ManifestFormatError(f"{source}: missing #meta line")
    meta = json.loads(lines[1][len("#meta "):])
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line or line.startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) != len(_COLUMNS):
            raise ManifestFormatError(
                f"{source}:{lineno}: expected {len(_COLUMNS)} columns, got {len(cells)}"
            )
        rows.append(Row(seed=int(cells[0]), **dict(zip(_COLUMNS[1:], cells[1:]))))
    return meta, rows


class MelodyDataset:
    """Handle over one manifest: length, composition summary, sample access."""

    def __init__(self, root: Path, manifest_path: Path, meta: dict, rows: list[Row]):
        self.root = root
        self.manifest_path = manifest_path
        self.meta = meta
        self.rows = rows

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def kind(self) -> str:
        return self.meta.get("kind", "unknown")

    @property
    def sample_rate(self) -> int:
        return self.meta.get("config", {}).get("render", {}).get("sample_rate", 16_000)

    def summary(self) -> dict:
        by = {"split": {}, "timbre": {}, "label": {}, "shift_role": {}}
        for row in self.rows:
            for field, table in by.items():
                value = getattr(row, field)
                table[value] = table.get(value, 0) + 1
        return {
            "manifest": str(self.manifest_path),
            "kind": self.kind,
            "records": len(self.rows),
            "shift": self.meta.get("shift"),
            **{f"by_{k}": dict(sorted(v.items())) for k, v in by.items()},
        }

    def missing_files(self) -> list[str]:
        return [row.path for row in self.rows if not (self.root / row.path).exists()]

    def load_row(self, row: Row) -> LoadedSample:
        path = self.root / row.path
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise CorruptSampleError(row.path, str(exc)) from exc
        waveform, rate = _decode_wav(raw, row.path)
        if rate != self.sample_rate:
            raise CorruptSampleError(
                row.path, f"sample rate {rate}, manifest says {self.sample_rate}"
            )
        return LoadedSample(
            waveform=waveform,
            label=LABEL_TO_INT[row.label],
            metadata={
                "seed": row.seed,
                "timbre": row.timbre,
                "shift_role": row.shift_role,
                "split": row.split,
                "key": f"{row.tonic} {row.mode}",
                "amplitude": row.amplitude,
                "path": row.path,
            },
        )

    def __getitem__(self, index: int) -> LoadedSample:
        return self.load_row(self.rows[index])


def open_dataset(
    root: str | Path,
    manifest: str | None = None,
    check_files: bool = True,
) -> MelodyDataset:
    """Open a dataset root and validate its manifest.

    Args:
        root: dataset directory.
        manifest: manifest file name inside root; may be omitted when the
            root holds exactly one *.manifest.tsv.
        check_files: verify every referenced WAV exists (missing paths are
            enumerated in the raised error).

    Raises:
        FileNotFoundError: no manifest to open.
        ManifestFormatError / ManifestVersionError: unsupported manifest.
        MissingFilesError: check_files found absent WAVs.
    """
    root = Path(root)
    if manifest is not None:
        manifest_path = root / manifest
        if not manifest_path.exists():
            raise FileNotFoundError(f"manifest not found: {manifest_path}")
    else:
        candidates = sorted(root.glob("*.manifest.tsv"))
        if not candidates:
            raise FileNotFoundError(f"no *.manifest.tsv under {root}")
        if len(candidates) > 1:
            names = ", ".join(c.name for c in candidates)
            raise ManifestFormatError(
                f"{root} holds several manifests ({names}); pass manifest=..."
            )
        manifest_path = candidates[0]
    meta, rows = _parse_manifest(manifest_path.read_text(), str(manifest_path))
    dataset = MelodyDataset(root=root, manifest_path=manifest_path, meta=meta, rows=rows)
    if check_files:
        missing = dataset.missing_files()
        if missing:
            raise MissingFilesError(missing)
    return dataset


def iterate(
    dataset: MelodyDataset,
    split: str | None = None,
    timbre: str | None = None,
    shift_role: str | None = None,
    label: str | None = None,
    order: str = "manifest",
    seed: int = 0,
    on_error: str = "raise",
) -> Iterator[LoadedSample]:
    """Yield samples matching the filters, in manifest or shuffled order.

    Args:
        order: "manifest" (row order) or "shuffled" (deterministic
            permutation from `seed`).
        on_error: "raise" aborts on a corrupt WAV; "skip" continues past it.
    """
    if order not in ("manifest", "shuffled"):
        raise ValueError(f"order must be 'manifest' or 'shuffled', got {order!r}")
    if on_error not in ("raise", "skip"):
        raise ValueError(f"on_error must be 'raise' or 'skip', got {on_error!r}")
    rows = [
        row
        for row in dataset.rows
        if (split is None or row.split == split)
        and (timbre is None or row.timbre == timbre)
        and (shift_role is None or row.shift_role == shift_role)
        and (label is None or row.label == label)
    ]
    if order == "shuffled":
        perm = np.random.default_rng(seed).permutation(len(rows))
        rows = [rows[i] for i in perm]
    for row in rows:
        try:
            yield dataset.load_row(row)
        except CorruptSampleError:
            if on_error == "raise":
                raise
