"""Rendering manifests to WAV trees on disk.

Materialisation is idempotent and resumable: a record whose target file
already exists with the exact expected byte size is skipped, so rerunning
the same command writes zero new bytes. Records render independently, so
the work fans out over a process pool when workers > 1; outputs do not
depend on scheduling because every file is a pure function of its record.
"""

from __future__ import annotations

import multiprocessing
from pathlib import Path
from typing import Callable

from .audio_io import encode_wav, wav_file_size
from .manifest import DatasetManifest, SampleRecord
from .synth import ADSR_PROFILES, RenderConfig, render_melody

__all__ = ["materialize_manifest", "render_record_bytes", "render_config_for"]


def render_config_for(meta: dict, record: SampleRecord) -> RenderConfig:
    """Render settings for one record, from the manifest's resolved config."""
    render = meta.get("render", {})
    return RenderConfig(
        sample_rate=render.get("sample_rate", 16_000),
        clip_seconds=render.get("clip_seconds", 4.0),
        waveshape=record.timbre,
        adsr=ADSR_PROFILES[record.amplitude],
        peak_level=render.get("peak_level", 0.8),
    )


def render_record_bytes(record: SampleRecord, meta: dict) -> bytes:
    """Render one record's melody to canonical WAV bytes."""
    config = render_config_for(meta, record)
    target_seconds = meta.get("gen", {}).get("target_seconds", 4.0)
    clip = render_melody(record.to_melody_spec(target_seconds), config)
    return encode_wav(clip.samples, clip.sample_rate)


def _render_to_file(args: tuple[SampleRecord, dict, str]) -> str:
    record, meta, root = args
    path = Path(root) / record.path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(render_record_bytes(record, meta))
    return record.path


def materialize_manifest(
    manifest: DatasetManifest,
    root: str | Path,
    workers: int = 1,
    skip_existing: bool = True,
    progress: Callable[[int, int], None] | None = None,
) -> tuple[int, int]:
    """Render every record in a manifest under root; returns (written, skipped)."""
    root = Path(root)
    meta = manifest.header.config
    render = meta.get("render", {})
    expected_size = wav_file_size(
        round(render.get("sample_rate", 16_000) * render.get("clip_seconds", 4.0))
    )

    pending = []
    skipped = 0
    for record in manifest.records:
        target = root / record.path
        if skip_existing and target.exists() and target.stat().st_size == expected_size:
            skipped += 1
        else:
            pending.append((record, meta, str(root)))

    total = len(manifest.records)
    done = skipped
    if progress:
        progress(done, total)
    if workers <= 1 or len(pending) < 2:
        for item in pending:
            _render_to_file(item)
            done += 1
            if progress:
                progress(done, total)
    else:
        with multiprocessing.Pool(processes=workers) as pool:
            for _ in pool.imap_unordered(_render_to_file, pending, chunksize=8):
                done += 1
                if progress:
                    progress(done, total)
    return len(pending), skipped
