"""pyloader: read melodyforge datasets into in-memory arrays.

A pure reader for the documented dataset interface (one manifest file
plus a tree of canonical 16-bit PCM WAVs). No generation logic lives
here; the manifest is the single source of truth, and audio decodes by
the fixed quantisation rule pcm / 32767 shared with the generator.
"""

from .loader import (
    CorruptSampleError,
    LoadedSample,
    ManifestFormatError,
    ManifestVersionError,
    MelodyDataset,
    MissingFilesError,
    iterate,
    open_dataset,
)

__version__ = "1.0.0"

__all__ = [
    "CorruptSampleError",
    "LoadedSample",
    "ManifestFormatError",
    "ManifestVersionError",
    "MelodyDataset",
    "MissingFilesError",
    "iterate",
    "open_dataset",
]
