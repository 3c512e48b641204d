"""Bit-exact WAV encoding and decoding.

Clips are stored as canonical RIFF/WAVE files: 16-bit signed little-endian
PCM, mono, with a fixed 44-byte header, so a rendered clip always produces
the same bytes. Floats quantise by round(sample * 32767) (ties to even)
and decode as pcm / 32767, the rule shared with downstream loaders.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .synth import AudioClip

__all__ = [
    "WavFormatError",
    "MalformedWavError",
    "UnsupportedEncodingError",
    "UnsupportedChannelsError",
    "UnsupportedSampleRateError",
    "UnsupportedBitDepthError",
    "WavLengthMismatchError",
    "encode_wav",
    "decode_wav",
    "write_wav",
    "read_wav",
    "wav_file_size",
]

_HEADER_BYTES = 44
_PCM_FORMAT = 1


class WavFormatError(Exception):
    """Base class for malformed or unsupported WAV input."""


class MalformedWavError(WavFormatError):
    pass


class UnsupportedEncodingError(WavFormatError):
    pass


class UnsupportedChannelsError(WavFormatError):
    pass


class UnsupportedSampleRateError(WavFormatError):
    pass


class UnsupportedBitDepthError(WavFormatError):
    pass


class WavLengthMismatchError(WavFormatError):
    pass


def wav_file_size(n_samples: int) -> int:
    """Size in bytes of a canonical mono 16-bit file with n_samples frames."""
    return _HEADER_BYTES + 2 * n_samples


def encode_wav(samples: np.ndarray, sample_rate: int) -> bytes:
    """Encode float samples in [-1, 1] as canonical 16-bit PCM WAV bytes.

    Raises:
        ValueError: if any sample falls outside [-1, 1]; out-of-range
            samples indicate a rendering bug, not a condition to mask.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError(f"expected mono samples, got shape {samples.shape}")
    if len(samples) and np.max(np.abs(samples)) > 1.0:
        raise ValueError("samples exceed [-1, 1]; refusing to clip audio")
    pcm = np.clip(np.rint(samples * 32767.0), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        _PCM_FORMAT,
        1,                # channels
        sample_rate,
        sample_rate * 2,  # byte rate
        2,                # block align
        16,               # bits per sample
        b"data",
        len(data),
    )
    return header + data


def decode_wav(raw: bytes, expected_sample_rate: int | None = 16_000) -> tuple[np.ndarray, int]:
    """Decode canonical WAV bytes to (float samples, sample_rate).

    Accepts PCM16 mono files (extra chunks are skipped); pass
    expected_sample_rate=None to accept any rate.
    """
    if len(raw) < _HEADER_BYTES:
        raise MalformedWavError(f"file too short for a WAV header ({len(raw)} bytes)")
    riff, riff_size, wave = struct.unpack_from("<4sI4s", raw, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise MalformedWavError("missing RIFF/WAVE magic")
    if riff_size != len(raw) - 8:
        raise WavLengthMismatchError(
            f"RIFF size field says {riff_size + 8} bytes, file has {len(raw)}"
        )

    fmt = None
    offset = 12
    while offset + 8 <= len(raw):
        chunk_id, chunk_size = struct.unpack_from("<4sI", raw, offset)
        body_start = offset + 8
        if body_start + chunk_size > len(raw):
            raise WavLengthMismatchError(
                f"chunk {chunk_id!r} claims {chunk_size} bytes past end of file"
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise MalformedWavError("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", raw, body_start)
        elif chunk_id == b"data":
            if fmt is None:
                raise MalformedWavError("data chunk appears before fmt chunk")
            audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
            if audio_format != _PCM_FORMAT:
                raise UnsupportedEncodingError(f"unsupported encoding {audio_format}, want PCM")
            if channels != 1:
                raise UnsupportedChannelsError(f"unsupported channel count {channels}, want mono")
            if bits != 16:
                raise UnsupportedBitDepthError(f"unsupported bit depth {bits}, want 16")
            if expected_sample_rate is not None and rate != expected_sample_rate:
                raise UnsupportedSampleRateError(
                    f"unsupported sample rate {rate} Hz, want {expected_sample_rate}"
                )
            if chunk_size % 2 != 0:
                raise WavLengthMismatchError("data chunk holds a partial 16-bit sample")
            pcm = np.frombuffer(raw, dtype="<i2", count=chunk_size // 2, offset=body_start)
            return pcm.astype(np.float64) / 32767.0, rate
        offset = body_start + chunk_size + (chunk_size % 2)
    raise MalformedWavError("no data chunk found")


def write_wav(clip: AudioClip, path: str | Path) -> None:
    """Write a clip to disk as a canonical WAV file (44-byte header + PCM)."""
    Path(path).write_bytes(encode_wav(clip.samples, clip.sample_rate))


def read_wav(path: str | Path, expected_sample_rate: int | None = 16_000) -> AudioClip:
    """Read a canonical WAV file back into an AudioClip."""
    samples, rate = decode_wav(Path(path).read_bytes(), expected_sample_rate)
    return AudioClip(samples=samples, sample_rate=rate, metadata={"path": str(path)})
