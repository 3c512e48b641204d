"""WAV codec and manifest format tests."""

import numpy as np
import pytest

from melodyforge.audio_io import (
    MalformedWavError,
    UnsupportedBitDepthError,
    UnsupportedChannelsError,
    UnsupportedEncodingError,
    UnsupportedSampleRateError,
    WavLengthMismatchError,
    decode_wav,
    encode_wav,
    read_wav,
    wav_file_size,
    write_wav,
)
from melodyforge.manifest import (
    DatasetManifest,
    DuplicateRecordError,
    ManifestError,
    ManifestHeader,
    ManifestVersionError,
    SampleRecord,
    ShiftRole,
    Split,
    parse_manifest,
    read_manifest,
    serialize_manifest,
    wav_relative_path,
    write_manifest,
)
from melodyforge.melodygen import generate_melody
from melodyforge.synth import AudioClip, RenderConfig, Waveshape, render_melody

SR = 16_000


def render_seed(seed, label="major", waveshape=Waveshape.SINE):
    return render_melody(generate_melody(seed, label), RenderConfig(waveshape=waveshape))


class TestWavWrite:
    def test_clip_file_size(self, tmp_path):
        clip = render_seed(0)
        path = tmp_path / "clip.wav"
        write_wav(clip, path)
        assert path.stat().st_size == 44 + 128_000 == wav_file_size(64_000)

    def test_all_zero_clip_is_zero_bytes(self):
        raw = encode_wav(np.zeros(64_000), SR)
        assert len(raw) == 44 + 128_000
        assert raw[44:] == b"\x00" * 128_000

    def test_header_fields(self):
        raw = encode_wav(np.zeros(4), SR)
        assert raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"
        assert raw[12:16] == b"fmt " and raw[36:40] == b"data"
        assert int.from_bytes(raw[24:28], "little") == SR
        assert int.from_bytes(raw[34:36], "little") == 16

    def test_out_of_range_samples_rejected(self):
        with pytest.raises(ValueError):
            encode_wav(np.array([0.0, 1.2]), SR)

    def test_full_scale_quantization(self):
        raw = encode_wav(np.array([1.0, -1.0, 0.0]), SR)
        pcm = np.frombuffer(raw[44:], dtype="<i2")
        assert list(pcm) == [32767, -32767, 0]

    def test_write_is_byte_deterministic(self, tmp_path):
        clip = render_seed(11, waveshape=Waveshape.SQUARE)
        a, b = tmp_path / "a.wav", tmp_path / "b.wav"
        write_wav(clip, a)
        write_wav(clip, b)
        assert a.read_bytes() == b.read_bytes()


class TestWavRead:
    def test_round_trip_within_quantization_error(self, tmp_path):
        clip = render_seed(3, "minor", Waveshape.TRIANGLE)
        path = tmp_path / "clip.wav"
        write_wav(clip, path)
        loaded = read_wav(path)
        assert loaded.sample_rate == SR
        assert len(loaded.samples) == 64_000
        assert np.max(np.abs(loaded.samples - clip.samples)) <= 1.0 / 32767

    def test_wrong_sample_rate_reported_distinctly(self):
        raw = encode_wav(np.zeros(100), 8_000)
        with pytest.raises(UnsupportedSampleRateError):
            decode_wav(raw, expected_sample_rate=SR)
        samples, rate = decode_wav(raw, expected_sample_rate=None)
        assert rate == 8_000 and len(samples) == 100

    def test_truncated_data_chunk(self):
        raw = encode_wav(np.zeros(100), SR)
        with pytest.raises(WavLengthMismatchError):
            decode_wav(raw[:-10])

    def test_bad_magic(self):
        raw = bytearray(encode_wav(np.zeros(10), SR))
        raw[:4] = b"FORM"
        with pytest.raises(MalformedWavError):
            decode_wav(bytes(raw))

    def test_wrong_encoding_channels_bits(self):
        import struct

        def patched(offset, fmt, value):
            raw = bytearray(encode_wav(np.zeros(10), SR))
            struct.pack_into(fmt, raw, offset, value)
            return bytes(raw)

        with pytest.raises(UnsupportedEncodingError):
            decode_wav(patched(20, "<H", 3))  # IEEE float format tag
        with pytest.raises(UnsupportedChannelsError):
            decode_wav(patched(22, "<H", 2))
        with pytest.raises(UnsupportedBitDepthError):
            decode_wav(patched(34, "<H", 8))

    def test_too_short_file(self):
        with pytest.raises(MalformedWavError):
            decode_wav(b"RIFF")


def make_records(n, timbre=Waveshape.SINE, split=Split.TRAIN):
    records = []
    for seed in range(n):
        label = "major" if seed % 2 == 0 else "minor"
        spec = generate_melody(seed, label)
        records.append(
            SampleRecord(
                seed=seed,
                label=spec.label,
                key=spec.key,
                timbre=timbre,
                amplitude="stable",
                split=split,
                shift_role=ShiftRole.CLEAN,
                path=wav_relative_path(timbre, split, seed),
                chords=spec.chords,
            )
        )
    return records


class TestManifest:
    def test_round_trip_exact(self, tmp_path):
        manifest = DatasetManifest(
            header=ManifestHeader(kind="base", config={"sample_rate": SR}, shift=None),
            records=make_records(25),
        )
        path = tmp_path / "base_sine.manifest.tsv"
        write_manifest(manifest, path)
        loaded = read_manifest(path)
        assert loaded.header == manifest.header
        assert loaded.records == sorted(
            manifest.records, key=lambda r: (r.seed, r.timbre.value, r.split.value)
        )

    def test_chord_floats_round_trip_exactly(self):
        manifest = DatasetManifest(header=ManifestHeader(kind="base"), records=make_records(10))
        loaded = parse_manifest(serialize_manifest(manifest))
        for orig, back in zip(manifest.records, loaded.records):
            for a, b in zip(orig.chords, back.chords):
                assert a.frequencies == b.frequencies
                assert a.duration == b.duration
                assert a.symbol == b.symbol

    def test_duplicate_key_rejected_with_row_number(self):
        records = make_records(3)
        manifest = DatasetManifest(
            header=ManifestHeader(kind="base"), records=records + [records[1]]
        )
        with pytest.raises(DuplicateRecordError, match="rows 2 and 3"):
            serialize_manifest(manifest)

    def test_version_mismatch(self):
        text = serialize_manifest(
            DatasetManifest(header=ManifestHeader(kind="base"), records=make_records(2))
        )
        bumped = text.replace("#%melodyforge-manifest 1", "#%melodyforge-manifest 2", 1)
        with pytest.raises(ManifestVersionError):
            parse_manifest(bumped)

    def test_not_a_manifest(self):
        with pytest.raises(ManifestError):
            parse_manifest("seed\tlabel\n")

    def test_config_hash_stable_and_sensitive(self):
        h1 = ManifestHeader(kind="base", config={"p": 0.7}).config_hash
        h2 = ManifestHeader(kind="base", config={"p": 0.7}).config_hash
        h3 = ManifestHeader(kind="base", config={"p": 0.8}).config_hash
        assert h1 == h2 != h3

    def test_tampered_config_hash_detected(self):
        text = serialize_manifest(
            DatasetManifest(
                header=ManifestHeader(kind="base", config={"p": 0.7}), records=[]
            )
        )
        tampered = text.replace('"p": 0.7', '"p": 0.9')
        with pytest.raises(ManifestError, match="config_hash"):
            parse_manifest(tampered)

    def test_write_only_if_changed(self, tmp_path):
        manifest = DatasetManifest(header=ManifestHeader(kind="base"), records=make_records(4))
        path = tmp_path / "m.manifest.tsv"
        assert write_manifest(manifest, path, only_if_changed=True) is True
        assert write_manifest(manifest, path, only_if_changed=True) is False

    def test_records_sorted_by_seed(self, tmp_path):
        records = make_records(10)[::-1]
        manifest = DatasetManifest(header=ManifestHeader(kind="base"), records=records)
        loaded = parse_manifest(serialize_manifest(manifest))
        assert [r.seed for r in loaded.records] == sorted(r.seed for r in records)

    def test_to_melody_spec_round_trip(self):
        spec = generate_melody(43, "minor")
        rec = make_records(44)[-1]
        assert rec.seed == 43 and rec.label.value == "minor"
        assert rec.to_melody_spec() == spec

    def test_filter(self):
        manifest = DatasetManifest(
            header=ManifestHeader(kind="base"),
            records=make_records(6) + make_records(6, timbre=Waveshape.SQUARE),
        )
        assert len(manifest.filter(timbre=Waveshape.SQUARE)) == 6
        assert len(manifest.filter(timbre=Waveshape.SQUARE, label="major")) == 3
