"""Loader tests against a dataset produced by the generator's own CLI.

The generator package (melodyforge) is used here only to build the
fixture dataset and as the reference WAV reader; the loader under test
touches nothing but the files.
"""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from pyloader import (
    CorruptSampleError,
    ManifestFormatError,
    ManifestVersionError,
    MissingFilesError,
    iterate,
    open_dataset,
)


@pytest.fixture(scope="module")
def dataset_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("loaderdata")
    subprocess.run(
        [sys.executable, "-m", "melodyforge.cli", "--root", str(root),
         "generate", "--count", "100", "--bias-level", "1.0"],
        check=True,
        capture_output=True,
    )
    return root


@pytest.fixture(scope="module")
def dataset(dataset_root):
    return open_dataset(dataset_root)


class TestOpen:
    def test_length_and_kind(self, dataset):
        assert len(dataset) == 100
        assert dataset.kind == "quick"
        assert dataset.sample_rate == 16_000

    def test_summary(self, dataset):
        summary = dataset.summary()
        assert summary["records"] == 100
        assert summary["by_label"] == {"major": 50, "minor": 50}
        assert summary["by_timbre"] == {"sine": 50, "square": 50}
        assert summary["by_shift_role"] == {"bias_aligned": 100}
        assert summary["shift"]["p"] == 1.0

    def test_version_mismatch(self, dataset_root, tmp_path):
        manifest = dataset_root / "quick.manifest.tsv"
        bumped = tmp_path / "bumped.manifest.tsv"
        bumped.write_text(
            manifest.read_text().replace(
                "#%melodyforge-manifest 1", "#%melodyforge-manifest 2", 1
            )
        )
        with pytest.raises(ManifestVersionError):
            open_dataset(tmp_path, manifest="bumped.manifest.tsv", check_files=False)

    def test_not_a_manifest(self, tmp_path):
        (tmp_path / "x.manifest.tsv").write_text("seed\tlabel\n")
        with pytest.raises(ManifestFormatError):
            open_dataset(tmp_path)

    def test_no_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            open_dataset(tmp_path)

    def test_missing_files_enumerated(self, dataset_root):
        victim = dataset_root / dataset_rows_first_path(dataset_root)
        backup = victim.read_bytes()
        victim.unlink()
        try:
            with pytest.raises(MissingFilesError) as exc:
                open_dataset(dataset_root)
            assert victim.name in str(exc.value)
        finally:
            victim.write_bytes(backup)

    def test_multiple_manifests_need_explicit_name(self, dataset_root):
        copy = dataset_root / "copy.manifest.tsv"
        shutil.copy(dataset_root / "quick.manifest.tsv", copy)
        try:
            with pytest.raises(ManifestFormatError, match="several manifests"):
                open_dataset(dataset_root)
            explicit = open_dataset(dataset_root, manifest="quick.manifest.tsv")
            assert len(explicit) == 100
        finally:
            copy.unlink()


def dataset_rows_first_path(root) -> str:
    for line in (root / "quick.manifest.tsv").read_text().splitlines():
        if line and not line.startswith("#"):
            return line.split("\t")[8]
    raise AssertionError("manifest has no rows")


class TestIterate:
    def test_all_rows_exactly_once(self, dataset):
        seeds = [s.metadata["seed"] for s in iterate(dataset)]
        assert sorted(seeds) == list(range(100))

    def test_waveforms_match_generator_reader(self, dataset, dataset_root):
        # Cross-component oracle over the whole dataset: the loader's floats
        # must match the generator's own reader within one quantisation step.
        from melodyforge.audio_io import read_wav

        compared = 0
        for sample in iterate(dataset):
            reference = read_wav(dataset_root / sample.metadata["path"])
            assert len(sample.waveform) == 64_000
            assert np.max(np.abs(sample.waveform - reference.samples)) <= 1.0 / 32767
            assert np.max(np.abs(sample.waveform)) <= 1.0
            compared += 1
        assert compared == 100

    def test_labels_and_metadata_match_manifest(self, dataset):
        for sample, row in zip(iterate(dataset), dataset.rows):
            assert sample.metadata["seed"] == row.seed
            assert sample.metadata["timbre"] == row.timbre
            assert sample.metadata["shift_role"] == row.shift_role
            assert sample.label == (1 if row.label == "major" else 0)

    def test_full_bias_pairs_label_with_timbre(self, dataset):
        for sample in iterate(dataset, shift_role="bias_aligned"):
            expected = "sine" if sample.label == 1 else "square"
            assert sample.metadata["timbre"] == expected

    def test_filter_counts_match_manifest_exactly(self, dataset):
        rows = dataset.rows
        for field, value in (("timbre", "square"), ("shift_role", "bias_aligned"),
                             ("label", "minor"), ("split", "train")):
            expected = sum(getattr(r, field) == value for r in rows)
            got = sum(1 for _ in iterate(dataset, **{field: value}))
            assert got == expected

    def test_combined_filters(self, dataset):
        count = sum(1 for _ in iterate(dataset, timbre="square", label="minor"))
        assert count == 50  # full bias: every minor is square

    def test_shuffled_order_is_seeded(self, dataset):
        a = [s.metadata["seed"] for s in iterate(dataset, order="shuffled", seed=7)]
        b = [s.metadata["seed"] for s in iterate(dataset, order="shuffled", seed=7)]
        c = [s.metadata["seed"] for s in iterate(dataset, order="shuffled", seed=8)]
        assert a == b
        assert a != c
        assert sorted(a) == sorted(c) == list(range(100))

    def test_indexing(self, dataset):
        sample = dataset[3]
        assert sample.metadata["seed"] == dataset.rows[3].seed
        assert len(sample.waveform) == 64_000

    def test_corrupt_wav_raise_and_skip(self, dataset, dataset_root):
        victim = dataset_root / dataset.rows[5].path
        backup = victim.read_bytes()
        victim.write_bytes(backup[:2000])
        try:
            with pytest.raises(CorruptSampleError, match=dataset.rows[5].path):
                list(iterate(dataset))
            survivors = list(iterate(dataset, on_error="skip"))
            assert len(survivors) == 99
        finally:
            victim.write_bytes(backup)

    def test_bad_arguments(self, dataset):
        with pytest.raises(ValueError):
            next(iterate(dataset, order="sideways"))
        with pytest.raises(ValueError):
            next(iterate(dataset, on_error="ignore"))
