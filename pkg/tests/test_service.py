"""HTTP API tests via the in-process test client."""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from melodyforge.audio_io import decode_wav
from melodyforge.melodygen import generate_melody
from melodyforge.service.app import create_app
from melodyforge.synth import RenderConfig, Waveshape, render_melody

DIVISOR = 1000  # 40 train / 10 val / 10 test per timbre


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(), raise_server_exceptions=False) as c:
        yield c


@pytest.fixture(scope="module")
def dataset_root(client, tmp_path_factory):
    root = tmp_path_factory.mktemp("servicedata")
    response = client.post(
        "/datasets/generate",
        json={"root": str(root), "scale_divisor": DIVISOR},
    )
    assert response.status_code == 200, response.text
    return root


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["name"] == "melodyforge"
        assert body["manifest_format"] == 1


class TestRenderClip:
    def test_returns_valid_wav(self, client):
        response = client.post("/clips/render", json={"seed": 7, "timbre": "sawtooth"})
        assert response.status_code == 200
        assert response.headers["content-type"] == "audio/wav"
        samples, rate = decode_wav(response.content)
        assert rate == 16_000 and len(samples) == 64_000
        assert response.headers["x-melodyforge-label"] == "minor"  # seed 7 is odd

    def test_matches_direct_rendering(self, client):
        response = client.post("/clips/render", json={"seed": 4, "timbre": "sine"})
        spec = generate_melody(4, "major")
        clip = render_melody(spec, RenderConfig(waveshape=Waveshape.SINE))
        samples, _ = decode_wav(response.content)
        assert np.max(np.abs(samples - clip.samples)) <= 1.0 / 32767

    def test_explicit_label_overrides_parity(self, client):
        response = client.post("/clips/render", json={"seed": 4, "label": "minor"})
        assert response.headers["x-melodyforge-label"] == "minor"

    def test_validation_error(self, client):
        assert client.post("/clips/render", json={"seed": -1}).status_code == 422


class TestGenerate:
    def test_manifests_and_files(self, client, dataset_root):
        for timbre in ("sine", "square", "sawtooth", "triangle"):
            assert (dataset_root / f"base_{timbre}.manifest.tsv").exists()
        assert len(list((dataset_root / "sine" / "train").glob("*.wav"))) == 40
        assert len(list((dataset_root / "sine" / "test").glob("*.wav"))) == 10

    def test_rerun_is_idempotent(self, client, dataset_root):
        before = {p: p.stat().st_mtime_ns for p in dataset_root.rglob("*.wav")}
        response = client.post(
            "/datasets/generate",
            json={"root": str(dataset_root), "scale_divisor": DIVISOR},
        )
        body = response.json()
        assert body["written"] == 0
        assert body["skipped"] == body["records"] == 240
        after = {p: p.stat().st_mtime_ns for p in dataset_root.rglob("*.wav")}
        assert before == after

    def test_quick_mode_fully_correlated(self, client, tmp_path):
        response = client.post(
            "/datasets/generate",
            json={"root": str(tmp_path), "count": 20, "bias_level": 1.0},
        )
        body = response.json()
        assert body["records"] == 20
        from melodyforge.manifest import read_manifest

        manifest = read_manifest(list(tmp_path.glob("quick.manifest.tsv"))[0])
        for record in manifest.records:
            expected = "sine" if record.label.value == "major" else "square"
            assert record.timbre.value == expected

    def test_split_and_timbre_filters(self, client, tmp_path):
        response = client.post(
            "/datasets/generate",
            json={
                "root": str(tmp_path),
                "scale_divisor": DIVISOR,
                "timbres": ["sine"],
                "splits": ["test"],
                "render": False,
            },
        )
        body = response.json()
        assert list(body["manifests"]) == ["base_sine.manifest.tsv"]
        assert body["records"] == 10
        assert body["written"] == 0  # render disabled

    def test_gen_overrides(self, client, tmp_path):
        response = client.post(
            "/datasets/generate",
            json={
                "root": str(tmp_path / "o"),
                "count": 4,
                "render": False,
                "gen": {"chord_counts": [3]},
            },
        )
        assert response.status_code == 200
        from melodyforge.manifest import read_manifest

        manifest = read_manifest(tmp_path / "o" / "quick.manifest.tsv")
        assert all(len(r.chords) == 3 for r in manifest.records)

    def test_background_job(self, client, tmp_path):
        response = client.post(
            "/datasets/generate",
            json={
                "root": str(tmp_path),
                "scale_divisor": DIVISOR,
                "timbres": ["triangle"],
                "background": True,
            },
        )
        job_id = response.json()["job_id"]
        deadline = time.time() + 60
        while time.time() < deadline:
            status = client.get(f"/jobs/{job_id}").json()
            if status["state"] != "running":
                break
            time.sleep(0.1)
        assert status["state"] == "done", status
        assert status["result"]["records"] == 60
        assert status["done"] == status["total"] == 60

    def test_unknown_job(self, client):
        assert client.get("/jobs/nope").status_code == 404


class TestShifts:
    SCHEDULE = [0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 19, 20]

    def test_domain_level_counts(self, client, dataset_root):
        for level, squares in ((0, 0), (1, 2), (11, 20)):
            response = client.post(
                "/shifts/domain",
                json={"root": str(dataset_root), "level": level, "schedule": self.SCHEDULE},
            )
            body = response.json()
            assert body["square_count"] == squares
            assert body["sine_count"] == 40 - squares

    def test_selection_bias_summary(self, client, dataset_root):
        response = client.post(
            "/shifts/selection-bias", json={"root": str(dataset_root), "p": 1.0}
        )
        body = response.json()
        assert body["training"]["p_sine_given_major"] == 1.0
        assert body["training"]["timbre_label_phi"] == 1.0
        assert set(body["suites"]) == {
            "in_distribution", "neutral", "anti_bias", "unseen_timbre",
        }
        assert body["suites"]["neutral"]["stats"]["timbre_label_phi"] == 0.0
        assert body["suites"]["anti_bias"]["stats"]["p_sine_given_major"] == 0.0
        assert (dataset_root / "shift_bias_p1.00.manifest.tsv").exists()
        assert (dataset_root / "suite_neutral_p1.00.manifest.tsv").exists()

    def test_missing_base_manifests(self, client, tmp_path):
        response = client.post("/shifts/domain", json={"root": str(tmp_path), "level": 0})
        assert response.status_code == 404
        assert response.json()["detail"]["error_class"] == "missing-input"

    def test_invalid_level_is_config_error(self, client, dataset_root):
        response = client.post(
            "/shifts/domain",
            json={"root": str(dataset_root), "level": 40, "schedule": self.SCHEDULE},
        )
        assert response.status_code == 400
        assert response.json()["detail"]["error_class"] == "config"

    def test_off_grid_bias_rejected(self, client, dataset_root):
        response = client.post(
            "/shifts/selection-bias", json={"root": str(dataset_root), "p": 0.55}
        )
        assert response.status_code == 400


class TestVerifyEndpoint:
    def test_verify_single_manifest(self, client, dataset_root):
        response = client.post(
            "/verify",
            json={
                "root": str(dataset_root),
                "manifest": "base_sine.manifest.tsv",
                "spectral_sample": 3,
            },
        )
        body = response.json()
        assert body["ok"] is True
        summary = body["manifests"]["base_sine.manifest.tsv"]
        assert summary["records"] == 60
        assert summary["symbolic_failures"] == 0
        assert summary["per_timbre_accuracy"]["sine"][0] == 3
        assert (dataset_root / "base_sine.verify.txt").exists()

    def test_corrupted_wav_flagged(self, client, dataset_root):
        victim = next((dataset_root / "square" / "val").glob("*.wav"))
        backup = victim.read_bytes()
        victim.write_bytes(backup[:5000])
        try:
            response = client.post(
                "/verify",
                json={"root": str(dataset_root), "manifest": "base_square.manifest.tsv"},
            )
            body = response.json()
            assert body["ok"] is False
            errors = body["manifests"]["base_square.manifest.tsv"]["file_errors"]
            assert any(victim.name in e for e in errors)
        finally:
            victim.write_bytes(backup)

    def test_verify_empty_root(self, client, tmp_path):
        response = client.post("/verify", json={"root": str(tmp_path)})
        assert response.status_code == 404


class TestInspect:
    def test_inspect_base_manifest(self, client, dataset_root):
        response = client.get(
            "/manifests/inspect",
            params={"path": str(dataset_root / "base_sine.manifest.tsv")},
        )
        body = response.json()
        assert body["kind"] == "base"
        assert body["by_split"] == {"test": 10, "train": 40, "val": 10}
        assert body["by_label"] == {"major": 30, "minor": 30}
        assert body["by_timbre"] == {"sine": 60}

    def test_inspect_missing(self, client, tmp_path):
        response = client.get(
            "/manifests/inspect", params={"path": str(tmp_path / "nope.tsv")}
        )
        assert response.status_code == 404
