"""Request/response models for the HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

Timbre = Literal["sine", "square", "sawtooth", "triangle"]
SplitName = Literal["train", "val", "test"]
Amplitude = Literal["stable", "increase", "decrease"]

ALL_TIMBRES: list[Timbre] = ["sine", "square", "sawtooth", "triangle"]


class HealthResponse(BaseModel):
    name: str
    version: str
    manifest_format: int


class RenderClipRequest(BaseModel):
    seed: int = Field(ge=0)
    label: Literal["major", "minor"] | None = None  # None -> seed parity
    timbre: Timbre = "sine"
    amplitude: Amplitude = "stable"
    peak_level: float = Field(0.8, gt=0.0, le=1.0)


class GenParams(BaseModel):
    """Melody-generation ranges; mirrors the generator's config file schema."""

    freq_range: tuple[float, float] = (130.81, 523.25)
    chord_counts: list[int] = [3, 4, 5, 6, 7]
    duration_range: tuple[float, float] = (0.2, 0.9)
    target_seconds: float = 4.0


class DatasetParams(BaseModel):
    """Seed-range overrides, applied after any scale_divisor."""

    train_size: int | None = Field(None, gt=0)
    val_size: int | None = Field(None, gt=0)
    test_size: int | None = Field(None, gt=0)
    train_val_start: int | None = Field(None, ge=0)
    test_start: int | None = Field(None, ge=0)


class GenerateRequest(BaseModel):
    root: str
    timbres: list[Timbre] = Field(default_factory=lambda: list(ALL_TIMBRES))
    splits: list[SplitName] = Field(default_factory=lambda: ["train", "val", "test"])
    scale_divisor: int = Field(1, ge=1)
    count: int | None = Field(None, gt=0)  # quick mode: tiny standalone dataset
    bias_level: float | None = None        # quick mode composition
    amplitude: Amplitude = "stable"
    render: bool = True
    workers: int = Field(1, ge=1)
    background: bool = False
    gen: GenParams | None = None
    dataset: DatasetParams | None = None


class GenerateSummary(BaseModel):
    root: str
    manifests: dict[str, str]
    records: int
    written: int
    skipped: int


class JobSubmitted(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    state: Literal["running", "done", "failed"]
    done: int
    total: int
    error: str | None = None
    result: GenerateSummary | None = None


class CompositionStats(BaseModel):
    records: int
    counts: dict[str, int]  # "timbre/label" -> count
    p_sine_given_major: float
    timbre_label_phi: float


class DomainShiftRequest(BaseModel):
    root: str
    level: int = Field(ge=0)
    schedule: list[int] | None = None
    render: bool = False
    workers: int = Field(1, ge=1)


class DomainShiftSummary(BaseModel):
    manifest: str
    level: int
    square_count: int
    sine_count: int
    stats: CompositionStats


class SelectionBiasRequest(BaseModel):
    root: str
    p: float
    render: bool = False
    workers: int = Field(1, ge=1)


class SuiteSummary(BaseModel):
    manifest: str
    stats: CompositionStats


class SelectionBiasSummary(BaseModel):
    manifest: str
    p: float
    training: CompositionStats
    suites: dict[str, SuiteSummary]


class VerifyRequest(BaseModel):
    root: str
    manifest: str | None = None  # None -> every *.manifest.tsv under root
    spectral_sample: int = Field(0, ge=0)


class ManifestVerifySummary(BaseModel):
    records: int
    symbolic_failures: int
    file_errors: list[str]
    spectral_sampled: int
    per_timbre_accuracy: dict[str, tuple[int, int]]  # timbre -> (sampled, agreed)
    report_path: str


class VerifyResponse(BaseModel):
    ok: bool
    manifests: dict[str, ManifestVerifySummary]


class InspectResponse(BaseModel):
    path: str
    kind: str
    generator_version: str
    format_version: int
    config_hash: str
    shift: dict | None
    records: int
    by_split: dict[str, int]
    by_timbre: dict[str, int]
    by_label: dict[str, int]
    by_role: dict[str, int]
