"""FastAPI application exposing generation, shifts, and verification.

The service wraps the core package behind JSON endpoints plus one
binary endpoint returning WAV bytes. Dataset construction can run in the
request (small builds) or as a background job polled via /jobs/{id}
(full-scale builds take hours of rendering).

Every path in requests refers to the filesystem the service runs on; the
bundled CLI mounts this app in-process by default, so local use needs no
running server.
"""

from __future__ import annotations

import dataclasses
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.responses import JSONResponse

from .. import GENERATOR_VERSION, MANIFEST_FORMAT_VERSION
from ..manifest import (
    DatasetManifest,
    ManifestError,
    SampleRecord,
    ShiftRole,
    Split,
    read_manifest,
    wav_relative_path,
    write_manifest,
)
from ..materialize import materialize_manifest, render_record_bytes
from ..melodygen import GenConfig, generate_melody
from ..shiftlab import (
    BaseDatasetConfig,
    build_base_dataset,
    build_domain_shift,
    build_quick_dataset,
    build_selection_bias,
    build_test_suites,
    build_unseen_timbre_suite,
    composition_counts,
    label_for_seed,
    p_sine_given,
    timbre_label_correlation,
)
from ..synth import Waveshape
from ..theory import Mode
from ..verifier import verify_dataset
from . import schemas
from .schemas import (
    CompositionStats,
    DomainShiftSummary,
    GenerateSummary,
    HealthResponse,
    InspectResponse,
    JobStatus,
    JobSubmitted,
    ManifestVerifySummary,
    SelectionBiasSummary,
    SuiteSummary,
    VerifyResponse,
)

BASE_MANIFEST = "base_{timbre}.manifest.tsv"
QUICK_MANIFEST = "quick.manifest.tsv"
DOMAIN_MANIFEST = "shift_domain_level{level:02d}.manifest.tsv"
BIAS_MANIFEST = "shift_bias_p{p:.2f}.manifest.tsv"
SUITE_MANIFEST = "suite_{name}_p{p:.2f}.manifest.tsv"
UNSEEN_MANIFEST = "suite_unseen_timbre.manifest.tsv"


@dataclass
class _Job:
    job_id: str
    state: str = "running"
    done: int = 0
    total: int = 0
    error: str | None = None
    result: GenerateSummary | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class _JobRegistry:
    def __init__(self) -> None:
        self._jobs: dict[str, _Job] = {}
        self._lock = threading.Lock()

    def create(self) -> _Job:
        job = _Job(job_id=uuid.uuid4().hex[:12])
        with self._lock:
            self._jobs[job.job_id] = job
        return job

    def get(self, job_id: str) -> _Job | None:
        with self._lock:
            return self._jobs.get(job_id)


def _stats(manifest: DatasetManifest) -> CompositionStats:
    counts = {
        f"{timbre}/{label}": n
        for (timbre, label), n in sorted(composition_counts(manifest).items())
    }
    try:
        p_sine = p_sine_given(manifest, Mode.MAJOR)
    except ValueError:
        p_sine = float("nan")
    return CompositionStats(
        records=len(manifest.records),
        counts=counts,
        p_sine_given_major=p_sine,
        timbre_label_phi=timbre_label_correlation(manifest),
    )


def _gen_config(params: schemas.GenParams | None) -> GenConfig:
    if params is None:
        return GenConfig()
    return GenConfig(
        freq_range=tuple(params.freq_range),
        chord_counts=tuple(params.chord_counts),
        duration_range=tuple(params.duration_range),
        target_seconds=params.target_seconds,
    )


def _require_base_manifests(root: Path, timbres: tuple[Waveshape, ...]) -> dict[Waveshape, DatasetManifest]:
    manifests = {}
    for timbre in timbres:
        path = root / BASE_MANIFEST.format(timbre=timbre.value)
        if not path.exists():
            raise HTTPException(
                status_code=404,
                detail={
                    "error_class": "missing-input",
                    "message": f"base manifest not found: {path}; run generate first",
                },
            )
        manifests[timbre] = read_manifest(path)
    return manifests


def _run_generate(req: schemas.GenerateRequest, job: _Job | None) -> GenerateSummary:
    root = Path(req.root)
    root.mkdir(parents=True, exist_ok=True)
    gen_config = _gen_config(req.gen)

    outputs: dict[str, DatasetManifest] = {}
    if req.count is not None:
        config = BaseDatasetConfig(amplitude=req.amplitude, gen_config=gen_config)
        outputs[QUICK_MANIFEST] = build_quick_dataset(
            req.count, req.bias_level if req.bias_level is not None else 0.0, config
        )
    else:
        config = BaseDatasetConfig.scaled(
            req.scale_divisor,
            timbres=tuple(Waveshape(t) for t in req.timbres),
            amplitude=req.amplitude,
            gen_config=gen_config,
        )
        if req.dataset is not None:
            overrides = {
                k: v for k, v in req.dataset.model_dump().items() if v is not None
            }
            config = dataclasses.replace(config, **overrides)
        wanted = set(req.splits)
        for timbre, manifest in build_base_dataset(config).items():
            manifest.records = [r for r in manifest.records if r.split.value in wanted]
            manifest.header.config["splits"] = sorted(wanted)
            outputs[BASE_MANIFEST.format(timbre=timbre.value)] = manifest

    total = sum(len(m.records) for m in outputs.values())
    if job:
        with job.lock:
            job.total = total

    written = skipped = 0
    manifest_paths = {}
    rendered_so_far = 0
    for name, manifest in outputs.items():
        path = root / name
        write_manifest(manifest, path, only_if_changed=True)
        manifest_paths[name] = str(path)
        if req.render:
            base = rendered_so_far

            def progress(done: int, _total: int, base: int = base) -> None:
                if job:
                    with job.lock:
                        job.done = base + done

            w, s = materialize_manifest(
                manifest, root, workers=req.workers, progress=progress
            )
            written += w
            skipped += s
            rendered_so_far += len(manifest.records)
    return GenerateSummary(
        root=str(root),
        manifests=manifest_paths,
        records=total,
        written=written,
        skipped=skipped,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="melodyforge",
        version=GENERATOR_VERSION,
        description="Deterministic melody synthesis and shifted-dataset construction.",
    )
    jobs = _JobRegistry()

    @app.exception_handler(ValueError)
    async def _value_error(_request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"error_class": "config", "message": str(exc)}},
        )

    @app.exception_handler(ManifestError)
    async def _manifest_error(_request, exc: ManifestError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"error_class": "config", "message": str(exc)}},
        )

    @app.exception_handler(FileNotFoundError)
    async def _not_found(_request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=404,
            content={"detail": {"error_class": "missing-input", "message": str(exc)}},
        )

    @app.exception_handler(OSError)
    async def _os_error(_request, exc: OSError):
        return JSONResponse(
            status_code=500,
            content={"detail": {"error_class": "io", "message": str(exc)}},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            name="melodyforge",
            version=GENERATOR_VERSION,
            manifest_format=MANIFEST_FORMAT_VERSION,
        )

    @app.post("/clips/render")
    def render_clip(req: schemas.RenderClipRequest) -> Response:
        label = Mode(req.label) if req.label else label_for_seed(req.seed)
        config = BaseDatasetConfig(amplitude=req.amplitude, peak_level=req.peak_level)
        spec = generate_melody(req.seed, label, config.gen_config)
        record = SampleRecord(
            seed=spec.seed,
            label=spec.label,
            key=spec.key,
            timbre=Waveshape(req.timbre),
            amplitude=req.amplitude,
            split=Split.TEST,
            shift_role=ShiftRole.CLEAN,
            path=wav_relative_path(Waveshape(req.timbre), Split.TEST, spec.seed),
            chords=spec.chords,
        )
        payload = render_record_bytes(record, config.to_meta())
        return Response(
            content=payload,
            media_type="audio/wav",
            headers={
                "X-Melodyforge-Seed": str(spec.seed),
                "X-Melodyforge-Label": spec.label.value,
                "X-Melodyforge-Key": spec.key.name,
                "X-Melodyforge-Timbre": req.timbre,
            },
        )

    @app.post("/datasets/generate", response_model=GenerateSummary | JobSubmitted)
    def generate(req: schemas.GenerateRequest):
        if req.background:
            job = jobs.create()

            def work() -> None:
                try:
                    result = _run_generate(req, job)
                    with job.lock:
                        job.result = result
                        job.done = job.total
                        job.state = "done"
                except Exception as exc:  # job errors surface via /jobs/{id}
                    with job.lock:
                        job.error = f"{type(exc).__name__}: {exc}"
                        job.state = "failed"

            threading.Thread(target=work, daemon=True).start()
            return JobSubmitted(job_id=job.job_id)
        return _run_generate(req, None)

    @app.get("/jobs/{job_id}", response_model=JobStatus)
    def job_status(job_id: str) -> JobStatus:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(
                status_code=404,
                detail={"error_class": "missing-input", "message": f"unknown job {job_id}"},
            )
        with job.lock:
            return JobStatus(
                job_id=job.job_id,
                state=job.state,
                done=job.done,
                total=job.total,
                error=job.error,
                result=job.result,
            )

    @app.post("/shifts/domain", response_model=DomainShiftSummary)
    def shift_domain(req: schemas.DomainShiftRequest) -> DomainShiftSummary:
        root = Path(req.root)
        manifests = _require_base_manifests(root, (Waveshape.SINE, Waveshape.SQUARE))
        schedule = tuple(req.schedule) if req.schedule is not None else None
        shifted = build_domain_shift(req.level, manifests, schedule)
        path = root / DOMAIN_MANIFEST.format(level=req.level)
        write_manifest(shifted, path, only_if_changed=True)
        if req.render:
            materialize_manifest(shifted, root, workers=req.workers)
        counts = composition_counts(shifted)
        return DomainShiftSummary(
            manifest=str(path),
            level=req.level,
            square_count=sum(n for (t, _), n in counts.items() if t == "square"),
            sine_count=sum(n for (t, _), n in counts.items() if t == "sine"),
            stats=_stats(shifted),
        )

    @app.post("/shifts/selection-bias", response_model=SelectionBiasSummary)
    def shift_selection_bias(req: schemas.SelectionBiasRequest) -> SelectionBiasSummary:
        root = Path(req.root)
        manifests = _require_base_manifests(root, (Waveshape.SINE, Waveshape.SQUARE))
        biased = build_selection_bias(req.p, manifests)
        path = root / BIAS_MANIFEST.format(p=req.p)
        write_manifest(biased, path, only_if_changed=True)
        if req.render:
            materialize_manifest(biased, root, workers=req.workers)

        suites = build_test_suites(req.p, manifests)
        suite_summaries = {}
        for name, suite in suites.items():
            suite_path = root / SUITE_MANIFEST.format(name=name, p=req.p)
            write_manifest(suite.manifest, suite_path, only_if_changed=True)
            if req.render:
                materialize_manifest(suite.manifest, root, workers=req.workers)
            suite_summaries[name] = SuiteSummary(
                manifest=str(suite_path), stats=_stats(suite.manifest)
            )

        unseen_ready = all(
            (root / BASE_MANIFEST.format(timbre=t.value)).exists()
            for t in (Waveshape.SAWTOOTH, Waveshape.TRIANGLE)
        )
        if unseen_ready:
            extra = {
                t: read_manifest(root / BASE_MANIFEST.format(timbre=t.value))
                for t in (Waveshape.SAWTOOTH, Waveshape.TRIANGLE)
            }
            unseen = build_unseen_timbre_suite(extra)
            unseen_path = root / UNSEEN_MANIFEST
            write_manifest(unseen.manifest, unseen_path, only_if_changed=True)
            suite_summaries["unseen_timbre"] = SuiteSummary(
                manifest=str(unseen_path), stats=_stats(unseen.manifest)
            )

        return SelectionBiasSummary(
            manifest=str(path),
            p=req.p,
            training=_stats(biased),
            suites=suite_summaries,
        )

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: schemas.VerifyRequest) -> VerifyResponse:
        root = Path(req.root)
        if req.manifest is not None:
            paths = [root / req.manifest]
            if not paths[0].exists():
                raise HTTPException(
                    status_code=404,
                    detail={
                        "error_class": "missing-input",
                        "message": f"manifest not found: {paths[0]}",
                    },
                )
        else:
            paths = sorted(root.glob("*.manifest.tsv"))
            if not paths:
                raise HTTPException(
                    status_code=404,
                    detail={
                        "error_class": "missing-input",
                        "message": f"no *.manifest.tsv under {root}",
                    },
                )
        summaries = {}
        all_ok = True
        for path in paths:
            manifest = read_manifest(path)
            result = verify_dataset(root, manifest, spectral_sample=req.spectral_sample)
            report_path = path.with_name(path.name.replace(".manifest.tsv", ".verify.txt"))
            report_path.write_text(result.to_text())
            all_ok &= result.ok
            summaries[path.name] = ManifestVerifySummary(
                records=result.total_records,
                symbolic_failures=len(result.symbolic_failures),
                file_errors=[f"{p}: {msg}" for p, msg in result.file_errors[:50]],
                spectral_sampled=len(result.spectral_rows),
                per_timbre_accuracy=result.per_timbre_accuracy(),
                report_path=str(report_path),
            )
        return VerifyResponse(ok=all_ok, manifests=summaries)

    @app.get("/manifests/inspect", response_model=InspectResponse)
    def inspect(path: str) -> InspectResponse:
        manifest_path = Path(path)
        if not manifest_path.exists():
            raise HTTPException(
                status_code=404,
                detail={
                    "error_class": "missing-input",
                    "message": f"manifest not found: {manifest_path}",
                },
            )
        manifest = read_manifest(manifest_path)

        def tally(attr: str) -> dict[str, int]:
            out: dict[str, int] = {}
            for r in manifest.records:
                key = getattr(r, attr).value
                out[key] = out.get(key, 0) + 1
            return dict(sorted(out.items()))

        return InspectResponse(
            path=str(manifest_path),
            kind=manifest.header.kind,
            generator_version=manifest.header.generator_version,
            format_version=manifest.header.format_version,
            config_hash=manifest.header.config_hash,
            shift=manifest.header.shift,
            records=len(manifest.records),
            by_split=tally("split"),
            by_timbre=tally("timbre"),
            by_label=tally("label"),
            by_role=tally("shift_role"),
        )

    return app


app = create_app()
