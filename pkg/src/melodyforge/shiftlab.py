"""Base dataset construction and distribution-shift constructors.

The base dataset is four timbre twins of the same symbolic melodies:
train/val seeds from one contiguous range, test seeds from a later range,
labels assigned by seed parity (even = major, exactly 50/50 per split).
The same seed always maps to the same melody in every timbre, so the
timbres are acoustically indistinguishable except for the waveshape.

Shift constructors never touch labels or melodies; they only choose which
timbre twin of each seed enters the emitted manifest:

* domain shift: level k replaces the first schedule[k] training seeds (in
  one fixed shuffled order, so levels are nested) with their square twins;
* selection bias: a fraction p of each label's records is bias-aligned
  (major -> sine, minor -> square); the rest get a timbre by a seeded fair
  coin with exactly balanced counts, so P(sine | major) = p + (1 - p)/2
  holds by counting, not in expectation.

Bias evaluation suites reuse the test-range twins: in-distribution applies
the training rule, neutral is fully decorrelated, anti-bias aligns the
fraction p to the reverted map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .manifest import (
    DatasetManifest,
    ManifestHeader,
    SampleRecord,
    ShiftRole,
    Split,
    wav_relative_path,
)
from .melodygen import DEFAULT_GEN_CONFIG, GenConfig, MelodySpec, generate_melody
from .synth import Waveshape

__all__ = [
    "BaseDatasetConfig",
    "DEFAULT_DOMAIN_SCHEDULE",
    "BIAS_LEVELS",
    "DEFAULT_BIAS_MAP",
    "TestSuite",
    "label_for_seed",
    "build_base_dataset",
    "build_domain_shift",
    "build_selection_bias",
    "build_quick_dataset",
    "build_test_suites",
    "build_square_domain_suite",
    "build_unseen_timbre_suite",
    "p_sine_given",
    "timbre_label_correlation",
    "composition_counts",
]

from .theory import Mode

# 12 domain-shift levels: square-sample counts injected into the 40k
# training set. Levels 0 and 1 (0 and 2 squares) are fixed anchor points;
# the intermediate counts grow geometrically up to equality at 20k.
DEFAULT_DOMAIN_SCHEDULE = (0, 2, 8, 32, 128, 512, 1024, 2048, 4096, 8192, 16384, 20000)

# 11 selection-bias levels.
BIAS_LEVELS = tuple(round(0.1 * k, 1) for k in range(11))

DEFAULT_BIAS_MAP = {Mode.MAJOR: Waveshape.SINE, Mode.MINOR: Waveshape.SQUARE}

# Fixed seeds for the shuffled orders used by the constructors; part of the
# output contract (changing one changes every emitted manifest).
_DOMAIN_ORDER_SEED = 101
_BIAS_MIX_SEED = 202
_SUITE_MIX_SEEDS = {"in_distribution": 303, "neutral": 404, "anti_bias": 505}


def label_for_seed(seed: int) -> Mode:
    """Even seeds are major, odd minor; contiguous even-length ranges balance 50/50."""
    return Mode.MAJOR if seed % 2 == 0 else Mode.MINOR


@dataclass(frozen=True)
class BaseDatasetConfig:
    """Seed ranges, sizes, timbres, and render parameters of the base dataset."""

    train_size: int = 40_000
    val_size: int = 10_000
    test_size: int = 10_000
    train_val_start: int = 0
    test_start: int = 55_000
    timbres: tuple[Waveshape, ...] = (
        Waveshape.SINE, Waveshape.SQUARE, Waveshape.SAWTOOTH, Waveshape.TRIANGLE,
    )
    amplitude: str = "stable"
    sample_rate: int = 16_000
    clip_seconds: float = 4.0
    peak_level: float = 0.8
    gen_config: GenConfig = field(default_factory=GenConfig)

    def __post_init__(self) -> None:
        if min(self.train_size, self.val_size, self.test_size) <= 0:
            raise ValueError("split sizes must be positive")
        tv = set(self.train_val_seeds)
        test = set(self.test_seeds)
        if tv & test:
            raise ValueError(
                f"train/val seeds {self.train_val_seeds} overlap test seeds {self.test_seeds}"
            )

    @property
    def train_val_seeds(self) -> range:
        return range(self.train_val_start, self.train_val_start + self.train_size + self.val_size)

    @property
    def train_seeds(self) -> range:
        return range(self.train_val_start, self.train_val_start + self.train_size)

    @property
    def val_seeds(self) -> range:
        start = self.train_val_start + self.train_size
        return range(start, start + self.val_size)

    @property
    def test_seeds(self) -> range:
        return range(self.test_start, self.test_start + self.test_size)

    @classmethod
    def scaled(cls, divisor: int, **overrides) -> "BaseDatasetConfig":
        """The standard layout with every size and range divided by `divisor`."""
        base = cls()
        return cls(
            train_size=base.train_size // divisor,
            val_size=base.val_size // divisor,
            test_size=base.test_size // divisor,
            train_val_start=base.train_val_start // divisor,
            test_start=base.test_start // divisor,
            **overrides,
        )

    def to_meta(self, timbre: Waveshape | None = None) -> dict:
        gen = self.gen_config
        meta = {
            "train_size": self.train_size,
            "val_size": self.val_size,
            "test_size": self.test_size,
            "train_val_start": self.train_val_start,
            "test_start": self.test_start,
            "amplitude": self.amplitude,
            "label_rule": "even-seed-major",
            "gen": {
                "freq_range": list(gen.freq_range),
                "chord_counts": list(gen.chord_counts),
                "duration_range": list(gen.duration_range),
                "target_seconds": gen.target_seconds,
            },
            "render": {
                "sample_rate": self.sample_rate,
                "clip_seconds": self.clip_seconds,
                "peak_level": self.peak_level,
            },
        }
        if timbre is not None:
            meta["timbre"] = Waveshape(timbre).value
        return meta


def _record(
    spec: MelodySpec, timbre: Waveshape, amplitude: str, split: Split, role: ShiftRole
) -> SampleRecord:
    return SampleRecord(
        seed=spec.seed,
        label=spec.label,
        key=spec.key,
        timbre=timbre,
        amplitude=amplitude,
        split=split,
        shift_role=role,
        path=wav_relative_path(timbre, split, spec.seed),
        chords=spec.chords,
    )


def generate_specs(seeds: Iterable[int], config: BaseDatasetConfig) -> dict[int, MelodySpec]:
    """Symbolic melodies for a set of seeds (timbre-independent, cached per seed)."""
    return {
        seed: generate_melody(seed, label_for_seed(seed), config.gen_config)
        for seed in seeds
    }


def build_base_dataset(
    config: BaseDatasetConfig | None = None,
) -> dict[Waveshape, DatasetManifest]:
    """One manifest per timbre over the configured train/val/test seed ranges."""
    if config is None:
        config = BaseDatasetConfig()
    split_of = {}
    for seed in config.train_seeds:
        split_of[seed] = Split.TRAIN
    for seed in config.val_seeds:
        split_of[seed] = Split.VAL
    for seed in config.test_seeds:
        split_of[seed] = Split.TEST
    specs = generate_specs(split_of, config)

    manifests = {}
    for timbre in config.timbres:
        records = [
            _record(specs[seed], timbre, config.amplitude, split, ShiftRole.CLEAN)
            for seed, split in split_of.items()
        ]
        manifests[timbre] = DatasetManifest(
            header=ManifestHeader(kind="base", config=config.to_meta(timbre), shift=None),
            records=records,
        )
    return manifests


def _train_twins(
    manifests: Mapping[Waveshape, DatasetManifest], split: Split = Split.TRAIN
) -> dict[Waveshape, dict[int, SampleRecord]]:
    twins = {}
    for timbre in (Waveshape.SINE, Waveshape.SQUARE):
        if timbre not in manifests:
            raise ValueError(f"missing {timbre.value} base manifest")
        twins[timbre] = {r.seed: r for r in manifests[timbre].records if r.split is split}
    if set(twins[Waveshape.SINE]) != set(twins[Waveshape.SQUARE]):
        raise ValueError("sine and square manifests cover different seeds")
    return twins


def build_domain_shift(
    level: int,
    manifests: Mapping[Waveshape, DatasetManifest],
    schedule: tuple[int, ...] | None = None,
) -> DatasetManifest:
    """Training manifest for one domain-shift level.

    The schedule must start at 0, be nondecreasing, and end at half the
    training size (equal sine/square counts). Replaced seeds are a prefix
    of one fixed shuffled order, so higher levels strictly contain lower
    ones and level effects are attributable to the added squares alone.
    """
    twins = _train_twins(manifests)
    train_seeds = sorted(twins[Waveshape.SINE])
    if schedule is None:
        if len(train_seeds) != 40_000:
            raise ValueError(
                "default domain schedule assumes 40,000 training records; "
                "pass an explicit schedule for other sizes"
            )
        schedule = DEFAULT_DOMAIN_SCHEDULE
    if schedule[0] != 0 or list(schedule) != sorted(schedule):
        raise ValueError("schedule must start at 0 and be nondecreasing")
    if schedule[-1] != len(train_seeds) // 2 or max(schedule) > len(train_seeds) // 2:
        raise ValueError(
            f"schedule must end at train_size/2 = {len(train_seeds) // 2}, got {schedule[-1]}"
        )
    if not 0 <= level < len(schedule):
        raise ValueError(f"level must be in 0..{len(schedule) - 1}, got {level}")

    order = np.random.default_rng(_DOMAIN_ORDER_SEED).permutation(len(train_seeds))
    replaced = {train_seeds[i] for i in order[: schedule[level]]}
    records = [
        twins[Waveshape.SQUARE][seed].with_timbre(Waveshape.SQUARE, ShiftRole.DOMAIN_REPLACED)
        if seed in replaced
        else twins[Waveshape.SINE][seed]
        for seed in train_seeds
    ]
    header = ManifestHeader(
        kind="domain_shift",
        config=manifests[Waveshape.SINE].header.config,
        shift={
            "kind": "domain_shift",
            "level": level,
            "schedule": list(schedule),
            "square_count": schedule[level],
            "order_seed": _DOMAIN_ORDER_SEED,
        },
    )
    return DatasetManifest(header=header, records=records)


def _validate_bias_level(p: float) -> float:
    for level in BIAS_LEVELS:
        if abs(p - level) < 1e-9:
            return level
    raise ValueError(f"bias level must be one of {BIAS_LEVELS}, got {p}")


def _biased_assignment(
    records: dict[int, SampleRecord],
    p: float,
    aligned_map: Mapping[Mode, Waveshape],
    aligned_role: ShiftRole,
    mix_seed: int,
) -> dict[int, tuple[Waveshape, ShiftRole]]:
    """Per-seed timbre choice: fraction p aligned, remainder an exact fair coin."""
    rng = np.random.default_rng(mix_seed)
    assignment: dict[int, tuple[Waveshape, ShiftRole]] = {}
    for mode in (Mode.MAJOR, Mode.MINOR):
        seeds = sorted(s for s, r in records.items() if r.label is mode)
        perm = rng.permutation(len(seeds))
        n_aligned = round(p * len(seeds))
        for i in perm[:n_aligned]:
            assignment[seeds[i]] = (aligned_map[mode], aligned_role)
        rest = perm[n_aligned:]
        n_sine = round(len(rest) / 2)
        for j, i in enumerate(rest):
            timbre = Waveshape.SINE if j < n_sine else Waveshape.SQUARE
            assignment[seeds[i]] = (timbre, ShiftRole.CLEAN)
    return assignment


def _apply_assignment(
    twins: dict[Waveshape, dict[int, SampleRecord]],
    assignment: dict[int, tuple[Waveshape, ShiftRole]],
) -> list[SampleRecord]:
    out = []
    for seed in sorted(assignment):
        timbre, role = assignment[seed]
        base = twins[timbre][seed]
        out.append(base if role is ShiftRole.CLEAN else base.with_timbre(timbre, role))
    return out


def build_selection_bias(
    p: float,
    manifests: Mapping[Waveshape, DatasetManifest],
    bias_map: Mapping[Mode, Waveshape] | None = None,
) -> DatasetManifest:
    """Training manifest with a fraction p of bias-aligned records."""
    p = _validate_bias_level(p)
    if bias_map is None:
        bias_map = DEFAULT_BIAS_MAP
    twins = _train_twins(manifests)
    records = {**twins[Waveshape.SINE]}
    assignment = _biased_assignment(records, p, bias_map, ShiftRole.BIAS_ALIGNED, _BIAS_MIX_SEED)
    header = ManifestHeader(
        kind="selection_bias",
        config=manifests[Waveshape.SINE].header.config,
        shift={
            "kind": "selection_bias",
            "p": p,
            "bias_map": {m.value: w.value for m, w in bias_map.items()},
            "mix_seed": _BIAS_MIX_SEED,
        },
    )
    return DatasetManifest(header=header, records=_apply_assignment(twins, assignment))


@dataclass
class TestSuite:
    """A named evaluation split drawn from the test-range twins."""

    kind: str  # in_distribution | neutral | anti_bias | square_domain | unseen_timbre
    manifest: DatasetManifest

    @property
    def records(self) -> list[SampleRecord]:
        return self.manifest.records


def _suite_header(base: DatasetManifest, suite: str, p: float | None, extra: dict | None = None) -> ManifestHeader:
    shift = {"kind": "test_suite", "suite": suite}
    if p is not None:
        shift["p"] = p
    if extra:
        shift.update(extra)
    return ManifestHeader(kind="test_suite", config=base.header.config, shift=shift)


def build_test_suites(
    p: float,
    manifests: Mapping[Waveshape, DatasetManifest],
    bias_map: Mapping[Mode, Waveshape] | None = None,
) -> dict[str, TestSuite]:
    """The three bias-evaluation suites over the test seeds.

    in_distribution applies the training-time p rule; neutral decorrelates
    timbre and label exactly; anti_bias aligns the fraction p to the
    reverted map (major -> square, minor -> sine) with a neutral remainder.
    """
    p = _validate_bias_level(p)
    if bias_map is None:
        bias_map = DEFAULT_BIAS_MAP
    reverted = {
        Mode.MAJOR: bias_map[Mode.MINOR],
        Mode.MINOR: bias_map[Mode.MAJOR],
    }
    twins = _train_twins(manifests, split=Split.TEST)
    records = {**twins[Waveshape.SINE]}
    plans = {
        "in_distribution": (p, bias_map, ShiftRole.BIAS_ALIGNED),
        "neutral": (0.0, bias_map, ShiftRole.BIAS_ALIGNED),
        "anti_bias": (p, reverted, ShiftRole.BIAS_REVERTED),
    }
    suites = {}
    for name, (frac, mapping, role) in plans.items():
        assignment = _biased_assignment(records, frac, mapping, role, _SUITE_MIX_SEEDS[name])
        manifest = DatasetManifest(
            header=_suite_header(
                manifests[Waveshape.SINE], name, p,
                {"mix_seed": _SUITE_MIX_SEEDS[name],
                 "bias_map": {m.value: w.value for m, w in mapping.items()}},
            ),
            records=_apply_assignment(twins, assignment),
        )
        suites[name] = TestSuite(kind=name, manifest=manifest)
    return suites


def build_square_domain_suite(manifests: Mapping[Waveshape, DatasetManifest]) -> TestSuite:
    """The all-square test set used to evaluate domain shift."""
    square = manifests[Waveshape.SQUARE]
    records = [r for r in square.records if r.split is Split.TEST]
    manifest = DatasetManifest(
        header=_suite_header(square, "square_domain", None), records=records
    )
    return TestSuite(kind="square_domain", manifest=manifest)


def build_unseen_timbre_suite(manifests: Mapping[Waveshape, DatasetManifest]) -> TestSuite:
    """Union of the sawtooth and triangle test sets (timbres unseen in training)."""
    for timbre in (Waveshape.SAWTOOTH, Waveshape.TRIANGLE):
        if timbre not in manifests:
            raise ValueError(f"missing {timbre.value} base manifest")
    records = [
        r
        for timbre in (Waveshape.SAWTOOTH, Waveshape.TRIANGLE)
        for r in manifests[timbre].records
        if r.split is Split.TEST
    ]
    manifest = DatasetManifest(
        header=_suite_header(manifests[Waveshape.SAWTOOTH], "unseen_timbre", None),
        records=records,
    )
    return TestSuite(kind="unseen_timbre", manifest=manifest)


_QUICK_MIX_SEED = 606


def build_quick_dataset(
    count: int,
    bias_level: float = 0.0,
    config: BaseDatasetConfig | None = None,
    bias_map: Mapping[Mode, Waveshape] | None = None,
) -> DatasetManifest:
    """A small standalone dataset of `count` samples (seeds 0..count-1).

    Timbres follow the selection-bias rule at `bias_level`: 1.0 makes the
    timbre fully determined by the label, 0.0 decorrelates them.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    p = _validate_bias_level(bias_level)
    if bias_map is None:
        bias_map = DEFAULT_BIAS_MAP
    if config is None:
        config = BaseDatasetConfig()
    specs = generate_specs(range(count), config)
    twins = {
        timbre: {
            seed: _record(spec, timbre, config.amplitude, Split.TRAIN, ShiftRole.CLEAN)
            for seed, spec in specs.items()
        }
        for timbre in (Waveshape.SINE, Waveshape.SQUARE)
    }
    assignment = _biased_assignment(
        twins[Waveshape.SINE], p, bias_map, ShiftRole.BIAS_ALIGNED, _QUICK_MIX_SEED
    )
    meta = config.to_meta()
    meta["count"] = count
    header = ManifestHeader(
        kind="quick",
        config=meta,
        shift={
            "kind": "selection_bias",
            "p": p,
            "bias_map": {m.value: w.value for m, w in bias_map.items()},
            "mix_seed": _QUICK_MIX_SEED,
        },
    )
    return DatasetManifest(header=header, records=_apply_assignment(twins, assignment))


def composition_counts(manifest: DatasetManifest) -> dict[tuple[str, str], int]:
    """Record counts keyed by (timbre, label)."""
    counts: dict[tuple[str, str], int] = {}
    for r in manifest.records:
        key = (r.timbre.value, r.label.value)
        counts[key] = counts.get(key, 0) + 1
    return counts


def p_sine_given(manifest: DatasetManifest, label: Mode) -> float:
    """Empirical P(timbre = sine | label) over a manifest."""
    matching = [r for r in manifest.records if r.label is label]
    if not matching:
        raise ValueError(f"no records with label {label.value}")
    return sum(r.timbre is Waveshape.SINE for r in matching) / len(matching)


def timbre_label_correlation(manifest: DatasetManifest) -> float:
    """Phi coefficient between (timbre == sine) and (label == major)."""
    n11 = n10 = n01 = n00 = 0
    for r in manifest.records:
        sine = r.timbre is Waveshape.SINE
        major = r.label is Mode.MAJOR
        if sine and major:
            n11 += 1
        elif sine:
            n10 += 1
        elif major:
            n01 += 1
        else:
            n00 += 1
    denom = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if denom == 0:
        return 0.0
    return (n11 * n00 - n10 * n01) / denom**0.5
