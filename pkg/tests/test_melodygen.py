"""Melody generation tests: determinism, postconditions, and draw statistics."""

import numpy as np
import pytest

from melodyforge.melodygen import (
    DEFAULT_GEN_CONFIG,
    GenConfig,
    force_cadence_chords,
    generate_melody,
    octave_choices,
    randomize_octaves,
)
from melodyforge.theory import Extension, Mode, build_scale, chord_pitch_classes, triad


class TestDeterminism:
    def test_same_seed_same_spec(self):
        for seed in (0, 1, 12345, 2**40 + 17):
            assert generate_melody(seed, "major") == generate_melody(seed, "major")

    def test_different_seeds_differ(self):
        specs = {generate_melody(s, "minor").chords for s in range(20)}
        assert len(specs) > 15

    def test_label_changes_output(self):
        a = generate_melody(3, "major")
        b = generate_melody(3, "minor")
        assert a.key.mode is Mode.MAJOR and b.key.mode is Mode.MINOR


class TestPostconditions:
    @pytest.mark.parametrize("label", ["major", "minor"])
    def test_scan_500_seeds(self, label):
        cfg = DEFAULT_GEN_CONFIG
        for seed in range(500):
            spec = generate_melody(seed, label, cfg)
            scale = build_scale(spec.key)
            symbols = [ch.symbol for ch in spec.chords]
            # Cadence guarantee: degrees 1 and 4 as triads; degree 5 may have
            # been upgraded to its seventh by the coin step.
            assert triad(Mode(label), 1) in symbols
            assert triad(Mode(label), 4) in symbols
            assert 5 in {s.degree for s in symbols}
            assert len(spec.chords) in cfg.chord_counts
            for ch in spec.chords:
                assert cfg.duration_range[0] <= ch.duration <= cfg.duration_range[1]
                assert all(cfg.contains_freq(f) for f in ch.frequencies)
                assert set(chord_pitch_classes(scale, ch.symbol)) <= set(scale.degrees)
            assert spec.label is spec.key.mode

    def test_seventh_coin_is_all_or_none(self):
        saw_sevenths = saw_triad_only = 0
        for seed in range(400):
            spec = generate_melody(seed, "major")
            eligible = [ch.symbol for ch in spec.chords if ch.symbol.degree in (2, 5, 7)]
            if not eligible:
                continue
            kinds = {s.extension for s in eligible}
            assert len(kinds) == 1
            if Extension.SEVENTH in kinds:
                saw_sevenths += 1
            else:
                saw_triad_only += 1
        assert saw_sevenths > 0 and saw_triad_only > 0

    def test_loop_closure(self):
        for seed in range(300):
            spec = generate_melody(seed, "minor")
            if spec.pass_duration < spec.total_duration:
                assert spec.repeats >= 2
            assert spec.repeats * spec.pass_duration >= DEFAULT_GEN_CONFIG.target_seconds
            assert spec.total_duration == pytest.approx(spec.repeats * spec.pass_duration)

    def test_tonic_uniformity(self):
        counts = np.zeros(12, dtype=int)
        for seed in range(12_000):
            counts[generate_melody(seed, "major" if seed % 2 == 0 else "minor").key.tonic] += 1
        assert np.all(np.abs(counts - 1000) <= 100)


class TestForceCadence:
    def test_already_satisfied_is_untouched(self):
        rng = np.random.default_rng(0)
        chords = [triad(Mode.MAJOR, d) for d in (1, 4, 5)]
        assert force_cadence_chords(chords, Mode.MAJOR, rng) == chords

    def test_all_missing_forces_three_replacements(self):
        rng = np.random.default_rng(1)
        chords = [triad(Mode.MAJOR, 2)] * 3
        result = force_cadence_chords(chords, Mode.MAJOR, rng)
        assert {s.degree for s in result} == {1, 4, 5}

    def test_minor_mode_forces_its_own_cadence(self):
        rng = np.random.default_rng(2)
        result = force_cadence_chords([triad(Mode.MINOR, 6)] * 4, Mode.MINOR, rng)
        degrees = [s.degree for s in result]
        assert {1, 4, 5} <= set(degrees)
        assert all(s == triad(Mode.MINOR, s.degree) for s in result)

    def test_replacement_positions_uniform_without_replacement(self):
        # Monte-Carlo oracle: replacing 3 of 4 slots uniformly without
        # replacement touches each index with probability 3/4.
        rng = np.random.default_rng(3)
        base = [triad(Mode.MAJOR, 2)] * 4
        hits = np.zeros(4)
        runs = 10_000
        for _ in range(runs):
            result = force_cadence_chords(base, Mode.MAJOR, rng)
            for i, sym in enumerate(result):
                if sym.degree != 2:
                    hits[i] += 1
        assert np.all(np.abs(hits / runs - 0.75) < 0.02)

    def test_too_few_chords_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            force_cadence_chords([triad(Mode.MAJOR, 1)] * 2, Mode.MAJOR, rng)

    def test_forced_triads_never_overwritten(self):
        # Even when a draw lands on a slot holding a needed triad, the slot
        # is retired afterwards, so the loop always converges with each
        # cadence triad present exactly where it was forced.
        rng = np.random.default_rng(4)
        for _ in range(2_000):
            result = force_cadence_chords([triad(Mode.MAJOR, 5)] * 3, Mode.MAJOR, rng)
            assert {s.degree for s in result} == {1, 4, 5}


class TestOctaveRandomization:
    def test_enumeration_matches_powers_of_two_in_range(self):
        assert octave_choices(261.6256, DEFAULT_GEN_CONFIG) == (
            130.8128, 261.6256, 523.2512,
        )
        assert octave_choices(440.0, DEFAULT_GEN_CONFIG) == (220.0, 440.0)

    def test_uniform_choice_over_three_octaves(self):
        rng = np.random.default_rng(5)
        draws = 10_000
        counts = {130.8128: 0, 261.6256: 0, 523.2512: 0}
        for _ in range(draws):
            counts[randomize_octaves(261.6256, DEFAULT_GEN_CONFIG, rng)] += 1
        for c in counts.values():
            assert abs(c / draws - 1 / 3) < 0.02

    def test_two_octave_case(self):
        rng = np.random.default_rng(6)
        values = {randomize_octaves(440.0, DEFAULT_GEN_CONFIG, rng) for _ in range(100)}
        assert values == {220.0, 440.0}

    def test_singleton_range_returns_input(self):
        cfg = GenConfig(freq_range=(430.0, 450.0))
        rng = np.random.default_rng(7)
        assert randomize_octaves(440.0, cfg, rng) == 440.0

    def test_empty_choice_set_rejected(self):
        cfg = GenConfig(freq_range=(430.0, 450.0))
        rng = np.random.default_rng(8)
        with pytest.raises(ValueError):
            randomize_octaves(100.0, cfg, rng)

    def test_default_range_includes_rounded_edge_pitches(self):
        # The quoted bounds are C3/C5 rounded to two decimals; the exact
        # pitches 130.8128 and 523.2512 Hz must count as in range.
        assert DEFAULT_GEN_CONFIG.contains_freq(130.8128)
        assert DEFAULT_GEN_CONFIG.contains_freq(523.2512)
        assert not DEFAULT_GEN_CONFIG.contains_freq(65.4064)
        assert not DEFAULT_GEN_CONFIG.contains_freq(1046.5024)


class TestGenConfig:
    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            GenConfig(freq_range=(500.0, 400.0))
        with pytest.raises(ValueError):
            GenConfig(chord_counts=())
        with pytest.raises(ValueError):
            GenConfig(chord_counts=(2, 3))
        with pytest.raises(ValueError):
            GenConfig(duration_range=(0.0, 0.9))
        with pytest.raises(ValueError):
            GenConfig(duration_range=(0.2, 4.5))

    def test_custom_chord_counts_are_respected(self):
        cfg = GenConfig(chord_counts=(3,))
        for seed in range(50):
            assert len(generate_melody(seed, "major", cfg).chords) == 3
