import math
from fractions import Fraction

import numpy as np
import pytest

from melstill.errors import ConfigError, FramingError, InvalidInputError
from melstill.frontend import (
    LogMelPatch,
    SpectrogramConfig,
    Waveform,
    compute_log_mel,
    frame_patches,
    mel_bin_centers,
    pad_symmetric,
    plan_frames,
)

from conftest import make_tone
from oracles import reflect_pad_by_rule

SR = 16000


class TestWaveform:
    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            Waveform(np.array([]))

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            Waveform(np.array([0.0, np.nan]))

    def test_duration(self):
        assert Waveform(np.zeros(8000), SR).duration_s == 0.5


class TestPadSymmetric:
    def test_long_enough_clip_returned_unchanged(self):
        w = make_tone(2.5)
        out = pad_symmetric(w, 2.0)
        assert out is w

    def test_four_sample_reflection(self):
        w = Waveform(np.array([1.0, 2.0, 3.0, 4.0]), sample_rate=1)
        out = pad_symmetric(w, 8.0)
        assert out.samples.tolist() == [3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]
        assert out.samples.tolist() == reflect_pad_by_rule([1.0, 2.0, 3.0, 4.0], 8)

    def test_singleton_reflection(self):
        w = Waveform(np.array([0.25]), sample_rate=1)
        out = pad_symmetric(w, 4.0)
        assert out.samples.tolist() == [0.25] * 4
        assert out.samples.tolist() == reflect_pad_by_rule([0.25], 4)

    def test_matches_rule_oracle_on_random_cases(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 40))
            target = int(rng.integers(n, 80))
            samples = rng.standard_normal(n).round(3)
            w = Waveform(samples, sample_rate=1)
            out = pad_symmetric(w, float(target))
            assert out.samples.tolist() == reflect_pad_by_rule(samples.tolist(), target)

    def test_length_law(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 3 * SR))
            t = float(rng.uniform(0.01, 0.2))
            w = Waveform(rng.standard_normal(n) * 0.1, SR)
            assert len(pad_symmetric(w, t)) == max(n, math.ceil(t * SR))

    def test_idempotence(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, SR))
            w = Waveform(rng.standard_normal(n) * 0.1, SR)
            once = pad_symmetric(w, 0.11)
            twice = pad_symmetric(once, 0.11)
            assert np.array_equal(once.samples, twice.samples)

    def test_zero_target_rejected(self):
        with pytest.raises(InvalidInputError):
            pad_symmetric(make_tone(1.0), 0.0)


class TestComputeLogMel:
    def test_silence_hits_log_floor(self, frontend_cfg):
        w = Waveform(np.zeros(32000) + 0.0, SR)
        patch = compute_log_mel(w, frontend_cfg)
        assert np.allclose(patch.values, math.log(frontend_cfg.log_floor))

    def test_default_shape_198_by_80(self, frontend_cfg, tone_clip):
        patch = compute_log_mel(tone_clip, frontend_cfg)
        # (32000 - 400) // 160 + 1 frames
        assert patch.shape == (198, 80)

    def test_duration_mismatch_rejected(self, frontend_cfg):
        with pytest.raises(FramingError):
            compute_log_mel(make_tone(1.5), frontend_cfg)

    def test_fmax_beyond_nyquist_rejected(self):
        cfg = SpectrogramConfig(fmax_hz=9000.0)
        with pytest.raises(ConfigError):
            compute_log_mel(make_tone(2.0), cfg)

    def test_pure_tone_peaks_at_nearest_mel_bin(self, frontend_cfg):
        # oracle: compute filter centers analytically, pick the one nearest
        # the tone. 1 kHz sits 24.03 Hz from one center and 24.25 Hz from the
        # next (a 0.2 Hz tie, far below the 25 ms window's resolution), so a
        # tie within 5% of the bin spacing admits either neighbor; clearly
        # resolved tones must match the nearest center exactly.
        centers = mel_bin_centers(frontend_cfg)
        for freq in (1000.0, 440.0, 650.0, 1500.0, 2200.0, 3300.0):
            dist = np.abs(centers - freq)
            order = np.argsort(dist)
            nearest, runner_up = int(order[0]), int(order[1])
            spacing = abs(centers[runner_up] - centers[nearest])
            patch = compute_log_mel(make_tone(2.0, freq=freq), frontend_cfg)
            got_bin = int(np.argmax(patch.values.mean(axis=0)))
            if dist[runner_up] - dist[nearest] < 0.05 * spacing:
                assert got_bin in (nearest, runner_up)
            else:
                assert got_bin == nearest

    def test_energy_monotonicity(self, frontend_cfg, rng):
        base = rng.standard_normal(32000) * 0.05
        w1 = Waveform(base, SR)
        w2 = Waveform(base * 3.0, SR)
        p1 = compute_log_mel(w1, frontend_cfg)
        p2 = compute_log_mel(w2, frontend_cfg)
        assert np.all(p2.values >= p1.values)

    def test_determinism(self, frontend_cfg, tone_clip):
        a = compute_log_mel(tone_clip, frontend_cfg)
        b = compute_log_mel(tone_clip, frontend_cfg)
        assert np.array_equal(a.values, b.values)


class TestFramePatches:
    def test_exact_context_single_patch(self, frontend_cfg):
        patches = frame_patches(make_tone(2.0), frontend_cfg, 1.0)
        assert len(patches) == 1
        assert patches[0].start_offset_s == 0.0

    def test_four_second_clip_three_offsets(self, frontend_cfg):
        patches = frame_patches(make_tone(4.0), frontend_cfg, 1.0)
        assert [p.start_offset_s for p in patches] == [0.0, 1.0, 2.0]

    def test_short_clip_padded_to_one_patch(self, frontend_cfg):
        for advance in (0.25, 1.0, 3.0):
            patches = frame_patches(make_tone(1.0), frontend_cfg, advance)
            assert len(patches) == 1

    def test_patch_equals_log_mel_of_slice(self, frontend_cfg):
        w = make_tone(4.0)
        patches = frame_patches(w, frontend_cfg, 2.0)
        piece = Waveform(w.samples[:32000], SR)
        assert np.array_equal(patches[0].values, compute_log_mel(piece, frontend_cfg).values)

    def test_patch_count_law(self, frontend_cfg, rng):
        # law: floor((padded - context) / advance) + 1, in exact arithmetic
        for _ in range(300):
            dur = float(rng.uniform(0.2, 10.0))
            adv = float(rng.uniform(0.1, 3.0))
            w = Waveform(rng.standard_normal(int(dur * SR)) * 0.1, SR)
            plan = plan_frames(pad_symmetric(w, frontend_cfg.context_s), frontend_cfg, adv)
            padded = max(len(w), frontend_cfg.context_samples(SR))
            adv_samples = int(round(adv * SR))
            expected = (Fraction(padded - frontend_cfg.context_samples(SR)) //
                        Fraction(adv_samples)) + 1
            assert len(plan.patch_offsets) == expected

    def test_advance_refinement_superset(self, frontend_cfg):
        # padded length = context + k * advance: halving the advance keeps
        # every original offset
        w = make_tone(4.0)
        coarse = frame_patches(w, frontend_cfg, 1.0)
        fine = frame_patches(w, frontend_cfg, 0.5)
        coarse_offsets = {p.start_offset_s for p in coarse}
        fine_offsets = {p.start_offset_s for p in fine}
        assert coarse_offsets <= fine_offsets

    def test_nonpositive_advance_rejected(self, frontend_cfg):
        with pytest.raises(FramingError):
            frame_patches(make_tone(2.0), frontend_cfg, 0.0)

    def test_determinism_bit_identical(self, frontend_cfg, rng):
        samples = rng.standard_normal(3 * SR) * 0.1
        a = frame_patches(Waveform(samples, SR), frontend_cfg, 0.7)
        b = frame_patches(Waveform(samples, SR), frontend_cfg, 0.7)
        assert len(a) == len(b)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.values, pb.values)


class TestConfigValidation:
    def test_bad_band_rejected(self):
        with pytest.raises(ConfigError):
            SpectrogramConfig(fmin_hz=500.0, fmax_hz=100.0)

    def test_bad_hop_rejected(self):
        with pytest.raises(ConfigError):
            SpectrogramConfig(window_ms=5.0, hop_ms=10.0)

    def test_patch_validation(self):
        with pytest.raises(InvalidInputError):
            LogMelPatch(np.array([1.0, 2.0]))  # 1-D
        with pytest.raises(InvalidInputError):
            LogMelPatch(np.array([[np.inf, 0.0]]))
