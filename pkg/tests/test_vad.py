import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singdiar.audio import AudioClip
from singdiar.vad import VadConfig, energy_vad, is_instrumental, median_filter, vad_labels

from conftest import labels, random_clip


def _runs(row):
    row = np.asarray(row)
    return 1 + int(np.count_nonzero(row[1:] != row[:-1])) if row.size else 0


def _majority_oracle(row, width):
    """One majority pass with truncated windows, written as plain loops."""
    h = width // 2
    out = []
    for t in range(len(row)):
        win = row[max(0, t - h): t + h + 1]
        ones = sum(win)
        out.append(1 if 2 * ones > len(win) else 0 if 2 * ones < len(win) else row[t])
    return out


def _loud_spike_clip(num_frames=100, loud=7, frame_len=800, eps=1e-8):
    x = np.full(num_frames * frame_len, np.sqrt(eps))
    x[loud * frame_len:(loud + 1) * frame_len] = 1.0
    return AudioClip(x, 8000, "spike")


class TestConfig:
    def test_defaults(self):
        cfg = VadConfig()
        assert (cfg.threshold_db, cfg.frame_len, cfg.median_width, cfg.min_active_fraction) == (10.0, 800, 11, 0.05)

    @pytest.mark.parametrize("kw", [{"median_width": 4}, {"median_width": 0},
                                    {"min_active_fraction": 1.5}, {"frame_len": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            VadConfig(**kw)


class TestEnergyVad:
    def test_constant_clip_is_inactive(self):
        lab = energy_vad(AudioClip(np.full(8000, 0.5), 8000))
        assert lab.num_singers == 1 and lab.num_frames == 10 and not lab.data.any()

    def test_single_loud_frame(self):
        lab = energy_vad(_loud_spike_clip())
        assert lab.data[0].nonzero()[0].tolist() == [7]
        assert lab.frame_duration == 0.1 and lab.singer_ids == ("spike",)

    def test_threshold_is_strict(self):
        # one frame with 10x the mean: 19 frames of energy 1, one of energy 10*mean
        # mean m = (19 + E)/20 and E = 10 m  ->  m = 19/10, E = 19
        x = np.ones((20, 800)) / np.sqrt(800)
        x[3] *= np.sqrt(19.0)
        clip = AudioClip(x.ravel(), 8000)
        from singdiar.audio import frame_energies
        assert frame_energies(clip)[3] == pytest.approx(10.0, abs=1e-9)
        at = energy_vad(clip, VadConfig(threshold_db=frame_energies(clip)[3]))
        assert not at.data.any()
        assert energy_vad(clip, VadConfig(threshold_db=9.999)).data[0, 3] == 1

    def test_silent_clip_gives_zero_row(self):
        lab = energy_vad(AudioClip(np.zeros(4000), 8000))
        assert lab.data.shape == (1, 5) and not lab.data.any()

    def test_shape_drops_remainder(self, rng):
        lab = energy_vad(random_clip(rng, n=8799))
        assert lab.num_frames == 8799 // 800

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([1e-3, 1.0, 1e3, 0.37]))
    def test_gain_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        clip = random_clip(rng, n=16000)
        assert energy_vad(clip.scaled(c)) == energy_vad(clip)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 20.0))
    def test_active_fraction_cap(self, seed, threshold):
        # linear energies average to one, so fewer than T * 10**(-thr/10) frames exceed the threshold
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(40 * 80) * np.repeat(rng.exponential(1.0, 40) ** 3, 80)
        lab = energy_vad(AudioClip(x, 800), VadConfig(threshold_db=threshold, frame_len=80))
        assert lab.data.sum() < 40 * 10 ** (-threshold / 10) or lab.data.sum() == 0


class TestMedianFilter:
    @pytest.mark.parametrize("row, width, expected", [
        ([0, 0, 1, 0, 0], 3, [0, 0, 0, 0, 0]),
        ([1, 1, 0, 1, 1], 3, [1, 1, 1, 1, 1]),
        ([1, 1, 1, 1], 11, [1, 1, 1, 1]),
        ([0] * 7, 5, [0] * 7),
        ([1, 0, 1, 0, 0, 0], 3, [1, 1, 0, 0, 0, 0]),  # left edge window [1,0] ties -> keep 1
    ])
    def test_examples(self, row, width, expected):
        assert median_filter(labels([row]), width).data[0].tolist() == expected

    def test_even_width_rejected(self):
        with pytest.raises(ValueError):
            median_filter(labels([[0, 1]]), 4)

    def test_single_pass_matches_loop_oracle(self, rng):
        for _ in range(200):
            row = (rng.random(int(rng.integers(1, 30))) < 0.5).astype(int).tolist()
            width = int(rng.choice([1, 3, 5, 7, 11]))
            got = median_filter(labels([row]), width, until_stable=False).data[0].tolist()
            assert got == _majority_oracle(row, width)

    def test_single_pass_alone_is_not_idempotent(self):
        once = median_filter(labels([[0, 1, 0, 1, 0, 1, 0]]), 3, until_stable=False)
        assert median_filter(once, 3, until_stable=False) != once
        stable = median_filter(labels([[0, 1, 0, 1, 0, 1, 0]]), 3)
        assert median_filter(stable, 3) == stable

    @pytest.mark.parametrize("width", [3, 5])
    def test_exhaustive_idempotence_and_runs(self, width):
        for T in range(1, 13):
            rows = np.array(list(itertools.product([0, 1], repeat=T)))
            lab = labels(rows, ids=[f"r{i}" for i in range(len(rows))])
            once = median_filter(lab, width)
            assert median_filter(once, width) == once
            for before, after in zip(rows, once.data):
                assert _runs(after) <= _runs(before)

    def test_rows_are_independent(self):
        lab = labels([[0, 0, 1, 0, 0], [1, 1, 0, 1, 1]])
        assert median_filter(lab, 3).data.tolist() == [[0] * 5, [1] * 5]


class TestInstrumental:
    def test_all_zero(self):
        res = is_instrumental(AudioClip(np.zeros(8000), 8000))
        assert res and res.silent and res.active_fraction == 0.0

    def test_half_active_passes(self):
        # half the frames at unit energy, half silent: active frames sit 3 dB over the mean
        x = np.repeat(np.tile([1.0, 0.0], 10), 800)
        cfg = VadConfig(threshold_db=0.0, min_active_fraction=0.05)
        res = is_instrumental(AudioClip(x, 8000), cfg)
        assert res.active_fraction == 0.5 and not res

    def test_two_percent_fails(self):
        x = np.zeros(100 * 800)
        x[:2 * 800] = 1.0
        res = is_instrumental(AudioClip(x, 8000))
        assert res.active_fraction == 0.02 and res

    def test_vad_labels_apply_filter(self):
        clip = _loud_spike_clip()
        assert energy_vad(clip).data.sum() == 1
        assert vad_labels(clip).data.sum() == 0
