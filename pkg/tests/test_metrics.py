import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singdiar.labels import SegmentList
from singdiar.metrics import (
    SCORE_FIELDS,
    UndefinedScoreError,
    build_eval_mask,
    der,
    dscer,
    score,
    score_corpus,
)

from conftest import labels, random_labels


def _der_oracle(ref, hyp, mask):
    """DER by trying every injective hyp->ref mapping, frame by frame."""
    R, H = np.asarray(ref)[:, mask], np.asarray(hyp)[:, mask]
    n_ref, n_hyp = R.shape[0], H.shape[0]
    total = int(R.sum())
    best = None
    k = min(n_ref, n_hyp)
    for hyp_rows in itertools.permutations(range(n_hyp), k):
        for ref_rows in itertools.permutations(range(n_ref), k):
            err = 0
            for t in range(R.shape[1]):
                r, h = int(R[:, t].sum()), int(H[:, t].sum())
                hit = sum(int(H[a, t] and R[b, t]) for a, b in zip(hyp_rows, ref_rows))
                err += max(r - h, 0) + max(h - r, 0) + min(r, h) - hit
            best = err if best is None else min(best, err)
    return 100.0 * best / total


def _dscer_oracle(ref_counts, hyp_counts):
    under = over = total = 0
    for r, h in zip(ref_counts, hyp_counts):
        if r >= 1:
            total += 1
            under += h < r
            over += h > r
    return 100.0 * (under + over) / total


class TestDer:
    def test_worked_example(self):
        ref = labels([[1, 1, 0, 0], [0, 0, 1, 1]], ids=["A", "B"])
        hyp = labels([[1, 1, 1, 1], [0, 0, 0, 0]], ids=["X", "Y"])
        rep = der(ref, hyp, np.ones(4, bool))
        assert (rep.der_pct, rep.miss_pct, rep.fa_pct, rep.cf_pct) == (50.0, 0.0, 0.0, 50.0)
        assert rep.mapping["X"] == "A"
        assert _der_oracle(ref.data, hyp.data, np.ones(4, bool)) == 50.0

    def test_identity_zero(self, rng):
        ref = random_labels(rng, 3, 40)
        rep = score(ref, ref)
        assert rep.der_pct == rep.miss_pct == rep.fa_pct == rep.cf_pct == 0.0
        assert rep.dscer_pct == 0.0

    def test_silent_hypothesis(self, rng):
        ref = random_labels(rng, 2, 40)
        rep = der(ref, labels(np.zeros((2, 40), int), ids=["h0", "h1"]))
        assert (rep.der_pct, rep.miss_pct, rep.fa_pct, rep.cf_pct) == (100.0, 100.0, 0.0, 0.0)

    def test_undefined(self):
        with pytest.raises(UndefinedScoreError):
            der(labels([[0, 0]]), labels([[1, 1]]))
        with pytest.raises(UndefinedScoreError):
            dscer(labels([[0, 0]]), labels([[1, 1]]))

    def test_frame_duration_mismatch(self):
        with pytest.raises(ValueError):
            der(labels([[1]], frame_duration=0.1), labels([[1]], frame_duration=0.2))

    def test_shorter_hypothesis_is_padded(self):
        rep = der(labels([[1, 1, 1, 1]]), labels([[1, 1]], ids=["h"]))
        assert rep.miss_pct == 50.0

    def test_mismatched_singer_counts(self):
        ref = labels([[1, 1, 0], [0, 1, 1]], ids=["A", "B"])
        hyp = labels([[1, 1, 1]], ids=["X"])
        rep = der(ref, hyp)
        assert rep.der_pct == pytest.approx(_der_oracle(ref.data, hyp.data, np.ones(3, bool)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_exhaustive_mapping(self, seed):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(1, 15))
        ref = random_labels(rng, int(rng.integers(1, 5)), T, prefix="r")
        hyp = random_labels(rng, int(rng.integers(1, 5)), T, prefix="h")
        mask = ref.counts() >= 1
        if not ref.data.any():
            return
        rep = der(ref, hyp)
        assert rep.der_pct == pytest.approx(_der_oracle(ref.data, hyp.data, mask), abs=1e-9)
        assert abs(rep.der_pct - (rep.miss_pct + rep.fa_pct + rep.cf_pct)) <= 1e-9
        assert min(rep.miss_pct, rep.fa_pct, rep.cf_pct) >= 0 and rep.miss_pct <= 100


class TestDscer:
    def test_worked_example(self):
        ref = labels([[1, 1, 1, 1], [0, 0, 1, 1]])
        hyp = labels([[1, 1, 1, 1], [0, 1, 1, 0]], ids=["x", "y"])
        rep = dscer(ref, hyp)
        assert (rep.dscer_pct, rep.under_pct, rep.over_pct) == (50.0, 25.0, 25.0)
        assert _dscer_oracle([1, 1, 2, 2], [1, 2, 2, 1]) == 50.0

    def test_uniform_undercount(self):
        rep = dscer(labels([[1] * 8, [1] * 8]), labels([[1] * 8], ids=["h"]))
        assert (rep.dscer_pct, rep.under_pct, rep.over_pct) == (100.0, 100.0, 0.0)

    def test_overcount_in_reference_silence_is_invisible(self):
        rep = dscer(labels([[1, 0]]), labels([[1, 1], [0, 1]], ids=["x", "y"]), mask=np.ones(2, bool))
        assert rep.dscer_pct == 0.0 and rep.total_active_frames == 1

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_counts_only(self, seed):
        rng = np.random.default_rng(seed)
        ref = random_labels(rng, 3, 30, prefix="r")
        hyp = random_labels(rng, 3, 30, prefix="h")
        if not ref.data.any():
            return
        rep = dscer(ref, hyp)
        assert rep.dscer_pct == pytest.approx(_dscer_oracle(ref.counts(), hyp.counts()), abs=1e-12)
        assert rep.dscer_pct == rep.under_pct + rep.over_pct
        assert dscer(ref, hyp.permuted(rng.permutation(3))).dscer_pct == rep.dscer_pct


class TestMaskAndCorpus:
    def test_reference_mask(self):
        ref = labels([[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]])
        assert build_eval_mask(ref).tolist() == [True] * 5 + [False] * 5
        assert not build_eval_mask(labels([[0, 0, 0]])).any()

    def test_external_vad_overrides(self):
        ref = labels([[1] * 10])
        vad = SegmentList("r", [("speech", 0.3, 0.6)])
        assert build_eval_mask(ref, vad).nonzero()[0].tolist() == list(range(3, 9))

    def test_mask_override_in_scoring(self):
        ref = labels([[1, 1, 0, 0]])
        hyp = labels([[0, 1, 1, 1]], ids=["h"])
        assert der(ref, hyp).der_pct == 50.0
        assert der(ref, hyp, mask=[0, 1, 1, 1]).der_pct == 200.0

    def test_micro_average(self):
        ref = labels([[1] * 100])
        a = (ref, labels([[1] * 100], ids=["h"]))
        b = (ref, labels([[0] * 100], ids=["h"]))
        assert score_corpus([a, b], names=["a", "b"]).der_pct == 50.0
        assert score_corpus([a, a]).der_pct == 0.0
        one = score_corpus([b])
        assert one.to_dict() == score(*b).to_dict()

    def test_all_policy(self):
        pair = (labels([[1, 0]]), labels([[1, 1]], ids=["h"]))
        assert score_corpus([pair], mask_policy="all").fa_pct == 100.0
        assert score_corpus([pair]).fa_pct == 0.0
        with pytest.raises(ValueError):
            score_corpus([pair], mask_policy="bogus")
        with pytest.raises(ValueError):
            score_corpus([])

    def test_report_fields(self, rng):
        ref = random_labels(rng, 2, 20)
        assert tuple(score(ref, ref).to_dict()) == SCORE_FIELDS

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        ref = random_labels(rng, 3, 25, prefix="r")
        hyp = random_labels(rng, 3, 25, prefix="h")
        if not ref.data.any():
            return
        base = score(ref, hyp).to_dict()
        for r, h in ((ref.permuted(rng.permutation(3)), hyp), (ref, hyp.permuted(rng.permutation(3)))):
            other = score(r, h).to_dict()
            for key in SCORE_FIELDS[:-1]:
                assert other[key] == base[key]
