"""Frame-based diarization error rate and singer-counting error rate.

Both scores are restricted to an evaluation mask, by default the frames in
which at least one reference singer is active. The counting error only
looks at frames with reference activity, so over-counting during reference
silence never shows up in it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .labels import LabelMatrix, SegmentList, segments_to_frames

SCORE_FIELDS = (
    "der_pct",
    "miss_pct",
    "fa_pct",
    "cf_pct",
    "dscer_pct",
    "under_pct",
    "over_pct",
    "total_ref_singer_frames",
    "total_active_frames",
    "mapping",
)


class UndefinedScoreError(ValueError):
    """The score's denominator is zero."""


@dataclass
class ScoreCounts:
    """Raw frame counts; summing these across recordings gives micro-averages."""

    miss: int = 0
    fa: int = 0
    cf: int = 0
    ref_singer_frames: int = 0
    under: int = 0
    over: int = 0
    active_frames: int = 0

    def __add__(self, other: "ScoreCounts") -> "ScoreCounts":
        return ScoreCounts(*(a + b for a, b in zip(self.astuple(), other.astuple())))

    def astuple(self):
        return (self.miss, self.fa, self.cf, self.ref_singer_frames,
                self.under, self.over, self.active_frames)


@dataclass
class ScoreReport:
    der_pct: float | None = None
    miss_pct: float | None = None
    fa_pct: float | None = None
    cf_pct: float | None = None
    dscer_pct: float | None = None
    under_pct: float | None = None
    over_pct: float | None = None
    total_ref_singer_frames: int = 0
    total_active_frames: int = 0
    mapping: dict[str, str] = field(default_factory=dict)
    counts: ScoreCounts = field(default_factory=ScoreCounts, repr=False)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in SCORE_FIELDS}

    @classmethod
    def from_counts(cls, counts: ScoreCounts, mapping=None, der=True, dscer=True) -> "ScoreReport":
        rep = cls(counts=counts, mapping=dict(mapping or {}),
                  total_ref_singer_frames=counts.ref_singer_frames,
                  total_active_frames=counts.active_frames)
        if der:
            if counts.ref_singer_frames == 0:
                raise UndefinedScoreError("no reference singer activity inside the evaluation mask")
            denom = counts.ref_singer_frames
            rep.miss_pct = 100.0 * counts.miss / denom
            rep.fa_pct = 100.0 * counts.fa / denom
            rep.cf_pct = 100.0 * counts.cf / denom
            # totals are sums of the printed components so the decomposition is exact
            rep.der_pct = rep.miss_pct + rep.fa_pct + rep.cf_pct
        if dscer:
            if counts.active_frames == 0:
                raise UndefinedScoreError("no frame with reference activity to count over")
            denom = counts.active_frames
            rep.under_pct = 100.0 * counts.under / denom
            rep.over_pct = 100.0 * counts.over / denom
            rep.dscer_pct = rep.under_pct + rep.over_pct
        return rep


def _align(ref: LabelMatrix, hyp: LabelMatrix) -> tuple[np.ndarray, np.ndarray]:
    if not np.isclose(ref.frame_duration, hyp.frame_duration, rtol=1e-9, atol=0):
        raise ValueError(f"frame_duration mismatch: {ref.frame_duration} vs {hyp.frame_duration}")
    T = max(ref.num_frames, hyp.num_frames)
    return ref.padded(T).data.astype(np.int64), hyp.padded(T).data.astype(np.int64)


def _mask(mask, T: int, ref: np.ndarray) -> np.ndarray:
    if mask is None:
        return ref.sum(axis=0) >= 1
    mask = np.asarray(mask, dtype=bool)
    if mask.shape[0] > T:
        raise ValueError(f"mask has {mask.shape[0]} frames, labels have {T}")
    return np.pad(mask, (0, T - mask.shape[0]))


def build_eval_mask(ref: LabelMatrix, vad: SegmentList | None = None) -> np.ndarray:
    """Frames to score: reference activity, or an external VAD when given."""
    if vad is not None:
        ids = vad.singers() or ["vad"]
        vad_labels = segments_to_frames(vad, ref.frame_duration, ref.num_frames, ids)
        return vad_labels.data.any(axis=0)
    return ref.counts() >= 1


def optimal_mapping(ref: np.ndarray, hyp: np.ndarray) -> list[tuple[int, int]]:
    """Pairs ``(hyp_row, ref_row)`` maximizing total co-active frames."""
    if ref.shape[0] == 0 or hyp.shape[0] == 0:
        return []
    overlap = hyp @ ref.T
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    return [(int(h), int(r)) for h, r in zip(rows, cols)]


def _der_counts(ref: np.ndarray, hyp: np.ndarray, pairs) -> ScoreCounts:
    n_ref = ref.sum(axis=0)
    n_hyp = hyp.sum(axis=0)
    correct = np.zeros(ref.shape[1], dtype=np.int64)
    for h, r in pairs:
        correct += hyp[h] & ref[r]
    return ScoreCounts(
        miss=int(np.maximum(n_ref - n_hyp, 0).sum()),
        fa=int(np.maximum(n_hyp - n_ref, 0).sum()),
        cf=int((np.minimum(n_ref, n_hyp) - correct).sum()),
        ref_singer_frames=int(n_ref.sum()),
    )


def _dscer_counts(ref: np.ndarray, hyp: np.ndarray) -> ScoreCounts:
    n_ref = ref.sum(axis=0)
    n_hyp = hyp.sum(axis=0)
    on = n_ref >= 1
    return ScoreCounts(
        under=int(np.count_nonzero(on & (n_hyp < n_ref))),
        over=int(np.count_nonzero(on & (n_hyp > n_ref))),
        active_frames=int(np.count_nonzero(on)),
    )


def score_counts(ref: LabelMatrix, hyp: LabelMatrix, mask=None) -> tuple[ScoreCounts, dict[str, str]]:
    """Frame counts behind both scores plus the hypothesis-to-reference mapping."""
    r, h = _align(ref, hyp)
    m = _mask(mask, r.shape[1], r)
    r, h = r[:, m], h[:, m]
    pairs = optimal_mapping(r, h)
    counts = _der_counts(r, h, pairs) + _dscer_counts(r, h)
    mapping = {hyp.singer_ids[hi]: ref.singer_ids[ri] for hi, ri in pairs}
    return counts, mapping


def der(ref: LabelMatrix, hyp: LabelMatrix, mask=None) -> ScoreReport:
    """Diarization error rate over masked frames (no collar).

    Hypothesis singers are mapped one-to-one onto reference singers so as
    to maximize co-active frames. Per frame, with ``R`` reference and ``H``
    hypothesis singers active: miss ``max(R-H, 0)``, false alarm
    ``max(H-R, 0)``, confusion ``min(R, H) - correctly mapped``.
    """
    counts, mapping = score_counts(ref, hyp, mask)
    return ScoreReport.from_counts(counts, mapping, der=True, dscer=False)


def dscer(ref: LabelMatrix, hyp: LabelMatrix, mask=None) -> ScoreReport:
    """Singer-counting error rate: frames whose active-singer count is wrong.

    Counts only, so singer identity is irrelevant. The denominator is the
    number of frames where at least one reference singer is active.
    """
    counts, _ = score_counts(ref, hyp, mask)
    return ScoreReport.from_counts(counts, der=False, dscer=True)


def score(ref: LabelMatrix, hyp: LabelMatrix, mask=None) -> ScoreReport:
    """Both scores in one report."""
    counts, mapping = score_counts(ref, hyp, mask)
    return ScoreReport.from_counts(counts, mapping)


def score_corpus(
    pairs: Sequence[tuple[LabelMatrix, LabelMatrix]],
    mask_policy="reference",
    names: Sequence[str] | None = None,
) -> ScoreReport:
    """Micro-averaged scores: frame counts are summed before dividing.

    ``mask_policy`` is ``"reference"`` (frames with reference activity),
    ``"all"`` (every frame) or a sequence with one mask per pair. With
    several pairs, mapping keys are prefixed by ``names[i] + "/"``.
    """
    if not pairs:
        raise ValueError("score_corpus needs at least one (ref, hyp) pair")
    total = ScoreCounts()
    mapping = {}
    for i, (ref, hyp) in enumerate(pairs):
        if isinstance(mask_policy, str):
            if mask_policy == "reference":
                mask = None
            elif mask_policy == "all":
                mask = np.ones(max(ref.num_frames, hyp.num_frames), dtype=bool)
            else:
                raise ValueError(f"unknown mask policy {mask_policy!r}")
        else:
            mask = mask_policy[i]
        counts, m = score_counts(ref, hyp, mask)
        total = total + counts
        if len(pairs) == 1:
            mapping = m
        else:
            prefix = names[i] if names is not None else str(i)
            mapping.update({f"{prefix}/{h}": r for h, r in m.items()})
    return ScoreReport.from_counts(total, mapping)
