"""Singer-activity matrices, segment lists and RTTM interchange."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

# Tolerance for float comparisons of times in seconds.
_TIME_EPS = 1e-9


class RttmError(ValueError):
    """Malformed RTTM content."""


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """Binary ``N x T`` activity matrix; row ``n`` belongs to ``singer_ids[n]``."""

    data: np.ndarray
    frame_duration: float
    singer_ids: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2:
            raise ValueError(f"label data must be 2-D, got shape {data.shape}")
        if data.size and not np.isin(data, (0, 1)).all():
            raise ValueError("label entries must be 0 or 1")
        data = data.astype(np.uint8)
        data.flags.writeable = False
        ids = tuple(str(s) for s in self.singer_ids)
        if len(ids) != data.shape[0]:
            raise ValueError(f"{len(ids)} singer ids for {data.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise ValueError(f"singer ids must be unique: {ids}")
        if not self.frame_duration > 0:
            raise ValueError(f"frame_duration must be positive, got {self.frame_duration}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "singer_ids", ids)
        object.__setattr__(self, "frame_duration", float(self.frame_duration))

    @property
    def num_singers(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LabelMatrix):
            return NotImplemented
        return (
            self.singer_ids == other.singer_ids
            and self.frame_duration == other.frame_duration
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"LabelMatrix(N={self.num_singers}, T={self.num_frames}, "
            f"frame_duration={self.frame_duration}, singer_ids={self.singer_ids})"
        )

    def counts(self) -> np.ndarray:
        """Number of active singers per frame."""
        return self.data.sum(axis=0, dtype=np.int64)

    def padded(self, num_frames: int) -> "LabelMatrix":
        """Zero-pad (never crop) to ``num_frames`` frames."""
        extra = num_frames - self.num_frames
        if extra < 0:
            raise ValueError(f"cannot pad {self.num_frames} frames down to {num_frames}")
        if extra == 0:
            return self
        data = np.pad(self.data, ((0, 0), (0, extra)))
        return LabelMatrix(data, self.frame_duration, self.singer_ids)

    def cropped(self, num_frames: int) -> "LabelMatrix":
        return LabelMatrix(self.data[:, :num_frames], self.frame_duration, self.singer_ids)

    def permuted(self, order: Sequence[int]) -> "LabelMatrix":
        order = list(order)
        return LabelMatrix(self.data[order], self.frame_duration, [self.singer_ids[i] for i in order])


class Segment(NamedTuple):
    singer: str
    onset: float
    duration: float

    @property
    def end(self) -> float:
        return self.onset + self.duration


@dataclass(frozen=True)
class SegmentList:
    recording_id: str
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        segs = tuple(Segment(str(s[0]), float(s[1]), float(s[2])) for s in self.segments)
        for seg in segs:
            if seg.onset < 0:
                raise ValueError(f"negative onset in {seg}")
            if not seg.duration > 0:
                raise ValueError(f"non-positive duration in {seg}")
        object.__setattr__(self, "segments", segs)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def singers(self) -> list[str]:
        """Singer ids in order of first appearance."""
        return list(dict.fromkeys(s.singer for s in self.segments))

    def normalized(self) -> "SegmentList":
        """Merge overlapping or touching segments per singer; sort by (onset, singer)."""
        by_singer = defaultdict(list)
        for seg in self.segments:
            by_singer[seg.singer].append(seg)
        merged = []
        for segs in by_singer.values():
            segs.sort(key=lambda s: s.onset)
            cur = segs[0]
            for seg in segs[1:]:
                if seg.onset <= cur.end + _TIME_EPS:
                    if seg.end > cur.end:
                        cur = Segment(cur.singer, cur.onset, seg.end - cur.onset)
                else:
                    merged.append(cur)
                    cur = seg
            merged.append(cur)
        merged.sort(key=lambda s: (s.onset, s.singer, s.duration))
        return SegmentList(self.recording_id, tuple(merged))

    def end_time(self) -> float:
        return max((s.end for s in self.segments), default=0.0)


def segments_to_frames(
    segs: SegmentList,
    frame_duration: float,
    num_frames: int,
    singer_ids: Sequence[str] | None = None,
) -> LabelMatrix:
    """Rasterize segments: a frame is active when covered for at least half its span.

    ``singer_ids`` fixes the row order (and may include singers without any
    segment); by default rows follow order of first appearance.
    """
    if not frame_duration > 0:
        raise ValueError(f"frame_duration must be positive, got {frame_duration}")
    if num_frames < 1:
        raise ValueError(f"num_frames must be >= 1, got {num_frames}")
    ids = list(singer_ids) if singer_ids is not None else segs.singers()
    row_of = {s: i for i, s in enumerate(ids)}
    horizon = num_frames * frame_duration
    coverage = np.zeros((len(ids), num_frames))
    edges = np.arange(num_frames + 1) * frame_duration
    truncated = 0
    for seg in segs.normalized():
        if seg.singer not in row_of:
            raise ValueError(f"segment singer {seg.singer!r} not among {ids}")
        if seg.end > horizon + _TIME_EPS:
            truncated += 1
        lo = min(int(seg.onset // frame_duration), num_frames)
        hi = min(int(np.ceil(seg.end / frame_duration)), num_frames)
        if hi <= lo:
            continue
        start = np.maximum(edges[lo:hi], seg.onset)
        stop = np.minimum(edges[lo + 1 : hi + 1], seg.end)
        coverage[row_of[seg.singer], lo:hi] += np.clip(stop - start, 0.0, None)
    if truncated:
        logger.warning(
            "%s: %d segment(s) extend past %.3f s and were truncated",
            segs.recording_id, truncated, horizon,
        )
    data = coverage >= 0.5 * frame_duration * (1 - 1e-9)
    return LabelMatrix(data, frame_duration, ids)


def frames_to_segments(labels: LabelMatrix, recording_id: str = "recording") -> SegmentList:
    """Run-length encode each row into segments."""
    segs = []
    d = labels.frame_duration
    for singer, row in zip(labels.singer_ids, labels.data):
        padded = np.concatenate(([0], row.astype(np.int8), [0]))
        diff = np.diff(padded)
        starts = np.flatnonzero(diff == 1)
        stops = np.flatnonzero(diff == -1)
        for a, b in zip(starts, stops):
            segs.append(Segment(singer, a * d, (b - a) * d))
    segs.sort(key=lambda s: (s.onset, s.singer))
    return SegmentList(recording_id, tuple(segs))


def read_rttm(path) -> dict[str, SegmentList]:
    """Parse SPEAKER lines of an RTTM file into normalized segment lists.

    Other line types and ``;;`` comments are skipped. Zero-length segments are
    dropped with a warning.
    """
    path = Path(path)
    raw: dict[str, list[Segment]] = {}
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields or fields[0].startswith(";;"):
                continue
            if fields[0] != "SPEAKER":
                continue
            if len(fields) < 8:
                raise RttmError(f"{path}:{lineno}: expected at least 8 fields, got {len(fields)}")
            rec, singer = fields[1], fields[7]
            try:
                onset, dur = float(fields[3]), float(fields[4])
            except ValueError:
                raise RttmError(f"{path}:{lineno}: non-numeric onset/duration") from None
            if onset < 0 or dur < 0 or not np.isfinite(onset + dur):
                raise RttmError(f"{path}:{lineno}: invalid onset/duration {onset} {dur}")
            raw.setdefault(rec, [])
            if dur == 0:
                logger.warning("%s:%d: skipping zero-length segment", path, lineno)
                continue
            raw[rec].append(Segment(singer, onset, dur))
    return {rec: SegmentList(rec, tuple(segs)).normalized() for rec, segs in raw.items()}


def format_rttm(segs: SegmentList) -> str:
    lines = [
        f"SPEAKER {segs.recording_id} 1 {s.onset:.3f} {s.duration:.3f} <NA> <NA> {s.singer} <NA> <NA>\n"
        for s in segs
    ]
    return "".join(lines)


def write_rttm(segs: SegmentList | Iterable[SegmentList], path) -> None:
    """Write one or several segment lists to an RTTM file (3-decimal seconds)."""
    if isinstance(segs, SegmentList):
        segs = [segs]
    Path(path).write_text("".join(format_rttm(s) for s in segs))


def overlap_ratio(labels: LabelMatrix | Iterable[LabelMatrix]) -> float:
    """Percentage of active frames in which two or more singers are active.

    Accepts one matrix or an iterable of matrices; for several matrices the
    frame counts are pooled before dividing. Returns 0 when nothing is active.
    """
    if isinstance(labels, LabelMatrix):
        labels = [labels]
    overlapped = active = 0
    for lab in labels:
        c = lab.counts()
        overlapped += int(np.count_nonzero(c >= 2))
        active += int(np.count_nonzero(c >= 1))
    if active == 0:
        return 0.0
    return 100.0 * overlapped / active


def _unique_id(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    k = 2
    while f"{name}#{k}" in taken:
        k += 1
    return f"{name}#{k}"


def concat_singers(a: LabelMatrix, b: LabelMatrix) -> LabelMatrix:
    """Stack the rows of ``a`` then ``b``, zero-padding the shorter one in time."""
    if not np.isclose(a.frame_duration, b.frame_duration, rtol=1e-12, atol=0.0):
        raise ValueError(f"frame_duration mismatch: {a.frame_duration} vs {b.frame_duration}")
    T = max(a.num_frames, b.num_frames)
    ids = list(a.singer_ids)
    taken = set(ids)
    for s in b.singer_ids:
        s = _unique_id(s, taken)
        taken.add(s)
        ids.append(s)
    data = np.vstack([a.padded(T).data, b.padded(T).data])
    return LabelMatrix(data, a.frame_duration, ids)
