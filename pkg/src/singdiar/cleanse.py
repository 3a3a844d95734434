"""Choral-to-solo cleansing stage and corpus preparation.

The cleanser itself is a pluggable step. A neural converter runs out of
process through :class:`ExternalCommand`; :class:`DominantStem` is a
ground-truth oracle for synthetic data whose individual voices are known.
"""
from __future__ import annotations

import json
import logging
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .audio import AudioClip, AudioFormatError, load_wav, save_wav, segment_clip
from .labels import (
    LabelMatrix,
    SegmentList,
    frames_to_segments,
    read_rttm,
    segments_to_frames,
    write_rttm,
)
from .vad import VadConfig, is_instrumental, vad_labels

logger = logging.getLogger(__name__)


class CleansingError(RuntimeError):
    """A cleanser failed on one clip; carries the diagnostics."""


class CorpusError(ValueError):
    """The corpus as a whole cannot be prepared or used."""


@dataclass(frozen=True)
class Identity:
    """Pass-through cleanser (the "naive" pipeline)."""


@dataclass(frozen=True)
class ExternalCommand:
    """Run ``command_template`` with ``{in}``/``{out}`` replaced by WAV paths."""

    command_template: str
    timeout: float = 600.0

    def __post_init__(self):
        missing = [p for p in ("{in}", "{out}") if p not in self.command_template]
        if missing:
            raise ValueError(f"command template lacks placeholder(s) {missing}: {self.command_template!r}")


@dataclass(frozen=True, eq=False)
class DominantStem:
    """Oracle cleanser: keep only the loudest of the known stems.

    Stems are aligned with the original recording, so a segment cut at
    ``clip.offset`` is matched against the same span of every stem.
    """

    stems: Sequence[AudioClip]

    def __post_init__(self):
        stems = tuple(self.stems)
        if not stems:
            raise ValueError("DominantStem needs at least one stem")
        rates = {s.sample_rate for s in stems}
        lengths = {len(s) for s in stems}
        if len(rates) != 1 or len(lengths) != 1:
            raise ValueError(f"stems must share sample rate and length, got {rates} / {lengths}")
        object.__setattr__(self, "stems", stems)


CleanserKind = Union[Identity, ExternalCommand, DominantStem]


def _run_external(clip: AudioClip, kind: ExternalCommand) -> AudioClip:
    with tempfile.TemporaryDirectory(prefix="singdiar-") as tmp:
        src, dst = Path(tmp, "in.wav"), Path(tmp, "out.wav")
        save_wav(clip, src)
        cmd = kind.command_template.replace("{in}", shlex.quote(str(src))).replace(
            "{out}", shlex.quote(str(dst))
        )
        try:
            proc = subprocess.run(
                shlex.split(cmd), capture_output=True, text=True, timeout=kind.timeout
            )
        except subprocess.TimeoutExpired:
            raise CleansingError(f"{clip.id}: cleanser timed out after {kind.timeout} s: {cmd}") from None
        except OSError as exc:
            raise CleansingError(f"{clip.id}: cannot run cleanser: {exc}") from exc
        if proc.returncode != 0:
            raise CleansingError(
                f"{clip.id}: cleanser exited with {proc.returncode}: {proc.stderr.strip()[-2000:]}"
            )
        try:
            out = load_wav(dst)
        except (OSError, AudioFormatError) as exc:
            raise CleansingError(f"{clip.id}: unreadable cleanser output: {exc}") from exc
    if out.sample_rate != clip.sample_rate:
        raise CleansingError(
            f"{clip.id}: cleanser changed sample rate {clip.sample_rate} -> {out.sample_rate}"
        )
    return AudioClip(out.samples, clip.sample_rate, clip.id, clip.offset)


def _dominant_stem(clip: AudioClip, kind: DominantStem) -> AudioClip:
    start, stop = clip.offset, clip.offset + len(clip)
    if stop > len(kind.stems[0]) or kind.stems[0].sample_rate != clip.sample_rate:
        raise CleansingError(f"{clip.id}: stems do not cover samples {start}:{stop}")
    spans = [s.samples[start:stop] for s in kind.stems]
    best = int(np.argmax([np.dot(x, x) for x in spans]))
    return AudioClip(spans[best], clip.sample_rate, clip.id, clip.offset)


def cleanse(clip: AudioClip, kind: CleanserKind = Identity()) -> AudioClip:
    """Convert a (possibly choral) clip into a single-voice clip."""
    if isinstance(kind, Identity):
        return clip
    if isinstance(kind, ExternalCommand):
        return _run_external(clip, kind)
    if isinstance(kind, DominantStem):
        return _dominant_stem(clip, kind)
    raise TypeError(f"unknown cleanser kind {kind!r}")


@dataclass
class PreparedClip:
    """Outcome of running one segment through the pipeline."""

    clip_id: str
    source: str
    status: str
    clip: AudioClip | None = None
    labels: LabelMatrix | None = None
    duration_s: float = 0.0
    active_fraction: float = 0.0
    reason: str | None = None

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def process_recording(
    clip: AudioClip,
    cfg: VadConfig = VadConfig(),
    kind: CleanserKind = Identity(),
    segment_seconds: float = 30.0,
    source: str | None = None,
) -> list[PreparedClip]:
    """Reject, segment, cleanse and label one vocal recording.

    Order: instrumental check on the whole recording, segmentation,
    cleansing, a second instrumental check on the cleansed segment, then
    median-filtered energy VAD. A segment without any active frame after
    filtering is rejected because it cannot serve as a mixing source.
    """
    source = source or clip.id
    check = is_instrumental(clip, cfg)
    if check:
        return [PreparedClip(clip.id, source, "rejected", duration_s=clip.duration,
                             active_fraction=check.active_fraction, reason="instrumental")]
    segments = segment_clip(clip, segment_seconds)
    if not segments:
        return [PreparedClip(clip.id, source, "rejected", duration_s=clip.duration, reason="too_short")]
    out = []
    for seg in segments:
        try:
            cleansed = cleanse(seg, kind)
        except CleansingError as exc:
            logger.warning("%s", exc)
            out.append(PreparedClip(seg.id, source, "rejected", duration_s=seg.duration,
                                    reason=f"cleansing_failed: {exc}"))
            continue
        check = is_instrumental(cleansed, cfg)
        if check:
            out.append(PreparedClip(seg.id, source, "rejected", duration_s=cleansed.duration,
                                    active_fraction=check.active_fraction,
                                    reason="instrumental_after_cleansing"))
            continue
        labels = vad_labels(cleansed, cfg)
        frac = float(labels.data.mean())
        if frac == 0.0:
            out.append(PreparedClip(seg.id, source, "rejected", duration_s=cleansed.duration,
                                    reason="no_active_frames"))
            continue
        out.append(PreparedClip(seg.id, source, "accepted", cleansed, labels,
                                cleansed.duration, frac))
    return out


@dataclass
class CorpusEntry:
    clip_id: str
    source: str
    status: str
    clip_path: str | None = None
    label_path: str | None = None
    duration_s: float = 0.0
    active_fraction: float = 0.0
    num_frames: int = 0
    frame_duration_s: float = 0.0
    reason: str | None = None

    def to_json(self) -> str:
        d = asdict(self)
        if d["reason"] is None:
            del d["reason"]
        return json.dumps(d, sort_keys=True)


@dataclass
class CorpusManifest:
    """Accepted and rejected clips; paths are relative to ``root``."""

    root: Path
    entries: list[CorpusEntry] = field(default_factory=list)

    @property
    def accepted(self) -> list[CorpusEntry]:
        return [e for e in self.entries if e.status == "accepted"]

    @property
    def rejected(self) -> list[CorpusEntry]:
        return [e for e in self.entries if e.status != "accepted"]

    def write(self, path=None) -> Path:
        path = Path(path) if path is not None else self.root / "manifest.jsonl"
        path.write_text("".join(e.to_json() + "\n" for e in self.entries))
        return path

    @classmethod
    def read(cls, path) -> "CorpusManifest":
        path = Path(path)
        entries = [CorpusEntry(**json.loads(line)) for line in path.read_text().splitlines() if line.strip()]
        return cls(path.parent, entries)

    def load(self) -> list[tuple[AudioClip, LabelMatrix]]:
        """Load accepted clips and their frame labels."""
        out = []
        for e in self.accepted:
            clip = load_wav(self.root / e.clip_path)
            segs = read_rttm(self.root / e.label_path).get(e.clip_id, SegmentList(e.clip_id))
            labels = segments_to_frames(segs, e.frame_duration_s, e.num_frames, [e.clip_id])
            out.append((AudioClip(clip.samples, clip.sample_rate, e.clip_id), labels))
        return out


def prepare_corpus(
    input_dir,
    work_dir,
    cfg: VadConfig = VadConfig(),
    kind: CleanserKind = Identity(),
    segment_seconds: float = 30.0,
    sample_rate: int | None = None,
    jobs: int = 1,
    kind_for: Callable[[str], CleanserKind] | None = None,
) -> CorpusManifest:
    """Run :func:`process_recording` over every ``*.wav`` in ``input_dir``.

    Accepted clips go to ``work_dir/clips``, their labels to
    ``work_dir/labels`` and the manifest to ``work_dir/manifest.jsonl``.
    ``kind_for`` maps a recording id to its cleanser and overrides ``kind``.
    Entries are ordered by input path whatever ``jobs`` is.
    """
    input_dir, work_dir = Path(input_dir), Path(work_dir)
    paths = sorted(input_dir.glob("*.wav"))
    if not paths:
        raise CorpusError(f"no .wav files in {input_dir}")
    (work_dir / "clips").mkdir(parents=True, exist_ok=True)
    (work_dir / "labels").mkdir(parents=True, exist_ok=True)

    def run(path: Path) -> list[PreparedClip]:
        try:
            clip = load_wav(path)
        except (OSError, AudioFormatError) as exc:
            return [PreparedClip(path.stem, path.name, "rejected", reason=f"unreadable: {exc}")]
        if sample_rate is not None and clip.sample_rate != sample_rate:
            return [PreparedClip(clip.id, path.name, "rejected", duration_s=clip.duration,
                                 reason=f"sample_rate {clip.sample_rate} != {sample_rate}")]
        k = kind_for(clip.id) if kind_for is not None else kind
        return process_recording(clip, cfg, k, segment_seconds, source=path.name)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(run, paths))
    else:
        results = [run(p) for p in paths]

    manifest = CorpusManifest(work_dir)
    for prepared in (p for group in results for p in group):
        entry = CorpusEntry(prepared.clip_id, prepared.source, prepared.status,
                            duration_s=prepared.duration_s,
                            active_fraction=prepared.active_fraction, reason=prepared.reason)
        if prepared.accepted:
            entry.clip_path = f"clips/{prepared.clip_id}.wav"
            entry.label_path = f"labels/{prepared.clip_id}.rttm"
            entry.num_frames = prepared.labels.num_frames
            entry.frame_duration_s = prepared.labels.frame_duration
            save_wav(prepared.clip, work_dir / entry.clip_path)
            write_rttm(frames_to_segments(prepared.labels, prepared.clip_id), work_dir / entry.label_path)
        manifest.entries.append(entry)
    manifest.write()
    logger.info("prepared %d accepted / %d rejected clips", len(manifest.accepted), len(manifest.rejected))
    return manifest
