"""Simulated multi-singer mixtures.

Every mixture ``k`` is a pure function of ``(seed, k)``: its random state is
a child of ``np.random.SeedSequence(seed)`` keyed by ``k``. Streams are
therefore reproducible, random-access and independent of worker count.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .audio import AudioClip, frame_matrix, save_wav
from .cleanse import CorpusError, CorpusManifest
from .labels import LabelMatrix, concat_singers, frames_to_segments, write_rttm

logger = logging.getLogger(__name__)

Entry = tuple[AudioClip, LabelMatrix]


@dataclass(frozen=True)
class SimConfig:
    singers_per_mix: int = 2
    snr_range_db: tuple[float, float] = (-5.0, 5.0)
    mixture_seconds: float = 30.0
    seed: int = 0
    peak_norm: float = 0.9

    def __post_init__(self):
        lo, hi = self.snr_range_db
        if lo > hi:
            raise ValueError(f"snr_range_db low {lo} exceeds high {hi}")
        if self.singers_per_mix < 2:
            raise ValueError(f"singers_per_mix must be >= 2, got {self.singers_per_mix}")
        if not self.peak_norm > 0:
            raise ValueError(f"peak_norm must be positive, got {self.peak_norm}")
        if not self.mixture_seconds > 0:
            raise ValueError(f"mixture_seconds must be positive, got {self.mixture_seconds}")
        object.__setattr__(self, "snr_range_db", (float(lo), float(hi)))


@dataclass(frozen=True)
class SourceInfo:
    id: str
    gain_db: float
    snr_db: float


@dataclass(frozen=True, eq=False)
class MixtureRecord:
    clip: AudioClip
    labels: LabelMatrix
    sources: tuple[SourceInfo, ...]
    seed: int | None = None
    k: int | None = None
    # factor applied to the summed stems to respect the peak limit
    peak_scale: float = 1.0


def active_power(clip: AudioClip, labels: LabelMatrix) -> float:
    """Mean squared amplitude over the samples of active frames.

    ``labels`` must be a single-row matrix whose frames tile the start of
    the clip (``frame_len = len // T`` is inferred from the frame duration).
    """
    frame_len = int(round(labels.frame_duration * clip.sample_rate))
    active = labels.data.any(axis=0)
    if not active.any():
        raise ValueError(f"{clip.id}: no active frames to measure power over")
    frames = frame_matrix(clip.samples, frame_len)[: labels.num_frames]
    if frames.shape[0] < labels.num_frames:
        raise ValueError(f"{clip.id}: labels span more frames than the clip holds")
    sel = frames[active[: frames.shape[0]]]
    return float(np.mean(sel * sel))


def gain_for_snr(ref_power: float, other_power: float, snr_db: float) -> float:
    """Amplitude gain making ``10 log10(ref / (g^2 other)) == snr_db``."""
    return float(np.sqrt(ref_power / (other_power * 10.0 ** (snr_db / 10.0))))


def mix_pair(
    entries: Sequence[Entry],
    cfg: SimConfig = SimConfig(),
    rng: np.random.Generator | None = None,
    snr_db: Sequence[float] | None = None,
) -> MixtureRecord:
    """Mix clips at random SNRs relative to the first one; stack their labels.

    ``snr_db`` forces the SNR of each non-reference entry instead of drawing
    it from ``cfg.snr_range_db``. No noise is added. The mixture is as long
    as the longest source (capped at ``cfg.mixture_seconds``) and is scaled
    down as a whole if its peak exceeds ``cfg.peak_norm``.
    """
    if len(entries) < 2:
        raise ValueError(f"need at least two entries to mix, got {len(entries)}")
    ref_clip, ref_labels = entries[0]
    rate = ref_clip.sample_rate
    for clip, labels in entries:
        if clip.sample_rate != rate:
            raise ValueError(f"sample rate mismatch: {clip.id} is {clip.sample_rate}, expected {rate}")
        if not np.isclose(labels.frame_duration, ref_labels.frame_duration, rtol=1e-12, atol=0):
            raise ValueError(f"frame duration mismatch for {clip.id}")
    if snr_db is None:
        if rng is None:
            raise ValueError("either rng or snr_db is required")
        lo, hi = cfg.snr_range_db
        snr_db = rng.uniform(lo, hi, size=len(entries) - 1)
    snr_db = [float(s) for s in snr_db]
    if len(snr_db) != len(entries) - 1:
        raise ValueError(f"{len(snr_db)} SNRs for {len(entries) - 1} non-reference entries")

    ref_power = active_power(ref_clip, ref_labels)
    gains = [1.0]
    for (clip, labels), snr in zip(entries[1:], snr_db):
        gains.append(gain_for_snr(ref_power, active_power(clip, labels), snr))

    n = max(len(clip) for clip, _ in entries)
    n = min(n, int(round(cfg.mixture_seconds * rate)))
    mix = np.zeros(n)
    for (clip, _), g in zip(entries, gains):
        x = clip.samples[:n]
        mix[: x.shape[0]] += g * x
    peak = float(np.max(np.abs(mix))) if n else 0.0
    scale = cfg.peak_norm / peak if peak > cfg.peak_norm else 1.0
    if scale != 1.0:
        mix *= scale

    frame_len = int(round(ref_labels.frame_duration * rate))
    labels = entries[0][1]
    for _, lab in entries[1:]:
        labels = concat_singers(labels, lab)
    labels = labels.cropped(n // frame_len)

    sources = [SourceInfo(ref_clip.id, 0.0, 0.0)]
    sources += [
        SourceInfo(clip.id, float(20.0 * np.log10(g)), snr)
        for (clip, _), g, snr in zip(entries[1:], gains[1:], snr_db)
    ]
    mix_id = "+".join(clip.id for clip, _ in entries)
    return MixtureRecord(AudioClip(mix, rate, mix_id), labels, tuple(sources), peak_scale=scale)


def mixture_rng(seed: int, k: int) -> np.random.Generator:
    """Random generator owned by mixture ``k`` of the stream seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))


def _as_entries(corpus) -> list[Entry]:
    if isinstance(corpus, CorpusManifest):
        return corpus.load()
    return list(corpus)


class DynamicMixer:
    """On-the-fly mixture source over a fixed corpus.

    ``mixer[k]`` builds mixture ``k`` directly; iterating yields ``k = 0, 1, ...``
    without end.
    """

    def __init__(self, corpus, cfg: SimConfig = SimConfig()):
        self.entries = _as_entries(corpus)
        self.cfg = cfg
        if len(self.entries) < cfg.singers_per_mix:
            raise CorpusError(
                f"corpus has {len(self.entries)} clips, need at least {cfg.singers_per_mix}"
            )

    def __getitem__(self, k: int) -> MixtureRecord:
        if k < 0:
            raise IndexError(k)
        rng = mixture_rng(self.cfg.seed, k)
        picks = rng.choice(len(self.entries), size=self.cfg.singers_per_mix, replace=False)
        rec = mix_pair([self.entries[i] for i in picks], self.cfg, rng)
        clip = AudioClip(rec.clip.samples, rec.clip.sample_rate, f"mix{k:06d}")
        return MixtureRecord(clip, rec.labels, rec.sources, self.cfg.seed, k, rec.peak_scale)

    def __iter__(self) -> Iterator[MixtureRecord]:
        k = 0
        while True:
            yield self[k]
            k += 1


def dynamic_mixing(corpus, cfg: SimConfig = SimConfig()) -> Iterator[MixtureRecord]:
    """Infinite deterministic stream of mixtures drawn from ``corpus``."""
    return iter(DynamicMixer(corpus, cfg))


@dataclass
class DatasetManifest:
    root: Path
    records: list[dict] = field(default_factory=list)

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        path = Path(path)
        return cls(path.parent, [json.loads(l) for l in path.read_text().splitlines() if l.strip()])


def write_static_dataset(corpus, cfg: SimConfig, count: int, out_dir, jobs: int = 1) -> DatasetManifest:
    """Render mixtures ``0 .. count-1`` to WAV + RTTM with a JSONL manifest."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    (out_dir / "rttm").mkdir(parents=True, exist_ok=True)
    mixer = DynamicMixer(corpus, cfg)

    def render(k: int) -> dict:
        rec = mixer[k]
        mix_id = rec.clip.id
        wav_path, rttm_path = f"wav/{mix_id}.wav", f"rttm/{mix_id}.rttm"
        save_wav(rec.clip, out_dir / wav_path)
        write_rttm(frames_to_segments(rec.labels, mix_id), out_dir / rttm_path)
        return {
            "mix_id": mix_id,
            "wav_path": wav_path,
            "rttm_path": rttm_path,
            "sources": [
                {"id": s.id, "gain_db": s.gain_db, "snr_db": s.snr_db} for s in rec.sources
            ],
            "singer_ids": list(rec.labels.singer_ids),
            "peak_scale": rec.peak_scale,
            "seed": rec.seed,
            "k": rec.k,
        }

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            records = list(pool.map(render, range(count)))
    else:
        records = [render(k) for k in range(count)]
    manifest = out_dir / "manifest.jsonl"
    manifest.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    logger.info("wrote %d mixtures to %s", count, out_dir)
    return DatasetManifest(out_dir, records)
