"""Synthetic vocal stems with known activity, for tests and demos.

Voices are gated sinusoids whose frequencies are multiples of 10 Hz, so
every active 100 ms frame at 8 kHz holds whole periods and carries the
same energy. Active runs are at least 6 frames long and at least 11
frames apart, so an 11-frame median filter leaves them intact.

Relative-energy VAD only marks frames more than 10 dB above the clip mean,
which caps activity below 10% of frames. The layouts here stay under that
cap: a lead voice sings 2 runs of 8 frames per 300, and a choral backing
voice adds 2 runs of 6 frames at the same level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .labels import LabelMatrix


def gated_tone(
    activity: np.ndarray,
    freq: float,
    amplitude: float,
    sample_rate: int = 8000,
    frame_len: int = 800,
    noise_floor: float = 1e-4,
    rng: np.random.Generator | None = None,
    id: str = "tone",
) -> AudioClip:
    """Sinusoid switched on in the frames where ``activity`` is true."""
    activity = np.asarray(activity, dtype=bool)
    n = activity.shape[0] * frame_len
    t = np.arange(n) / sample_rate
    gate = np.repeat(activity, frame_len)
    x = amplitude * np.sin(2 * np.pi * freq * t) * gate
    if noise_floor and rng is not None:
        x = x + noise_floor * rng.standard_normal(n)
    return AudioClip(x, sample_rate, id)


def place_runs(num_frames: int, lengths, rng: np.random.Generator, taken=None,
               margin: int = 6, gap: int = 11, max_tries: int = 1000) -> np.ndarray:
    """Random non-touching runs of the given lengths; avoids ``taken`` frames."""
    occupied = np.zeros(num_frames, bool) if taken is None else np.asarray(taken, bool).copy()
    out = np.zeros(num_frames, bool)
    for length in lengths:
        for _ in range(max_tries):
            start = int(rng.integers(margin, num_frames - margin - length + 1))
            lo, hi = max(start - gap, 0), min(start + length + gap, num_frames)
            if not occupied[lo:hi].any():
                out[start : start + length] = True
                occupied[start : start + length] = True
                break
        else:
            raise RuntimeError("could not place activity runs; clip too short")
    return out


@dataclass(frozen=True, eq=False)
class SyntheticSong:
    id: str
    mixture: AudioClip
    stems: tuple[AudioClip, ...]
    lead_activity: np.ndarray
    choral: bool

    def truth(self, frame_duration: float, id: str | None = None) -> LabelMatrix:
        return LabelMatrix(self.lead_activity[None, :], frame_duration, [id or self.id])


def make_song(
    id: str,
    rng: np.random.Generator,
    choral: bool,
    seconds: float = 30.0,
    sample_rate: int = 8000,
    frame_len: int = 800,
    lead_runs=(8, 8),
    backing_runs=(6, 6),
    amplitude: float = 0.5,
) -> SyntheticSong:
    num_frames = int(round(seconds * sample_rate)) // frame_len
    lead = place_runs(num_frames, lead_runs, rng)
    lead_freq = 10.0 * rng.integers(15, 40)
    stems = [gated_tone(lead, lead_freq, amplitude, sample_rate, frame_len, rng=rng, id=f"{id}_lead")]
    if choral:
        backing = place_runs(num_frames, backing_runs, rng, taken=lead)
        freq = 10.0 * rng.integers(40, 80)
        stems.append(gated_tone(backing, freq, amplitude, sample_rate, frame_len, rng=rng, id=f"{id}_backing"))
    mix = np.sum([s.samples for s in stems], axis=0)
    return SyntheticSong(id, AudioClip(mix, sample_rate, id), tuple(stems), lead, choral)


def make_corpus(num_songs: int, seed: int = 0, choral_fraction: float = 0.5, **kw) -> list[SyntheticSong]:
    """Songs ``song000 ...``; the first ``choral_fraction`` of them are choral."""
    rng = np.random.default_rng(seed)
    n_choral = int(round(choral_fraction * num_songs))
    return [make_song(f"song{i:03d}", rng, i < n_choral, **kw) for i in range(num_songs)]


def label_agreement(labels: LabelMatrix, truth: LabelMatrix) -> tuple[int, int]:
    """``(agreeing, considered)`` entries over cells active in either matrix.

    Silent-in-both cells are ignored; with sparse activity they would
    swamp the comparison.
    """
    T = max(labels.num_frames, truth.num_frames)
    a, b = labels.padded(T).data.astype(bool), truth.padded(T).data.astype(bool)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    union = a | b
    return int(np.count_nonzero(union & (a == b))), int(np.count_nonzero(union))
