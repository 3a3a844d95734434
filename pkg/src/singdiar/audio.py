"""Waveform containers, WAV I/O, segmentation and frame energies."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)

#: Default frame length in samples (100 ms at 8 kHz).
DEFAULT_FRAME_LEN = 800


class AudioFormatError(ValueError):
    """Raised for WAV files the toolkit does not accept."""


class SilentClipError(ValueError):
    """Raised when a clip has zero total energy, so relative energies are undefined."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono waveform with its sample rate.

    ``offset`` is the sample position of this clip inside the recording it
    was cut from; it is 0 for whole recordings and set by :func:`segment_clip`.
    """

    samples: np.ndarray
    sample_rate: int
    id: str = "clip"
    offset: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = samples.copy() if samples is self.samples else samples
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples, id: str | None = None) -> "AudioClip":
        return AudioClip(samples, self.sample_rate, self.id if id is None else id, self.offset)

    def scaled(self, gain: float) -> "AudioClip":
        return self.with_samples(self.samples * gain)


@dataclass(frozen=True)
class FrameGrid:
    """Non-overlapping framing of a clip; the trailing remainder is dropped."""

    frame_len: int
    num_frames: int
    frame_duration: float

    @classmethod
    def for_clip(cls, clip: AudioClip, frame_len: int = DEFAULT_FRAME_LEN) -> "FrameGrid":
        if frame_len < 1:
            raise ValueError(f"frame_len must be positive, got {frame_len}")
        return cls(frame_len, len(clip) // frame_len, frame_len / clip.sample_rate)

    @property
    def num_samples(self) -> int:
        return self.frame_len * self.num_frames


def frame_matrix(samples: np.ndarray, frame_len: int) -> np.ndarray:
    """View ``samples`` as a ``(T, frame_len)`` matrix of contiguous frames."""
    num_frames = samples.shape[0] // frame_len
    return samples[: num_frames * frame_len].reshape(num_frames, frame_len)


def load_wav(path) -> AudioClip:
    """Read a mono 16-bit PCM or 32-bit float WAV file.

    16-bit samples are mapped to ``[-1, 1)`` by dividing by 32768.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, OSError) as exc:
        raise AudioFormatError(f"{path}: unreadable WAV ({exc})") from exc
    if data.ndim != 1:
        raise AudioFormatError(
            f"{path}: {data.shape[1]} channels; downmix to mono before loading"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(f"{path}: unsupported sample format {data.dtype}")
    return AudioClip(samples, rate, path.stem)


def save_wav(clip: AudioClip, path) -> int:
    """Write ``clip`` as 16-bit PCM. Returns the number of clamped samples."""
    x = clip.samples
    n_clamped = int(np.count_nonzero(np.abs(x) > 1.0))
    if n_clamped:
        logger.warning("%s: clamped %d samples outside [-1, 1]", clip.id, n_clamped)
    codes = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    wavfile.write(Path(path), clip.sample_rate, codes)
    return n_clamped


def segment_clip(clip: AudioClip, segment_seconds: float, keep_fraction: float = 0.5) -> list[AudioClip]:
    """Cut ``clip`` into consecutive segments of ``segment_seconds``.

    The final shorter piece is kept only when it is at least ``keep_fraction``
    of the segment length.
    """
    if segment_seconds <= 0:
        raise ValueError(f"segment_seconds must be positive, got {segment_seconds}")
    seg_len = int(round(segment_seconds * clip.sample_rate))
    if seg_len < 1:
        raise ValueError("segment_seconds is shorter than one sample")
    out = []
    for idx, start in enumerate(range(0, len(clip), seg_len)):
        piece = clip.samples[start : start + seg_len]
        if piece.shape[0] < seg_len and piece.shape[0] < keep_fraction * seg_len:
            break
        out.append(AudioClip(piece, clip.sample_rate, f"{clip.id}_{idx:03d}", clip.offset + start))
    return out


def frame_power(clip: AudioClip, frame_len: int = DEFAULT_FRAME_LEN) -> np.ndarray:
    """Sum of squared samples per frame."""
    frames = frame_matrix(clip.samples, frame_len)
    return np.einsum("tl,tl->t", frames, frames)


def frame_energies(clip: AudioClip, frame_len: int = DEFAULT_FRAME_LEN) -> np.ndarray:
    """Per-frame energy in dB relative to the clip's mean frame energy.

    ``e_t = 10 log10(E_t / mean_t E_t)`` where ``E_t`` is the sum of squares
    of frame ``t``. Frames with zero energy map to ``-inf``.
    """
    if frame_len < 1:
        raise ValueError(f"frame_len must be positive, got {frame_len}")
    if len(clip) < frame_len:
        raise ValueError(f"{clip.id}: {len(clip)} samples is shorter than one frame ({frame_len})")
    power = frame_power(clip, frame_len)
    mean = power.mean()
    if not mean > 0.0:
        raise SilentClipError(f"{clip.id}: clip is silent")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power / mean)
