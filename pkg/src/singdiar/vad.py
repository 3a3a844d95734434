"""Energy-based singer activity detection.

A frame is active when its energy exceeds the clip's mean frame energy by
more than ``threshold_db``. Because the threshold is relative to the mean,
at most ``10 ** (-threshold_db / 10)`` of the frames can ever be active
(under 10% at the default 10 dB), and the labels do not depend on the
clip's gain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import DEFAULT_FRAME_LEN, AudioClip, SilentClipError, frame_energies
from .labels import LabelMatrix


@dataclass(frozen=True)
class VadConfig:
    threshold_db: float = 10.0
    frame_len: int = DEFAULT_FRAME_LEN
    median_width: int = 11
    min_active_fraction: float = 0.05

    def __post_init__(self):
        if self.frame_len < 1:
            raise ValueError(f"frame_len must be positive, got {self.frame_len}")
        if self.median_width < 1 or self.median_width % 2 == 0:
            raise ValueError(f"median_width must be odd and >= 1, got {self.median_width}")
        if not 0.0 <= self.min_active_fraction <= 1.0:
            raise ValueError(f"min_active_fraction must be in [0, 1], got {self.min_active_fraction}")


def energy_vad(clip: AudioClip, cfg: VadConfig = VadConfig()) -> LabelMatrix:
    """Single-row activity labels from relative frame energy (strict ``>``).

    A silent clip yields an all-zero row; use :func:`is_instrumental` to
    tell it apart from a clip that is merely inactive.
    """
    frame_duration = cfg.frame_len / clip.sample_rate
    try:
        energies = frame_energies(clip, cfg.frame_len)
    except SilentClipError:
        num_frames = len(clip) // cfg.frame_len
        return LabelMatrix(np.zeros((1, num_frames), np.uint8), frame_duration, [clip.id])
    return LabelMatrix((energies > cfg.threshold_db)[None, :], frame_duration, [clip.id])


def _majority_pass(rows: np.ndarray, width: int) -> np.ndarray:
    half = width // 2
    T = rows.shape[1]
    csum = np.concatenate([np.zeros((rows.shape[0], 1), np.int64), np.cumsum(rows, axis=1)], axis=1)
    t = np.arange(T)
    lo = np.maximum(t - half, 0)
    hi = np.minimum(t + half + 1, T)
    ones = csum[:, hi] - csum[:, lo]
    size = hi - lo
    # windows shrink at the edges; an even-sized tie keeps the original value
    out = np.where(2 * ones > size, 1, np.where(2 * ones < size, 0, rows))
    return out.astype(rows.dtype)


def median_filter(labels: LabelMatrix, width: int = 11, until_stable: bool = True) -> LabelMatrix:
    """Majority (binary median) filter along time, per singer row.

    With ``until_stable`` (the default) the filter is re-applied until the
    rows stop changing, so the result is a fixed point and filtering again
    is a no-op. A single pass is not idempotent: ``0101010`` keeps flipping
    under width 3. Binary rows reach a fixed point after a handful of passes.
    """
    if width < 1 or width % 2 == 0:
        raise ValueError(f"median width must be odd and >= 1, got {width}")
    rows = labels.data.astype(np.int64)
    if width > 1 and rows.shape[1]:
        for _ in range(rows.shape[1] + 1):
            nxt = _majority_pass(rows, width)
            if np.array_equal(nxt, rows) or not until_stable:
                rows = nxt
                break
            rows = nxt
        else:
            raise RuntimeError("median filter did not reach a fixed point")
    return LabelMatrix(rows, labels.frame_duration, labels.singer_ids)


def vad_labels(clip: AudioClip, cfg: VadConfig = VadConfig()) -> LabelMatrix:
    """Energy VAD followed by the median filter; what the corpus pipeline stores."""
    return median_filter(energy_vad(clip, cfg), cfg.median_width)


@dataclass(frozen=True)
class InstrumentalCheck:
    instrumental: bool
    active_fraction: float
    silent: bool
    num_frames: int

    def __bool__(self):
        return self.instrumental


def is_instrumental(clip: AudioClip, cfg: VadConfig = VadConfig()) -> InstrumentalCheck:
    """Flag clips with (almost) no vocal activity.

    True when the clip is all zeros or when the raw energy-VAD active
    fraction is below ``cfg.min_active_fraction``. The result is truthy
    exactly when the clip counts as instrumental.
    """
    num_frames = len(clip) // cfg.frame_len
    silent = not np.any(clip.samples[: num_frames * cfg.frame_len])
    if silent or num_frames == 0:
        return InstrumentalCheck(True, 0.0, silent, num_frames)
    labels = energy_vad(clip, cfg)
    frac = float(labels.data.mean())
    return InstrumentalCheck(frac < cfg.min_active_fraction, frac, False, num_frames)
