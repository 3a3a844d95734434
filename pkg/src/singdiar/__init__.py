"""Simulated singer-diarization data and diarization scoring.

Pipeline: energy VAD labels cleansed vocal clips, clips are mixed at
random SNRs into multi-singer training mixtures, and hypotheses are scored
with frame-level DER and the singer-counting error rate. A
permutation-invariant BCE loss is provided for model training.
"""
from .audio import AudioClip, FrameGrid, SilentClipError, frame_energies, load_wav, save_wav, segment_clip
from .cleanse import (
    CleansingError,
    CorpusManifest,
    DominantStem,
    ExternalCommand,
    Identity,
    cleanse,
    prepare_corpus,
    process_recording,
)
from .config import ToolConfig, load_config
from .labels import (
    LabelMatrix,
    Segment,
    SegmentList,
    concat_singers,
    frames_to_segments,
    overlap_ratio,
    read_rttm,
    segments_to_frames,
    write_rttm,
)
from .metrics import ScoreReport, build_eval_mask, der, dscer, score, score_corpus
from .mixing import DynamicMixer, MixtureRecord, SimConfig, active_power, dynamic_mixing, mix_pair, write_static_dataset
from .pit import PitResult, PredictionMatrix, bce, pit_loss, pit_loss_assignment, pit_loss_bruteforce
from .vad import VadConfig, energy_vad, is_instrumental, median_filter, vad_labels

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "FrameGrid",
    "SilentClipError",
    "frame_energies",
    "load_wav",
    "save_wav",
    "segment_clip",
    "CleansingError",
    "CorpusManifest",
    "DominantStem",
    "ExternalCommand",
    "Identity",
    "cleanse",
    "prepare_corpus",
    "process_recording",
    "ToolConfig",
    "load_config",
    "LabelMatrix",
    "Segment",
    "SegmentList",
    "concat_singers",
    "frames_to_segments",
    "overlap_ratio",
    "read_rttm",
    "segments_to_frames",
    "write_rttm",
    "ScoreReport",
    "build_eval_mask",
    "der",
    "dscer",
    "score",
    "score_corpus",
    "DynamicMixer",
    "MixtureRecord",
    "SimConfig",
    "active_power",
    "dynamic_mixing",
    "mix_pair",
    "write_static_dataset",
    "PitResult",
    "PredictionMatrix",
    "bce",
    "pit_loss",
    "pit_loss_assignment",
    "pit_loss_bruteforce",
    "VadConfig",
    "energy_vad",
    "is_instrumental",
    "median_filter",
    "vad_labels",
]
