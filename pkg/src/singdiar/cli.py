"""Command-line interface: ``singdiar <subcommand> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .audio import AudioFormatError, load_wav, save_wav, segment_clip
from .cleanse import CleansingError, CorpusError, CorpusManifest, ExternalCommand, Identity, prepare_corpus
from .config import ConfigError, ToolConfig, load_config
from .labels import (
    RttmError,
    SegmentList,
    format_rttm,
    frames_to_segments,
    overlap_ratio,
    read_rttm,
    segments_to_frames,
    write_rttm,
)
from .metrics import UndefinedScoreError, build_eval_mask, score_corpus
from .mixing import write_static_dataset
from .pit import PredictionMatrix, pit_loss
from .vad import energy_vad, is_instrumental, median_filter

logger = logging.getLogger("singdiar")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="YAML config file")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def _add_vad_flags(p):
    g = p.add_argument_group("VAD")
    g.add_argument("--threshold-db", type=float, help="activity threshold above mean frame energy (dB)")
    g.add_argument("--frame-ms", type=float, help="frame length in milliseconds")
    g.add_argument("--median-frames", type=int, help="median filter width in frames (odd)")
    g.add_argument("--min-active-frac", type=float, help="active fraction below which a clip is instrumental")


def _add_sim_flags(p):
    g = p.add_argument_group("simulation")
    g.add_argument("--n-mix", type=int, default=100, help="number of mixtures to write")
    g.add_argument("--seed", type=int, help="random seed")
    g.add_argument("--snr-low", type=float, help="lowest SNR between singers (dB)")
    g.add_argument("--snr-high", type=float, help="highest SNR between singers (dB)")
    g.add_argument("--singers", type=int, help="singers per mixture")
    g.add_argument("--jobs", type=int, default=1, help="worker threads; output does not depend on it")


def _config(args) -> ToolConfig:
    overrides: dict = {"vad": {}, "sim": {}}
    if getattr(args, "sample_rate", None) is not None:
        overrides["sample_rate"] = args.sample_rate
    if getattr(args, "segment_seconds", None) is not None:
        overrides["segment_seconds"] = args.segment_seconds
    for flag, key in [("threshold_db", "threshold_db"), ("median_frames", "median_width"),
                      ("min_active_frac", "min_active_fraction")]:
        if getattr(args, flag, None) is not None:
            overrides["vad"][key] = getattr(args, flag)
    for flag, key in [("seed", "seed"), ("snr_low", "snr_low_db"), ("snr_high", "snr_high_db"),
                      ("singers", "singers_per_mix")]:
        if getattr(args, flag, None) is not None:
            overrides["sim"][key] = getattr(args, flag)
    cfg = load_config(args.config, overrides=overrides)
    frame_ms = getattr(args, "frame_ms", None)
    if frame_ms is not None:
        frame_len = int(round(frame_ms * cfg.sample_rate / 1000.0))
        cfg = load_config(args.config, overrides={**overrides, "vad": {**overrides["vad"], "frame_len": frame_len}})
    return cfg


def _frame_duration(args, cfg: ToolConfig) -> float:
    if getattr(args, "frame_ms", None) is not None:
        if not args.frame_ms > 0:
            raise ConfigError("frame-ms: must be positive")
        return args.frame_ms / 1000.0
    return cfg.frame_duration


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=False)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_vad(args):
    cfg = _config(args)
    lists = []
    for path in args.inputs:
        clip = load_wav(path)
        if clip.sample_rate != cfg.sample_rate:
            raise ValueError(f"{path}: sample rate {clip.sample_rate} != configured {cfg.sample_rate}")
        check = is_instrumental(clip, cfg.vad)
        labels = energy_vad(clip, cfg.vad)
        if not args.no_median:
            labels = median_filter(labels, cfg.vad.median_width)
        logger.info("%s: active %.3f, instrumental=%s", clip.id, float(labels.data.mean()), bool(check))
        lists.append(frames_to_segments(labels, clip.id))
    if args.out:
        write_rttm(lists, args.out)
    else:
        sys.stdout.write("".join(format_rttm(s) for s in lists))


def cmd_segment(args):
    cfg = _config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clip = load_wav(args.input)
    for seg in segment_clip(clip, cfg.segment_seconds):
        save_wav(seg, out / f"{seg.id}.wav")
        print(out / f"{seg.id}.wav")


def _cleanser(args):
    if args.cmd:
        try:
            return ExternalCommand(args.cmd, args.timeout)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return Identity()


def _require(value, name):
    if not value:
        raise UsageError(f"{name} is required (flag or config paths)")
    return value


def cmd_cleanse(args):
    cfg = _config(args)
    input_dir = _require(args.input_dir or cfg.paths.get("input_dir"), "--input-dir")
    work_dir = _require(args.work_dir or cfg.paths.get("work_dir"), "--work-dir")
    manifest = prepare_corpus(input_dir, work_dir, cfg.vad, _cleanser(args), cfg.segment_seconds,
                              cfg.sample_rate, args.jobs)
    print(json.dumps({"manifest": str(Path(work_dir) / "manifest.jsonl"),
                      "accepted": len(manifest.accepted), "rejected": len(manifest.rejected)}))


def cmd_simulate(args):
    cfg = _config(args)
    out_dir = Path(_require(args.out_dir or cfg.paths.get("output_dir"), "--out-dir"))
    if args.n_mix < 1:
        raise UsageError("--n-mix must be >= 1")
    if args.manifest:
        corpus = CorpusManifest.read(args.manifest)
    else:
        input_dir = _require(args.input_dir or cfg.paths.get("input_dir"), "--input-dir or --manifest")
        corpus = prepare_corpus(input_dir, out_dir / "corpus", cfg.vad, _cleanser(args),
                                cfg.segment_seconds, cfg.sample_rate, args.jobs)
    write_static_dataset(corpus, cfg.sim, args.n_mix, out_dir / "mixtures", jobs=args.jobs)
    print(json.dumps({"mixtures": args.n_mix, "manifest": str(out_dir / "mixtures" / "manifest.jsonl")}))


def _num_frames(frame_duration, *segment_lists) -> int:
    end = max((s.end_time() for s in segment_lists if s is not None), default=0.0)
    return max(1, int(math.ceil(end / frame_duration - 1e-9)))


def cmd_score(args):
    cfg = _config(args)
    d = _frame_duration(args, cfg)
    refs, hyps = read_rttm(args.ref), read_rttm(args.hyp)
    vads = read_rttm(args.vad) if args.vad else {}
    pairs, masks, names = [], [], []
    for rec in sorted(refs):
        ref_segs = refs[rec]
        hyp_segs = hyps.get(rec, SegmentList(rec))
        T = _num_frames(d, ref_segs, hyp_segs, vads.get(rec))
        ref = segments_to_frames(ref_segs, d, T, ref_segs.singers() or ["ref"])
        hyp = segments_to_frames(hyp_segs, d, T, hyp_segs.singers() or ["hyp"])
        mask = build_eval_mask(ref, vads.get(rec, SegmentList(rec))) if args.vad else build_eval_mask(ref)
        pairs.append((ref, hyp))
        masks.append(mask)
        names.append(rec)
    missing = sorted(set(hyps) - set(refs))
    if missing:
        logger.warning("hypothesis recordings without reference ignored: %s", missing)
    if not pairs:
        raise ValueError(f"{args.ref}: no reference recordings")
    report = score_corpus(pairs, masks, names=names)
    _emit(report.to_dict(), args.out)


def _read_predictions(path) -> np.ndarray:
    try:
        pred = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        pred = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
    return pred


def cmd_pit_check(args):
    cfg = _config(args)
    d = _frame_duration(args, cfg)
    pred = _read_predictions(args.pred).T  # file is frames x singers
    lists = read_rttm(args.labels)
    if args.recording:
        if args.recording not in lists:
            raise ValueError(f"{args.labels}: no recording {args.recording!r}")
        segs = lists[args.recording]
    elif len(lists) == 1:
        segs = next(iter(lists.values()))
    elif not lists:
        segs = SegmentList("empty")
    else:
        raise UsageError(f"{args.labels} holds {len(lists)} recordings; pick one with --recording")
    ids = segs.singers()
    N, T = pred.shape
    if len(ids) > N:
        raise ValueError(f"{len(ids)} labelled singers but only {N} prediction columns")
    ids += [f"silent{i}" for i in range(N - len(ids))]
    labels = segments_to_frames(segs, d, T, ids)
    result = pit_loss(labels, PredictionMatrix(pred, d), eps=args.eps)
    out = result.to_dict()
    out["singer_ids"] = list(labels.singer_ids)
    _emit(out)


def cmd_stats(args):
    cfg = _config(args)
    d = _frame_duration(args, cfg)
    paths = list(args.rttm)
    if args.manifest:
        m = Path(args.manifest)
        paths += [m.parent / json.loads(l)["rttm_path"] for l in m.read_text().splitlines() if l.strip()]
    if not paths:
        raise UsageError("give RTTM files or --manifest")
    matrices = []
    for path in paths:
        for rec, segs in sorted(read_rttm(path).items()):
            if not len(segs):
                continue
            matrices.append(segments_to_frames(segs, d, _num_frames(d, segs)))
    frames = sum(m.num_frames for m in matrices)
    active = sum(int(np.count_nonzero(m.counts() >= 1)) for m in matrices)
    _emit({
        "recordings": len(matrices),
        "duration_s": frames * d,
        "active_s": active * d,
        "overlap_ratio_pct": overlap_ratio(matrices),
    })


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="singdiar", description="Singer-diarization data simulation and scoring.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("vad", help="energy VAD labels for WAV files, as RTTM")
    _add_common(p)
    p.add_argument("inputs", nargs="+", help="mono WAV files")
    p.add_argument("--out", help="RTTM output (default: stdout)")
    p.add_argument("--no-median", action="store_true", help="skip the median filter")
    _add_vad_flags(p)
    p.set_defaults(func=cmd_vad)

    p = sub.add_parser("segment", help="cut a WAV into fixed-length segments")
    _add_common(p)
    p.add_argument("input", help="mono WAV file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--segment-seconds", type=float)
    p.set_defaults(func=cmd_segment)

    for name, func, help_ in [("cleanse", cmd_cleanse, "reject, segment, cleanse and label a vocal corpus"),
                              ("simulate", cmd_simulate, "prepare a corpus and write simulated mixtures")]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.add_argument("--input-dir", help="directory of vocal WAVs")
        p.add_argument("--cmd", help='external cleanser, e.g. "mycleanser {in} {out}" (default: identity)')
        p.add_argument("--timeout", type=float, default=600.0, help="cleanser timeout per clip (s)")
        p.add_argument("--segment-seconds", type=float)
        p.add_argument("--sample-rate", type=int)
        _add_vad_flags(p)
        if name == "cleanse":
            p.add_argument("--work-dir", help="output directory for clips, labels and manifest")
            p.add_argument("--jobs", type=int, default=1)
        else:
            p.add_argument("--out-dir", help="output directory")
            p.add_argument("--manifest", help="use an existing corpus manifest instead of --input-dir")
            _add_sim_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("score", help="DER and D-SCER of a hypothesis RTTM")
    _add_common(p)
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--vad", help="RTTM of sections to evaluate (default: reference activity)")
    p.add_argument("--frame-ms", type=float)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pit-check", help="permutation-invariant BCE of predictions against labels")
    _add_common(p)
    p.add_argument("--labels", required=True, help="RTTM reference")
    p.add_argument("--pred", required=True, help="CSV of probabilities, frames x singers")
    p.add_argument("--recording", help="recording id inside the RTTM")
    p.add_argument("--frame-ms", type=float)
    p.add_argument("--eps", type=float, default=1e-7)
    p.set_defaults(func=cmd_pit_check)

    p = sub.add_parser("stats", help="duration and overlap ratio of RTTM label sets")
    _add_common(p)
    p.add_argument("rttm", nargs="*", help="RTTM files")
    p.add_argument("--manifest", help="mixture dataset manifest (JSONL)")
    p.add_argument("--frame-ms", type=float)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"singdiar {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, RttmError, AudioFormatError, CorpusError, CleansingError,
            UndefinedScoreError) as exc:
        print(f"singdiar {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
