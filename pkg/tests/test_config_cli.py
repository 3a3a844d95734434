import json

import numpy as np
import pytest

from singdiar.audio import save_wav
from singdiar.cli import build_parser, main
from singdiar.config import ConfigError, ToolConfig, env_overrides, load_config
from singdiar.labels import SegmentList, write_rttm
from singdiar.synth import make_corpus

SUBCOMMANDS = ["vad", "segment", "cleanse", "simulate", "score", "pit-check", "stats"]


@pytest.fixture
def vocal_dir(tmp_path):
    d = tmp_path / "vocals"
    d.mkdir()
    for song in make_corpus(4, seed=3, choral_fraction=0.0):
        save_wav(song.mixture, d / f"{song.id}.wav")
    return d


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestConfig:
    def test_defaults(self):
        cfg = load_config(environ={})
        assert cfg.vad.threshold_db == 10.0
        assert cfg.sim.snr_range_db == (-5.0, 5.0)
        assert cfg.vad.median_width == 11
        assert cfg.segment_seconds == 30.0
        assert cfg.sample_rate == 8000
        assert cfg.frame_duration == 0.1
        assert cfg == ToolConfig()

    def test_file_and_env_precedence(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("vad:\n  threshold_db: 12\nsim:\n  seed: 4\n")
        cfg = load_config(path, environ={"SINGDIAR_VAD__THRESHOLD_DB": "14"})
        assert cfg.vad.threshold_db == 14 and cfg.sim.seed == 4
        cfg = load_config(path, environ={}, overrides={"sim": {"seed": 9}})
        assert cfg.vad.threshold_db == 12 and cfg.sim.seed == 9

    def test_env_parsing(self):
        env = {"SINGDIAR_SAMPLE_RATE": "16000", "SINGDIAR_SIM__SNR_LOW_DB": "-3.5", "OTHER": "x"}
        assert env_overrides(env) == {"sample_rate": 16000, "sim": {"snr_low_db": -3.5}}

    @pytest.mark.parametrize("text, key", [
        ("vad:\n  median_width: 4\n", "vad.median_width"),
        ("vad:\n  threshold: 3\n", "vad.threshold"),
        ("sim:\n  seed: -1\n", "sim.seed"),
        ("sample_rate: fast\n", "sample_rate"),
        ("sim:\n  snr_low_db: 6\n", "sim.snr_low_db"),
        ("vad: 3\n", "vad"),
    ])
    def test_errors_name_key_path(self, tmp_path, text, key):
        path = tmp_path / "bad.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError, match=rf"^{key}:"):
            load_config(path, environ={})

    def test_env_error_names_key(self):
        with pytest.raises(ConfigError, match=r"^vad\.frame_len:"):
            load_config(environ={"SINGDIAR_VAD__FRAME_LEN": "zero"})


class TestCliBasics:
    @pytest.mark.parametrize("cmd", SUBCOMMANDS)
    def test_help(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        sub = build_parser()._subparsers._group_actions[0].choices[cmd]
        for action in sub._actions:
            for opt in action.option_strings:
                assert opt in text

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["score", "--ref", "a.rttm"])
        assert exc.value.code == 1

    def test_bad_config_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("vad:\n  median_width: 2\n")
        ref = tmp_path / "r.rttm"
        write_rttm(SegmentList("r", [("A", 0.0, 1.0)]), ref)
        assert main(["stats", str(ref), "--config", str(cfg)]) == 1
        assert "vad.median_width" in capsys.readouterr().err

    def test_malformed_rttm_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.rttm"
        bad.write_text("SPEAKER r 1 zero 1.0 <NA> <NA> A <NA> <NA>\n")
        assert main(["stats", str(bad)]) == 2
        assert "bad.rttm:1" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["vad", str(tmp_path / "none.wav")]) == 2


class TestCliCommands:
    def test_stats_full_overlap(self, tmp_path, capsys):
        path = tmp_path / "r.rttm"
        write_rttm(SegmentList("r", [("A", 0.0, 5.0), ("B", 0.0, 5.0)]), path)
        assert main(["stats", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["overlap_ratio_pct"] == 100.0 and out["duration_s"] == pytest.approx(5.0)

    def test_score_identity(self, tmp_path, capsys):
        path = tmp_path / "r.rttm"
        write_rttm(SegmentList("r", [("A", 0.0, 2.0), ("B", 1.0, 2.5)]), path)
        assert main(["score", "--ref", str(path), "--hyp", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["der_pct"] == 0.0 and out["dscer_pct"] == 0.0
        assert list(out) == ["der_pct", "miss_pct", "fa_pct", "cf_pct", "dscer_pct", "under_pct",
                             "over_pct", "total_ref_singer_frames", "total_active_frames", "mapping"]

    def test_score_with_vad(self, tmp_path, capsys):
        ref, hyp, vad = tmp_path / "r.rttm", tmp_path / "h.rttm", tmp_path / "v.rttm"
        write_rttm(SegmentList("r", [("A", 0.0, 1.0)]), ref)
        write_rttm(SegmentList("r", [("X", 0.0, 2.0)]), hyp)
        write_rttm(SegmentList("r", [("speech", 0.0, 2.0)]), vad)
        assert main(["score", "--ref", str(ref), "--hyp", str(hyp)]) == 0
        assert json.loads(capsys.readouterr().out)["der_pct"] == 0.0
        assert main(["score", "--ref", str(ref), "--hyp", str(hyp), "--vad", str(vad)]) == 0
        assert json.loads(capsys.readouterr().out)["fa_pct"] == 100.0

    def test_pit_check(self, tmp_path, capsys):
        labels = tmp_path / "l.rttm"
        write_rttm(SegmentList("r", [("A", 0.0, 0.1), ("B", 0.1, 0.1)]), labels)
        pred = tmp_path / "p.csv"
        np.savetxt(pred, np.array([[0.1, 0.9], [0.9, 0.1]]), delimiter=",")
        assert main(["pit-check", "--labels", str(labels), "--pred", str(pred)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["permutation"] == [1, 0] and out["singer_ids"] == ["A", "B"]
        assert out["loss"] == pytest.approx(-np.log(0.9))

    def test_vad_and_segment(self, tmp_path, vocal_dir, capsys):
        wav = sorted(vocal_dir.glob("*.wav"))[0]
        assert main(["vad", str(wav)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines and all(l.startswith(f"SPEAKER {wav.stem} 1 ") for l in lines)
        assert main(["segment", str(wav), "--out-dir", str(tmp_path / "seg"), "--segment-seconds", "10"]) == 0
        assert len(list((tmp_path / "seg").glob("*.wav"))) == 3

    def test_cleanse_requires_dirs(self, vocal_dir):
        assert main(["cleanse", "--input-dir", str(vocal_dir)]) == 1

    def test_cleanse(self, tmp_path, vocal_dir, capsys):
        assert main(["cleanse", "--input-dir", str(vocal_dir), "--work-dir", str(tmp_path / "w")]) == 0
        assert json.loads(capsys.readouterr().out)["accepted"] == 4

    def test_simulate_is_deterministic(self, tmp_path, vocal_dir):
        args = ["simulate", "--input-dir", str(vocal_dir), "--n-mix", "10", "--seed", "7"]
        assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
        assert main(args + ["--out-dir", str(tmp_path / "b"), "--jobs", "4"]) == 0
        a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
        assert a == b and len([k for k in a if k.startswith("mixtures/wav/")]) == 10

    def test_simulate_stats_roundtrip(self, tmp_path, vocal_dir, capsys):
        assert main(["simulate", "--input-dir", str(vocal_dir), "--n-mix", "3",
                     "--out-dir", str(tmp_path / "o")]) == 0
        capsys.readouterr()
        assert main(["stats", "--manifest", str(tmp_path / "o" / "mixtures" / "manifest.jsonl")]) == 0
        assert json.loads(capsys.readouterr().out)["recordings"] == 3

    def test_simulate_too_small_corpus(self, tmp_path):
        d = tmp_path / "in"
        d.mkdir()
        save_wav(make_corpus(1, seed=0, choral_fraction=0.0)[0].mixture, d / "one.wav")
        assert main(["simulate", "--input-dir", str(d), "--out-dir", str(tmp_path / "o")]) == 2
