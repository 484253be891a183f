"""
Tests for the cdmd command-line interface.
"""
import json

import pytest
import numpy as np
from unittest.mock import patch

from cli import build_parser, main, pipeline_config
from cli.bench import format_table, parse_methods, parse_resolutions, run_benchmarks
from frames_io import load_frames, load_mask
from numkernel import NumericalError
from pipeline import validate_report

SCENE_ARGS = ["--width", "32", "--height", "32", "--frames", "40", "--objects", "1",
              "--object-size", "4", "--seed", "2"]
EXACT_ARGS = ["--method", "exact", "--batch", "40", "--threads", "1", "--K", "5"]


@pytest.fixture
def scene_dir(tmp_path):
    """A small synthetic scene written by the synth command."""
    out = tmp_path / "scene"
    assert main(["synth", *SCENE_ARGS, "--pgm", "--out", str(out)]) == 0
    return out


class TestSynthCommand:
    """Test synthetic data generation."""

    def test_writes_artifacts(self, scene_dir):
        """frames.raw, truth masks, background and PGM frames are written."""
        frames = load_frames(scene_dir / "frames.raw", "raw_matrix")
        truth = load_mask(scene_dir / "truth")
        assert (frames.width, frames.height, frames.n_frames) == (32, 32, 40)
        assert truth.bits.shape == frames.pixels.shape
        assert (scene_dir / "background.pgm").exists()
        assert len(list((scene_dir / "frames").glob("*.pgm"))) == 40

    def test_pgm_frames_match_raw(self, scene_dir):
        """The PGM copy holds the rounded raw frames."""
        raw = load_frames(scene_dir / "frames.raw", "raw_matrix")
        pgm = load_frames(scene_dir / "frames", "pgm_dir")
        assert np.array_equal(pgm.pixels, np.rint(raw.pixels))


class TestPipelineCommands:
    """Test decompose, background, mask and eval."""

    def test_mask_with_truth(self, scene_dir, tmp_path):
        """mask writes one PGM per frame and a report with metrics."""
        out = tmp_path / "out"
        code = main(["mask", "--input", str(scene_dir / "frames.raw"), "--format", "raw",
                     "--truth", str(scene_dir / "truth"), *EXACT_ARGS, "--out", str(out)])
        assert code == 0
        assert len(list((out / "masks").glob("mask_*.pgm"))) == 40
        report = json.loads((out / "run_report.json").read_text())
        assert report["command"] == "mask"
        validate_report("run_report", report)
        assert 0.0 <= report["metrics"]["f_measure"] <= 1.0

    def test_eval_saved_masks(self, scene_dir, tmp_path):
        """eval --mask scores saved masks the same way the run did."""
        out = tmp_path / "out"
        main(["mask", "--input", str(scene_dir / "frames.raw"), "--format", "raw",
              "--truth", str(scene_dir / "truth"), *EXACT_ARGS, "--out", str(out)])
        code = main(["eval", "--truth", str(scene_dir / "truth"), "--mask", str(out / "masks"),
                     "--out", str(tmp_path / "eval")])
        assert code == 0
        run = json.loads((out / "run_report.json").read_text())["metrics"]
        scored = json.loads((tmp_path / "eval" / "eval_report.json").read_text())
        assert scored["tp"] == run["tp"] and scored["fp"] == run["fp"]
        assert scored["f_measure"] == pytest.approx(run["f_measure"])

    def test_eval_with_sweep(self, scene_dir, tmp_path):
        """eval runs the pipeline and attaches the threshold sweep."""
        out = tmp_path / "out"
        code = main(["eval", "--input", str(scene_dir / "frames.raw"), "--format", "raw",
                     "--truth", str(scene_dir / "truth"), *EXACT_ARGS, "--tau-grid", "10,20,40",
                     "--out", str(out)])
        assert code == 0
        report = json.loads((out / "eval_report.json").read_text())
        assert [p["tau"] for p in report["threshold_sweep"]] == [10.0, 20.0, 40.0]
        validate_report("eval_report", report)
        validate_report("run_report", json.loads((out / "run_report.json").read_text()))
        assert (out / "run_report.json").exists()

    def test_background_frames(self, scene_dir, tmp_path):
        """background writes one frame per batch."""
        out = tmp_path / "out"
        code = main(["background", "--input", str(scene_dir / "frames"), *EXACT_ARGS,
                     "--batch", "20", "--out", str(out)])
        assert code == 0
        assert sorted(p.name for p in out.glob("background_*.pgm")) == ["background_000.pgm", "background_001.pgm"]

    def test_decompose_deterministic(self, scene_dir, tmp_path):
        """Two compressed runs with one seed give identical eigenvalues."""
        reports = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = main(["decompose", "--input", str(scene_dir / "frames.raw"), "--format", "raw",
                         "--sensing", "sparse", "--p", "200", "--seed", "5", "--batch", "40",
                         "--threads", "1", "--save-modes", "--out", str(out)])
            assert code == 0
            assert (out / "modes" / "batch_000" / "modes_real.raw").exists()
            reports.append(json.loads((out / "decompose_report.json").read_text()))
            validate_report("run_report", reports[-1])
        assert reports[0]["batches"][0]["lambdas"] == reports[1]["batches"][0]["lambdas"]
        assert reports[0]["batches"][0]["sensing"]["seed"] == 5


class TestExitCodes:
    """Test error handling and exit codes."""

    def test_help(self):
        """--help exits 0."""
        assert main(["--help"]) == 0

    def test_no_command(self):
        """A missing subcommand is a usage error."""
        assert main([]) == 1

    def test_bad_choice(self):
        """An unknown sensing family is a usage error."""
        assert main(["mask", "--input", "x", "--sensing", "hadamard"]) == 1

    def test_missing_input_flag(self, tmp_path):
        """mask without --input is a usage error."""
        assert main(["mask", "--out", str(tmp_path)]) == 1

    def test_sweep_with_saved_masks(self, scene_dir, tmp_path):
        """--sweep needs a pipeline run."""
        code = main(["eval", "--truth", str(scene_dir / "truth"), "--mask", str(scene_dir / "truth"),
                     "--sweep", "--out", str(tmp_path)])
        assert code == 1

    def test_missing_input_file(self, tmp_path):
        """A nonexistent input is a data error."""
        assert main(["mask", "--input", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 2

    def test_invalid_config_file(self, scene_dir, tmp_path):
        """Unknown config keys are a data error."""
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code = main(["mask", "--input", str(scene_dir / "frames"), "--config", str(cfg), "--out", str(tmp_path)])
        assert code == 2

    def test_numerical_failure(self, scene_dir, tmp_path):
        """Numerical failures exit 3."""
        with patch('pipeline.runner.dmd_exact', side_effect=NumericalError("SVD did not converge")):
            code = main(["mask", "--input", str(scene_dir / "frames"), *EXACT_ARGS, "--out", str(tmp_path)])
        assert code == 3


class TestPipelineConfigMerge:
    """Test how flags, config files and the environment combine."""

    def test_flags_override_file(self, tmp_path):
        """Explicit flags win over the config file."""
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"p": 500, "tau": 30.0}))
        args = build_parser().parse_args(["mask", "--config", str(cfg_file), "--p", "200", "--sensing", "spixel"])
        cfg = pipeline_config(args)
        assert (cfg.p, cfg.tau, cfg.sensing) == (200, 30.0, "single_pixel")

    def test_threads_from_environment(self, monkeypatch):
        """CDMD_THREADS is used when --threads is absent."""
        monkeypatch.setenv("CDMD_THREADS", "2")
        cfg = pipeline_config(build_parser().parse_args(["mask"]))
        assert cfg.threads == 2

    def test_rank_and_k_arguments(self):
        """--rank and --K accept their keywords or integers."""
        args = build_parser().parse_args(["decompose", "--rank", "4", "--K", "cv"])
        cfg = pipeline_config(args)
        assert (cfg.rank, cfg.K) == (4, "cv")


class TestBench:
    """Test the benchmark harness at toy sizes."""

    def test_parse_resolutions(self):
        """WIDTHxHEIGHT lists are parsed."""
        assert parse_resolutions("320x240, 16X16") == [(320, 240), (16, 16)]

    def test_parse_methods_rejects_unknown(self):
        """Unknown methods are rejected."""
        with pytest.raises(Exception, match="unknown method"):
            parse_methods("exact,fast")

    def test_run_benchmarks(self):
        """Every cell reports positive fps and per-stage medians."""
        report = run_benchmarks([(16, 16)], ["exact", "spixel"], m=20, repeats=2, p=50, K=3, seed=1)
        assert [r.method for r in report.results] == ["exact", "compressed-spixel"]
        assert all(r.fps > 0 for r in report.results)
        assert "compress" in report.results[1].stage_times_ms
        assert "compressed-spixel" in format_table(report)

    def test_bench_command(self, tmp_path):
        """bench writes bench_report.json."""
        code = main(["bench", "--resolutions", "16x16", "--methods", "exact", "--frames", "20",
                     "--repeats", "1", "--p", "50", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "bench_report.json").read_text())
        validate_report("bench_report", report)
        result = report["results"][0]
        assert result["resolution"] == [16, 16]
        assert sum(result["stage_times_ms"].values()) <= result["total_ms"]
        assert result["fps"] == pytest.approx(20 / (result["total_ms"] / 1000.0), rel=1e-3)
