"""Config parsing, intrinsics resolution, and the two subcommands."""

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from gavo.cli import (
    RunConfig,
    _merge_run_config,
    _parse_bool,
    _parse_bounds,
    build_parser,
    evaluate_only,
    main,
    read_config_file,
    resolve_intrinsics,
    run_odometry,
)
from gavo.dataset import CameraIntrinsics, preset_intrinsics
from gavo.errors import EmptyOverlap, InsufficientLength
from gavo.evaluation import load_trajectory
from gavo.ga import GaConfig

SYNTH_K = dict(fx=72.0, fy=72.0, cx=79.5, cy=59.5)


def small_ga(**kw):
    base = dict(population_size=40, max_iterations=10, pyramid_levels=3, rng_seed=0)
    base.update(kw)
    return GaConfig(**base)


class TestParseBounds:
    def test_scalar_broadcasts(self):
        assert np.array_equal(_parse_bounds("0.1"), np.full(6, 0.1))

    def test_six_values(self):
        out = _parse_bounds("1 2 3 4 5 6")
        assert np.array_equal(out, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])

    def test_commas_allowed(self):
        out = _parse_bounds("-0.1,0.2,-0.3,0.4,-0.5,0.6")
        assert out[0] == -0.1 and out[5] == 0.6

    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError):
            _parse_bounds("1 2 3")


class TestParseBool:
    @pytest.mark.parametrize("text", ["1", "true", "Yes", "ON"])
    def test_truthy(self, text):
        assert _parse_bool(text) is True

    @pytest.mark.parametrize("text", ["0", "false", "No", "off"])
    def test_falsy(self, text):
        assert _parse_bool(text) is False

    def test_garbage_rejected(self):
        with pytest.raises(ValueError):
            _parse_bool("maybe")


class TestReadConfigFile:
    def test_parses_typed_values(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# odometry settings\n"
            "dataset = /data/seq1   # inline comment\n"
            "frames = 40\n"
            "mutation_rate = 0.05\n"
            "lower_bounds = -0.2\n"
            "mutate_after_replacement = false\n"
            "\n"
        )
        out = read_config_file(cfg)
        assert out["dataset"] == "/data/seq1"
        assert out["frames"] == 40
        assert out["mutation_rate"] == 0.05
        assert np.array_equal(out["lower_bounds"], np.full(6, -0.2))
        assert out["mutate_after_replacement"] is False

    def test_unknown_key_reports_line(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frames = 4\nturbo = on\n")
        with pytest.raises(ValueError, match="2.*turbo|turbo.*2"):
            read_config_file(cfg)

    def test_missing_equals_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frames 4\n")
        with pytest.raises(ValueError, match="key = value"):
            read_config_file(cfg)

    def test_bad_value_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frames = soon\n")
        with pytest.raises(ValueError, match="bad value"):
            read_config_file(cfg)


class TestMergeRunConfig:
    def test_flags_beat_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "dataset = /from/file\nout = /tmp/o\nframes = 4\n"
            "population_size = 50\nseed = 3\n"
        )
        args = build_parser().parse_args(
            ["run", "--config", str(cfg), "--frames", "6"]
        )
        merged = _merge_run_config(args)
        assert merged.dataset_dir == "/from/file"
        assert merged.frames == 6
        assert merged.ga.population_size == 50
        assert merged.seed == 3
        assert merged.ga.rng_seed == 3

    def test_boolean_flag_round_trip(self):
        args = build_parser().parse_args(
            [
                "run",
                "--dataset",
                "d",
                "--out",
                "o",
                "--no-mutate-after-replacement",
            ]
        )
        assert _merge_run_config(args).ga.mutate_after_replacement is False

    def test_dataset_required(self):
        args = build_parser().parse_args(["run", "--out", "o"])
        with pytest.raises(ValueError, match="--dataset"):
            _merge_run_config(args)

    def test_out_required(self):
        args = build_parser().parse_args(["run", "--dataset", "d"])
        with pytest.raises(ValueError, match="--out"):
            _merge_run_config(args)


class TestResolveIntrinsics:
    def base(self, **kw):
        merged = dict(dataset_dir="/data/rgbd_dataset_freiburg1_xyz", out_dir="o")
        merged.update(kw)
        return RunConfig(**merged)

    def test_explicit_values_win(self, tmp_path):
        calib = tmp_path / "calib.txt"
        calib.write_text("1 2 3 4\n")
        cfg = self.base(fx=100.0, fy=101.0, cx=50.0, cy=40.0, calib=str(calib))
        assert resolve_intrinsics(cfg) == CameraIntrinsics(100.0, 101.0, 50.0, 40.0)

    def test_partial_explicit_rejected(self):
        with pytest.raises(ValueError, match="together"):
            resolve_intrinsics(self.base(fx=100.0))

    def test_calib_file_beats_preset(self, tmp_path):
        calib = tmp_path / "calib.txt"
        calib.write_text("# fx fy cx cy\n525.0 525.0\n319.5 239.5\n")
        cfg = self.base(calib=str(calib), preset="fr2")
        assert resolve_intrinsics(cfg) == CameraIntrinsics(525.0, 525.0, 319.5, 239.5)

    def test_calib_wrong_count_rejected(self, tmp_path):
        calib = tmp_path / "calib.txt"
        calib.write_text("525.0 525.0 319.5\n")
        with pytest.raises(ValueError, match="expected 4"):
            resolve_intrinsics(self.base(calib=str(calib)))

    def test_named_preset(self):
        cfg = self.base(preset="fr2")
        assert resolve_intrinsics(cfg) == preset_intrinsics("fr2")

    def test_auto_sniffs_freiburg1(self):
        assert resolve_intrinsics(self.base()) == preset_intrinsics("fr1")

    def test_auto_sniffs_freiburg2(self):
        cfg = self.base(dataset_dir="/x/rgbd_dataset_freiburg2_desk")
        assert resolve_intrinsics(cfg) == preset_intrinsics("fr2")

    def test_auto_fails_on_anonymous_name(self):
        with pytest.raises(ValueError, match="preset"):
            resolve_intrinsics(self.base(dataset_dir="/data/seq"))


@pytest.fixture(scope="module")
def run_artifacts(tmp_path_factory, synth_seq_dir):
    """One three-frame odometry run shared by the artifact checks."""
    out = tmp_path_factory.mktemp("run_out")
    cfg = RunConfig(
        dataset_dir=str(synth_seq_dir),
        out_dir=str(out),
        frames=3,
        delta=1,
        ga=small_ga(),
        **SYNTH_K,
    )
    assert run_odometry(cfg) == 0
    return out


class TestRunOdometry:
    def test_writes_all_artifacts(self, run_artifacts):
        for name in (
            "trajectory.txt",
            "ga_trace.csv",
            "drift.csv",
            "drift_delta1.csv",
            "summary.json",
        ):
            assert (run_artifacts / name).is_file(), name

    def test_summary_schema(self, run_artifacts):
        summary = json.loads((run_artifacts / "summary.json").read_text())
        assert set(summary) == {
            "rmse_trans_m",
            "rmse_rot_rad",
            "frames",
            "delta",
            "seed",
            "wall_seconds",
            "config",
        }
        assert summary["frames"] == 3
        assert summary["delta"] == 1
        assert isinstance(summary["rmse_trans_m"], float)
        assert isinstance(summary["rmse_rot_rad"], float)
        assert summary["config"]["population_size"] == 40

    def test_trajectory_loads_and_starts_at_identity(self, run_artifacts):
        traj = load_trajectory(run_artifacts / "trajectory.txt")
        assert len(traj) == 3
        assert np.allclose(traj.poses[0].R, np.eye(3))
        assert np.allclose(traj.poses[0].T, 0.0)

    def test_trace_rows_cover_every_pair_and_level(self, run_artifacts):
        lines = (run_artifacts / "ga_trace.csv").read_text().splitlines()
        assert lines[0] == "frame,level,iteration,best_error"
        frames = {int(row.split(",")[0]) for row in lines[1:]}
        levels = {int(row.split(",")[1]) for row in lines[1:]}
        assert frames == {0, 1}
        assert levels == {0, 1, 2}

    def test_drift_csv_schema(self, run_artifacts):
        lines = (run_artifacts / "drift.csv").read_text().splitlines()
        assert lines[0] == "timestamp,drift_m"
        assert len(lines) == 3  # header + two delta-1 intervals
        for row in lines[1:]:
            ts, drift = row.split(",")
            float(ts), float(drift)

    def test_summary_matches_standalone_evaluation(
        self, run_artifacts, synth_seq_dir
    ):
        summary = json.loads((run_artifacts / "summary.json").read_text())
        again = evaluate_only(
            run_artifacts / "trajectory.txt",
            synth_seq_dir / "groundtruth.txt",
            delta=1,
        )
        assert again["rmse_trans_m"] == pytest.approx(
            summary["rmse_trans_m"], abs=1e-12
        )
        assert again["rmse_rot_rad"] == pytest.approx(
            summary["rmse_rot_rad"], abs=1e-12
        )

    def test_estimate_tracks_groundtruth(self, run_artifacts):
        summary = json.loads((run_artifacts / "summary.json").read_text())
        assert summary["rmse_trans_m"] < 0.05

    def test_oversized_delta_yields_null_rmse(self, tmp_path, synth_seq_dir):
        cfg = RunConfig(
            dataset_dir=str(synth_seq_dir),
            out_dir=str(tmp_path / "o"),
            frames=2,
            delta=30,
            ga=small_ga(),
            **SYNTH_K,
        )
        assert run_odometry(cfg) == 0
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["rmse_trans_m"] is None
        assert summary["rmse_rot_rad"] is None
        assert not (tmp_path / "o" / "drift.csv").exists()
        assert (tmp_path / "o" / "drift_delta1.csv").is_file()

    def test_window_past_end_rejected(self, tmp_path, synth_seq_dir):
        cfg = RunConfig(
            dataset_dir=str(synth_seq_dir),
            out_dir=str(tmp_path / "o"),
            start=7,
            frames=2,
            ga=small_ga(),
            **SYNTH_K,
        )
        with pytest.raises(ValueError, match="need at least 2"):
            run_odometry(cfg)

    def test_rerun_into_same_dir_is_deterministic(self, tmp_path, synth_seq_dir):
        out = tmp_path / "o"
        cfg = dict(
            dataset_dir=str(synth_seq_dir),
            out_dir=str(out),
            frames=3,
            delta=1,
            **SYNTH_K,
        )
        run_odometry(RunConfig(ga=small_ga(), **cfg))
        first_traj = (out / "trajectory.txt").read_bytes()
        first_summary = json.loads((out / "summary.json").read_text())
        run_odometry(RunConfig(ga=small_ga(), **cfg))
        assert (out / "trajectory.txt").read_bytes() == first_traj
        second_summary = json.loads((out / "summary.json").read_text())
        first_summary.pop("wall_seconds")
        second_summary.pop("wall_seconds")
        assert first_summary == second_summary


class TestEvaluateOnly:
    def test_groundtruth_against_itself_is_zero(self, synth_seq_dir):
        gt = synth_seq_dir / "groundtruth.txt"
        summary = evaluate_only(gt, gt, delta=1)
        assert summary["rmse_trans_m"] == 0.0
        assert summary["rmse_rot_rad"] == pytest.approx(0.0, abs=1e-7)
        assert summary["frames"] == 8
        assert summary["delta"] == 1

    def test_writes_optional_artifacts(self, tmp_path, synth_seq_dir):
        gt = synth_seq_dir / "groundtruth.txt"
        out = tmp_path / "ev"
        evaluate_only(gt, gt, delta=1, out_dir=out)
        assert (out / "drift.csv").is_file()
        assert (out / "summary.json").is_file()

    def test_disjoint_timestamps_raise(self, tmp_path, synth_seq_dir):
        gt = synth_seq_dir / "groundtruth.txt"
        shifted = tmp_path / "shifted.txt"
        rows = []
        for line in gt.read_text().splitlines():
            if line.startswith("#") or not line.strip():
                continue
            ts, rest = line.split(" ", 1)
            rows.append(f"{float(ts) + 1000.0:.6f} {rest}")
        shifted.write_text("\n".join(rows) + "\n")
        with pytest.raises(EmptyOverlap):
            evaluate_only(shifted, gt, delta=1)

    def test_oversized_delta_raises(self, synth_seq_dir):
        gt = synth_seq_dir / "groundtruth.txt"
        with pytest.raises(InsufficientLength):
            evaluate_only(gt, gt, delta=100)


class TestMain:
    def test_evaluate_prints_summary_json(self, synth_seq_dir, capsys):
        gt = str(synth_seq_dir / "groundtruth.txt")
        code = main(["evaluate", "--est", gt, "--gt", gt, "--delta", "1"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["rmse_trans_m"] == 0.0

    def test_evaluate_oversized_delta_exits_nonzero(self, synth_seq_dir, capsys):
        gt = str(synth_seq_dir / "groundtruth.txt")
        code = main(["evaluate", "--est", gt, "--gt", gt, "--delta", "100"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_dataset_exits_nonzero(self, tmp_path, capsys):
        code = main(
            [
                "run",
                "--dataset",
                str(tmp_path / "nowhere"),
                "--out",
                str(tmp_path / "o"),
                "--preset",
                "fr1",
            ]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_config_key_exits_nonzero(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("warp_speed = 9\n")
        code = main(["run", "--config", str(cfg)])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestConsoleScript:
    def test_installed_entry_point_evaluates(self, synth_seq_dir, tmp_path):
        exe = shutil.which("gavo")
        if exe is None:
            pytest.skip("console script not installed")
        gt = str(synth_seq_dir / "groundtruth.txt")
        proc = subprocess.run(
            [exe, "evaluate", "--est", gt, "--gt", gt, "--delta", "1"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout)["rmse_trans_m"] == 0.0

    def test_module_invocation_reports_errors(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "gavo.cli", "evaluate", "--est", "a", "--gt", "b"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 1
        assert "error:" in proc.stderr
