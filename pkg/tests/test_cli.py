import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

import locomech.cli as cli
from locomech import GridSpec, SingularConstraint, integrate_gait, load_scenario, sample_field
from locomech.cli import load_field_csv, load_trajectory_csv, main


def write_scenario(tmp_path, doc, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def swimmer_doc(**extra):
    doc = {
        "model": {"kind": "swimmer"},
        "gait": {
            "kind": "fourier",
            "period": 1.0,
            "mean": [0.0, 0.0],
            "cos": [[0.0, -0.5]],
            "sin": [[0.5, 0.0]],
        },
        "integrator": {"step": 0.01},
    }
    doc.update(extra)
    return doc


def crawler_doc(**extra):
    doc = {
        "model": {"kind": "crawler"},
        "gait": {
            "kind": "waypoint",
            "points": [
                [-0.375, -0.375],
                [0.375, -0.375],
                [0.375, 0.375],
                [-0.375, 0.375],
            ],
            "times": [0.0, 0.25, 0.5, 0.75, 1.0],
        },
        "integrator": {"step": 0.01, "cycles": 3},
    }
    doc.update(extra)
    return doc


class TestSimulate:
    def test_zero_gait_identity_column(self, tmp_path):
        doc = swimmer_doc()
        doc["gait"] = {"kind": "fourier", "period": 1.0, "mean": [0.1, -0.3]}
        path = write_scenario(tmp_path, doc)
        assert main(["simulate", path, "--out", str(tmp_path / "run")]) == 0
        got = load_trajectory_csv(str(tmp_path / "run" / "trajectory.csv"))
        assert np.abs(got["poses"]).max() == 0.0
        assert np.abs(got["twists"]).max() == 0.0
        assert np.array_equal(
            got["shapes"], np.broadcast_to([0.1, -0.3], got["shapes"].shape)
        )

    def test_crawler_event_count(self, tmp_path):
        path = write_scenario(tmp_path, crawler_doc())
        assert main(["simulate", path, "--out", str(tmp_path / "run")]) == 0
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        # two stance switches per cycle across three cycles
        assert len(summary["events"]) == 6
        assert len(summary["per_cycle"]) == 3
        assert summary["events"][0]["before"] == "0"
        assert summary["events"][0]["after"] == "1"
        got = load_trajectory_csv(str(tmp_path / "run" / "trajectory.csv"))
        assert got["contacts"][0] == frozenset({0})
        assert frozenset({1}) in got["contacts"]

    def test_trajectory_roundtrip_exact(self, tmp_path):
        path = write_scenario(tmp_path, swimmer_doc())
        assert main(["simulate", path, "--out", str(tmp_path / "run")]) == 0
        got = load_trajectory_csv(str(tmp_path / "run" / "trajectory.csv"))

        sc = load_scenario(swimmer_doc())
        traj = integrate_gait(
            sc.provider, sc.gait, cycles=sc.cycles, step=sc.step, event_tol=sc.event_tol
        )
        poses = np.array([[p.x, p.y, p.theta] for p in traj.poses])
        assert np.array_equal(got["times"], traj.times)
        assert np.array_equal(got["poses"], poses)
        assert np.array_equal(got["shapes"], traj.shapes)
        assert np.array_equal(got["twists"], traj.twists)
        assert got["contacts"] == [None] * len(traj.times)

    def test_summary_net_matches_trajectory(self, tmp_path):
        path = write_scenario(tmp_path, swimmer_doc())
        main(["simulate", path, "--out", str(tmp_path / "run")])
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["schema"] == 1
        assert summary["scenario"].startswith("sha256:")
        assert len(summary["per_cycle"]) == 1
        assert summary["net_displacement"] == summary["per_cycle"][0]
        assert summary["meta"]["scheme"] == "rkmk4"


class TestSweep:
    def test_swimmer_grid_reloadable(self, tmp_path):
        doc = swimmer_doc(
            sweep={
                "lo": [-1.5, -1.5],
                "hi": [1.5, 1.5],
                "counts": [33, 33],
                "curvature": False,
            }
        )
        path = write_scenario(tmp_path, doc)
        assert main(["sweep", path, "--out", str(tmp_path / "run")]) == 0
        got = load_field_csv(str(tmp_path / "run" / "field.csv"))
        assert got["conn"].shape == (33, 33, 3, 2)
        assert got["conn"].shape[0] * got["conn"].shape[1] == 1089
        assert not got["singular"].any()
        assert got["curvature"] is None

        sc = load_scenario(doc)
        field = sample_field(
            sc.provider, GridSpec(lo=(-1.5, -1.5), hi=(1.5, 1.5), counts=(33, 33))
        )
        assert np.array_equal(got["conn"], field.conn)
        assert np.array_equal(got["axis1"], field.axis1)
        assert np.array_equal(got["axis2"], field.axis2)

    def test_crawler_contacts_and_flags(self, tmp_path):
        doc = crawler_doc(
            sweep={
                "lo": [-1.0, -1.0],
                "hi": [1.0, 1.0],
                "counts": [5, 5],
                "curvature": False,
            }
        )
        path = write_scenario(tmp_path, doc)
        assert main(["sweep", path, "--out", str(tmp_path / "run")]) == 0
        text = (tmp_path / "run" / "field.csv").read_text()
        header = [l for l in text.splitlines() if not l.startswith("#")][0]
        assert "contact_set" in header.split(",")
        assert "singular" in header.split(",")
        got = load_field_csv(str(tmp_path / "run" / "field.csv"))
        assert got["contacts"][4, 0] == frozenset({0})
        assert got["contacts"][0, 4] == frozenset({1})

    def test_curvature_columns(self, tmp_path):
        doc = swimmer_doc(
            sweep={
                "lo": [-1.0, -1.0],
                "hi": [1.0, 1.0],
                "counts": [9, 9],
                "curvature": True,
            }
        )
        path = write_scenario(tmp_path, doc)
        assert main(["sweep", path, "--out", str(tmp_path / "run")]) == 0
        got = load_field_csv(str(tmp_path / "run" / "field.csv"))
        assert got["curvature"].shape == (9, 9, 3)
        assert np.isfinite(got["curvature"]).all()

    def test_sweep_needs_block(self, tmp_path):
        path = write_scenario(tmp_path, swimmer_doc())
        assert main(["sweep", path, "--out", str(tmp_path / "run")]) == 2


class TestOptimize:
    def test_report_content(self, tmp_path):
        doc = swimmer_doc(
            optimize={
                "family": "amplitude_phase",
                "direction": "x",
                "budget": 40,
                "restarts": 1,
            },
            integrator={"step": 0.05},
            seed=9,
        )
        path = write_scenario(tmp_path, doc)
        assert main(["optimize", path, "--out", str(tmp_path / "run")]) == 0
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert report["evaluations"] <= 40
        assert len(report["history"]) == report["evaluations"]
        assert report["best_value"] > 0.15
        assert report["parameter_names"] == ["amplitude", "phase"]
        best = max(h["value"] for h in report["history"])
        assert report["best_value"] == best

    def test_optimize_needs_block(self, tmp_path):
        path = write_scenario(tmp_path, swimmer_doc())
        assert main(["optimize", path, "--out", str(tmp_path / "run")]) == 2


class TestVerify:
    def test_passing_suites_exit_zero(self, tmp_path, capsys):
        doc = {
            "model": {"kind": "jacobian", "map": "rotate_translate"},
            "gait": {
                "kind": "fourier",
                "period": 1.0,
                "mean": [0.1, -0.2],
                "cos": [[0.4, 0.2]],
                "sin": [[-0.3, 0.5]],
            },
            "integrator": {"step": 0.001},
            "verify": {"suites": ["loop_closure", "reversal", "pacing"]},
        }
        path = write_scenario(tmp_path, doc)
        assert main(["verify", path, "--out", str(tmp_path / "run")]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3
        assert "FAIL" not in out
        rows = [
            l
            for l in (tmp_path / "run" / "verify.csv").read_text().splitlines()
            if not l.startswith("#")
        ]
        assert rows[0] == "suite,check,value,threshold,passed"
        assert all(r.endswith(",1") for r in rows[1:])

    def test_failing_suite_exit_one(self, tmp_path, capsys):
        # a propulsive swimmer loop genuinely violates loop closure
        doc = swimmer_doc(verify={"suites": ["loop_closure"]})
        path = write_scenario(tmp_path, doc)
        assert main(["verify", path, "--out", str(tmp_path / "run")]) == 1
        out = capsys.readouterr().out
        assert "FAIL" in out
        rows = (tmp_path / "run" / "verify.csv").read_text().splitlines()
        assert rows[-1].endswith(",0")

    def test_crawler_single_piece_suite(self, tmp_path):
        doc = crawler_doc(verify={"suites": ["single_piece"]})
        # keep the loop inside the leg-0 stance half-plane
        doc["gait"] = {
            "kind": "waypoint",
            "points": [[0.5, -0.5], [0.8, 0.0], [0.2, -0.2]],
            "times": [0.0, 0.3, 0.6, 1.0],
        }
        path = write_scenario(tmp_path, doc)
        assert main(["verify", path, "--out", str(tmp_path / "run")]) == 0

    def test_swimmer_residual_and_reversal(self, tmp_path):
        doc = swimmer_doc(verify={"suites": ["reversal", "continuity", "residual"]})
        path = write_scenario(tmp_path, doc)
        assert main(["verify", path, "--out", str(tmp_path / "run")]) == 0


class TestExitCodes:
    def test_validation_error_is_two(self, tmp_path, capsys):
        doc = swimmer_doc()
        doc["model"]["paddle"] = True
        path = write_scenario(tmp_path, doc)
        assert main(["simulate", path, "--out", str(tmp_path / "run")]) == 2
        assert "model.paddle" in capsys.readouterr().err

    def test_missing_file_is_two(self, tmp_path):
        assert main(["simulate", str(tmp_path / "nope.yaml")]) == 2

    def test_numerical_abort_is_three(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise SingularConstraint("fabricated abort for the exit-code path")

        monkeypatch.setattr(cli, "integrate_gait", boom)
        path = write_scenario(tmp_path, swimmer_doc())
        assert main(["simulate", path, "--out", str(tmp_path / "run")]) == 3
        assert "abort" in capsys.readouterr().err


class TestDeterminismAndOverrides:
    def test_byte_identical_reruns(self, tmp_path):
        path = write_scenario(tmp_path, crawler_doc())
        assert main(["simulate", path, "--out", str(tmp_path / "a")]) == 0
        assert main(["simulate", path, "--out", str(tmp_path / "b")]) == 0
        for name in ("trajectory.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_sweep_and_optimize_reruns(self, tmp_path):
        doc = swimmer_doc(
            sweep={
                "lo": [-1.0, -1.0],
                "hi": [1.0, 1.0],
                "counts": [7, 7],
                "curvature": True,
            },
            optimize={"family": "amplitude_phase", "budget": 20, "restarts": 1},
            integrator={"step": 0.05},
        )
        path = write_scenario(tmp_path, doc)
        for cmd, name in (("sweep", "field.csv"), ("optimize", "report.json")):
            assert main([cmd, path, "--out", str(tmp_path / "a")]) == 0
            assert main([cmd, path, "--out", str(tmp_path / "b")]) == 0
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_flag_overrides(self, tmp_path):
        path = write_scenario(tmp_path, swimmer_doc())
        out = tmp_path / "run"
        assert (
            main(
                [
                    "simulate",
                    path,
                    "--out",
                    str(out),
                    "--step",
                    "0.02",
                    "--cycles",
                    "2",
                    "--seed",
                    "7",
                ]
            )
            == 0
        )
        summary = json.loads((out / "summary.json").read_text())
        assert summary["meta"]["step_nominal"] == 0.02
        assert len(summary["per_cycle"]) == 2

        # overridden settings participate in the scenario hash
        assert main(["simulate", path, "--out", str(tmp_path / "base")]) == 0
        base = json.loads((tmp_path / "base" / "summary.json").read_text())
        assert base["scenario"] != summary["scenario"]

    def test_module_entry_point(self, tmp_path):
        doc = swimmer_doc()
        doc["gait"] = {"kind": "fourier", "period": 1.0, "mean": [0.0, 0.0]}
        path = write_scenario(tmp_path, doc)
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "locomech.cli",
                "simulate",
                path,
                "--out",
                str(tmp_path / "run"),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert (tmp_path / "run" / "summary.json").exists()
