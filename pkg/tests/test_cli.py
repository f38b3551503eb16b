"""The command-line surface, exercised in-process through main(argv).

Every command is also reachable as `python3 -m widthbright.cli`; one
subprocess smoke test covers that entry, everything else stays in-process
so the suite remains fast.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from widthbright.cli import main, EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE


def write_json(path, obj):
    path.write_text(json.dumps(obj) + "\n")
    return str(path)


def ball_spec(r=1.0):
    return {"basis": "real-sph-harm", "lmax": 0,
            "coeffs": [2.0 * math.sqrt(math.pi) * r],
            "closed_form": "ball:%r" % r, "label": "ball(%g)" % r}


def nonconvex_spec():
    coeffs = [0.0] * 16
    coeffs[0] = 2.0 * math.sqrt(math.pi)
    coeffs[12] = 5.0  # the (3, 0) slot
    return {"basis": "real-sph-harm", "lmax": 3, "coeffs": coeffs,
            "label": "spiky"}


# ---------------------------------------------------------------------------
# gen

def test_gen_ball(tmp_path, capsys):
    recipe = write_json(tmp_path / "recipe.json", {"kind": "ball", "r": 1.0})
    assert main(["gen", recipe]) == EXIT_OK
    out = tmp_path / "recipe.body.json"
    spec = json.loads(out.read_text())
    assert spec["basis"] == "real-sph-harm"
    assert abs(spec["coeffs"][0] - 2.0 * math.sqrt(math.pi)) < 1e-15
    assert spec["recipe_kind"] == "ball"
    assert spec["certificate"]["convex"] is True
    assert abs(spec["certificate"]["min_eigenvalue"] - 1.0) < 1e-10
    assert "normalization" in spec
    assert "wrote" in capsys.readouterr().out


def test_gen_constant_width_auto_eps(tmp_path):
    recipe = write_json(tmp_path / "cw.json", {
        "kind": "constant_width",
        "gauge": {"kind": "ball", "r": 1.0},
        "odd": {"harmonics": [[3, 0, 1.0]]},
        "eps": "auto",
    })
    assert main(["gen", recipe]) == EXIT_OK
    spec = json.loads((tmp_path / "cw.body.json").read_text())
    assert spec["recipe_kind"] == "constant_width"
    assert 0.2 < spec["recipe_params"]["eps"] < 0.3
    assert spec["certificate"]["min_eigenvalue"] > 0.05


def test_gen_rejects_malformed_recipe(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["gen", str(bad)]) == EXIT_INPUT
    assert main(["gen", str(tmp_path / "missing.json")]) == EXIT_INPUT
    recipe = write_json(tmp_path / "torus.json", {"kind": "torus"})
    assert main(["gen", recipe]) == EXIT_INPUT


# ---------------------------------------------------------------------------
# analyze

def test_analyze_ball(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    assert main(["analyze", body]) == EXIT_OK
    report = json.loads((tmp_path / "ball.report.json").read_text())
    assert report["grid"] == [32, 64]
    assert abs(report["width"]["min"] - 2.0) < 1e-12
    assert abs(report["width"]["max"] - 2.0) < 1e-12
    assert abs(report["brightness"]["mean"] - math.pi) < 1e-8
    assert report["brightness"]["variance"] < 1e-15
    assert abs(report["volume"] - 4.0 * math.pi / 3.0) < 1e-8
    assert report["parity"]["identity_residual_max"] < 1e-12
    assert report["brightness_csv"] == "ball_brightness.csv"
    csv = (tmp_path / "ball_brightness.csv").read_text().splitlines()
    assert csv[0] == "ax,ay,az,area,method"
    assert len(csv) == 32 * 64 + 1


def test_analyze_constant_width_body(tmp_path):
    recipe = write_json(tmp_path / "cw.json", {
        "kind": "constant_width",
        "gauge": {"kind": "ball", "r": 1.0},
        "odd": {"harmonics": [[3, 0, 1.0]]},
    })
    assert main(["gen", recipe]) == EXIT_OK
    assert main(["analyze", str(tmp_path / "cw.body.json")]) == EXIT_OK
    report = json.loads((tmp_path / "cw.body.report.json").read_text())
    assert report["width"]["variation"] < 1e-10
    assert report["brightness"]["variation"] > 1e-4


def test_analyze_non_convex_body_still_reports(tmp_path):
    body = write_json(tmp_path / "spiky.json", nonconvex_spec())
    assert main(["analyze", body]) == EXIT_OK
    report = json.loads((tmp_path / "spiky.report.json").read_text())
    assert report["certificate"]["convex"] is False
    assert "note" in report
    assert "brightness" not in report


def test_analyze_respects_out_flag(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    out = tmp_path / "custom.json"
    assert main(["analyze", body, "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["brightness_csv"] == "custom_brightness.csv"
    assert (tmp_path / "custom_brightness.csv").exists()


# ---------------------------------------------------------------------------
# verify-theorem

def test_verify_theorem_on_ball(tmp_path, capsys):
    body = write_json(tmp_path / "ball.json", ball_spec())
    assert main(["verify-theorem", body, "--seed", "0"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "RIGIDITY-CONSISTENT" in out
    trace = (tmp_path / "ball.trace.csv").read_text().splitlines()
    assert trace[0] == "iter,coeff_norm,variance,min_eig,step"
    assert len(trace) > 2
    last = trace[-1].split(",")
    assert float(last[1]) < 1e-3
    assert float(last[2]) < 1e-10


def test_verify_theorem_infeasible_start(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    assert main(["verify-theorem", body, "--start-scale", "1.2"]) \
        == EXIT_INFEASIBLE


def test_verify_theorem_needs_even_gauge(tmp_path):
    spec = nonconvex_spec()
    body = write_json(tmp_path / "spiky.json", spec)
    assert main(["verify-theorem", body]) == EXIT_INPUT


# ---------------------------------------------------------------------------
# export

def test_export_ball_obj(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    assert main(["export", body, "--grid", "16,32"]) == EXIT_OK
    lines = (tmp_path / "ball.obj").read_text().splitlines()
    verts = np.array([[float(s) for s in l.split()[1:]]
                      for l in lines if l.startswith("v ")])
    faces = [l for l in lines if l.startswith("f ")]
    assert len(verts) == 16 * 32 + 2
    assert np.abs(np.linalg.norm(verts, axis=1) - 1.0).max() < 1e-12
    assert len(faces) == 2 * 15 * 32 + 2 * 32


def test_export_refuses_non_convex(tmp_path):
    body = write_json(tmp_path / "spiky.json", nonconvex_spec())
    assert main(["export", body]) == EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# flags and config validation

def test_grid_flag_validation(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    assert main(["analyze", body, "--grid", "16,31"]) == EXIT_INPUT
    assert main(["analyze", body, "--grid", "8,16", "--lmax", "12"]) \
        == EXIT_INPUT
    assert main(["analyze", body, "--grid", "banana"]) == EXIT_INPUT


def test_tolerance_flag_validation(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    assert main(["analyze", body, "--tol", "psd=1e-8"]) == EXIT_OK
    assert main(["analyze", body, "--tol", "shininess=1"]) == EXIT_INPUT
    assert main(["analyze", body, "--tol", "psd=soft"]) == EXIT_INPUT


def test_unknown_command_is_input_error():
    assert main(["polish"]) == EXIT_INPUT


# ---------------------------------------------------------------------------
# determinism

def test_outputs_are_byte_identical_across_runs(tmp_path):
    recipe = write_json(tmp_path / "r.json",
                        {"kind": "random_convex", "seed": 9, "lmax": 8})
    assert main(["gen", recipe]) == EXIT_OK
    body = str(tmp_path / "r.body.json")
    first = open(body, "rb").read()
    assert main(["gen", recipe]) == EXIT_OK
    assert open(body, "rb").read() == first

    assert main(["analyze", body]) == EXIT_OK
    rep = str(tmp_path / "r.body.report.json")
    csv = str(tmp_path / "r.body_brightness.csv")
    first_rep = open(rep, "rb").read()
    first_csv = open(csv, "rb").read()
    assert main(["analyze", body]) == EXIT_OK
    assert open(rep, "rb").read() == first_rep
    assert open(csv, "rb").read() == first_csv


def test_module_entry_point(tmp_path):
    body = write_json(tmp_path / "ball.json", ball_spec())
    env = dict(os.environ, WIDTHBRIGHT_THREADS="1")
    proc = subprocess.run(
        [sys.executable, "-m", "widthbright.cli", "analyze", body,
         "--grid", "16,32", "--lmax", "8"],
        capture_output=True, text=True, env=env, cwd=str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "ball.report.json").exists()
