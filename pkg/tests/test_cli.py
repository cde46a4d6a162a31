import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_first_order
from modalfit import bench, fileio, transfer
from modalfit.cli import main
from modalfit.types import FrequencySampleSet, SecondOrderModel


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def chain_samples(tmp_path, name="data.csv", n=4, count=60, extra=()):
    out = tmp_path / name
    code = run("sample", "--chain-n", n, "--alpha", 0.1, "--beta", 1e-3, "--k0", 100, "--fmin", 1,
               "--fmax", 40, "--count", count, "--spacing", "linear", "--conj-close", "--out", out, *extra)
    assert code == 0
    return out


def test_sample_chain_rows(tmp_path):
    out = tmp_path / "data.csv"
    code = run("sample", "--chain-n", 20, "--alpha", 1e-3, "--beta", 1e-4, "--fmin", 1, "--fmax", 1000,
               "--count", 1000, "--spacing", "linear", "--conj-close", "--out", out)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "xi_re,xi_im,h_re,h_im" and len(lines) == 2001


def test_samples_round_trip_is_bit_exact(tmp_path):
    system = bench.make_rayleigh_chain(5, 0.1, 1e-3, 1.0, 50.0)
    samples = bench.sample_dense(system, bench.make_point_grid(0.3, 20, 77), conj_close=True)
    path = tmp_path / "s.csv"
    fileio.write_samples(path, samples)
    back = fileio.read_samples(path)
    np.testing.assert_array_equal(back.points, samples.points)
    np.testing.assert_array_equal(back.values, samples.values)
    again = tmp_path / "t.csv"
    fileio.write_samples(again, back)
    assert path.read_bytes() == again.read_bytes()
    assert [p.name for p in tmp_path.iterdir() if p.name.endswith(".tmp")] == []


def test_model_round_trip(tmp_path, rng):
    for model in (SecondOrderModel([1.0, 2.5], [0.1, 0.3], [0.7, -1.1]), random_first_order(rng, 2)):
        path = tmp_path / "m.json"
        fileio.write_model(path, model)
        text = path.read_text()
        back = fileio.read_model(path)
        fileio.write_model(path, back)
        assert path.read_text() == text
    data = json.loads(text)
    assert data["type"] == "first_order" and set(data) == {"type", "lambda_re", "lambda_im", "phi_re", "phi_im"}


def test_sample_from_model_and_eval_identity(tmp_path):
    model_path = tmp_path / "truth.json"
    fileio.write_model(model_path, SecondOrderModel([2.0, 5.0], [0.05, 0.1], [1.0, -0.5]))
    data = tmp_path / "d.csv"
    assert run("sample", "--model", model_path, "--fmin", 0.5, "--fmax", 10, "--count", 50,
               "--conj-close", "--out", data) == 0
    values = tmp_path / "v.csv"
    assert run("eval", "--model", model_path, "--samples", data, "--out", values) == 0
    samples = fileio.read_samples(data)
    rows = values.read_text().splitlines()
    assert rows[0] == "omega,h_re,h_im,h_abs,flag"
    got = np.array([complex(float(r.split(",")[1]), float(r.split(",")[2])) for r in rows[1:]])
    np.testing.assert_allclose(got, samples.values, rtol=1e-12)
    assert all(r.endswith(",ok") for r in rows[1:])


def test_chain_truth_model_matches_samples(tmp_path):
    truth = tmp_path / "truth.json"
    data = chain_samples(tmp_path, extra=("--truth-out", truth))
    values = tmp_path / "v.csv"
    assert run("eval", "--model", truth, "--samples", data, "--out", values) == 0
    h = np.array([[float(v) for v in r.split(",")[1:3]] for r in values.read_text().splitlines()[1:]])
    np.testing.assert_allclose(h[:, 0] + 1j * h[:, 1], fileio.read_samples(data).values, rtol=1e-9)


def test_eval_single_mode_at_zero(tmp_path):
    model_path = tmp_path / "m.json"
    fileio.write_model(model_path, SecondOrderModel([4.0], [0.2], [3.0]))
    out = tmp_path / "v.csv"
    assert run("eval", "--model", model_path, "--fmin", 0, "--fmax", 1, "--count", 2, "--out", out) == 0
    first = out.read_text().splitlines()[1].split(",")
    assert float(first[3]) == pytest.approx(3.0 / 4.0)


def test_eval_flags_poles(tmp_path):
    model_path = tmp_path / "m.json"
    fileio.write_model(model_path, SecondOrderModel([1.0], [0.0], [1.0]))
    out = tmp_path / "v.csv"
    assert run("eval", "--model", model_path, "--fmin", 0, "--fmax", 2, "--count", 3, "--out", out) == 0
    flags = [r.split(",")[-1] for r in out.read_text().splitlines()[1:]]
    assert flags == ["ok", "pole", "ok"]


def test_eval_empty_grid_is_usage_error(tmp_path):
    model_path = tmp_path / "m.json"
    fileio.write_model(model_path, SecondOrderModel([1.0], [0.1], [1.0]))
    assert run("eval", "--model", model_path, "--fmin", 0, "--fmax", 2, "--count", 0,
               "--out", tmp_path / "v.csv") != 0
    assert run("eval", "--model", model_path, "--out", tmp_path / "v.csv") != 0


def test_fit_vf_exact_order_four(tmp_path, rng):
    truth = tmp_path / "truth.json"
    fileio.write_model(truth, random_first_order(rng, 2))
    data = tmp_path / "d.csv"
    assert run("sample", "--model", truth, "--fmin", 0.1, "--fmax", 12, "--count", 80, "--conj-close",
               "--out", data) == 0
    errors = tmp_path / "e.csv"
    assert run("fit", "--method", "vf", "--order", 4, "--samples", data, "--max-iter", 100, "--tol", 1e-8,
               "--out", tmp_path / "m.json", "--report", tmp_path / "r.csv", "--errors", errors) == 0
    lines = errors.read_text().splitlines()
    assert lines[0] == "xi_im,rel_err"
    assert max(float(r.split(",")[1]) for r in lines[1:]) <= 1e-8


@pytest.mark.parametrize("method", ["sovf1", "sovf2"])
def test_fit_structured_writes_files(tmp_path, method):
    data = chain_samples(tmp_path)
    model, report, errors = tmp_path / "m.json", tmp_path / "r.csv", tmp_path / "e.csv"
    assert run("fit", "--method", method, "--order", 4, "--samples", data, "--max-iter", 100, "--tol", 1e-8,
               "--out", model, "--report", report, "--errors", errors) == 0
    assert json.loads(model.read_text())["type"] == "second_order_modal"
    assert report.read_text().splitlines()[0] == "iter,max_den_weight,ls_residual,max_rel_err,max_pole_move"
    assert max(float(r.split(",")[1]) for r in errors.read_text().splitlines()[1:]) <= 1e-6


def test_fit_report_is_byte_identical_on_rerun(tmp_path):
    data = chain_samples(tmp_path)
    reports = []
    for k in range(2):
        report = tmp_path / f"r{k}.csv"
        assert run("fit", "--method", "sovf1", "--order", 3, "--samples", data, "--max-iter", 10,
                   "--init", "logspace_imag", "--out", tmp_path / f"m{k}.json", "--report", report) == 0
        reports.append(report.read_bytes())
    assert reports[0] == reports[1]


def test_fit_not_converged_exits_zero(tmp_path, capsys):
    data = chain_samples(tmp_path)
    assert run("fit", "--method", "sovf1", "--order", 2, "--samples", data, "--max-iter", 2,
               "--init", "logspace_imag", "--out", tmp_path / "m.json") == 0
    assert "max_iters" in capsys.readouterr().out


@pytest.mark.parametrize("extra", [("--order", 0), ("--order", 40), ("--order", 2, "--bogus")])
def test_fit_usage_errors(tmp_path, extra):
    data = chain_samples(tmp_path)
    args = ["fit", "--method", "sovf2", "--samples", data, "--out", tmp_path / "m.json", *extra]
    assert run(*args) not in (0, None)


def test_fit_missing_file_fails(tmp_path):
    assert run("fit", "--method", "vf", "--order", 2, "--samples", tmp_path / "none.csv",
               "--out", tmp_path / "m.json") == 1


def test_sample_resonance_reported(tmp_path, capsys):
    model_path = tmp_path / "m.json"
    fileio.write_model(model_path, SecondOrderModel([1.0], [0.0], [1.0]))
    assert run("sample", "--model", model_path, "--fmin", 0, "--fmax", 2, "--count", 3,
               "--out", tmp_path / "d.csv") == 1
    assert "1j" in capsys.readouterr().err


def _error_columns(path):
    names, table, top, mean = fileio.read_errors(path)
    return names, table, top, mean


def test_compare_identical_and_trivial_models(tmp_path):
    truth = SecondOrderModel([2.0, 5.0], [0.05, 0.1], [1.0, -0.5])
    fileio.write_model(tmp_path / "a.json", truth)
    fileio.write_model(tmp_path / "b.json", truth)
    fileio.write_model(tmp_path / "zero.json", SecondOrderModel([2.0], [0.1], [0.0]))
    pts = bench.make_point_grid(0.5, 10, 40)
    fileio.write_samples(tmp_path / "d.csv", FrequencySampleSet(pts, transfer.eval_second_order(truth, pts)))
    out = tmp_path / "cmp.csv"
    assert run("compare", "--samples", tmp_path / "d.csv", "--models", tmp_path / "a.json",
               tmp_path / "b.json", tmp_path / "zero.json", "--out", out) == 0
    names, table, top, mean = _error_columns(out)
    assert names == ["a", "b", "zero"]
    np.testing.assert_array_equal(table[:, 1], table[:, 2])
    np.testing.assert_array_equal(table[:, 1], 0.0)
    np.testing.assert_array_equal(table[:, 3], 1.0)
    assert top["zero"] == 1.0 and mean["a"] == 0.0


def test_compare_matches_recomputed_errors(tmp_path):
    data = chain_samples(tmp_path, n=5, count=80)
    for method in ("sovf1", "sovf2"):
        assert run("fit", "--method", method, "--order", 3, "--samples", data,
                   "--out", tmp_path / f"{method}.json") == 0
    out = tmp_path / "cmp.csv"
    assert run("compare", "--samples", data, "--models", tmp_path / "sovf1.json", tmp_path / "sovf2.json",
               "--out", out) == 0
    names, table, top, _ = _error_columns(out)
    samples = fileio.read_samples(data)
    for k, name in enumerate(names, start=1):
        m = fileio.read_model(tmp_path / f"{name}.json")
        want = [abs(sum(w * b / (s * s + 2 * z * w * s + w * w) for w, z, b in zip(m.omega, m.psi, m.b)) - h) / abs(h)
                for s, h in zip(samples.points, samples.values)]
        np.testing.assert_allclose(table[:, k], want, rtol=1e-9)
        assert np.all(np.isfinite(table[:, k])) and top[name] == pytest.approx(max(want), rel=1e-9)


def test_compare_duplicate_stems(tmp_path):
    (tmp_path / "x").mkdir()
    fileio.write_model(tmp_path / "m.json", SecondOrderModel([1.0], [0.1], [1.0]))
    fileio.write_model(tmp_path / "x" / "m.json", SecondOrderModel([1.0], [0.1], [1.0]))
    data = chain_samples(tmp_path)
    assert run("compare", "--samples", data, "--models", tmp_path / "m.json", tmp_path / "x" / "m.json",
               "--out", tmp_path / "c.csv") == 2


def test_bad_files_are_reported(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run("fit", "--method", "vf", "--order", 1, "--samples", bad, "--out", tmp_path / "m.json") == 1
    bad_model = tmp_path / "bad.json"
    bad_model.write_text('{"type": "third_order"}')
    assert run("eval", "--model", bad_model, "--fmin", 0, "--fmax", 1, "--count", 2,
               "--out", tmp_path / "v.csv") == 1


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "modalfit", "fit", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for flag in ("--method", "--order", "--samples", "--max-iter", "--tol", "--out", "--report", "--errors"):
        assert flag in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "modalfit", "sample", "--nope"], capture_output=True, text=True)
    assert proc.returncode != 0
