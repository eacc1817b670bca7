"""End-to-end CLI behavior through in-process main() calls."""

import json

import numpy as np
import pytest

from fvbeta import cli


def run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv):
    code, out, err = run(capsys, argv + ["--format", "json"])
    return code, json.loads(out), err


def test_sample_reports_weighted_mean(capsys):
    code, doc, _ = run_json(capsys, ["sample", "-n", "2000", "--alpha", "0.5", "--c1", "1", "--c2", "1"])
    assert code == 0
    assert doc["command"] == "sample"
    assert doc["seed"] == cli.DEFAULT_SEED
    (row,) = doc["results"]
    assert row["name"] == "mean"
    assert abs(row["value"] - 0.5) < 5.0 * row["std_error"] + 0.02


def test_sample_out_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, ["sample", "-n", "500", "--seed", "7", "--out", str(path)])
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert "value,weight" in lines
    # config echo comes first as comments
    assert lines[0].startswith("# ")


def test_sample_measure_mode_columns(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, doc, _ = run_json(
        capsys, ["sample", "-n", "600", "--m", "1,1,1", "--out", str(out)]
    )
    assert code == 0
    names = [r["name"] for r in doc["results"]]
    assert names == ["mean_w1", "mean_w2", "mean_w3"]
    header = [l for l in out.read_text().splitlines() if not l.startswith("#")][0]
    assert header == "w_1,w_2,w_3,weight"
    # exchangeable base measure: component means near 1/3
    for r in doc["results"]:
        assert abs(r["value"] - 1.0 / 3.0) < 5.0 * r["std_error"] + 0.02


def test_sample_threads_do_not_change_output(capsys):
    argv = ["sample", "-n", "800", "--seed", "5"]
    _, doc1, _ = run_json(capsys, argv + ["--threads", "1"])
    _, doc3, _ = run_json(capsys, argv + ["--threads", "3"])
    assert doc1["results"] == doc3["results"]


def test_verify_suite_json_schema(capsys):
    code, doc, _ = run_json(capsys, ["verify", "factorization", "-n", "1000"])
    assert code == 0
    assert set(doc) == {"command", "config", "results", "seed", "runtime_seconds"}
    assert doc["config"]["suite"] == "factorization"
    for row in doc["results"]:
        assert set(row) == {"name", "value", "std_error", "target", "tolerance", "pass"}
        assert row["pass"] is True


@pytest.mark.filterwarnings("ignore::fvbeta.errors.HeavyTailWarning")
def test_verify_all_covers_every_suite(capsys):
    code, doc, _ = run_json(capsys, ["verify", "all", "-n", "400"])
    assert code == 0
    names = " ".join(r["name"] for r in doc["results"])
    for tag in (
        "markov_krein",
        "stieltjes_ode",
        "factorization",
        "recursion_vs_mc",
        "mass_neg_moment",
        "gwi_vs_exact",
        "delta_positive",
        "symmetric_inconclusive",
    ):
        assert tag in names


def test_verify_small_n_is_not_a_failure(capsys):
    # at n=400 the positivity certificate has no power; any seed must
    # still exit 0 as long as the estimate agrees with the closed form
    code, doc, _ = run_json(capsys, ["verify", "irreversibility", "-n", "400", "--seed", "3"])
    assert code == 0
    rows = {r["name"]: r for r in doc["results"]}
    pos = [r for name, r in rows.items() if name.startswith("delta_positive")]
    assert pos and all(r["pass"] for r in pos)


def test_verify_failure_sets_exit_code(capsys, monkeypatch):
    def broken_suite(seed, n_mc):
        return [("bad", lambda: [cli.Row("bad", 1.0, 0.0, 1.0, 0.5, None, False)])]

    monkeypatch.setitem(cli._SUITES, "factorization", broken_suite)
    code, out, err = run(capsys, ["verify", "factorization"])
    assert code == 1
    assert "FAILED" in err


def test_verify_out_csv(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    code, _, _ = run(capsys, ["verify", "factorization", "-n", "500", "--out", str(out)])
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "name,value,std_error,target,tolerance,pass"
    assert all(l.split(",")[-1] == "True" for l in lines[1:])


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0.3\nn = 700\nseed = 9\n")
    code, doc, _ = run_json(
        capsys, ["sample", "--config", str(cfg), "--alpha", "0.25", "--c1", "1", "--c2", "1"]
    )
    assert code == 0
    assert doc["config"]["alpha"] == 0.25  # flag beats config
    assert doc["config"]["n"] == 700  # config beats default
    assert doc["config"]["seed"] == 9


def test_missing_config_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sample", "--config", "/nonexistent/run.cfg"])
    assert exc.value.code == 3


def test_unwritable_out_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sample", "-n", "100", "--out", "/nonexistent-dir/x.csv"])
    assert exc.value.code == 3


def test_bad_parameter_exits_2(capsys):
    code, _, err = run(capsys, ["sample", "-n", "100", "--alpha", "1.5"])
    assert code == 2
    assert "error:" in err
    # verify echoes --alpha even when the suite ignores it, so it must reject
    # values outside (0,1) rather than stamp them into the output
    code, _, err = run(capsys, ["verify", "identities", "-n", "200", "--alpha", "1.5"])
    assert code == 2
    assert "error:" in err


def test_unknown_suite_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "nonsense"])
    assert exc.value.code == 2


def test_simulate_fv_requires_model(capsys):
    code, _, err = run(capsys, ["simulate", "fv", "--alpha", "0.5"])
    assert code == 2
    assert "c1" in err


def test_simulate_fv_short_run(capsys):
    code, doc, _ = run_json(
        capsys,
        ["simulate", "fv", "--c1", "1", "--c2", "1", "--t-end", "30",
         "--eps", "5e-3", "--burn-in", "5", "--seed", "2"],
    )
    assert code == 0
    names = [r["name"] for r in doc["results"]]
    assert names == ["ergodic_m1", "ergodic_m2"]
    m1 = doc["results"][0]
    assert m1["target"] == pytest.approx(0.5)


def test_simulate_fv_point_mass_frozen(capsys, tmp_path):
    out = tmp_path / "path.csv"
    code, doc, _ = run_json(
        capsys,
        ["simulate", "fv", "--nu", "0.5,0.5", "--theta", "0", "--mu0", "1,0",
         "--t-end", "2", "--eps", "1e-2", "--out", str(out)],
    )
    assert code == 0
    (row,) = doc["results"]
    assert row["name"] == "constant_path_dev"
    assert row["value"] == 0.0
    assert row["pass"] is True
    data = np.loadtxt(out, delimiter=",", skiprows=len(doc["config"]) + 1)
    assert np.all(data[:, 1] == 1.0)


def test_simulate_gwi_reports_fit(capsys):
    code, doc, _ = run_json(
        capsys,
        ["simulate", "gwi", "-N", "200", "--steps", "5", "--replicas", "4000", "--seed", "3"],
    )
    assert code == 0
    names = [r["name"] for r in doc["results"]]
    assert names[:2] == ["kappa_fit", "gamma_fit"]
    assert any(n.startswith("laplace_fit[lam=") for n in names[2:])
