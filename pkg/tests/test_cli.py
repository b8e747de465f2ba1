import csv
import io
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nullrig.cli import MODELS, RunConfig, compile_expr, load_config, main
from nullrig.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_minkowski_cone(capsys):
    code, out, _ = run(capsys, "verify", "--model", "minkowski", "--surface", "cone", "--t0", "2",
                       "--samples", "100", "--seed", "7")
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"] and rep["n_samples"] == 100 and rep["seed"] == 7
    assert len(rep["checks"]) == 31


def test_verify_desitter_table1_grad_t(capsys):
    code, out, _ = run(capsys, "verify", "--model", "desitter", "--surface", "table1",
                       "--rigging", "grad_t", "--samples", "30")
    assert code == 0
    status = {c["id"]: c["status"] for c in json.loads(out)["checks"]}
    assert status["C17"] == "skipped"


def test_verify_inside_vertex_collar_is_config_error(capsys):
    code, out, err = run(capsys, "verify", "--model", "minkowski", "--surface", "cone", "--t0", "0")
    assert code == 2
    assert out == ""
    assert "VertexError" in err


def test_verify_csv_format(capsys):
    code, out, _ = run(capsys, "verify", "--model", "minkowski", "--surface", "table1-hyperplane",
                       "--samples", "10", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 31 and {"id", "status", "max_residual"} <= set(rows[0])


def _table(out):
    return list(csv.DictReader(io.StringIO(out)))


@pytest.mark.parametrize("argv,H", [
    (["--model", "desitter", "--t0", "1", "--n", "4"], 2 / math.sinh(1.0)),
    (["--model", "minkowski", "--t0", "2", "--n", "5"], 1.5),
    (["--model", "ads-portion", "--t0", "0.7853981633974483", "--n", "4"], 2 * math.sqrt(2)),
])
def test_tables(capsys, argv, H):
    code, out, err = run(capsys, "tables", *argv)
    assert code == 0
    (row,) = _table(out)
    assert float(row["H_closed"]) == pytest.approx(H, abs=1e-12)
    assert float(row["H_engine"]) == pytest.approx(H, abs=1e-8)
    assert float(row["table1_max_B"]) <= 1e-8
    assert "match" in err


def test_tables_desitter_radius(capsys):
    _, out, _ = run(capsys, "tables", "--model", "desitter", "--t0", "1")
    (row,) = _table(out)
    assert float(row["radius_engine"]) == pytest.approx(math.tanh(1.0), abs=1e-8)


def test_jacobi_static_sphere(capsys):
    code, out, _ = run(capsys, "jacobi", "--model", "static-sphere", "--n", "4", "--smax", "4")
    assert code == 0
    tr = json.loads(out)
    assert tr["conjugate_points"] == [pytest.approx(math.pi, abs=1e-8)]
    assert tr["full_multiplicity"] == [2]
    assert {"s", "t", "r", "J", "conjugate_points", "multiplicity"} <= set(tr)


def test_jacobi_minkowski(capsys):
    code, out, _ = run(capsys, "jacobi", "--model", "minkowski", "--smax", "10")
    assert code == 0
    assert json.loads(out)["conjugate_points"] == []


def test_umbilic_scan_minkowski_cone(capsys):
    code, out, err = run(capsys, "umbilic-scan", "--model", "minkowski", "--surface", "cone",
                         "--t0", "2", "--samples", "20")
    assert code == 0
    assert "verdict: umbilic" in err
    assert "rho_hat: 0.5\n" in err
    rows = _table(out)
    assert float(rows[0]["rho"]) == pytest.approx(0.5, abs=1e-12)


def test_umbilic_scan_hyperplane(capsys):
    code, _, err = run(capsys, "umbilic-scan", "--model", "minkowski", "--surface",
                       "table1-hyperplane", "--samples", "20")
    assert code == 0
    assert "verdict: geodesic" in err


def test_cone_membership_counterexample(capsys):
    code, out, _ = run(capsys, "cone", "--membership", "--model", "grw-counterexample",
                       "--samples", "20")
    rep = json.loads(out)
    assert rep["verdict"] == "not a cone"
    assert rep["umbilic_verdict"] == "umbilic"


def test_cone_membership_minkowski(capsys):
    _, out, _ = run(capsys, "cone", "--membership", "--model", "minkowski", "--samples", "20")
    assert json.loads(out)["verdict"] == "cone"


def test_out_file_and_summary_on_stdout(capsys, tmp_path):
    dest = tmp_path / "t.csv"
    code, out, _ = run(capsys, "tables", "--model", "minkowski", "--out", str(dest))
    assert code == 0
    assert dest.read_text().startswith("model,t0,n,")
    assert "match" in out


def test_json_is_deterministic(capsys):
    argv = ["verify", "--model", "desitter", "--surface", "cone", "--samples", "15", "--seed", "3"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_floats_keep_17_digits(capsys):
    _, out, _ = run(capsys, "tables", "--model", "desitter", "--t0", "1")
    (row,) = _table(out)
    assert float(row["H_closed"]) == 2 / math.sinh(1.0)


def test_config_file_and_flags_win(capsys, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nmodel = minkowski\nn = 5\nt0 = 4.0\n")
    _, out, _ = run(capsys, "tables", "--config", str(ini))
    (row,) = _table(out)
    assert (row["n"], float(row["H_engine"])) == ("5", pytest.approx(0.75))
    _, out, _ = run(capsys, "tables", "--config", str(ini), "--t0", "2")
    (row,) = _table(out)
    assert float(row["H_engine"]) == pytest.approx(1.5)


@pytest.mark.parametrize("argv", [
    ["verify", "--model", "nosuch"],
    ["verify", "--n", "2"],
    ["verify", "--rigging", "custom"],
    ["verify", "--surface", "custom", "--h-expr", "x1 +* 2"],
    ["verify", "--surface", "custom", "--h-expr", "q + x1"],
    ["verify", "--config", "/nonexistent/run.ini"],
    ["verify", "--format", "xml"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--samples", "many"])
    assert exc.value.code == 2


def test_bad_config_file(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\nunknown_key = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(ini), {})
    ini.write_text("[other]\nmodel = minkowski\n")
    with pytest.raises(ConfigError):
        load_config(str(ini), {})


def test_custom_graph_and_rigging(capsys):
    # the Minkowski cone written out by hand, rigged by -d_t
    code, out, _ = run(capsys, "verify", "--model", "minkowski", "--surface", "custom",
                       "--h-expr", "x1", "--box", "1.0,2.0", "--rigging", "custom",
                       "--rigging-field", "-1; 0; 0; 0", "--samples", "20")
    rep = json.loads(out)
    assert code == 0, [c for c in rep["checks"] if c["status"] == "fail"]


def test_compile_expr_jets_and_floats():
    from nullrig import jets as J
    f = compile_expr("sin(x1) * x2 + exp(x1)", ["x1", "x2"])
    assert f(0.5, 2.0) == pytest.approx(math.sin(0.5) * 2 + math.exp(0.5))
    v = J.Jet.variables([0.5, 2.0], 2)
    jet = f(v[0], v[1])
    assert jet.value == pytest.approx(math.sin(0.5) * 2 + math.exp(0.5))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
pos = st.floats(1e-3, 1e3, allow_nan=False)
configs = st.builds(
    RunConfig,
    model=st.sampled_from(sorted(MODELS)),
    n=st.integers(3, 8),
    k=st.none() | finite,
    coeffs=st.lists(finite, max_size=4).map(tuple),
    a0=finite,
    interval=st.none() | st.tuples(finite, pos).map(lambda p: (p[0], p[0] + p[1])),
    surface=st.sampled_from(["", "cone", "table1", "counterexample"]),
    t_star=st.none() | finite,
    orientation=st.sampled_from(["future", "past"]),
    t0=st.none() | finite,
    rigging=st.sampled_from(["f_dt", "grad_t"]),
    samples=st.integers(1, 500),
    seed=st.integers(0, 2 ** 31),
    tol=st.none() | pos,
    mode=st.sampled_from(["jet", "fd"]),
    smax=pos,
    direction=st.none() | st.lists(finite, min_size=1, max_size=4).map(tuple),
    speed=pos,
    out=st.sampled_from(["", "report.json"]),
    format=st.sampled_from(["", "csv", "json"]),
)


@given(configs)
def test_config_round_trip(cfg):
    cfg.validate()
    assert RunConfig.from_ini(cfg.to_ini()) == cfg


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "nullrig.cli", "jacobi", "--model", "minkowski",
                          "--smax", "2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["conjugate_points"] == []
