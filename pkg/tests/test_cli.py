import json
import subprocess
import sys

import pytest

from trialtransport.cli import RunConfig, main, run
from trialtransport.io import data_path, load_table, save_table
from trialtransport.table import ContingencyTable

TABLE1 = str(data_path("table1.csv"))
REFERENCE = str(data_path("fig1.scm.json"))


def test_estimate_phi_example():
    status, doc = run(RunConfig("estimate", data=TABLE1, estimand="phi", a=1, a_prime=0))
    assert status == 0
    assert doc["value"] == pytest.approx(0.35047, abs=5e-4)
    assert doc["display"] == "35.0%"
    assert doc["schema_version"] == 1


@pytest.mark.parametrize("method", ["standardize", "weight"])
def test_estimate_beta_methods_agree(method):
    status, doc = run(RunConfig("estimate", data=TABLE1, estimand="beta", method=method, a=1))
    assert status == 0
    assert doc["value"] == pytest.approx(0.3846, abs=5e-4)


def test_gamma_from_data_is_refused(capsys):
    code = main(["estimate", "--data", TABLE1, "--estimand", "gamma", "--a", "1", "--aprime", "0"])
    assert code == 2
    err = capsys.readouterr().err
    assert "gamma requires an SCM (unmeasured U); not identified from data alone" in err


def test_gamma_from_scm():
    status, doc = run(RunConfig("estimate", scm=REFERENCE, estimand="gamma", a=1, a_prime=0))
    assert status == 0 and doc["method"] == "oracle"
    assert doc["value"] < run(RunConfig("estimate", scm=REFERENCE, estimand="gamma",
                                        a=0, a_prime=0))[1]["value"]


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--bogus"])
    assert info.value.code == 2


def test_positivity_exit_code(tmp_path, table1):
    counts = table1.counts.copy()
    counts[1, 1, 1] = 0
    path = tmp_path / "t.csv"
    save_table(ContingencyTable(counts), path)
    status, doc = run(RunConfig("estimate", data=str(path), estimand="phi", a=1, a_prime=0))
    assert status == 4
    assert doc["error"]["category"] == "positivity"
    assert "x=1" in doc["error"]["message"]


def test_missing_file_exit_code():
    status, doc = run(RunConfig("estimate", data="/nonexistent.csv", estimand="beta", a=1))
    assert status == 5 and doc["error"]["category"] == "io"


def test_validation_exit_code(tmp_path, reference_scm):
    bad = json.loads(data_path("fig1.scm.json").read_text())
    bad["variables"][0]["cpt"] = [[0.6, 0.3]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    status, doc = run(RunConfig("validate", scm=str(path)))
    assert status == 3
    assert any("row sums to 0.9" in v for v in doc["inputs"]["scm"]["violations"])
    assert run(RunConfig("oracle", scm=str(path)))[0] == 3


def test_validate_bundled_assets():
    status, doc = run(RunConfig("validate", scm=REFERENCE, data=TABLE1,
                                dag=str(data_path("dags/fig1.dag"))))
    assert status == 0 and doc["ok"]
    assert doc["inputs"]["data"]["total"] == 100000


def test_reproduce_rows():
    status, doc = run(RunConfig("reproduce"))
    assert status == 0 and doc["kind"] == "table2"
    rows = {r["quantity"]: r for r in doc["rows"]}
    assert [r["quantity"] for r in doc["rows"]] == ["phi", "beta", "gamma"]
    assert rows["phi"]["display"]["first"] == "35.0%"
    assert rows["phi"]["display"]["second"] == "35.1%"
    assert rows["phi"]["display"]["ratio"] == "1.00"
    assert rows["phi"]["difference"] == pytest.approx(-0.00060, abs=5e-6)
    assert (rows["beta"]["display"]["first"], rows["beta"]["display"]["second"]) == ("38.5%", "31.7%")
    assert rows["gamma"]["difference"] < 0
    assert "reference model" in rows["gamma"]["note"]
    assert "not expected" in rows["beta"]["note"]


def test_reproduce_text_output(capsys):
    assert main(["reproduce"]) == 0
    out = capsys.readouterr().out
    assert "35.0%" in out and "35.1%" in out and "gamma" in out


def test_oracle_command():
    status, doc = run(RunConfig("oracle", a=1, a_prime=0))
    assert status == 0
    assert all(v["passed"] for v in doc["identification"].values())


def test_dsep_command():
    status, doc = run(RunConfig("dsep", builtin="fig1", set_a=["S"], set_b=["Y"], given=["X", "A"]))
    assert status == 0 and doc["separated"] is False
    assert doc["witness"] == "S -> A <- U -> Y"
    status, doc = run(RunConfig("dsep", builtin="fig4-noUA", set_a=["S"], set_b=["Y"],
                                given=["X", "A"]))
    assert doc["separated"] is True and doc["witness"] is None


def test_dsep_unknown_node_is_validation_error():
    status, doc = run(RunConfig("dsep", builtin="fig1", set_a=["Q"], set_b=["Y"]))
    assert status == 3


def test_check_command():
    status, doc = run(RunConfig("check", builtin="fig3-i"))
    assert doc["criteria"]["phi_equals_beta"]["status"] == "holds"
    status, doc = run(RunConfig("check", builtin="fig1", criterion="gamma"))
    assert doc["criteria"] == {"phi_equals_gamma": doc["criteria"]["phi_equals_gamma"]}
    assert doc["criteria"]["phi_equals_gamma"]["status"] == "fails"


def test_simulate_writes_table_and_is_deterministic(tmp_path):
    out = tmp_path / "sim.csv"
    argv = ["simulate", "--n", "20000", "--seed", "9", "--out", str(out), "--keep-u"]
    assert main(argv) == 0
    first = load_table(out)
    assert first.total == 20000
    with_u = (tmp_path / "sim.with_u.csv").read_text().splitlines()
    assert with_u[0] == "s,x,u,a,y,count"
    assert main(argv + ["--workers", "3"]) == 0
    assert load_table(out) == first


def test_simulate_needs_positive_n():
    assert run(RunConfig("simulate", n=0))[0] == 2


def test_json_output_to_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["estimate", "--data", TABLE1, "--estimand", "phi", "--a", "0", "--aprime", "0",
                 "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc == json.loads(capsys.readouterr().out)
    assert doc["display"] == "35.1%"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "trialtransport.cli", "check", "--builtin", "fig2C",
                           "--criterion", "beta"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "X -> S <- W -> A" in proc.stdout
