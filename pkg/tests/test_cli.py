import csv
import io

import numpy as np
import pytest

from foliation_lab import cli
from foliation_lab.config import DEFAULT_TOLERANCES, ConfigError, parse_config
from foliation_lab.eta import EtaError
from foliation_lab.report import fmt, parallel_map, run_report
from foliation_lab.scenarios import Expectation, Scenario, get_scenario


def run(argv, capsys):
    status = cli.main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def test_minimal_config_has_defaults():
    cfg = parse_config("[run]\nscenario = E1.4\n")
    assert cfg.scenario == "E1.4"
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.tolerances["theta_min"] == 0.1


def test_override_is_echoed(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("# tighter angle\n[run]\nscenario = E1.4\nseed = 3\n\n[tolerances]\ntheta_min = 0.2\n"
                    "[params]\npoint = (0, 0, 0.3)\n", encoding="utf-8")
    status, out, _ = run(["transversal", "--config", str(path)], capsys)
    assert status == 0
    assert "# theta_min = 0.2" in out
    assert "transversal" in out.splitlines()[-1]


@pytest.mark.parametrize("text,msg", [
    ("[run]\nscenario = E9.9\n", "unknown scenario"),
    ("[run]\nscenario = E1.4\ncolour = red\n", "unknown key"),
    ("[bogus]\nx = 1\n", "unknown section"),
    ("[run]\nscenario = E1.4\ncommand = cone\n", "missing seed"),
    ("[custom]\nfield = x +* y ; y\n", "malformed expression"),
    ("[run]\nseed = -1\n", "unsigned"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_custom_field_config(capsys, tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("[run]\ncommand = cone\nseed = 1\n[params]\npoint = (0, 0)\n"
                    "[custom]\nfield = x ; 2*I*y\nsingular_set = linear base=(0,0)\n", encoding="utf-8")
    status, out, _ = run(["cone", "--config", str(path)], capsys)
    assert status == 0 and "# span_dim = 2" in out


def test_cli_unknown_scenario(capsys):
    status, _, err = run(["eta", "--scenario", "E9.9", "--point", "(0,0,0.5)"], capsys)
    assert status == 2 and "unknown scenario" in err


def test_sampling_command_needs_seed(capsys):
    status, _, err = run(["cone", "--scenario", "E1.4", "--point", "(0,0,0)"], capsys)
    assert status == 2 and "missing seed" in err


def test_list_scenarios(capsys):
    status, out, _ = run(["list-scenarios", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert status == 0 and rows[0] == ["id", "title", "expectations"] and len(rows) == 13


def test_cone_csv_columns(capsys):
    status, out, _ = run(["cone", "--scenario", "E1.4", "--point", "(0,0,0.3)", "--seed", "1",
                          "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["re1", "im1", "re2", "im2", "re3", "im3", "scale"]
    assert all(float(r[4]) == 0 and float(r[5]) == 0 for r in rows[1:])


def test_eta_csv_columns_and_precision(capsys):
    status, out, _ = run(["eta", "--scenario", "E1.16", "--point", "(0, 0.5, 0.25)", "--format", "csv"], capsys)
    assert "\r" not in out and out.endswith("\n")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["re1", "im1", "re2", "im2", "re3", "im3", "s", "eta", "kind", "leaf_ref", "flag"]
    s = float(rows[1][6])
    assert s == np.log(2) and rows[1][6] == format(np.log(2), ".17g")
    assert float(rows[1][7]) == s * s


def test_scan_complete_converge_ex32(capsys, tmp_path):
    out_path = tmp_path / "scan.csv"
    assert cli.main(["scan", "--scenario", "E1.16", "--grid", "6", "--format", "csv",
                     "--out", str(out_path)]) == 0
    rows = list(csv.reader(out_path.open(encoding="utf-8")))
    assert rows[0][-1] == "flag" and len(rows) > 1
    status, out, _ = run(["complete", "--scenario", "E1.18", "--point", "(0.5,0,0)"], capsys)
    assert status == 0 and "# verdict = complete" in out
    status, out, _ = run(["converge", "--scenario", "E1.17", "--family", "shrink", "--steps", "16",
                          "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:2] == ["n", "rho"] and [r[0] for r in rows[1:]] == ["8", "16"]
    status, out, _ = run(["ex32", "--scenario", "E3.2", "--format", "csv"], capsys)
    assert out.splitlines()[1].split(",")[2:] == ["1", "1"]


def test_report_passes_and_is_deterministic(capsys, monkeypatch):
    monkeypatch.setenv("FOLIATION_LAB_THREADS", "3")
    first = run(["report", "--scenario", "E1.4", "--seed", "11", "--format", "csv"], capsys)
    monkeypatch.setenv("FOLIATION_LAB_THREADS", "1")
    second = run(["report", "--scenario", "E1.4", "--seed", "11", "--format", "csv"], capsys)
    assert first == second
    assert first[0] == 0
    rows = list(csv.reader(io.StringIO(first[1])))
    assert {r[6] for r in rows[1:]} == {"PASS"}
    assert all(r[7].startswith("Example 1.4") for r in rows[1:])


def _broken_scenario():
    sc = get_scenario("E1.16")
    bad = (Expectation("complete", {"point": (0.3, 0.3, 0.3)}, "complete", 0.0, "made-up claim"),
           Expectation("ex32_bounds", {}, (1.0, 1.0), 1e-12, "another claim"))
    return Scenario("broken", "broken", sc.field, sc.E, sc.leaf_families, bad + sc.expectations[:1])


def test_check_errors_become_fail_lines():
    res = run_report(_broken_scenario(), seed=0)
    assert [r.status for r in res] == ["FAIL", "FAIL", "PASS"]
    assert res[0].measured.startswith("error: EtaError")


def test_failed_report_sets_exit_status(capsys, monkeypatch):
    monkeypatch.setattr(cli, "get_scenario", lambda name: _broken_scenario())
    status, out, _ = run(["report", "--scenario", "E1.16", "--seed", "0"], capsys)
    assert status == 1 and "FAIL" in out and "1/3 passed" in out


def test_number_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(1 / 3) == format(1 / 3, ".17g")
    assert fmt(2) == "2" and fmt(True) == "true"
    assert fmt(0.5 - 0.25j) == "0.5-0.25i"


def test_parallel_map_keeps_order(monkeypatch):
    monkeypatch.setenv("FOLIATION_LAB_THREADS", "4")
    assert parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    monkeypatch.setenv("FOLIATION_LAB_THREADS", "garbage")
    assert parallel_map(lambda x: -x, [1, 2]) == [-1, -2]


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "foliation_lab", "list-scenarios"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "E1.18" in res.stdout
