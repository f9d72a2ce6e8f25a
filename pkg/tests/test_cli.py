import csv
import io
import json

import pytest

from ewrlnc.cli import (DESIGN_COLUMNS, EXIT_CONFIG, EXIT_OK, EXIT_RESOURCE, OPTLAYER_COLUMNS,
                        PARETO_COLUMNS, SIMULATE_COLUMNS, ConfigError, ExperimentConfig,
                        load_config, main, parse_budget, parse_lambdas, parse_packets)
from ewrlnc.packetize import bundled_trace_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    rows = list(csv.DictReader(io.StringIO(out))) if code == EXIT_OK else []
    return code, rows, out, err


def test_parsers():
    assert parse_budget("13") == (13,)
    assert parse_budget("10,13") == (10, 13)
    assert parse_budget("10:14:2") == (10, 12, 14)
    assert parse_packets("4,6; 4,2,2,2") == ((4, 6), (4, 2, 2, 2))
    grid = parse_lambdas("0:1:0.02")
    assert len(grid) == 51 and grid[-1] == 1.0
    with pytest.raises(ConfigError):
        parse_budget("10:x")


def test_design_budget_sweep(capsys):
    code, rows, out, _ = run(capsys, "design", "--packets", "10", "--weights", "throughput",
                             "--pe", "0.1", "--budget", "10:30")
    assert code == EXIT_OK
    assert out.splitlines()[0].split(",") == DESIGN_COLUMNS
    assert [int(r["N_t"]) for r in rows] == list(range(10, 31))
    etas = [float(r["eta"]) for r in rows]
    assert etas[0] == pytest.approx(0.9**10)
    assert all(a <= b + 1e-12 for a, b in zip(etas, etas[1:]))


def test_design_single_row(capsys):
    code, rows, _, _ = run(capsys, "design", "--packets", "1,1", "--pe", "0.5", "--budget", "3")
    assert code == EXIT_OK and len(rows) == 1
    assert rows[0]["policy"] == "2-1"
    assert float(rows[0]["eta"]) == pytest.approx(0.5625)
    assert len(rows[0]["config_hash"]) == 16


def test_design_mdp(capsys):
    code, rows, _, _ = run(capsys, "design", "--scheme", "full_feedback_mdp", "--packets", "1,1",
                           "--pe", "0.1,0.3", "--budget", "2")
    assert code == EXIT_OK and [r["user"] for r in rows] == ["0", "1"]
    assert float(rows[0]["eta_tot"]) == pytest.approx(0.7405)
    assert rows[0]["policy"] == "mdp"


def test_pareto_two_users(capsys):
    code, rows, out, _ = run(capsys, "pareto", "--packets", "4,2,2,2", "--pe", "0.05,0.25",
                             "--budget", "13", "--weights", "throughput")
    assert code == EXIT_OK
    assert out.splitlines()[0].split(",") == PARETO_COLUMNS
    assert len(rows) == 2 * 51
    assert any(r["nondominated"] == "1" for r in rows)


def test_simulate_trace(capsys, tmp_path):
    out_json = tmp_path / "r.json"
    code, rows, out, _ = run(capsys, "simulate", "--trace", str(bundled_trace_path()), "--layers",
                             "opt", "--pe", "0.1,0.2", "--budget", "16", "--trials", "200",
                             "--seed", "3", "--json", str(out_json))
    assert code == EXIT_OK
    assert out.splitlines()[0].split(",") == SIMULATE_COLUMNS
    assert len(rows) == 38 * 2
    keys = [(int(r["gop"]), int(r["user"])) for r in rows]
    assert keys == sorted(keys)
    assert sum(r["within_3se"] == "1" for r in rows) >= 0.9 * len(rows)
    meta = json.loads(out_json.read_text())["meta"]
    assert meta["seed"] == 3 and meta["config_hash"] == rows[0]["config_hash"]


def test_optlayer(capsys):
    code, rows, out, _ = run(capsys, "optlayer", "--packets", "10;4,6;4,2,4;4,2,2,2", "--weights",
                             "throughput", "--pe", "0.1", "--budget", "10,30")
    assert code == EXIT_OK
    assert out.splitlines()[0].split(",") == OPTLAYER_COLUMNS
    by_nt = {int(r["N_t"]): r for r in rows}
    assert by_nt[10]["L"] != "1"
    assert by_nt[30]["L"] == "1"
    for r in rows:
        assert float(r["eta_tot"]) >= max(float(r[f"eta_tot_L{L}"]) for L in range(1, 5)) - 1e-12


def test_config_file(capsys, tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(
        "[experiment]\nscheme = feedback_free_rlnc\nlayers = 4\nbudget = 12\nseed = 5\n"
        "trials = 50\n\n[channel]\npe = 0.1, 0.2\n\n"
        f"[gops]\ntrace = {bundled_trace_path()}\n\n[aggregate]\nkind = mean\n")
    cfg = load_config(ini)
    assert cfg.pes == (0.1, 0.2) and cfg.budgets == (12,) and cfg.seed == 5
    code, rows, _, _ = run(capsys, "design", "--config", str(ini))
    assert code == EXIT_OK and len(rows) == 76
    assert all(r["L"] == "4" for r in rows)


@pytest.mark.parametrize("argv, field", [
    (["simulate", "--packets", "2,2", "--trials", "0"], "trials"),
    (["design", "--packets", "2,2", "--pe", "1.0"], "pe"),
    (["design", "--packets", "2,2", "--layers", "3"], "layers"),
    (["design"], "gops"),
    (["design", "--packets", "2,2", "--aggregate", "linear", "--user-weights", "0.3"], "aggregate"),
    (["pareto", "--packets", "2,2", "--scheme", "full_feedback_mdp"], "scheme"),
])
def test_config_errors(capsys, argv, field):
    code, _, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert field in err


def test_unknown_ini_key(capsys, tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[channel]\nper = 0.1\n")
    code, _, _, err = run(capsys, "design", "--config", str(ini))
    assert code == EXIT_CONFIG and "channel.per" in err


def test_resource_cap(capsys):
    code, _, _, err = run(capsys, "design", "--scheme", "full_feedback_mdp", "--packets", "9,9,9",
                          "--pe", "0.1,0.1,0.1", "--budget", "30")
    assert code == EXIT_RESOURCE
    assert "resource" in err


def test_byte_identical_outputs(tmp_path):
    args = ["simulate", "--packets", "4,6;3,3", "--pe", "0.1,0.3", "--budget", "9:13:2",
            "--trials", "300", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_hash_tracks_config():
    a = ExperimentConfig()
    b = ExperimentConfig(seed=1)
    assert a.digest() != b.digest()
    assert a.digest() == ExperimentConfig(out="x.csv").digest()
