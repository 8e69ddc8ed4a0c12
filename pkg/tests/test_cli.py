import csv
import io
import json
import subprocess
import sys

import pytest

from matmono.cli import main
from matmono.reporting import (
    CSV_COLUMNS,
    EXIT_DOMAIN,
    EXIT_IO,
    EXIT_PARSE,
    ParseError,
    RunConfig,
    dump_json,
    gap_table,
    parse_algebra,
    parse_orders,
    run,
)


def cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_certify_square_refuted(capsys):
    code, out, _ = cli(["certify", "--fn", "pow:2", "--order", "2", "--interval", "0:10", "--seed", "7"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["verdicts"][0]["kind"] == "NotMonotone"
    assert rep["config"]["seed"] == 7 and rep["tool_version"]


def test_certify_identity_accepted(capsys):
    code, out, _ = cli(["certify", "--fn", "id", "--order", "5", "--interval", "0:10", "--seed", "7"], capsys)
    assert code == 0 and json.loads(out)["result"]["verdicts"][0]["kind"] == "Monotone"


def test_alpha_bracket_width(capsys):
    code, out, _ = cli(["alpha", "--n", "2", "--resolution", "1e-3", "--seed", "7"], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and r["alpha_estimate"] > 0
    assert r["bracket"][1] - r["bracket"][0] <= 1e-3
    assert r["n_certificate"]["kind"] == "Monotone" and r["n_plus_1_witness"]["kind"] == "NotMonotone"


def test_witness_fixture_verifies(tmp_path, capsys):
    fx = tmp_path / "w.json"
    code, out, _ = cli(["witness", "--fn", "exp", "--order", "2", "--seed", "3", "--fixture", str(fx)], capsys)
    assert code == 0 and json.loads(out)["result"]["verified"]
    code, out, _ = cli(["verify-fixture", "--fixture", str(fx)], capsys)
    assert code == 0 and json.loads(out)["result"]["valid"]


def test_witness_not_found_is_not_an_error(capsys):
    code, out, _ = cli(["witness", "--fn", "sqrt", "--order", "2", "--budget", "500"], capsys)
    assert code == 0 and json.loads(out)["result"]["found"] is False


def test_tampered_fixture_fails_but_exits_zero(tmp_path, capsys):
    fx = tmp_path / "w.json"
    cli(["witness", "--fn", "pow:2", "--order", "2", "--fixture", str(fx)], capsys)
    d = json.loads(fx.read_text())
    d["b"] = d["a"]
    fx.write_text(json.dumps(d))
    code, out, _ = cli(["verify-fixture", "--fixture", str(fx)], capsys)
    assert code == 0 and json.loads(out)["result"]["valid"] is False


def test_mclass_command(capsys):
    code, out, _ = cli(["mclass", "--fn", "moebius:1", "--n", "2", "--samples", "3000", "--seed", "2"], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and r["violations"] == [] and r["premise_hits"] > 100


def test_algebra_command(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"fibers": [{"dim": 2, "points": 1}, {"dim": 2, "points": 1}]}))
    code, out, _ = cli(["algebra", "test", "--spec", str(spec), "--fn", "pow:2"], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and r["verdict"]["kind"] == "NotMonotone" and r["degree"] == 2
    code, out, _ = cli(["algebra", "test", "--spec", "M1^5", "--fn", "pow:2"], capsys)
    assert json.loads(out)["result"]["verdict"]["kind"] == "Monotone"


def test_csv_has_fixed_columns(capsys):
    code, out, _ = cli(["certify", "--fn", "sqrt", "--order", "1-3", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["schema"] + CSV_COLUMNS["certify"]
    assert len(rows) == 4 and all(r[0] == "certify.v1" for r in rows[1:])


def test_out_flag_writes_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, stdout, _ = cli(["certify", "--fn", "id", "--order", "2", "--out", str(out)], capsys)
    assert code == 0 and stdout == "" and json.loads(out.read_text())["command"] == "certify"


@pytest.mark.parametrize("args,code", [
    (["certify", "--fn", "nope", "--order", "2"], EXIT_PARSE),
    (["certify", "--fn", "log1p", "--order", "2", "--interval=-3:1"], EXIT_DOMAIN),
    (["certify", "--fn", "sqrt", "--order", "2", "--tol", "-1"], EXIT_PARSE),
    (["verify-fixture", "--fixture", "/nonexistent/w.json"], EXIT_IO),
    (["algebra", "test", "--spec", "Q7", "--fn", "sqrt"], EXIT_PARSE),
])
def test_error_codes(args, code, capsys):
    got, _, err = cli(args, capsys)
    assert got == code and "error" in err


def test_gap_table_order_one_row():
    rep = gap_table(1, RunConfig(command="gap-table", max_n=1, budget=2000))
    row = rep["rows"][0]
    assert row["g"]["order_n"] == "Monotone" and row["g"]["loewner_n_plus_1"] == "Monotone"
    assert not row["g"]["witness_n_plus_1"]["found"]
    assert not row["complete"] and "operator monotone" in row["note"]


def test_gap_table_order_two_row():
    rep = gap_table(2, RunConfig(command="gap-table", max_n=2))
    row = rep["rows"][1]
    assert row["alpha_estimate"] > 0 and row["complete"]
    assert row["g"]["witness_n_plus_1"]["found"] and row["f"]["witness_n_plus_1"]["found"]


def test_gap_table_csv_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"g{i}.csv"
        assert main(["gap-table", "--max-n", "2", "--format", "csv", "--out", str(p), "--seed", "3"]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_echoed_config_reproduces_report():
    cfg = RunConfig(command="witness", fn="pow:3", orders=(2,), seed=11)
    first = run(cfg)
    again = run(RunConfig.from_json(json.loads(dump_json(first))["config"]))
    assert dump_json(first) == dump_json(again)


def test_threads_do_not_change_output(tmp_path):
    outs = []
    for threads in ("1", "4"):
        p = tmp_path / f"t{threads}.json"
        env = {"MATMONO_THREADS": threads, "PATH": "/usr/bin:/bin"}
        subprocess.run([sys.executable, "-m", "matmono.cli", "certify", "--fn", "exp", "--order", "1-4",
                        "--node-sets", "3000", "--out", str(p)], check=True, env=env)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_timing_is_opt_in():
    rep = run(RunConfig(command="certify", fn="id", orders=(2,), timing=True))
    assert rep["wall_time_s"] >= 0
    assert "wall_time_s" not in run(RunConfig(command="certify", fn="id", orders=(2,)))


def test_config_validation():
    with pytest.raises(ParseError):
        RunConfig(command="certify", seed=None)
    with pytest.raises(ParseError):
        RunConfig(command="bogus")
    with pytest.raises(ParseError):
        RunConfig(command="certify", rtol=0.0)
    assert RunConfig(command="verify-fixture", seed=None).seed is None


def test_parse_helpers():
    assert parse_orders("1-3,5") == (1, 2, 3, 5)
    with pytest.raises(ParseError):
        parse_orders("a")
    assert str(parse_algebra("M2+M2")) == "M2 + M2"
    assert str(parse_algebra('{"fibers": [{"dim": 3, "points": 2}]}')) == "M3^2"
