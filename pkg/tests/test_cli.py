import csv
import io
import json
import subprocess
import sys

import pytest

from hardylab import cli
from hardylab.errors import SchemaError
from hardylab.geometry import PotentialSpec
from hardylab.supersolution import SupersolutionAnsatz


def hardy_pair_job(d, factor=1.0):
    W = PotentialSpec.inverse_square(d, factor * (d - 2) ** 2 / 4)
    return {"potential": W.to_json(),
            "ansatz": SupersolutionAnsatz.power_only(-(d - 2) / 2).to_json(),
            "grid": {"radial": {"lo": 0.1, "hi": 10, "shells": 16, "spacing": "log"},
                     "angular": {"directions": 32, "seed": 0}}}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run_main(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_csv(capsys):
    code, out, _ = run_main(["constants", "--d-min", "3", "--d-max", "6"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["setting", "d", "n", "value", "attained_claim"]
    assert {r["d"] for r in rows} == {"3", "4", "5", "6"}
    per_d = {d: {r["setting"] for r in rows if r["d"] == d} for d in "3456"}
    assert per_d["3"] == per_d["4"] == per_d["5"] - {"rellich"}
    assert float([r for r in rows if r["setting"] == "hardy_rellich" and r["d"] == "3"][0]["value"]) \
        == 25 / 36


def test_certify_exit_codes(tmp_path, capsys):
    code, out, _ = run_main(["certify", "--job", write(tmp_path, "ok.json", hardy_pair_job(5))],
                            capsys)
    cert = json.loads(out)
    assert code == 0 and cert["schema_version"] == 1
    assert cert["certificate"]["verdict"] == "CertifiedNonnegative"
    bad = write(tmp_path, "bad.json", hardy_pair_job(5, 1.01))
    code, out, _ = run_main(["certify", "--job", bad], capsys)
    assert code == 1 and json.loads(out)["certificate"]["verdict"] == "Violated"


def test_certify_expected_violation_is_success(tmp_path, capsys):
    job = dict(hardy_pair_job(4, 1.5), expected_verdict="Violated")
    code, _, _ = run_main(["certify", "--job", write(tmp_path, "v.json", job)], capsys)
    assert code == 0


def test_schema_validate_valid_and_missing_command():
    cfg = cli.schema_validate(json.dumps({"command": "eig-estimate", "parameters": {"d": 3}}))
    assert cfg.command == "eig-estimate" and cfg.seed == 0
    with pytest.raises(SchemaError) as exc:
        cli.schema_validate(json.dumps({"parameters": {}}))
    assert exc.value.violations[0]["path"] == "$"
    assert "command" in exc.value.violations[0]["message"]


def test_schema_validate_eps_precondition():
    job = {"command": "rayleigh-sweep",
           "parameters": {"family": "HardyInterior", "d": 3, "eps": [0.1, 0.2]}}
    with pytest.raises(SchemaError) as exc:
        cli.schema_validate(json.dumps(job))
    assert any("sweep precondition" in v["message"] and v["path"] == "$.parameters.eps"
               for v in exc.value.violations)


def test_schema_validate_reports_every_violation():
    job = {"command": "certify", "parameters": {"potential": {"kind": "Bogus", "scale": "x"},
                                                "ansatz": 3, "extra": 1}, "seed": -1}
    with pytest.raises(SchemaError) as exc:
        cli.schema_validate(json.dumps(job))
    paths = {v["path"] for v in exc.value.violations}
    assert {"$.parameters.ansatz", "$.parameters.potential.kind", "$.seed"} <= paths
    assert len(exc.value.violations) >= 4


def test_input_errors_exit_2(tmp_path, capsys):
    code, _, err = run_main(["certify", "--job", write(tmp_path, "j.json", {"potential": 1})],
                            capsys)
    assert code == 2 and json.loads(err)["error"]["type"] == "SchemaError"
    code, _, err = run_main(["certify", "--job", str(tmp_path / "missing.json")], capsys)
    assert code == 2 and "error" in json.loads(err)
    with pytest.raises(SystemExit) as exc:
        cli.main(["constants", "--d-min", "3"])
    assert exc.value.code == 2
    assert "d-max" in json.loads(capsys.readouterr().err)["error"]["message"]
    code, _, err = run_main(["rayleigh-sweep", "--family", "HardyInterior", "--d", "3",
                             "--eps", "0.1,0.2"], capsys)
    assert code == 2 and "sweep precondition" in err


def test_rayleigh_sweep_and_eig(capsys):
    code, out, _ = run_main(["rayleigh-sweep", "--family", "HalfSpace", "--d", "3",
                             "--eps", "0.2,0.1"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["eps", "numerator", "denominator", "quotient", "err"]
    assert abs(float(rows[1][3]) - 2.55) < 1e-10
    code, out, _ = run_main(["eig-estimate", "--d", "3", "--nodes", "512", "--delta", "1e-4"],
                            capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["d", "nodes", "delta", "estimate", "residual"]
    assert 0.25 <= float(rows[1][3]) <= 0.4


def test_check_identities_csv_and_verdict_failure(tmp_path, capsys):
    code, out, _ = run_main(["check-identities", "--which", "Hardy", "--d", "3", "--count", "3"],
                            capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert rows[0] == ["identity", "seed_index", "lhs", "rhs", "gap_or_margin", "tolerance", "pass"]
    job = {"command": "check-identities",
           "parameters": {"which": "Hardy", "d": 3, "count": 3, "params": {"constant": 1e6}}}
    code, _, _ = run_main(["run", "--job", write(tmp_path, "hi.json", job)], capsys)
    assert code == 1


def test_output_file_is_byte_identical(tmp_path, capsys):
    job = {"command": "check-identities", "parameters": {"which": "geni", "d": 3, "count": 4},
           "seed": 3, "output": str(tmp_path / "a.csv")}
    path = write(tmp_path, "job.json", job)
    assert cli.main(["run", "--job", path]) == 0
    first = (tmp_path / "a.csv").read_bytes()
    assert cli.main(["run", "--job", path]) == 0
    assert (tmp_path / "a.csv").read_bytes() == first
    assert cli.main(["run", "--job", path, "--output", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "b.csv").read_bytes() == first
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".tmp")] == []
    capsys.readouterr()


def test_floats_round_trip():
    for x in (0.1, 1 / 3, 2.5e-300, 12345.678901234567):
        assert float(cli.fmt(x)) == x


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "hardylab", "constants", "--d-min", "3",
                          "--d-max", "3"], capture_output=True, text=True, check=True)
    assert out.stdout.startswith("setting,d,n,value,attained_claim\n")
