import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from ppbranch.cli import FATE_COLUMNS, TRAJECTORY_COLUMNS, main
from ppbranch.config import read_document

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def write_config(tmp_path):
    def _write(doc, name="cfg.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
        return str(path)

    return _write


def _rows(path):
    return list(csv.reader(io.StringIO(Path(path).read_text())))


def test_validate_bundled(capsys):
    assert main(["validate", "example1"]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_gamma_mismatch(write_config):
    doc = read_document("example1")
    doc["prey_survival"]["gamma"] = 0.7
    assert main(["validate", write_config(doc)]) == 1


def test_validate_rejected_parameters(write_config, capsys):
    doc = read_document("example1")
    doc["predator_survival"]["rho2"] = 0.4
    assert main(["validate", write_config(doc)]) == 1
    assert "rho2*mu > 1" in capsys.readouterr().err


def test_validate_truncated_file(write_config):
    text = json.dumps(read_document("example1"))
    assert main(["validate", write_config(text[: len(text) // 2])]) == 2


def test_validate_missing_key(write_config):
    doc = read_document("example1")
    del doc["prey_law"]
    assert main(["validate", write_config(doc)]) == 2


def test_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 3


def test_unwritable_output(tmp_path):
    out = tmp_path / "no-such-dir" / "x.csv"
    assert main(["simulate", "example1", "--horizon", "3", "--out", str(out)]) == 3


def test_simulate_golden(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "example1", "--horizon", "10", "--seed", "7", "--out", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "simulate_example1_h10_s7.csv").read_text()
    manifest = json.loads(Path(f"{out}.manifest.json").read_text())
    assert manifest["root_seed"] == 7 and manifest["horizon"] == 10
    assert manifest["outputs"] == [str(out)]
    for key in ("config", "command", "replicates", "tool_version", "duration_seconds"):
        assert key in manifest


def test_montecarlo_golden(tmp_path):
    out = tmp_path / "fate.csv"
    args = ["montecarlo", "example3", "--horizon", "8", "--replicates", "50", "--seed", "7", "--out", str(out)]
    assert main(args) == 0
    assert out.read_text() == (GOLDEN / "montecarlo_example3_h8_r50_s7.csv").read_text()


def test_headers_frozen(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "example3", "--horizon", "5", "--out", str(a)])
    main(["montecarlo", "example1", "--horizon", "5", "--replicates", "5", "--out", str(b)])
    assert _rows(a)[0] == TRAJECTORY_COLUMNS
    assert _rows(b)[0] == FATE_COLUMNS
    assert TRAJECTORY_COLUMNS == "generation,predators,preys,density_before_control,predator_survivors,prey_survivors,competition_survivors".split(",")
    assert FATE_COLUMNS == "generation,p_both_alive,p_extinct,p_prey_only,p_predator_only,p_exploded,ci_lo_both,ci_hi_both".split(",")


def test_trivially_extinct_one_row(write_config, tmp_path, capsys):
    doc = read_document("example1")
    doc["predator_law"] = doc["prey_law"] = {"kind": "explicit", "pmf": [1.0]}
    flat = {"family": "table", "rho1": 0.5, "rho2": 0.5, "gamma": 1.0, "points": [[0.0, 0.5]]}
    doc["predator_survival"] = doc["prey_survival"] = flat
    doc["initial"] = [1, 1]
    cfg = write_config(doc)
    out = tmp_path / "t.csv"
    assert main(["simulate", cfg, "--out", str(out)]) == 0
    assert "warning" in capsys.readouterr().err
    assert len(_rows(out)) == 2
    fate = tmp_path / "f.csv"
    assert main(["montecarlo", cfg, "--horizon", "3", "--replicates", "1", "--out", str(fate)]) == 0
    assert _rows(fate)[2][:3] == ["1", "0.000000", "1.000000"]
    assert main(["validate", cfg]) == 1


def test_density_inf_when_no_predators(tmp_path):
    out = tmp_path / "t.csv"
    main(["simulate", "example3", "--horizon", "6", "--seed", "1", "--out", str(out)])
    rows = _rows(out)[1:]
    assert any(r[1] == "0" and r[3] == "inf" for r in rows)
    assert all(r[6] != "" for r in rows)


def test_plain_model_has_empty_competition_column(tmp_path):
    out = tmp_path / "t.csv"
    main(["simulate", "example1", "--horizon", "6", "--out", str(out)])
    assert all(r[6] == "" for r in _rows(out)[1:])


def test_example1_forty_rows_when_surviving(tmp_path):
    out = tmp_path / "t.csv"
    for seed in range(50):
        main(["simulate", "example1", "--horizon", "40", "--seed", str(seed), "--out", str(out)])
        rows = _rows(out)[1:]
        if len(rows) == 40 and int(rows[-1][1]) > 0:
            assert int(rows[-1][2]) > int(rows[-1][1])
            return
    pytest.fail("no surviving Example-1 path among 50 seeds")


def test_example3_prey_column_bounded(tmp_path):
    out = tmp_path / "t.csv"
    main(["simulate", "example3", "--horizon", "1000", "--seed", "2", "--out", str(out)])
    preys = [int(r[2]) for r in _rows(out)[1:]]
    assert max(preys) < 10 * 1000
    assert any(b < a for a, b in zip(preys, preys[1:]))


def test_single_replicate_probabilities(tmp_path):
    out = tmp_path / "f.csv"
    main(["montecarlo", "example2", "--horizon", "20", "--replicates", "1", "--out", str(out)])
    for row in _rows(out)[1:]:
        assert all(v in ("0.000000", "1.000000") for v in row[1:6])


def test_seed_from_environment(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("PPBRANCH_SEED", "31")
    main(["simulate", "example1", "--horizon", "20", "--out", str(a)])
    monkeypatch.delenv("PPBRANCH_SEED")
    main(["simulate", "example1", "--horizon", "20", "--seed", "31", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_parallel_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["montecarlo", "example1", "--horizon", "30", "--replicates", "300", "--seed", "5"]
    assert main(common + ["--parallel", "1", "--out", str(a)]) == 0
    assert main(common + ["--parallel", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_moments_command(capsys):
    assert main(["moments", "example1", "--state", "0,10", "--draws", "20000"]) == 0
    assert main(["moments", "example2", "--state", "3,6", "--draws", "100000"]) == 0
    assert main(["moments", "example3", "--state", "5,500", "--draws", "20000"]) == 0
    out = capsys.readouterr().out
    assert "predator" in out and "prey" in out


def test_moments_oracle_gate(capsys):
    assert main(["moments", "example1", "--state", "2,3", "--draws", "1000000"]) == 0
    assert "total variation" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = tmp_path / "x.csv"
    res = subprocess.run(
        [sys.executable, "-m", "ppbranch.cli", "simulate", "example2", "--horizon", "5", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert out.exists() and Path(f"{out}.manifest.json").exists()
