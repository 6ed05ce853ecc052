import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import FIXTURES
from possrules.cli import main
from possrules.files import load_cascade, read_distributions

RULES = str(FIXTURES / "running_example.json")
TRAIN = str(FIXTURES / "running_example_train.jsonl")


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def inputs(tmp_path):
    return (write(tmp_path / "a1.csv", "0,1\n1,0.01\n0.03,1\n"),
            write(tmp_path / "a2.csv", "0,1\n0.04,1\n0.02,1\n"))


def test_infer_running_example(tmp_path, inputs):
    out = tmp_path / "b.csv"
    assert main(["infer", RULES, "--input", f"a1={inputs[0]}", "--input", f"a2={inputs[1]}",
                 "--emit", "b", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == '"(0,0)","(0,1)","(1,0)","(1,1)",argmax'
    # cells (1,1), (0,1), (1,0), (0,0) hold 0.01, 1, 0.01, 0.04
    assert lines[1] == '0.04,1,0.01,0.01,"(0,1)"'
    assert lines[2] == '0.02,0.03,0.02,1,"(1,1)"'


def test_infer_final_output(tmp_path, inputs, capsys):
    assert main(["infer", RULES, "--input", f"a1={inputs[0]}", "--input", f"a2={inputs[1]}"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == '"0","1",argmax' or lines[0] == "0,1,argmax"
    assert lines[1].endswith('"0"') or lines[1].endswith(",0")


def test_infer_ambiguous(tmp_path, capsys):
    a1 = write(tmp_path / "a1.csv", "0,1\n1,1\n")
    a2 = write(tmp_path / "a2.csv", "0,1\n0.1,1\n")
    assert main(["infer", RULES, "--input", f"a1={a1}", "--input", f"a2={a2}"]) == 0
    assert "AMBIGUOUS" in capsys.readouterr().out


def test_infer_empty_file(tmp_path, inputs, capsys):
    empty = write(tmp_path / "empty.csv", "0,1\n")
    assert main(["infer", RULES, "--input", f"a1={empty}", "--input", f"a2={inputs[1]}"]) == 1
    assert "no samples" in capsys.readouterr().err


def test_infer_out_of_range(tmp_path, inputs, capsys):
    bad = write(tmp_path / "bad.csv", "0,1\n1,0.5\n1,1.2\n")
    assert main(["infer", RULES, "--input", f"a1={bad}", "--input", f"a2={inputs[1]}"]) == 1
    err = capsys.readouterr().err
    assert "line 3" in err and "column '1'" in err and "1.2" in err


def test_infer_missing_input(inputs, capsys):
    assert main(["infer", RULES, "--input", f"a1={inputs[0]}"]) == 1
    assert "a2" in capsys.readouterr().err


def test_learn_running_example(tmp_path, capsys):
    params, report = tmp_path / "p.json", tmp_path / "r.json"
    assert main(["learn", RULES, "--train", TRAIN, "--tau", "0.05", "--output", str(params),
                 "--report", str(report)]) == 0
    learned = json.loads(params.read_text())
    assert all(v == {"s": 0.0, "r": 0.0} for stage in learned.values() for v in stage.values())
    stages = json.loads(report.read_text())["stages"]
    assert [s["reliable"] for s in stages] == [[True, True, False, False]] * 2
    assert stages[0]["nablas"] == [0.04, 0.03, 1.0, 1.0]
    assert "reliable 2/4 (50.0%)" in capsys.readouterr().out


def test_learn_all_selected_above_one(tmp_path):
    report = tmp_path / "r.json"
    assert main(["learn", RULES, "--train", TRAIN, "--tau", "1.001", "--output", str(tmp_path / "p.json"),
                 "--report", str(report)]) == 0
    assert all(s["selected_percent"] == 100.0 for s in json.loads(report.read_text())["stages"])


def test_learn_is_byte_identical(tmp_path):
    outputs = []
    for run in range(2):
        params, report = tmp_path / f"p{run}.json", tmp_path / f"r{run}.json"
        assert main(["learn", RULES, "--train", TRAIN, "--tau", "1.001", "--output", str(params),
                     "--report", str(report), "--jobs", str(run + 1)]) == 0
        outputs.append((params.read_bytes(), report.read_bytes()))
    assert outputs[0] == outputs[1]


def test_learn_no_reliable_exit_code(tmp_path, capsys):
    assert main(["learn", RULES, "--train", TRAIN, "--tau", "0.01", "--output", str(tmp_path / "p.json")]) == 2
    assert "no training sample is reliable" in capsys.readouterr().err


def test_learn_search(tmp_path):
    report = tmp_path / "r.json"
    assert main(["learn", RULES, "--train", TRAIN, "--valid", TRAIN, "--search", "--output",
                 str(tmp_path / "p.json"), "--report", str(report)]) == 0
    found = json.loads(report.read_text())["threshold_search"]
    assert found["validation_accuracy"] == 0.5
    assert found["tested"][0]["accuracy"] is None


def test_transform_antipignistic(tmp_path, capsys):
    src = write(tmp_path / "p.csv", ",".join(str(d) for d in range(10)) + "\n"
                + "0.15,0.14,0.13,0.12,0.11,0.09,0.08,0.07,0.06,0.05\n")
    assert main(["transform", src]) == 0
    _, rows = read_distributions(_dump(tmp_path, capsys.readouterr().out))
    assert np.round(rows[0], 2).tolist() == [1.00, 0.99, 0.97, 0.94, 0.90, 0.80, 0.74, 0.67, 0.59, 0.50]
    assert main(["transform", src, "--method", "minspec"]) == 0
    _, rows = read_distributions(_dump(tmp_path, capsys.readouterr().out))
    assert np.round(rows[0], 2).tolist() == [1.00, 0.85, 0.71, 0.58, 0.46, 0.35, 0.26, 0.18, 0.11, 0.05]


def _dump(tmp_path, text):
    return write(tmp_path / "captured.csv", text)


def test_transform_rejects_bad_probability(tmp_path, capsys):
    src = write(tmp_path / "p.csv", "a,b\n0.5,0.6\n")
    assert main(["transform", src]) == 1
    assert "row 1" in capsys.readouterr().err


def test_generate_addition_rules(tmp_path, capsys):
    out = tmp_path / "add2.json"
    assert main(["generate", "rules", "addition", "--k", "2", "--output", str(out)]) == 0
    cascade = load_cascade(out)
    assert len(cascade.stages) == 7
    assert sum(stage.n for stage in cascade.stages) == 64
    assert "7 rule sets, 64 rules" in capsys.readouterr().out


def test_generate_sudoku_rules(tmp_path, capsys):
    out = tmp_path / "sudoku.json"
    assert main(["generate", "rules", "sudoku", "--side", "4", "--output", str(out)]) == 0
    assert "57 rule sets, 449 rules, 73 attributes" in capsys.readouterr().out


def test_generate_learn_eval_round_trip(tmp_path, capsys):
    rules = tmp_path / "add1.json"
    assert main(["generate", "rules", "addition", "--k", "1", "--output", str(rules)]) == 0
    for split, seed in (("train", 1), ("test", 2)):
        assert main(["generate", "data", "addition", "--k", "1", "--count", "60", "--base", "0.9",
                     "--seed", str(seed), "--split", split, "--output", str(tmp_path / "data")]) == 0
    params = tmp_path / "p.json"
    assert main(["learn", str(rules), "--train", str(tmp_path / "data" / "train_manifest.json"),
                 "--tau", "1.001", "--output", str(params)]) == 0
    capsys.readouterr()
    assert main(["eval", str(rules), "--params", str(params), "--test",
                 str(tmp_path / "data" / "test_manifest.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["accuracy"] == 1.0 and report["total"] == 60


def test_generate_data_is_deterministic(tmp_path):
    for run in range(2):
        assert main(["generate", "data", "sudoku", "--count", "6", "--base", "0.7", "--temperature", "1",
                     "--seed", "4", "--output", str(tmp_path / f"d{run}")]) == 0
    for name in ("train_distributions.csv", "train_labels.csv"):
        assert (tmp_path / "d0" / name).read_bytes() == (tmp_path / "d1" / name).read_bytes()


def test_backprop_running_example(tmp_path, capsys):
    out_dir = tmp_path / "bp"
    assert main(["backprop", RULES, "--stage", "first", "--target", "(1,0)", "--out-dir", str(out_dir)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["f_low"] == [0, 1, 1, 0, 1, 0, 0, 1]
    for attr, expected in (("a1", [0, 1]), ("a2", [1, 0])):
        assert read_distributions(out_dir / f"{attr}_possibility.csv")[1][0].tolist() == expected
        assert read_distributions(out_dir / f"{attr}_probability.csv")[1][0].tolist() == expected


def test_validate(capsys):
    assert main(["validate", RULES, "--dump"]) == 0
    out = capsys.readouterr().out
    assert "first: output b (4 values), 4 rules, 4 cells" in out
    assert "ok: 2 rule sets, 6 rules, 4 attributes" in out


def test_validate_bad_file(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", '{"attributes": [], "rule_sets": [')
    assert main(["validate", bad]) == 1
    assert "error" in capsys.readouterr().err


def test_console_script_exit_code(tmp_path):
    done = subprocess.run([sys.executable, "-m", "possrules.cli", "learn", RULES, "--train", TRAIN,
                           "--tau", "0.01", "--output", str(tmp_path / "p.json")], capture_output=True, text=True)
    assert done.returncode == 2
