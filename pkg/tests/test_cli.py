import json

import pytest

from grammatic.cli import EXIT_SAFE, EXIT_UNKNOWN, EXIT_UNSAFE, EXIT_USAGE, main

from conftest import CORPUS, STRAIGHT

REACHABLE = """
datavar x;
init A;
error ERR;
A: x := havoc -> B;
B: assume(x > 1) -> C;
C: assert(x < 2) -> D;
"""


@pytest.fixture
def files(tmp_path):
    (tmp_path / "safe.ir").write_text(STRAIGHT)
    (tmp_path / "bad.ir").write_text(REACHABLE)
    (tmp_path / "broken.ir").write_text("init A;\nA: x := -> B;\n")
    return tmp_path


def test_verify_exit_codes(files, capsys):
    assert main(["verify", str(files / "safe.ir")]) == EXIT_SAFE
    assert capsys.readouterr().out.startswith("SAFE")
    assert main(["verify", "--json", str(files / "bad.ir")]) == EXIT_UNSAFE
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "unsafe" and out["path"][-1] == "ERR"


def test_usage_and_io_errors(files, capsys):
    assert main(["verify", str(files / "missing.ir")]) == EXIT_USAGE
    assert main(["verify", str(files / "broken.ir")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main(["verify", "--no-such-flag", str(files / "safe.ir")])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == EXIT_USAGE


def test_budget_flags_give_unknown(capsys):
    code = main(["verify", "--max-relations", "1", "--arity", "1", str(CORPUS / "buildInspect.ir")])
    assert code == EXIT_UNKNOWN
    assert "budget" in capsys.readouterr().out


def test_baseline_command(files, capsys):
    assert main(["baseline", str(files / "safe.ir")]) == EXIT_SAFE


def test_feasible_command(files, capsys):
    assert main(["feasible", str(files / "bad.ir")]) == EXIT_UNSAFE
    assert main(["feasible", "--path", "A,ERR", str(files / "bad.ir")]) == EXIT_USAGE
    assert main(["feasible", "--unroll-depth", "12", "--json", str(CORPUS / "buildInspect.ir")]) == EXIT_SAFE


def test_deps_command(capsys):
    assert main(["deps", "--json", str(CORPUS / "buildInspect.ir")]) == EXIT_SAFE
    (row,) = json.loads(capsys.readouterr().out)
    assert row["path"][-1] == "ERR"


def test_skeleton_and_emit(files, capsys, tmp_path):
    assert main(["skeleton", str(CORPUS / "buildInspect.ir")]) == EXIT_SAFE
    assert "relations" in json.loads(capsys.readouterr().out)
    out = tmp_path / "g.smt2"
    assert main(["emit-chc", "-o", str(out), str(CORPUS / "buildInspect.ir")]) == EXIT_SAFE
    assert out.read_text().startswith("(set-logic HORN)")
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["program"] == "buildInspect" and meta["arguments"]


def test_interpret_command(files, capsys):
    assert main(["interpret", "--path", "A,C,ERR", str(files / "bad.ir")]) == EXIT_UNSAFE
    assert main(["interpret", "--seed", "4", "--json", str(files / "safe.ir")]) == EXIT_SAFE


def test_bench_command(files, tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "safe.ir").write_text(STRAIGHT)
    out = tmp_path / "report"
    assert main(["bench", "--out", str(out), "--no-baseline", str(corpus)]) == EXIT_SAFE
    assert (out / "report.md").exists() and (out / "report.png").exists()
    assert main(["bench", str(files / "safe.ir")]) == EXIT_USAGE
