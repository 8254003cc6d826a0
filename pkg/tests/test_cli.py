import json
import subprocess
import sys

import pytest

from kblab.cli import main

SMALL = {
    "exponents": {"R_list": [4, 8, 16], "r_list": [1, 0.5]},
    "kakeya": {"instance": "grid-lines", "N": 4, "sweep": {"sizes": [10, 20], "seeds": 2, "R": 8}},
    "fremlin": {},
    "geometry-checks": {"budget": 2},
    "polysurf-checks": {"budget": 2},
    "duality": {},
    "proptest": {"budget": 2, "suites": ["exterior", "bl_core", "harness"]},
}


def run(tmp_path, command, cfg=None, *extra):
    argv = [command, *extra]
    if cfg is not None:
        path = tmp_path / f"{command}.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    return main(argv)


@pytest.mark.parametrize("command", list(SMALL))
def test_subcommands_pass_and_are_deterministic(tmp_path, capsys, command):
    extra = ["--samples", "3"] if command in ("fremlin", "duality") else []
    outputs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert run(tmp_path, command, SMALL[command], "--out", str(out), *extra) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["passed"] and summary["command"] == command
        outputs.append({name: (out / name).read_bytes() for name in summary["files"]})
    assert outputs[0] == outputs[1]


def test_primary_csv_to_stdout(tmp_path, capsys):
    assert run(tmp_path, "duality", None, "--samples", "2") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "case,cubes,converse_ok,forward_ok,C1_pow_P,C2,max_violation"
    # two fixed cases precede the random ones
    assert [l.split(",")[0] for l in lines[1:]] == ["single-cube", "equal-weights", "random-0", "random-1"]


def test_seed_changes_random_cases(tmp_path, capsys):
    run(tmp_path, "duality", None, "--samples", "4", "--seed", "1")
    a = capsys.readouterr().out
    run(tmp_path, "duality", None, "--samples", "4", "--seed", "2")
    assert capsys.readouterr().out != a


def test_budget_zero_is_vacuous(tmp_path, capsys, caplog):
    assert run(tmp_path, "proptest", {"budget": 0}) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["vacuous"] and all(s["cases"] == 0 for s in report["suites"].values())
    assert "vacuous" in caplog.text


def test_negative_tolerance_fails(tmp_path, capsys):
    assert run(tmp_path, "proptest", {"budget": 2, "suites": ["exterior"], "tolerance_scale": -1}) == 1


def test_bad_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"budget": 2,\n "suites": [}\n')
    assert main(["proptest", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert f"{path}:2:" in err


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "proptest", {"suites": ["nope"]}) == 2
    mismatch = {"families": [{"k": 1, "members": [{"point": [0, 0], "basis": [[1, 0]]}]},
                             {"k": 1, "members": [{"point": [0, 0, 0], "basis": [[0, 1, 0]]}]}]}
    assert run(tmp_path, "kakeya", mismatch) == 2
    assert run(tmp_path, "duality", {"G": [1, 1], "M": [0.2, 0.2], "p": [1], "degs": [1]}) == 2
    assert main(["nonsense"]) == 2
    assert main(["proptest", "--threads", "0"]) == 2


def test_duality_input_config(tmp_path, capsys):
    assert run(tmp_path, "duality", {"G": [1, 3], "M": [0.25, 0.75], "p": [1, 1], "degs": [2, 2]}) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("input,2,1,1,")


def test_console_script_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "kblab.cli", "duality", "--samples", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("case,")


def test_kakeya_default_and_empty_family(tmp_path, capsys):
    assert run(tmp_path, "kakeya", None) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("summary,lhs=64.0,rhs=64.0,ratio=1.0")
    empty = {"families": [{"k": 1, "n": 2, "members": []}, {"k": 1, "n": 2, "members": []}]}
    assert run(tmp_path, "kakeya", empty) == 0
    assert ",lhs=0.0," in capsys.readouterr().out.splitlines()[-1]
    assert run(tmp_path, "kakeya", {"instance": "spiral"}) == 2
