import json
import subprocess
import sys

import pytest

from conftest import CORPUS
from corec.surface.cli import main


def run(tmp_path, text, *flags):
    p = tmp_path / "prog.corec"
    p.write_text(text, encoding="utf-8")
    return main(["run", str(p), *flags])


PRE = "codatatype Stream = SCons (head: Nat) (tail: Stream)\n"


def test_text_output(tmp_path, capsys):
    assert run(tmp_path, PRE + "corec nats(n: Nat): Stream = SCons n (nats (n + 1))\nforce nats(0) upto 3\n") == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["corec nats: Primitive", "force nats 0 upto 3: OK", "  0 1 2"]


def test_json_output(tmp_path, capsys):
    code = run(tmp_path, PRE + "corec c: Stream = SCons 1 c\nforce c upto 2\ncheck c = SCons 1 c upto 50\n", "--json")
    assert code == 0
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert lines[0] == {"command": "corec c", "verdict": "Primitive", "detail": None}
    assert lines[1]["verdict"] == "OK" and lines[1]["detail"] == [1, 1]
    assert lines[2]["verdict"] == "PASS"


def test_failing_command_gives_exit_one(tmp_path, capsys):
    assert run(tmp_path, PRE + "corec c: Stream = SCons 1 c\ncheck c = SCons 2 c upto 5\n") == 1
    assert "FAIL" in capsys.readouterr().out


def test_syntax_error_gives_exit_two(tmp_path, capsys):
    assert run(tmp_path, PRE + "corec c: Stream = SCons 1\n") == 2
    assert "prog.corec:" in capsys.readouterr().out


def test_fuel_flag(tmp_path, capsys):
    text = PRE + "corec loop(n: Nat): Stream = loop (n + 1)\nforce loop(0) upto 1\n"
    assert run(tmp_path, text, "--fuel", "10", "--json") == 1
    last = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert last["verdict"] == "FuelExhausted" and last["detail"]["fuelUsed"] == 10


@pytest.mark.parametrize("name, code", [("lazy_lists", 0), ("trees", 0), ("rejected", 1)])
def test_corpus_exit_codes(name, code, capsys):
    assert main(["run", str(CORPUS / f"{name}.corec"), "--samples", "50"]) == code


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "corec.surface.cli", "run", str(CORPUS / "lazy_lists.corec")],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "force lfilter (lfrom 1) upto 5: OK\n  2 4 6 8 10 ..." in r.stdout
