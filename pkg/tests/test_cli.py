"""Black-box exit-code and output checks for the ``stpa`` command."""

import io
import subprocess
import sys

import pytest

from stpa import build_bundle, emit_json, parse
from stpa.cli import run
from stpa.corpus import GOLDEN_PATHS, MODEL_PATH

CORPUS = str(MODEL_PATH)


def stpa(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "stpa", *args], capture_output=True, text=True, env=env
    )


def call(*args):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(args), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_check_corpus():
    result = stpa("check", CORPUS)
    assert result.returncode == 0
    assert "0 errors" in result.stderr
    assert result.stdout == ""


def test_check_strict_turns_warnings_into_failure():
    code, _, err = call("check", CORPUS, "--strict")
    assert code == 1 and "0 errors" in err


def test_check_missing_file():
    result = stpa("check", "missing.stpa")
    assert result.returncode == 2
    assert "No such file" in result.stderr


def test_check_parse_failure(tmp_path):
    bad = tmp_path / "bad.stpa"
    bad.write_text('model "m"\nhazard H1 "x" ->\n', encoding="utf-8")
    code, _, err = call("check", str(bad))
    assert code == 2
    assert f"{bad}:2:15: error: expected identifier after '->'" in err


def test_check_validation_errors(tmp_path):
    bad = tmp_path / "bad.stpa"
    bad.write_text('model "m"\naccident A1 "a"\nhazard H1 "h"\n', encoding="utf-8")
    code, _, err = call("check", str(bad))
    assert code == 1
    assert "E002 [H1]" in err


def test_asil_rate():
    result = stpa("asil", "--rate", "S3", "E4", "C3")
    assert (result.returncode, result.stdout) == (0, "D\n")


def test_asil_rate_out_of_range():
    code, _, err = call("asil", "--rate", "S4", "E4", "C3")
    assert code == 3 and "out of range" in err


def test_asil_file():
    code, out, _ = call("asil", CORPUS)
    assert code == 0
    assert out.splitlines()[0] == "UCA1\tS3 E4 C3\tD"


def test_asil_needs_exactly_one_input():
    assert call("asil")[0] == 3
    assert call("asil", CORPUS, "--rate", "S1", "E1", "C1")[0] == 3


@pytest.mark.parametrize(
    "argv", [["bogus"], ["check"], ["report", CORPUS, "--format", "pdf"], ["check", CORPUS, "--nope"], []]
)
def test_usage_errors(argv):
    assert call(*argv)[0] == 3


def test_help_is_success():
    assert call("--help")[0] == 0


def test_trace():
    code, out, _ = call("trace", CORPUS, "--id", "UCA1")
    assert code == 0
    assert out.splitlines()[:3] == ["UCA1 (uca)", "  -> H1 (hazard)", "    -> A1 (accident)"]
    assert call("trace", CORPUS, "--id", "ZZ9")[0] == 3


def test_step2():
    code, out, _ = call("step2", CORPUS, "--uca", "UCA1")
    assert code == 0
    assert out.count("answered by:") == 8
    assert "[communication_channel]" in out
    assert call("step2", CORPUS, "--uca", "UCA99")[0] == 3


def test_candidates():
    code, out, _ = call("candidates", CORPUS)
    assert code == 0 and len(out.splitlines()) == 48
    assert "CA3\tnot_provided\tassessed_unsafe\tUCA1" in out
    code, out, _ = call("candidates", CORPUS, "--csv")
    assert out == GOLDEN_PATHS["csv"].read_text(encoding="utf-8")


def test_report_json_matches_library():
    model = parse(MODEL_PATH.read_text(encoding="utf-8"), file=CORPUS)
    result = stpa("report", CORPUS, "--format", "json")
    assert result.returncode == 0
    assert result.stdout == emit_json(build_bundle(model))


@pytest.mark.parametrize("fmt", ["md", "json", "csv"])
def test_report_out_dir_matches_goldens(tmp_path, fmt):
    code, out, _ = call("report", CORPUS, "--format", fmt, "--out", str(tmp_path))
    assert code == 0 and out == ""
    name = GOLDEN_PATHS[fmt].name
    assert (tmp_path / name).read_bytes() == GOLDEN_PATHS[fmt].read_bytes()


def test_no_color_env(tmp_path):
    bad = tmp_path / "bad.stpa"
    bad.write_text('model "m"\nhazard H1 "h"\n', encoding="utf-8")
    import os

    env = dict(os.environ, STPA_NO_COLOR="1")
    result = stpa("check", str(bad), env=env)
    assert "\033[" not in result.stderr and result.returncode == 1


def test_color_only_on_terminal(tmp_path, monkeypatch):
    bad = tmp_path / "bad.stpa"
    bad.write_text('model "m"\nhazard H1 "h"\n', encoding="utf-8")

    class Tty(io.StringIO):
        def isatty(self):
            return True

    monkeypatch.delenv("STPA_NO_COLOR", raising=False)
    err = Tty()
    run(["check", str(bad)], out=io.StringIO(), err=err)
    assert "\033[31m" in err.getvalue()
    err = Tty()
    run(["check", str(bad), "--no-color"], out=io.StringIO(), err=err)
    assert "\033[" not in err.getvalue()
