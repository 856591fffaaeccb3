import json
from pathlib import Path

import numpy as np
import pytest

from udw_wavepacket import cli
from udw_wavepacket.cli import EXIT_CONFIG, EXIT_OK, EXIT_QUADRATURE, build_parser, main
from udw_wavepacket.errors import NegativeBeyondTolerance
from udw_wavepacket.report_writer import read_csv


PROFILE_INI = """
[profile]
kind = gaussian
width = 1.0

[spectrum]
k_min = -10
k_max = 10
points = 41
"""


def _scenario(tmp_path: Path, text: str, name: str = "gauss.ini") -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_profile_run_writes_csv_with_provenance(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    out = tmp_path / "out"

    code = main(["profile", _scenario(tmp_path, PROFILE_INI), "--out", str(out), "--quiet"])

    assert code == EXIT_OK
    csv_path = out / "gauss_profile.csv"
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# udw-wavepacket profile run"
    assert "# profile.width = 1.0" in lines
    table = read_csv(csv_path)
    assert list(table.columns) == ["k", "re_F", "im_F"]
    np.testing.assert_allclose(table["re_F"], np.exp(-0.5 * table["k"] ** 2), atol=1e-15)
    np.testing.assert_allclose(table["im_F"], 0.0, atol=1e-15)

    envelope = json.loads((out / "gauss_profile.json").read_text(encoding="utf-8"))
    assert envelope["run"] == "profile"
    assert envelope["results"]["provenance"] == "analytic"
    assert "threads" not in envelope["scenario"]["numerics"]
    assert "PROFILE COMPLETE" in capsys.readouterr().out


def test_negative_gap_exits_with_config_error(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    path = _scenario(tmp_path, "[detector]\ngap = -1\n", "bad.ini")

    code = main(["respond", path, "--out", str(tmp_path / "out"), "--quiet"])

    assert code == EXIT_CONFIG
    assert "detector.gap" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_missing_scenario_exits_with_config_error(tmp_path: Path) -> None:
    assert main(["profile", str(tmp_path / "absent.ini"), "--quiet"]) == EXIT_CONFIG


def test_invalid_override_exits_with_config_error(tmp_path: Path) -> None:
    path = _scenario(tmp_path, PROFILE_INI)

    assert main(["profile", path, "--threads", "0", "--out", str(tmp_path / "out"), "--quiet"]) == EXIT_CONFIG


def test_negative_probability_exits_with_quadrature_code(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture
) -> None:
    def negative(*args, **kwargs):
        raise NegativeBeyondTolerance("P = -1.0e-03 is negative beyond its error 1.0e-08")

    monkeypatch.setattr(cli, "run_scenario", negative)

    code = main(["respond", _scenario(tmp_path, PROFILE_INI), "--quiet"])

    assert code == EXIT_QUADRATURE
    assert "negative beyond its error" in capsys.readouterr().err


def test_markdown_format(tmp_path: Path) -> None:
    out = tmp_path / "md"

    code = main(["profile", _scenario(tmp_path, PROFILE_INI), "-o", str(out), "-f", "markdown", "-q"])

    assert code == EXIT_OK
    report = (out / "gauss_profile.md").read_text(encoding="utf-8")
    assert report.startswith("# Detector profile report")
    assert "## Scenario" in report
    assert "| profile.kind | gaussian |" in report


def test_results_do_not_depend_on_thread_count(tmp_path: Path) -> None:
    path = _scenario(tmp_path, PROFILE_INI)

    assert main(["profile", path, "-o", str(tmp_path / "one"), "-t", "1", "-q"]) == EXIT_OK
    assert main(["profile", path, "-o", str(tmp_path / "four"), "-t", "4", "-q"]) == EXIT_OK

    for name in ("gauss_profile.csv", "gauss_profile.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()


def test_parser_rejects_unknown_run() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "x.ini"])
