import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from udw_wavepacket.config_io import parse_ini
from udw_wavepacket.core import build_detector, build_packet, run_scenario
from udw_wavepacket.errors import ConfigError
from udw_wavepacket.report_writer import read_csv


RESPOND_INI = """
[run]
name = quick

[detector]
gap = 1.0
tau0 = 0
tau1 = 2

[packet]
center = 1.0
width = 0.1

[numerics]
method = factorized
kernel_grid = 3
"""


def test_respond_run_artifacts(tmp_path: Path) -> None:
    outcome = run_scenario(parse_ini(RESPOND_INI), out_dir=str(tmp_path), show_progress=False)

    assert outcome.probability > 0.0
    assert outcome.error < 1e-6 * outcome.probability
    names = sorted(Path(p).name for p in outcome.artifacts)
    assert names == ["quick_respond.csv", "quick_respond.json", "quick_respond_kernel.csv"]
    kernel = read_csv(tmp_path / "quick_respond_kernel.csv")
    assert len(kernel) == 9
    envelope = json.loads((tmp_path / "quick_respond.json").read_text(encoding="utf-8"))
    assert envelope["results"]["probability"] == outcome.probability
    assert "P = " in outcome.summary_line()


def test_run_kind_override(tmp_path: Path) -> None:
    outcome = run_scenario(parse_ini(RESPOND_INI), run_kind="profile", out_dir=str(tmp_path), show_progress=False)

    assert outcome.run_kind == "profile"
    assert outcome.probability is None
    assert (tmp_path / "quick_profile.csv").exists()


def test_scan_run(tmp_path: Path) -> None:
    text = RESPOND_INI + "\n[scan]\ncarriers = 0.9, 1.0, 1.1\npacket_width = 0.1\n"

    outcome = run_scenario(parse_ini(text), run_kind="scan", out_dir=str(tmp_path), show_progress=False)

    table = read_csv(tmp_path / "quick_scan.csv")
    np.testing.assert_allclose(table["carrier"], [0.9, 1.0, 1.1])
    assert outcome.results["points"] == 3
    assert outcome.results["argmax_carrier"] in (0.9, 1.0, 1.1)
    assert outcome.evaluations == int(table["evaluations"].sum())


def test_profile_is_independent_of_units(tmp_path: Path) -> None:
    text = "[profile]\nwidth = 1.0\n[spectrum]\nk_min = -4\nk_max = 4\npoints = 9\n"
    natural = run_scenario(parse_ini(text), run_kind="profile", out_dir=str(tmp_path / "a"), show_progress=False)
    scaled_text = "[profile]\nwidth = 2.0\n[spectrum]\nk_min = -2\nk_max = 2\npoints = 9\n[units]\nlength = 2.0\n"
    scaled = run_scenario(
        parse_ini(scaled_text), run_kind="profile", out_dir=str(tmp_path / "b"), show_progress=False
    )

    np.testing.assert_allclose(natural.table["re_F"], scaled.table["re_F"], rtol=1e-14)
    np.testing.assert_allclose(scaled.table["k"], np.linspace(-2.0, 2.0, 9))


def test_detector_builders_convert_units() -> None:
    scenario = parse_ini(
        "[detector]\ngap = 2.0\ntau1 = 4\nacceleration = 0.5\n"
        "[profile]\nwidth = 0.2\n"
        "[packet]\ncenter = 2.0\nwidth = 0.1\n"
        "[units]\ntime = 2.0\n"
    )

    config = build_detector(scenario)
    packet = build_packet(scenario)

    assert config.gap == pytest.approx(4.0)
    assert config.window == (0.0, 2.0)
    assert config.frame.acceleration == pytest.approx(2.0)
    assert config.frame.c == pytest.approx(2.0)
    assert packet.center == pytest.approx(2.0)


def test_builder_errors_name_the_section(tmp_path: Path) -> None:
    scenario = parse_ini("[profile]\nkind = tabulated\npath = missing_profile.txt\n")

    with pytest.raises((ConfigError, FileNotFoundError)):
        build_detector(scenario)


def test_qed_run_csv(tmp_path: Path) -> None:
    text = "[run]\nname = atom\n[qed]\npoints = 1201\np_points = 40\ncoupling = 0.3\n"

    outcome = run_scenario(parse_ini(text), run_kind="qed", out_dir=str(tmp_path), show_progress=False)

    header = [line for line in (tmp_path / "atom_qed.csv").read_text(encoding="utf-8").splitlines() if line.startswith("#")]
    assert any(line.startswith("# alpha_gamma = ") for line in header)
    assert (tmp_path / "atom_qed_smearing.csv").exists()
    assert abs(outcome.results["perturbativity_ratio"]) < 10.0
    smearing = read_csv(tmp_path / "atom_qed_smearing.csv")
    assert np.max(np.abs(smearing["re_F"])) < 1e-12 * np.max(np.abs(smearing["im_F"]))


def test_qed_run_excel(tmp_path: Path) -> None:
    text = "[run]\nname = atom\n[qed]\npoints = 1201\np_points = 40\n[output]\nformat = excel\n"

    run_scenario(parse_ini(text), run_kind="qed", out_dir=str(tmp_path), show_progress=False)

    sheets = pd.read_excel(tmp_path / "atom_qed.xlsx", sheet_name=None, engine="openpyxl")
    assert set(sheets) == {"qed", "smearing", "scenario"}
    assert len(sheets["qed"]) == 2 * 40
