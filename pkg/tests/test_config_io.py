import json
from pathlib import Path

import pytest

from udw_wavepacket.config_io import (
    Scenario,
    UnitsSection,
    apply_overrides,
    decide_output_path,
    load_scenario,
    parse_ini,
    scenario_from_dict,
    scenario_name,
)
from udw_wavepacket.errors import ConfigError


SCAN_INI = """
[run]
kind = scan
name = Modulated Scan

[detector]
gap = 1.0
tau0 = -40
tau1 = 40   # long window

[profile]
kind = gaussian
width = 5
modulated = yes

[scan]
carrier_min = 0.5
carrier_max = 1.5
carrier_count = 5
packet_width = 0.12

[numerics]
threads = 4
k_min = none
"""


def test_ini_round_trip_is_identity() -> None:
    scenario = parse_ini(SCAN_INI)

    assert parse_ini(scenario.to_ini()) == scenario


def test_ini_values_are_coerced() -> None:
    scenario = parse_ini(SCAN_INI)

    assert scenario.run.kind == "scan"
    assert scenario.detector.tau1 == 40.0
    assert scenario.profile.modulated is True
    assert scenario.numerics.threads == 4
    assert scenario.numerics.k_min is None
    assert scenario.carriers() == pytest.approx([0.5, 0.75, 1.0, 1.25, 1.5])


def test_explicit_carriers_win() -> None:
    scenario = scenario_from_dict({"run": {"kind": "scan"}, "scan": {"carriers": "0.9, 1.1"}})

    assert scenario.carriers() == [0.9, 1.1]


def test_json_scenario(tmp_path: Path) -> None:
    path = tmp_path / "respond.json"
    path.write_text(json.dumps({"detector": {"gap": 2.0, "tau1": 5}, "packet": {"center": 2.0}}), encoding="utf-8")

    scenario = load_scenario(str(path))

    assert scenario.detector.gap == 2.0
    assert scenario.packet.center == 2.0
    assert scenario.source_path == str(path)
    assert scenario_name(scenario) == "respond"


def test_json_matches_ini_serialization(tmp_path: Path) -> None:
    scenario = parse_ini(SCAN_INI)
    path = tmp_path / "copy.json"
    path.write_text(scenario.to_json(), encoding="utf-8")

    assert load_scenario(str(path)) == scenario


def test_missing_scenario_file(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_scenario(str(tmp_path / "absent.ini"))


def test_negative_gap_names_the_field() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_ini("[detector]\ngap = -1\n")

    assert excinfo.value.field == "detector.gap"
    assert "detector.gap" in str(excinfo.value)


@pytest.mark.parametrize(
    "text, field",
    [
        ("[detector]\ncolour = red\n", "detector.colour"),
        ("[detectors]\ngap = 1\n", "detectors"),
        ("[detector]\ngap = fast\n", "detector.gap"),
        ("[numerics]\nthreads = 2.5\n", "numerics.threads"),
        ("[profile]\nmodulated = perhaps\n", "profile.modulated"),
        ("[detector]\ntau0 = 3\ntau1 = 1\n", "detector.tau1"),
        ("[packet]\ncenter = 0.1\nwidth = 0.05\n", "packet.center"),
        ("[profile]\nkind = delta\nmodulated = true\n", "profile.modulated"),
        ("[run]\nkind = scan\n", "scan.carrier_count"),
        ("[output]\nformat = html\n", "output.format"),
        ("[qed]\nground = hermite7\n", "qed.ground"),
        ("[numerics]\nk_min = 2\nk_max = 1\n", "numerics.k_max"),
    ],
)
def test_invalid_fields(text: str, field: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_ini(text)

    assert excinfo.value.field == field


def test_malformed_ini() -> None:
    with pytest.raises(ConfigError):
        parse_ini("gap = 1\n")


def test_overrides_win_and_revalidate() -> None:
    scenario = parse_ini(SCAN_INI)

    updated = apply_overrides(scenario, out_dir="elsewhere", threads=1, rel_tol=1e-6, k_min=0.1, output_format="excel")

    assert updated.numerics.threads == 1
    assert updated.numerics.rel_tol == 1e-6
    assert updated.numerics.k_min == 0.1
    assert updated.output.directory == "elsewhere"
    assert updated.output.format == "excel"
    assert scenario.numerics.threads == 4
    with pytest.raises(ConfigError):
        apply_overrides(scenario, threads=0)


def test_unit_conversions() -> None:
    units = UnitsSection(length=2.0, time=4.0)

    assert units.length_in(6.0) == 3.0
    assert units.time_in(8.0) == 2.0
    assert units.frequency_in(0.5) == 2.0
    assert units.wavenumber_in(0.5) == 1.0
    assert units.acceleration_in(1.0) == 8.0
    assert units.speed_in(0.5) == 1.0
    assert units.frequency_out(units.frequency_in(0.3)) == pytest.approx(0.3)
    assert units.wavenumber_out(units.wavenumber_in(0.3)) == pytest.approx(0.3)
    assert units.time_out(units.time_in(0.3)) == pytest.approx(0.3)


def test_scenario_name_is_sanitized() -> None:
    assert scenario_name(parse_ini(SCAN_INI)) == "modulated_scan"
    assert scenario_name(Scenario()) == "scenario"


def test_output_path_precedence(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    scenario = parse_ini(SCAN_INI)

    explicit = decide_output_path(scenario, str(tmp_path / "explicit"))
    assert explicit == str(tmp_path / "explicit")
    assert Path(explicit).is_dir()

    default = decide_output_path(scenario)
    assert Path(default) == Path("reports") / "modulated_scan"
    assert (tmp_path / "reports" / "modulated_scan").is_dir()

    configured = apply_overrides(scenario, out_dir=str(tmp_path / "configured"))
    assert decide_output_path(configured) == str(tmp_path / "configured")
