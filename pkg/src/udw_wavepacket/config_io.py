# src/udw_wavepacket/config_io.py
#
# Scenario loading (INI-like sectioned text or JSON), validation,
# serialization and output path decision.

import configparser
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints

from .errors import ConfigError


RUN_KINDS = ("profile", "respond", "scan", "qed")
PROFILE_KINDS = ("delta", "gaussian", "lorentzian", "tabulated")
PACKET_SHAPES = ("gaussian", "tabulated")
OUTPUT_FORMATS = ("csv", "markdown", "pdf", "excel")
QED_SOURCES = ("gaussian", "hermite1", "hermite2")


@dataclass
class RunSection:
    kind: str = "respond"
    name: str = ""


@dataclass
class DetectorSection:
    gap: float = 1.0
    coupling: float = 1.0
    acceleration: float = 0.0
    c: float = 1.0
    tau0: float = 0.0
    tau1: float = 10.0


@dataclass
class ProfileSection:
    kind: str = "gaussian"
    width: float = 1.0
    center: float = 0.0
    modulated: bool = False
    path: str = ""


@dataclass
class PacketSection:
    shape: str = "gaussian"
    center: float = 1.0
    width: float = 0.05
    n_sigma: float = 5.0
    path: str = ""


@dataclass
class ScanSection:
    carriers: List[float] = field(default_factory=list)
    carrier_min: Optional[float] = None
    carrier_max: Optional[float] = None
    carrier_count: int = 0
    packet_width: float = 0.05


@dataclass
class SpectrumSection:
    k_min: float = -10.0
    k_max: float = 10.0
    points: int = 401
    numeric: bool = False


@dataclass
class NumericsSection:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-30
    max_panels: int = 40000
    threads: int = 1
    k_min: Optional[float] = None
    k_max: Optional[float] = None
    k_rel_tol: float = 1e-10
    max_k_panels: int = 20000
    cutoff_sensitivity: bool = True
    method: str = "double"
    variant: str = "general"
    kernel_grid: int = 0


@dataclass
class OutputSection:
    directory: str = ""
    format: str = "csv"


@dataclass
class UnitsSection:
    """
    Scale factors of the user's length and time units in natural units.

    Values in the scenario file are in user units; they are converted once,
    when the physics objects are built, and results are converted back on
    output.
    """

    length: float = 1.0
    time: float = 1.0

    def length_in(self, value: float) -> float:
        return value / self.length

    def time_in(self, value: float) -> float:
        return value / self.time

    def frequency_in(self, value: float) -> float:
        return value * self.time

    def wavenumber_in(self, value: float) -> float:
        return value * self.length

    def acceleration_in(self, value: float) -> float:
        return value * self.time ** 2 / self.length

    def speed_in(self, value: float) -> float:
        return value * self.time / self.length

    def frequency_out(self, value: float) -> float:
        return value / self.time

    def wavenumber_out(self, value: float) -> float:
        return value / self.length

    def time_out(self, value: float) -> float:
        return value * self.time


@dataclass
class QedSection:
    ground: str = "gaussian"
    excited: str = "hermite1"
    sigma: float = 1.0
    half_width: Optional[float] = None
    points: int = 4001
    coupling: float = 1.0
    p_min: float = 0.01
    p_max: float = 10.0
    p_points: int = 200
    ir_fraction: float = 1e-3


SECTIONS = {
    "run": RunSection,
    "detector": DetectorSection,
    "profile": ProfileSection,
    "packet": PacketSection,
    "scan": ScanSection,
    "spectrum": SpectrumSection,
    "numerics": NumericsSection,
    "output": OutputSection,
    "units": UnitsSection,
    "qed": QedSection,
}


@dataclass
class Scenario:
    run: RunSection = field(default_factory=RunSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    profile: ProfileSection = field(default_factory=ProfileSection)
    packet: PacketSection = field(default_factory=PacketSection)
    scan: ScanSection = field(default_factory=ScanSection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    output: OutputSection = field(default_factory=OutputSection)
    units: UnitsSection = field(default_factory=UnitsSection)
    qed: QedSection = field(default_factory=QedSection)
    source_path: str = field(default="", compare=False)

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}

    def to_ini(self) -> str:
        lines = []
        for name, values in self.to_dict().items():
            lines.append(f"[{name}]")
            for key, value in values.items():
                lines.append(f"{key} = {_format_value(value)}")
            lines.append("")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def carriers(self) -> List[float]:
        """Scan carriers, explicit list first, otherwise an evenly spaced range."""
        if self.scan.carriers:
            return list(self.scan.carriers)
        lo, hi, n = self.scan.carrier_min, self.scan.carrier_max, self.scan.carrier_count
        if n == 1:
            return [lo]
        return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _coerce(raw: Any, target: Any, where: str) -> Any:
    origin = get_origin(target)
    if origin is Union:
        inner = [t for t in get_args(target) if t is not type(None)][0]
        if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none", "null")):
            return None
        return _coerce(raw, inner, where)
    if origin in (list, List):
        if isinstance(raw, str):
            parts = [p for p in raw.replace(",", " ").split() if p]
        elif isinstance(raw, (list, tuple)):
            parts = list(raw)
        else:
            raise ConfigError(where, f"expected a list of numbers, got {raw!r}")
        return [_coerce(p, float, where) for p in parts]
    if target is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "yes", "on", "1"):
            return True
        if text in ("false", "no", "off", "0"):
            return False
        raise ConfigError(where, f"expected true/false, got {raw!r}")
    if target is float:
        if isinstance(raw, bool):
            raise ConfigError(where, f"expected a number, got {raw!r}")
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(where, f"expected a number, got {raw!r}")
        if not math.isfinite(value):
            raise ConfigError(where, f"must be finite, got {raw!r}")
        return value
    if target is int:
        if isinstance(raw, bool):
            raise ConfigError(where, f"expected an integer, got {raw!r}")
        try:
            as_float = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(where, f"expected an integer, got {raw!r}")
        if not as_float.is_integer():
            raise ConfigError(where, f"expected an integer, got {raw!r}")
        return int(as_float)
    return str(raw).strip()


def _build_section(name: str, raw: Dict[str, Any]) -> Any:
    cls = SECTIONS[name]
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    values = {}
    for key, value in raw.items():
        key = key.strip().lower()
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
        values[key] = _coerce(value, hints[key], f"{name}.{key}")
    return cls(**values)


def scenario_from_dict(data: Dict[str, Any], source_path: str = "") -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario", "must be a mapping of sections")
    sections = {}
    for name, raw in data.items():
        key = name.strip().lower()
        if key not in SECTIONS:
            raise ConfigError(key, "unknown section")
        if not isinstance(raw, dict):
            raise ConfigError(key, "section must be a mapping of fields")
        sections[key] = _build_section(key, raw)
    scenario = Scenario(**sections, source_path=source_path)
    validate_scenario(scenario)
    return scenario


def parse_ini(text: str, source_path: str = "") -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError("scenario", f"malformed INI text: {e}")
    data = {section: dict(parser.items(section)) for section in parser.sections()}
    return scenario_from_dict(data, source_path)


def load_scenario(path: str) -> Scenario:
    """
    Load a scenario file (.ini / .cfg / .json).
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Scenario file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        text = f.read()

    if path.lower().endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError("scenario", f"malformed JSON: {e}")
        return scenario_from_dict(data, path)

    return parse_ini(text, path)


def _require(condition: bool, where: str, message: str) -> None:
    if not condition:
        raise ConfigError(where, message)


def validate_scenario(s: Scenario) -> None:
    """Range checks; each failure names the offending section.field."""
    _require(s.run.kind in RUN_KINDS, "run.kind", f"must be one of {', '.join(RUN_KINDS)}")

    d = s.detector
    _require(d.gap > 0, "detector.gap", f"must be positive, got {d.gap}")
    _require(d.c > 0, "detector.c", f"must be positive, got {d.c}")
    _require(d.acceleration >= 0, "detector.acceleration", f"must be >= 0, got {d.acceleration}")
    _require(d.tau1 > d.tau0, "detector.tau1", f"must exceed detector.tau0 = {d.tau0}")

    p = s.profile
    _require(p.kind in PROFILE_KINDS, "profile.kind", f"must be one of {', '.join(PROFILE_KINDS)}")
    if p.kind in ("gaussian", "lorentzian"):
        _require(p.width > 0, "profile.width", f"must be positive, got {p.width}")
    if p.kind == "tabulated":
        _require(bool(p.path), "profile.path", "required for tabulated profiles")
    if p.modulated:
        _require(p.kind != "delta", "profile.modulated", "a delta profile cannot be modulated")

    k = s.packet
    _require(k.shape in PACKET_SHAPES, "packet.shape", f"must be one of {', '.join(PACKET_SHAPES)}")
    if k.shape == "gaussian":
        _require(k.width > 0, "packet.width", f"must be positive, got {k.width}")
        _require(k.n_sigma > 0, "packet.n_sigma", f"must be positive, got {k.n_sigma}")
        _require(
            abs(k.center) > k.n_sigma * k.width,
            "packet.center",
            "packet support center +- n_sigma * width must exclude k = 0",
        )
    else:
        _require(bool(k.path), "packet.path", "required for tabulated packets")

    sc = s.scan
    _require(sc.packet_width > 0, "scan.packet_width", f"must be positive, got {sc.packet_width}")
    _require(all(w > 0 for w in sc.carriers), "scan.carriers", "carriers must be positive")
    if s.run.kind == "scan" and not sc.carriers:
        _require(sc.carrier_count >= 1, "scan.carrier_count", "give scan.carriers or a carrier range")
        _require(
            sc.carrier_min is not None and sc.carrier_min > 0,
            "scan.carrier_min",
            "must be positive",
        )
        _require(
            sc.carrier_max is not None and sc.carrier_max >= sc.carrier_min,
            "scan.carrier_max",
            "must be >= scan.carrier_min",
        )

    sp = s.spectrum
    _require(sp.k_max > sp.k_min, "spectrum.k_max", "must exceed spectrum.k_min")
    _require(sp.points >= 2, "spectrum.points", "must be at least 2")

    n = s.numerics
    _require(n.rel_tol > 0, "numerics.rel_tol", "must be positive")
    _require(n.abs_tol > 0, "numerics.abs_tol", "must be positive")
    _require(n.k_rel_tol > 0, "numerics.k_rel_tol", "must be positive")
    _require(n.max_panels >= 4, "numerics.max_panels", "must be at least 4")
    _require(n.max_k_panels >= 4, "numerics.max_k_panels", "must be at least 4")
    _require(n.threads >= 1, "numerics.threads", "must be at least 1")
    _require(n.method in ("double", "factorized"), "numerics.method", "must be double or factorized")
    _require(n.variant in ("general", "cos"), "numerics.variant", "must be general or cos")
    _require(n.kernel_grid >= 0, "numerics.kernel_grid", "must be >= 0")
    if n.k_min is not None:
        _require(n.k_min > 0, "numerics.k_min", "must be positive")
    if n.k_min is not None and n.k_max is not None:
        _require(n.k_max > n.k_min, "numerics.k_max", "must exceed numerics.k_min")

    _require(s.output.format in OUTPUT_FORMATS, "output.format", f"must be one of {', '.join(OUTPUT_FORMATS)}")

    _require(s.units.length > 0, "units.length", "must be positive")
    _require(s.units.time > 0, "units.time", "must be positive")

    q = s.qed
    for name in ("ground", "excited"):
        source = getattr(q, name)
        _require(
            source in QED_SOURCES or os.path.splitext(source)[1] != "",
            f"qed.{name}",
            f"must be one of {', '.join(QED_SOURCES)} or a table file",
        )
    _require(q.sigma > 0, "qed.sigma", "must be positive")
    _require(q.points >= 5, "qed.points", "must be at least 5")
    _require(q.p_max > q.p_min > 0, "qed.p_min", "need 0 < p_min < p_max")
    _require(q.p_points >= 2, "qed.p_points", "must be at least 2")
    _require(0 < q.ir_fraction < 1, "qed.ir_fraction", "must lie in (0, 1)")


def apply_overrides(
    scenario: Scenario,
    out_dir: Optional[str] = None,
    threads: Optional[int] = None,
    rel_tol: Optional[float] = None,
    k_min: Optional[float] = None,
    k_max: Optional[float] = None,
    output_format: Optional[str] = None,
) -> Scenario:
    """Command-line flags win over file values; the result is revalidated."""
    numerics = dataclasses.replace(
        scenario.numerics,
        threads=threads if threads is not None else scenario.numerics.threads,
        rel_tol=rel_tol if rel_tol is not None else scenario.numerics.rel_tol,
        k_min=k_min if k_min is not None else scenario.numerics.k_min,
        k_max=k_max if k_max is not None else scenario.numerics.k_max,
    )
    output = dataclasses.replace(
        scenario.output,
        directory=out_dir if out_dir is not None else scenario.output.directory,
        format=output_format if output_format is not None else scenario.output.format,
    )
    updated = dataclasses.replace(scenario, numerics=numerics, output=output)
    validate_scenario(updated)
    return updated


def scenario_name(scenario: Scenario) -> str:
    name = scenario.run.name or os.path.splitext(os.path.basename(scenario.source_path))[0] or "scenario"
    return "".join(c.lower() if c.isalnum() else "_" for c in name)


def decide_output_path(
    scenario: Scenario,
    explicit_out_dir: Optional[str] = None,
) -> str:
    """
    Decide the directory receiving the run's artifacts.

    An explicit directory wins, then output.directory from the scenario,
    otherwise reports/<scenario name>/.
    """
    out_dir = explicit_out_dir or scenario.output.directory or os.path.join("reports", scenario_name(scenario))

    if not os.path.isdir(out_dir):
        os.makedirs(out_dir, exist_ok=True)

    return out_dir
