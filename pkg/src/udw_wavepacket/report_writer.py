"""
Result files for detector runs.

Every artifact carries the fully resolved scenario:
- CSV: '#'-prefixed provenance lines, then the table (RFC-4180 quoting via pandas)
- JSON: result envelope {"tool", "run", "scenario", "results"}
- Markdown / PDF: human-readable run report
- Excel: data sheets plus a "scenario" sheet

Wall-clock times, the worker count and the output directory never enter a
file, so reruns with any thread count write identical bytes wherever they land.
"""

import json
from pathlib import Path
from typing import TYPE_CHECKING, Any, Mapping, Optional

import numpy as np
import pandas as pd

from .pdf_writer import save_pdf_from_markdown

if TYPE_CHECKING:
    from .config_io import Scenario
    from .qed_bridge import HamiltonianDecomposition


TOOL_NAME = "udw-wavepacket"
# Rows of a data table shown in the Markdown report.
_PREVIEW_ROWS = 40


def resolved_scenario(scenario: "Scenario") -> dict:
    """The scenario as written into result files, without the thread count and output directory."""
    data = scenario.to_dict()
    data["numerics"].pop("threads", None)
    data["output"].pop("directory", None)
    return data


def provenance_lines(scenario: "Scenario", run_kind: str) -> list[str]:
    lines = [f"# {TOOL_NAME} {run_kind} run"]
    for section, values in resolved_scenario(scenario).items():
        for key, value in values.items():
            lines.append(f"# {section}.{key} = {_plain(value)}")
    return lines


def _plain(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_csv(frame: pd.DataFrame, path: str | Path, scenario: "Scenario", run_kind: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(provenance_lines(scenario, run_kind)) + "\n")
        frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    return path


def read_csv(path: str | Path) -> pd.DataFrame:
    """Read back a result CSV, skipping the provenance block."""
    return pd.read_csv(path, comment="#")


def write_json_envelope(
    path: str | Path,
    scenario: "Scenario",
    run_kind: str,
    results: Mapping[str, Any],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    envelope = {
        "tool": TOOL_NAME,
        "run": run_kind,
        "scenario": resolved_scenario(scenario),
        "results": _jsonable(results),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(envelope, f, indent=2, sort_keys=False)
        f.write("\n")
    return path


def _escape(value: Any) -> str:
    return _plain(value).replace("|", "\\|")


def _markdown_table(frame: pd.DataFrame, max_rows: int = _PREVIEW_ROWS) -> list[str]:
    lines = []
    lines.append("| " + " | ".join(str(c) for c in frame.columns) + " |")
    lines.append("|" + "|".join("---" for _ in frame.columns) + "|")
    for row in frame.head(max_rows).itertuples(index=False):
        cells = [f"{v:.10g}" if isinstance(v, float) else _escape(v) for v in row]
        lines.append("| " + " | ".join(cells) + " |")
    if len(frame) > max_rows:
        lines.append("")
        lines.append(f"*{len(frame) - max_rows} more rows in the CSV output.*")
    return lines


def generate_markdown_report(
    scenario: "Scenario",
    run_kind: str,
    results: Mapping[str, Any],
    table: Optional[pd.DataFrame] = None,
) -> str:
    """Markdown run report: results, the data table preview and the resolved scenario."""
    lines = []

    lines.append(f"# Detector {run_kind} report")
    lines.append("")
    name = scenario.run.name or Path(scenario.source_path).stem or "scenario"
    lines.append(f"**Scenario:** {name}")
    lines.append("")

    lines.append("## Results")
    lines.append("")
    for key, value in _jsonable(results).items():
        if isinstance(value, dict):
            lines.append(f"- **{key}:**")
            for sub_key, sub_value in value.items():
                lines.append(f"  - {sub_key}: {_escape(sub_value)}")
        else:
            lines.append(f"- **{key}:** {_escape(value)}")
    lines.append("")

    if table is not None and not table.empty:
        lines.append("## Data")
        lines.append("")
        lines.extend(_markdown_table(table))
        lines.append("")

    lines.append("## Scenario")
    lines.append("")
    lines.append("| Field | Value |")
    lines.append("|-------|-------|")
    for section, values in resolved_scenario(scenario).items():
        for key, value in values.items():
            lines.append(f"| {section}.{key} | {_escape(value)} |")
    lines.append("")

    return "\n".join(lines)


def write_excel(
    path: str | Path,
    sheets: Mapping[str, pd.DataFrame],
    scenario: "Scenario",
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        {"section": section, "field": key, "value": _plain(value)}
        for section, values in resolved_scenario(scenario).items()
        for key, value in values.items()
    ]
    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        for name, frame in sheets.items():
            frame.to_excel(writer, sheet_name=name[:31], index=False)
        pd.DataFrame(rows).to_excel(writer, sheet_name="scenario", index=False)
    return path


def save_report(content: str, output_path: str | Path, output_format: str = "markdown") -> Path:
    """
    Save a Markdown report, rendered to PDF when output_format is "pdf".
    """
    output_path = Path(output_path)

    # Ensure parent directory exists
    output_path.parent.mkdir(parents=True, exist_ok=True)

    if output_format == "pdf":
        save_pdf_from_markdown(content, str(output_path))
    else:
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(content)
    return output_path


def export_decomposition(
    decomp: "HamiltonianDecomposition",
    path: str | Path,
    scenario: Optional["Scenario"] = None,
) -> Path:
    """G and density table of a decomposition, with its constants in the '#' header block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [f"# {TOOL_NAME} qed decomposition"]
    if scenario is not None:
        header = provenance_lines(scenario, "qed")
    for key, value in _jsonable(decomp.summary()).items():
        if isinstance(value, dict):
            for sub_key, sub_value in value.items():
                header.append(f"# {key}.{sub_key} = {_plain(sub_value)}")
        else:
            header.append(f"# {key} = {_plain(value)}")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(header) + "\n")
        decomp.to_frame().to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    return path
