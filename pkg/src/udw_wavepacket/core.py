# src/udw_wavepacket/core.py
#
# High-level orchestration of scenario runs:
# - Build profile, detector and packet from a validated Scenario
# - Run the requested computation (profile, respond, scan, qed) under a spinner
# - Write the JSON envelope plus the requested tabular/report artifacts

import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import pandas as pd

from .config_io import (
    Scenario,
    apply_overrides,
    decide_output_path,
    load_scenario,
    scenario_name,
)
from .errors import ConfigError, QuadratureFailure
from .kinematics import TrajectoryFrame
from .logging_utils import format_estimate, log_error, log_info
from .profiles import SpatialProfile, load_profile, modulate, numeric_spectral, spectral
from .qed_bridge import (
    StateLabel,
    WavefunctionGrid,
    decompose,
    hermite_wavefunction,
    load_wavefunction,
    perturbativity_ratio,
    smearing_from_wavefunctions,
)
from .quadrature import QuadratureSpec
from .report_writer import (
    export_decomposition,
    generate_markdown_report,
    save_report,
    write_csv,
    write_excel,
    write_json_envelope,
)
from .response import (
    DetectorConfig,
    KernelVariant,
    ResponseNumerics,
    WavepacketSpectrum,
    build_kernel,
    excitation_probability,
    kernel_table,
    spectral_response,
)
from .spinner import Spinner
from .table_reader import load_complex_table


@dataclass
class RunOutcome:
    """What a run produced: summary results, data tables and the files written."""

    run_kind: str
    results: dict[str, Any]
    table: Optional[pd.DataFrame] = None
    extra_tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    probability: Optional[float] = None
    error: Optional[float] = None
    evaluations: int = 0
    wall_time: float = 0.0
    artifacts: list[str] = field(default_factory=list)
    decomposition: Any = None

    def summary_line(self) -> str:
        if self.probability is None:
            return f"{self.run_kind} | evaluations {self.evaluations} | wall {self.wall_time:.2f} s"
        return (
            f"P = {format_estimate(self.probability, self.error)} | "
            f"evaluations {self.evaluations} | wall {self.wall_time:.2f} s"
        )


def _as_config_error(section: str, error: ValueError) -> ConfigError:
    if isinstance(error, ConfigError):
        return error
    return ConfigError(section, str(error))


def build_profile(scenario: Scenario) -> SpatialProfile:
    """Spatial smearing in natural units, modulated by the gap when requested."""
    p = scenario.profile
    units = scenario.units
    try:
        if p.kind == "delta":
            profile = SpatialProfile.delta(units.length_in(p.center))
        elif p.kind == "gaussian":
            profile = SpatialProfile.gaussian(units.length_in(p.width), units.length_in(p.center))
        elif p.kind == "lorentzian":
            profile = SpatialProfile.lorentzian(units.length_in(p.width), units.length_in(p.center))
        else:
            profile = load_profile(p.path)
            if units.length != 1.0:
                profile = SpatialProfile.tabulated(
                    units.length_in(profile.x_grid), np.asarray(profile.values) * units.length
                )
        if p.modulated:
            d = scenario.detector
            profile = modulate(profile, units.frequency_in(d.gap), units.speed_in(d.c))
    except FileNotFoundError:
        raise
    except ValueError as e:
        raise _as_config_error("profile", e) from e
    return profile


def build_numerics(scenario: Scenario) -> ResponseNumerics:
    n = scenario.numerics
    units = scenario.units
    try:
        return ResponseNumerics(
            spec=QuadratureSpec(
                rel_tol=n.rel_tol,
                abs_tol=n.abs_tol,
                max_panels=n.max_panels,
                workers=n.threads,
            ),
            k_min=None if n.k_min is None else units.wavenumber_in(n.k_min),
            k_max=None if n.k_max is None else units.wavenumber_in(n.k_max),
            k_rel_tol=n.k_rel_tol,
            max_k_panels=n.max_k_panels,
            cutoff_sensitivity=n.cutoff_sensitivity,
            method=n.method,
        )
    except ValueError as e:
        raise _as_config_error("numerics", e) from e


def build_detector(scenario: Scenario, profile: Optional[SpatialProfile] = None) -> DetectorConfig:
    d = scenario.detector
    units = scenario.units
    profile = profile or build_profile(scenario)
    try:
        frame = TrajectoryFrame(
            acceleration=units.acceleration_in(d.acceleration),
            c=units.speed_in(d.c),
            extent=profile.extent,
        )
        return DetectorConfig(
            gap=units.frequency_in(d.gap),
            coupling=d.coupling,
            profile=profile,
            frame=frame,
            window=(units.time_in(d.tau0), units.time_in(d.tau1)),
            numerics=build_numerics(scenario),
        )
    except ValueError as e:
        raise _as_config_error("detector", e) from e


def build_packet(scenario: Scenario) -> WavepacketSpectrum:
    k = scenario.packet
    units = scenario.units
    try:
        if k.shape == "gaussian":
            return WavepacketSpectrum.gaussian(
                units.wavenumber_in(k.center), units.wavenumber_in(k.width), k.n_sigma
            )
        k_grid, values = load_complex_table(k.path)
        return WavepacketSpectrum.tabulated(units.wavenumber_in(k_grid), values)
    except FileNotFoundError:
        raise
    except ValueError as e:
        raise _as_config_error("packet", e) from e


def run_profile(scenario: Scenario, show_progress: bool = True) -> RunOutcome:
    """Smearing transform F_hat(k) on the spectrum grid."""
    profile = build_profile(scenario)
    sp = scenario.spectrum
    units = scenario.units
    k_user = np.linspace(sp.k_min, sp.k_max, sp.points)
    k_nat = units.wavenumber_in(k_user)

    log_info(f"Transforming {profile.kind.value} profile on {sp.points} wavenumbers...")
    spinner = Spinner("Transforming profile...", tag="PROFILE", enabled=show_progress)
    spinner.start()
    try:
        transform = numeric_spectral(profile) if sp.numeric else spectral(profile)
        values = np.asarray(transform(k_nat), dtype=complex)
    except QuadratureFailure as e:
        log_error(f"Profile transform failed: {e}")
        raise
    finally:
        spinner.stop()

    table = pd.DataFrame({"k": k_user, "re_F": values.real, "im_F": values.imag})
    results = {
        "profile": profile.describe(),
        "provenance": transform.provenance.value,
        "points": int(sp.points),
        "max_abs_F": float(np.max(np.abs(values))),
    }
    return RunOutcome("profile", results, table=table, wall_time=spinner.elapsed)


def run_respond(scenario: Scenario, show_progress: bool = True) -> RunOutcome:
    """Excitation probability for one packet, with an optional kernel dump."""
    config = build_detector(scenario)
    packet = build_packet(scenario)
    variant = KernelVariant(scenario.numerics.variant)
    units = scenario.units

    log_info(f"Detector: gap {config.gap:g}, window [{config.window[0]:g}, {config.window[1]:g}], "
             f"acceleration {config.frame.acceleration:g}, k-domain {config.k_domain}")
    spinner = Spinner("Integrating excitation probability...", tag="RESPOND", enabled=show_progress)
    spinner.start()
    try:
        kernel = build_kernel(packet, config, variant)
        result = excitation_probability(packet, config, variant, kernel=kernel)
        extra = {}
        if scenario.numerics.kernel_grid > 0:
            grid = np.linspace(config.window[0], config.window[1], scenario.numerics.kernel_grid)
            dump = kernel_table(kernel, grid)
            dump["tau_prime"] = units.time_out(dump["tau_prime"])
            dump["tau_dprime"] = units.time_out(dump["tau_dprime"])
            extra["kernel"] = dump
    except QuadratureFailure as e:
        log_error(f"Response integration failed: {e}")
        raise
    finally:
        spinner.stop()

    results = result.as_dict()
    results["packet"] = packet.describe()
    results["detector"] = config.describe()
    table = pd.DataFrame(
        [
            {
                "probability": result.value,
                "error": result.quadrature_error,
                "vacuum_term": result.breakdown["vacuum_term"],
                "packet_term": result.breakdown["packet_term"],
                "evaluations": result.evaluations,
                "converged": result.converged,
            }
        ]
    )
    return RunOutcome(
        "respond",
        results,
        table=table,
        extra_tables=extra,
        probability=result.value,
        error=result.quadrature_error,
        evaluations=result.evaluations,
        wall_time=spinner.elapsed,
    )


def run_scan(scenario: Scenario, show_progress: bool = True) -> RunOutcome:
    """Excitation probability against the packet's carrier frequency."""
    config = build_detector(scenario)
    units = scenario.units
    carriers = [units.frequency_in(w) for w in scenario.carriers()]
    width = units.frequency_in(scenario.scan.packet_width)
    variant = KernelVariant(scenario.numerics.variant)

    log_info(f"Scanning {len(carriers)} carriers, packet width {width:g}...")
    spinner = Spinner("Scanning carriers...", tag="SCAN", enabled=show_progress)
    spinner.start()
    try:
        curve = spectral_response(config, carriers, width, scenario.packet.n_sigma, variant)
    except QuadratureFailure as e:
        log_error(f"Carrier scan failed: {e}")
        raise
    except ValueError as e:
        log_error(f"Carrier scan rejected its input: {e}")
        raise _as_config_error("scan", e) from e
    finally:
        spinner.stop()

    table = curve.to_frame()
    table["carrier"] = units.frequency_out(table["carrier"])
    best = int(np.argmax(curve.probabilities))
    results = {
        "points": len(curve.points),
        "argmax_carrier": float(table["carrier"].iloc[best]),
        "max_probability": float(curve.probabilities[best]),
        "vacuum_term": curve.points[0].vacuum_term,
        "detector": config.describe(),
    }
    return RunOutcome(
        "scan",
        results,
        table=table,
        probability=curve.points[best].probability,
        error=curve.points[best].error,
        evaluations=int(table["evaluations"].sum()),
        wall_time=spinner.elapsed,
    )


_HERMITE_ORDERS = {"gaussian": 0, "hermite1": 1, "hermite2": 2}


def _wavefunction(source: str, scenario: Scenario, label: StateLabel) -> WavefunctionGrid:
    q = scenario.qed
    units = scenario.units
    if source in _HERMITE_ORDERS:
        sigma = units.length_in(q.sigma)
        # Built-in states share one grid, wide enough for the highest order.
        top = max(_HERMITE_ORDERS.get(s, 0) for s in (q.ground, q.excited))
        half_width = (
            units.length_in(q.half_width)
            if q.half_width is not None
            else (9.0 + math.sqrt(2.0 * top + 1.0)) * sigma
        )
        return hermite_wavefunction(_HERMITE_ORDERS[source], sigma, half_width, q.points, label)
    psi = load_wavefunction(source, label)
    if units.length != 1.0:
        psi = WavefunctionGrid.from_samples(units.length_in(psi.x_grid), psi.values, label)
    return psi


def run_qed(scenario: Scenario, show_progress: bool = True) -> RunOutcome:
    """Pauli decomposition of the atom-field interaction and the derived smearing."""
    q = scenario.qed
    units = scenario.units
    try:
        ground = _wavefunction(q.ground, scenario, StateLabel.GROUND)
        excited = _wavefunction(q.excited, scenario, StateLabel.EXCITED)
    except FileNotFoundError:
        raise
    except ValueError as e:
        log_error(f"Failed to build wavefunctions: {e}")
        raise _as_config_error("qed", e) from e

    p_grid = np.geomspace(units.wavenumber_in(q.p_min), units.wavenumber_in(q.p_max), q.p_points)
    spinner = Spinner("Decomposing interaction...", tag="QED", enabled=show_progress)
    spinner.start()
    try:
        decomp = decompose(ground, excited, p_grid=p_grid, coupling=q.coupling, ir_fraction=q.ir_fraction)
    except ValueError as e:
        log_error(f"Decomposition failed: {e}")
        raise _as_config_error("qed", e) from e
    finally:
        spinner.stop()

    smearing = smearing_from_wavefunctions(excited, ground)
    smearing_table = pd.DataFrame(
        {
            "x": smearing.x_grid * units.length,
            "re_F": smearing.values.real,
            "im_F": smearing.values.imag,
        }
    )
    results = decomp.summary()
    results["perturbativity_ratio"] = perturbativity_ratio(decomp)
    return RunOutcome(
        "qed",
        results,
        table=decomp.to_frame(),
        extra_tables={"smearing": smearing_table},
        wall_time=spinner.elapsed,
        decomposition=decomp,
    )


RUNNERS = {
    "profile": run_profile,
    "respond": run_respond,
    "scan": run_scan,
    "qed": run_qed,
}


def write_artifacts(outcome: RunOutcome, scenario: Scenario, out_dir: str) -> list[str]:
    """JSON envelope always; CSV, Markdown, PDF or Excel according to output.format."""
    stem = os.path.join(out_dir, f"{scenario_name(scenario)}_{outcome.run_kind}")
    fmt = scenario.output.format
    written = [str(write_json_envelope(f"{stem}.json", scenario, outcome.run_kind, outcome.results))]

    if fmt == "csv":
        if outcome.decomposition is not None:
            written.append(str(export_decomposition(outcome.decomposition, f"{stem}.csv", scenario)))
        elif outcome.table is not None:
            written.append(str(write_csv(outcome.table, f"{stem}.csv", scenario, outcome.run_kind)))
        for name, frame in outcome.extra_tables.items():
            written.append(str(write_csv(frame, f"{stem}_{name}.csv", scenario, outcome.run_kind)))
    elif fmt in ("markdown", "pdf"):
        content = generate_markdown_report(scenario, outcome.run_kind, outcome.results, outcome.table)
        suffix = ".md" if fmt == "markdown" else ".pdf"
        written.append(str(save_report(content, f"{stem}{suffix}", fmt)))
    else:
        sheets = {}
        if outcome.table is not None:
            sheets[outcome.run_kind] = outcome.table
        sheets.update(outcome.extra_tables)
        written.append(str(write_excel(f"{stem}.xlsx", sheets, scenario)))

    for path in written:
        log_info(f"Wrote '{path}'.")
    return written


def run_scenario(
    scenario: Scenario | str,
    run_kind: Optional[str] = None,
    out_dir: Optional[str] = None,
    threads: Optional[int] = None,
    rel_tol: Optional[float] = None,
    k_min: Optional[float] = None,
    k_max: Optional[float] = None,
    output_format: Optional[str] = None,
    show_progress: bool = True,
) -> RunOutcome:
    """
    Load (if given a path), apply overrides, dispatch to the named run and
    write its artifacts.
    """
    if isinstance(scenario, str):
        log_info(f"Loading scenario from '{scenario}'...")
        try:
            scenario = load_scenario(scenario)
        except (FileNotFoundError, ValueError) as e:
            log_error(f"Failed to load scenario: {e}")
            raise

    try:
        if run_kind is not None:
            scenario = dataclasses.replace(scenario, run=dataclasses.replace(scenario.run, kind=run_kind))
        scenario = apply_overrides(scenario, out_dir, threads, rel_tol, k_min, k_max, output_format)
    except ValueError as e:
        log_error(f"Invalid overrides: {e}")
        raise

    runner = RUNNERS[scenario.run.kind]
    outcome = runner(scenario, show_progress=show_progress)
    target = decide_output_path(scenario, out_dir)
    outcome.artifacts = write_artifacts(outcome, scenario, target)
    log_info(outcome.summary_line())
    return outcome
