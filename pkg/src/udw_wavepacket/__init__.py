# src/udw_wavepacket/__init__.py
#
# Package init for udw-wavepacket.

from .core import run_scenario, run_profile, run_respond, run_scan, run_qed, RunOutcome
from .config_io import Scenario, load_scenario, parse_ini
from .profiles import SpatialProfile, SpectralProfile, spectral, modulate, numeric_spectral, eval_spatial
from .kinematics import TrajectoryFrame, fw_event, phase, packet_phase, resonance_frequency
from .response import (
    DetectorConfig,
    ResponseNumerics,
    WavepacketSpectrum,
    KernelVariant,
    build_kernel,
    correlation_general,
    correlation_symmetric,
    excitation_probability,
    spectral_response,
)
from .qed_bridge import WavefunctionGrid, decompose, matrix_element_G, smearing_from_wavefunctions
from .quadrature import QuadratureSpec, integrate_1d, integrate_2d, oracle_riemann
from .fock_oracle import discrete_mode_correlation, richardson_errors

__all__ = [
    # Scenario runs
    "run_scenario",
    "run_profile",
    "run_respond",
    "run_scan",
    "run_qed",
    "RunOutcome",
    "Scenario",
    "load_scenario",
    "parse_ini",
    # Smearing profiles
    "SpatialProfile",
    "SpectralProfile",
    "spectral",
    "modulate",
    "numeric_spectral",
    "eval_spatial",
    # Trajectories
    "TrajectoryFrame",
    "fw_event",
    "phase",
    "packet_phase",
    "resonance_frequency",
    # Response
    "DetectorConfig",
    "ResponseNumerics",
    "WavepacketSpectrum",
    "KernelVariant",
    "build_kernel",
    "correlation_general",
    "correlation_symmetric",
    "excitation_probability",
    "spectral_response",
    # QED bridge
    "WavefunctionGrid",
    "decompose",
    "matrix_element_G",
    "smearing_from_wavefunctions",
    # Quadrature
    "QuadratureSpec",
    "integrate_1d",
    "integrate_2d",
    "oracle_riemann",
    # Oracle
    "discrete_mode_correlation",
    "richardson_errors",
]
