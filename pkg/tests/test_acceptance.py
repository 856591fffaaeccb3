"""
End-to-end physics checks on full scenarios.

Slow: select with `pytest -m acceptance`, skip with `-m "not acceptance"`.
Transform exactness, trajectory geometry and the atomic smearing are
checked at their stated tolerances in the per-module tests.
"""

from pathlib import Path

import numpy as np
import pytest

from udw_wavepacket.config_io import parse_ini
from udw_wavepacket.core import run_scenario
from udw_wavepacket.fock_oracle import richardson_errors
from udw_wavepacket.kinematics import TrajectoryFrame
from udw_wavepacket.profiles import SpatialProfile, modulate
from udw_wavepacket.quadrature import QuadratureSpec
from udw_wavepacket.response import (
    DetectorConfig,
    KernelVariant,
    ResponseNumerics,
    WavepacketSpectrum,
    build_kernel,
    excitation_probability,
    spectral_response,
)


pytestmark = pytest.mark.acceptance

GAP = 1.0


def _numerics(**changes) -> ResponseNumerics:
    spec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-30, max_panels=40000, workers=4)
    return ResponseNumerics(spec=spec, **changes)


def _detector(
    profile: SpatialProfile,
    window: tuple[float, float],
    acceleration: float = 0.0,
    **numerics,
) -> DetectorConfig:
    return DetectorConfig(
        gap=GAP,
        coupling=1.0,
        profile=profile,
        frame=TrajectoryFrame(acceleration=acceleration),
        window=window,
        numerics=_numerics(**numerics),
    )


def _assert_positive(value: float, error: float) -> None:
    assert value >= -5.0 * error


def test_unmodulated_wide_profile_misses_resonant_packet() -> None:
    L = 5.0
    packet = WavepacketSpectrum.gaussian(GAP, 0.05)
    window = (-10.0, 10.0)
    plain = _detector(SpatialProfile.gaussian(L), window, cutoff_sensitivity=False)
    tuned = _detector(modulate(SpatialProfile.gaussian(L), GAP), window, cutoff_sensitivity=False)

    # Packet part only; the vacuum part does not see the signal.
    suppressed = excitation_probability(packet, plain, vacuum_term=(0.0, 0.0))
    detected = excitation_probability(packet, tuned, vacuum_term=(0.0, 0.0))

    _assert_positive(suppressed.value, suppressed.quadrature_error)
    assert detected.value > 0.0
    assert suppressed.value / detected.value < 1e-9


def test_unmodulated_profile_favours_lower_frequencies() -> None:
    config = _detector(SpatialProfile.gaussian(1.0), (-10.0, 10.0))

    curve = spectral_response(config, [0.8 * GAP, 1.2 * GAP], packet_width=0.05)

    low, high = curve.points
    for point in curve.points:
        _assert_positive(point.probability, point.error)
    assert low.probability - high.probability > 5.0 * (low.error + high.error)


def test_modulated_profile_restores_symmetry() -> None:
    config = _detector(modulate(SpatialProfile.gaussian(5.0), GAP), (-40.0, 40.0))
    offsets = (0.1, 0.2, 0.3)
    carriers = sorted({GAP} | {GAP * (1 + d) for d in offsets} | {GAP * (1 - d) for d in offsets})

    curve = spectral_response(config, carriers, packet_width=0.12)

    by_carrier = dict(zip(curve.carriers, curve.probabilities))
    peak = max(curve.probabilities)
    for d in offsets:
        above = by_carrier[GAP * (1 + d)]
        below = by_carrier[GAP * (1 - d)]
        assert abs(above - below) / peak < 0.05
    for point in curve.points:
        _assert_positive(point.probability, point.error)

    period = 2.0 * np.pi / config.duration
    assert abs(curve.argmax_carrier() - GAP) <= 3.0 * period


def test_pointlike_detector_responds_symmetrically_about_its_gap() -> None:
    gap = 2.0
    config = DetectorConfig(
        gap=gap,
        coupling=1.0,
        profile=SpatialProfile.delta(),
        window=(-20.0, 20.0),
        numerics=_numerics(method="factorized", cutoff_sensitivity=False),
    )

    for offset in (0.1, 0.3):
        above = excitation_probability(WavepacketSpectrum.gaussian(gap + offset, 0.25), config, vacuum_term=(0.0, 0.0))
        below = excitation_probability(WavepacketSpectrum.gaussian(gap - offset, 0.25), config, vacuum_term=(0.0, 0.0))
        assert abs(above.value - below.value) < 1e-3 * max(above.value, below.value)


@pytest.mark.parametrize("acceleration", [0.0, 0.1])
def test_continuum_kernel_matches_fock_oracle(acceleration: float) -> None:
    config = _detector(SpatialProfile.gaussian(1.0), (0.0, 2.0), acceleration, k_min=0.5, k_max=1.5)
    packet = WavepacketSpectrum.gaussian(1.0, 0.1)

    errors = richardson_errors(packet, config, np.linspace(0.0, 2.0, 5), (16, 32, 64))

    assert errors[64] < 1e-3
    assert errors[64] < errors[16]


@pytest.mark.parametrize(
    "profile",
    [SpatialProfile.gaussian(1.0), modulate(SpatialProfile.gaussian(2.0), GAP), SpatialProfile.delta()],
)
def test_cos_form_equivalence_on_sampled_pairs(profile: SpatialProfile) -> None:
    config = _detector(profile, (0.0, 4.0))
    packet = WavepacketSpectrum.gaussian(1.0, 0.1)
    taus = np.linspace(0.0, 4.0, 5)

    general = build_kernel(packet, config, KernelVariant.GENERAL).grid(taus, taus).sum(axis=-1)
    symmetric = build_kernel(packet, config, KernelVariant.COS_SIMPLIFIED).grid(taus, taus).sum(axis=-1)

    assert np.all(np.abs(symmetric - general) <= 1e-6 * np.abs(general))
    np.testing.assert_allclose(np.diag(general).imag, 0.0, atol=1e-12 * np.max(np.abs(general)))
    assert np.max(np.abs(general - np.conj(general.T))) < 1e-8 * np.max(np.abs(general))


def test_small_acceleration_approaches_inertial_response() -> None:
    packet = WavepacketSpectrum.gaussian(1.0, 0.1)
    profile = SpatialProfile.gaussian(1.0)
    inertial = excitation_probability(packet, _detector(profile, (0.0, 2.0), cutoff_sensitivity=False)).value

    gaps = []
    for eps in (1e-3, 1e-4, 1e-5):
        result = excitation_probability(packet, _detector(profile, (0.0, 2.0), eps, cutoff_sensitivity=False))
        _assert_positive(result.value, result.quadrature_error)
        gaps.append(abs(result.value - inertial))

    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3 * inertial


RESPOND_INI = """
[run]
name = determinism

[detector]
gap = 1.0
tau0 = 0
tau1 = 4

[packet]
center = 1.0
width = 0.1

[numerics]
kernel_grid = 4
"""

SCAN_INI = RESPOND_INI + """
[scan]
carriers = 0.9, 1.0, 1.1
packet_width = 0.1
"""


@pytest.mark.parametrize("run_kind, text", [("respond", RESPOND_INI), ("scan", SCAN_INI)])
def test_outputs_identical_for_any_worker_count(tmp_path: Path, run_kind: str, text: str) -> None:
    written = {}
    for threads in (1, 4, 8):
        out = tmp_path / f"t{threads}"
        outcome = run_scenario(parse_ini(text), run_kind=run_kind, out_dir=str(out), threads=threads, show_progress=False)
        written[threads] = {Path(p).name: Path(p).read_bytes() for p in outcome.artifacts}

    assert written[1] == written[4] == written[8]
