import math

import numpy as np
import pytest

from udw_wavepacket.errors import HorizonCrossing, ZeroWavenumber
from udw_wavepacket.kinematics import (
    TrajectoryFrame,
    dreibein,
    four_velocity,
    fw_displacement,
    fw_event,
    minkowski_inner,
    packet_phase,
    phase,
    resonance_frequency,
    wavenumber_scale,
)


def test_event_at_zero_proper_time() -> None:
    frame = TrajectoryFrame(acceleration=0.5)
    event = fw_event(frame, 0.0, 0.3)

    assert event.t == 0.0
    assert event.x == pytest.approx(2.0 + 0.3)


def test_event_on_unit_hyperbola() -> None:
    event = fw_event(TrajectoryFrame(acceleration=1.0), 1.0, 0.0)

    assert event.t == pytest.approx(math.sinh(1.0), rel=1e-14)
    assert event.x == pytest.approx(math.cosh(1.0), rel=1e-14)


def test_small_acceleration_centre_worldline() -> None:
    frame = TrajectoryFrame(acceleration=1e-9)
    event = fw_event(frame, 1.0, 0.0)

    assert event.t == pytest.approx(1.0, rel=1e-9)
    assert event.x == pytest.approx(1e9, rel=1e-9)


def test_inertial_branch() -> None:
    event = fw_event(TrajectoryFrame(), np.array([0.0, 1.5]), 0.4)

    np.testing.assert_allclose(event.t, [0.0, 1.5])
    np.testing.assert_allclose(event.x, [0.4, 0.4])


def test_horizon_crossing() -> None:
    frame = TrajectoryFrame(acceleration=1.0)
    with pytest.raises(HorizonCrossing):
        fw_event(frame, 0.0, -1.0)
    with pytest.raises(HorizonCrossing):
        TrajectoryFrame(acceleration=1.0, extent=1.0)


def test_frame_validation() -> None:
    with pytest.raises(ValueError):
        TrajectoryFrame(acceleration=-1.0)
    with pytest.raises(ValueError):
        TrajectoryFrame(c=0.0)


def test_hyperbolic_worldline() -> None:
    frame = TrajectoryFrame(acceleration=0.7, c=1.3)
    taus = np.linspace(-3.0, 3.0, 25)
    event = fw_event(frame, taus, 0.0)

    invariant = event.x ** 2 - frame.c ** 2 * event.t ** 2
    np.testing.assert_allclose(invariant, frame.horizon_distance ** 2, rtol=1e-10)


def test_displacement_matches_event() -> None:
    frame = TrajectoryFrame(acceleration=0.5)
    taus = np.linspace(-2.0, 2.0, 9)
    t, dx = fw_displacement(frame, taus, 0.25)
    event = fw_event(frame, taus, 0.25)

    np.testing.assert_allclose(t, event.t, rtol=1e-14)
    np.testing.assert_allclose(dx, event.x - frame.horizon_distance, atol=1e-12)


def test_dreibein_is_unit_spacelike_and_orthogonal() -> None:
    frame = TrajectoryFrame(acceleration=0.8)
    np.testing.assert_allclose(dreibein(frame, 0.0), [0.0, 1.0, 0.0, 0.0])
    for tau in np.linspace(-2.0, 2.0, 11):
        e = dreibein(frame, tau)
        u = four_velocity(frame, tau)
        assert minkowski_inner(e, e) == pytest.approx(-1.0, abs=1e-12)
        assert minkowski_inner(u, u) == pytest.approx(1.0, abs=1e-12)
        assert abs(minkowski_inner(e, u)) < 1e-12


def test_phase_factorizes() -> None:
    frame = TrajectoryFrame(acceleration=0.6)
    ks = np.concatenate([-np.linspace(0.2, 3.0, 5), np.linspace(0.2, 3.0, 5)])
    taus = np.linspace(-1.5, 1.5, 10)
    chis = np.linspace(-1.0, 1.0, 10)

    worst = 0.0
    for k in ks:
        for tau in taus:
            full = phase(frame, k, tau, chis)
            factored = wavenumber_scale(frame, k, tau) * (chis + frame.horizon_distance)
            worst = max(worst, float(np.max(np.abs(full - factored))))

    assert worst < 1e-10


def test_wavenumber_scale_branches() -> None:
    frame = TrajectoryFrame(acceleration=1.0)

    assert wavenumber_scale(frame, 2.0, 0.0) == 2.0
    assert wavenumber_scale(frame, 2.0, 1.0) == pytest.approx(2.0 * math.exp(-1.0))
    assert wavenumber_scale(frame, -2.0, 1.0) == pytest.approx(-2.0 * math.exp(1.0))


def test_phase_at_zero_proper_time() -> None:
    frame = TrajectoryFrame(acceleration=0.5)

    assert phase(frame, 1.7, 0.0, 0.2) == pytest.approx(1.7 * (0.2 + 2.0), rel=1e-14)


def test_zero_wavenumber_rejected() -> None:
    with pytest.raises(ZeroWavenumber):
        phase(TrajectoryFrame(acceleration=1.0), 0.0, 1.0, 0.0)
    with pytest.raises(ZeroWavenumber):
        packet_phase(TrajectoryFrame(), np.array([1.0, 0.0]), 1.0)


def test_packet_phase_is_anchored_phase() -> None:
    frame = TrajectoryFrame(acceleration=0.5)
    for k in (-1.3, 0.4, 2.0):
        for tau in (-1.0, 0.3, 2.0):
            expected = phase(frame, k, tau, 0.0) - k * frame.horizon_distance
            assert packet_phase(frame, k, tau) == pytest.approx(expected, abs=1e-12)


def test_packet_phase_inertial_limit() -> None:
    k = np.array([-2.0, -0.5, 0.5, 2.0])
    inertial = packet_phase(TrajectoryFrame(), k, 3.0)

    np.testing.assert_allclose(inertial, -np.abs(k) * 3.0)
    np.testing.assert_allclose(packet_phase(TrajectoryFrame(acceleration=1e-8), k, 3.0), inertial, atol=1e-6)


def _rest_frame_distance(frame: TrajectoryFrame, tau: float, distance: float) -> float:
    t0, dx0 = fw_displacement(frame, tau, 0.0)
    t1, dx1 = fw_displacement(frame, tau, distance)
    separation = np.array([frame.c * (t1 - t0), dx1 - dx0, 0.0, 0.0])
    return math.sqrt(max(-minkowski_inner(separation, separation), 0.0))


def test_rigidity() -> None:
    frame = TrajectoryFrame(acceleration=0.9)
    for tau in np.linspace(-2.0, 2.0, 9):
        for d in (0.1, 0.5, 1.0):
            assert _rest_frame_distance(frame, tau, d) == pytest.approx(d, abs=1e-10)


def test_inertial_continuity_is_first_order() -> None:
    tau, chi = 1.0, 0.5
    gaps = []
    for eps in (1e-3, 1e-4, 1e-5):
        t, _ = fw_displacement(TrajectoryFrame(acceleration=eps), tau, chi)
        gaps.append(abs(t - tau))

    assert gaps[0] > gaps[1] > gaps[2]
    assert 9.0 < gaps[0] / gaps[1] < 11.0
    assert 9.0 < gaps[1] / gaps[2] < 11.0


def test_resonance_frequency() -> None:
    assert resonance_frequency(TrajectoryFrame(acceleration=1.0), 1.0, math.log(2.0)) == pytest.approx(2.0, rel=1e-15)
    assert resonance_frequency(TrajectoryFrame(acceleration=0.3), 1.5, 0.0) == 1.5
    np.testing.assert_allclose(resonance_frequency(TrajectoryFrame(), 1.5, np.array([-3.0, 4.0])), [1.5, 1.5])
    with pytest.raises(ValueError):
        resonance_frequency(TrajectoryFrame(), 0.0, 1.0)
