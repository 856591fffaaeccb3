import math

import numpy as np
import pytest

from udw_wavepacket.errors import HorizonCrossing, NegativeBeyondTolerance, PreconditionViolated
from udw_wavepacket.kinematics import TrajectoryFrame
from udw_wavepacket.profiles import SpatialProfile, modulate
from udw_wavepacket.quadrature import oracle_riemann
from udw_wavepacket.response import (
    DetectorConfig,
    KernelVariant,
    ResponseNumerics,
    WavepacketSpectrum,
    G_pm,
    build_kernel,
    correlation_general,
    excitation_probability,
    kernel_table,
    _tau_panels,
    mode_function,
    spectral_response,
)


def _config(profile: SpatialProfile | None = None, **kwargs) -> DetectorConfig:
    kwargs.setdefault("window", (0.0, 2.0))
    return DetectorConfig(gap=1.0, coupling=1.0, profile=profile or SpatialProfile.gaussian(1.0), **kwargs)


def _packet() -> WavepacketSpectrum:
    return WavepacketSpectrum.gaussian(1.0, 0.1)


def test_gaussian_packet_is_normalized() -> None:
    packet = _packet()

    assert packet.norm() == pytest.approx(1.0, abs=1e-10)
    assert packet.support == pytest.approx((0.5, 1.5))
    assert packet.is_real
    assert packet.describe()["center"] == 1.0


def test_packet_support_must_exclude_zero() -> None:
    with pytest.raises(ValueError, match="exclude"):
        WavepacketSpectrum.gaussian(0.1, 0.1)


def test_packet_must_be_normalized() -> None:
    base = _packet()
    with pytest.raises(ValueError, match="normalized"):
        WavepacketSpectrum(lambda k: 2.0 * base(k), base.support)


def test_packet_width_validated() -> None:
    with pytest.raises(ValueError):
        WavepacketSpectrum.gaussian(1.0, 0.0)


def test_tabulated_packet() -> None:
    k = np.linspace(0.5, 1.5, 41)
    packet = WavepacketSpectrum.tabulated(k, 5.0 * (k - 0.5) * (1.5 - k))

    assert packet.is_real
    assert packet.center == pytest.approx(1.0, abs=1e-12)
    assert packet(1.0) == pytest.approx(math.sqrt(30.0) / 4.0, rel=1e-10)
    with pytest.raises(ValueError):
        WavepacketSpectrum.tabulated(k[::-1], np.ones_like(k))


def test_detector_validation() -> None:
    with pytest.raises(ValueError):
        _config(window=(1.0, 1.0))
    with pytest.raises(ValueError):
        DetectorConfig(gap=0.0, coupling=1.0, profile=SpatialProfile.gaussian(1.0))
    with pytest.raises(HorizonCrossing):
        _config(frame=TrajectoryFrame(acceleration=0.5))
    with pytest.raises(ValueError):
        ResponseNumerics(method="simpson")
    with pytest.raises(ValueError):
        ResponseNumerics(k_min=2.0, k_max=1.0)


def test_default_k_domain() -> None:
    assert _config().k_domain == pytest.approx((1e-3, 13.0))
    assert _config(SpatialProfile.delta()).k_domain == pytest.approx((1e-3, 40.0))

    explicit = _config().with_numerics(k_min=0.5, k_max=1.5)
    assert explicit.k_domain == (0.5, 1.5)
    assert explicit.describe()["k_max"] == 1.5


def test_accelerated_k_domain_is_stretched() -> None:
    config = _config(SpatialProfile.gaussian(0.5), frame=TrajectoryFrame(acceleration=0.1), window=(0.0, 10.0))

    assert config.chirp_factor == pytest.approx(math.e)
    assert config.k_domain[1] == pytest.approx(25.0 * math.e)


def test_inertial_G_pm_is_the_transform() -> None:
    k = np.linspace(0.2, 4.0, 12)
    frame = TrajectoryFrame()

    np.testing.assert_allclose(G_pm(SpatialProfile.gaussian(1.0), 1, k, 0.7, frame), np.exp(-0.5 * k ** 2))
    with pytest.raises(ValueError):
        G_pm(SpatialProfile.gaussian(1.0), 0, k, 0.7, frame)


def test_mode_function_magnitude() -> None:
    from udw_wavepacket.profiles import spectral

    k = np.array([-2.0, -0.5, 0.5, 2.0])
    rows = mode_function(spectral(SpatialProfile.gaussian(1.0)), TrajectoryFrame(), k, np.array([0.0, 1.0, 3.0]))

    assert rows.shape == (3, 4)
    expected = np.exp(-0.5 * k ** 2) / np.sqrt(4.0 * math.pi * np.abs(k))
    np.testing.assert_allclose(np.abs(rows), np.broadcast_to(expected, rows.shape), rtol=1e-14)


def test_kernel_is_hermitian() -> None:
    config = _config(SpatialProfile.gaussian(0.5), frame=TrajectoryFrame(acceleration=0.1))
    kernel = build_kernel(_packet(), config)
    taus = np.linspace(0.0, 2.0, 5)

    values = kernel.grid(taus, taus)
    total = values[..., 0] + values[..., 1]

    scale = np.max(np.abs(total))
    np.testing.assert_allclose(total, np.conj(total.T), atol=1e-12 * scale)
    assert np.all(np.diag(values[..., 1]).real >= 0.0)
    assert np.all(np.diag(values[..., 0]).real > 0.0)


def test_inertial_vacuum_part_is_stationary() -> None:
    kernel = build_kernel(_packet(), _config())

    diagonal, _ = kernel.components(0.3, 0.3)
    first, _ = kernel.components(0.3, 0.8)
    later, _ = kernel.components(1.0, 1.5)

    assert abs(first - later) < 1e-12 * abs(diagonal)


def test_kernel_call_matches_components() -> None:
    config = _config()
    kernel = build_kernel(_packet(), config)
    vacuum, packet = kernel.components(0.2, 1.1)

    assert kernel(0.2, 1.1) == vacuum + packet
    assert correlation_general(_packet(), config, 0.2, 1.1) == pytest.approx(vacuum + packet, rel=1e-13)


@pytest.mark.parametrize(
    "profile",
    [SpatialProfile.gaussian(1.0), SpatialProfile.lorentzian(0.5), modulate(SpatialProfile.gaussian(2.0), 1.0)],
)
def test_cos_form_matches_general_form(profile: SpatialProfile) -> None:
    config = _config(profile)
    taus = np.linspace(0.0, 2.0, 4)

    general = build_kernel(_packet(), config, KernelVariant.GENERAL).grid(taus, taus)
    symmetric = build_kernel(_packet(), config, KernelVariant.COS_SIMPLIFIED).grid(taus, taus)

    scale = np.max(np.abs(general))
    np.testing.assert_allclose(symmetric, general, atol=1e-10 * scale)


def test_cos_form_preconditions() -> None:
    base = _packet()
    complex_packet = WavepacketSpectrum(lambda k: base(k) * np.exp(2j * k), base.support, is_real=False)

    with pytest.raises(PreconditionViolated):
        build_kernel(complex_packet, _config(), KernelVariant.COS_SIMPLIFIED)
    with pytest.raises(PreconditionViolated):
        build_kernel(base, _config(SpatialProfile.gaussian(1.0, center=0.5)), KernelVariant.COS_SIMPLIFIED)


def test_probability_double_and_factorized_agree() -> None:
    config = _config()
    packet = _packet()

    double = excitation_probability(packet, config)
    factorized = excitation_probability(packet, config.with_numerics(method="factorized"))

    assert double.value > 0.0
    assert double.value == pytest.approx(factorized.value, rel=1e-6)
    assert double.breakdown["vacuum_term"] == pytest.approx(factorized.breakdown["vacuum_term"], rel=1e-6)
    assert double.breakdown["vacuum_term"] + double.breakdown["packet_term"] == pytest.approx(double.value)
    assert double.quadrature_error < 1e-6 * double.value
    assert double.evaluations > 0
    assert set(double.k_panels) == {"vacuum", "packet"}


def test_probability_scales_with_coupling_squared() -> None:
    packet = _packet()
    base = _config().with_numerics(method="factorized", cutoff_sensitivity=False)
    strong = DetectorConfig(
        gap=base.gap, coupling=3.0, profile=base.profile, window=base.window, numerics=base.numerics
    )

    assert excitation_probability(packet, strong).value == pytest.approx(
        9.0 * excitation_probability(packet, base).value, rel=1e-12
    )


def test_zero_coupling_gives_zero_probability() -> None:
    config = DetectorConfig(
        gap=1.0, coupling=0.0, profile=SpatialProfile.gaussian(1.0), window=(0.0, 2.0)
    ).with_numerics(method="factorized")

    result = excitation_probability(_packet(), config)

    assert result.value == 0.0


def test_cutoff_sensitivity_is_reported() -> None:
    config = _config().with_numerics(method="factorized")

    result = excitation_probability(_packet(), config)

    k_min = config.k_domain[0]
    assert set(result.cutoff_sensitivity) == {k_min, 2.0 * k_min}
    assert result.cutoff_sensitivity[2.0 * k_min] <= result.value
    assert result.as_dict()["probability"] == result.value


def test_kernel_table_layout() -> None:
    kernel = build_kernel(_packet(), _config())

    table = kernel_table(kernel, np.linspace(0.0, 2.0, 3))

    assert list(table.columns) == ["tau_prime", "tau_dprime", "re_W", "im_W"]
    assert len(table) == 9
    diagonal = table[table.tau_prime == table.tau_dprime]
    np.testing.assert_allclose(diagonal.im_W, 0.0, atol=1e-12)


def test_spectral_response_curve(capsys: pytest.CaptureFixture) -> None:
    config = _config(window=(0.0, 4.0)).with_numerics(method="factorized")

    curve = spectral_response(config, [0.8, 1.0, 1.2], packet_width=0.1)

    np.testing.assert_allclose(curve.carriers, [0.8, 1.0, 1.2])
    assert np.all(curve.probabilities > 0.0)
    vacuum = {point.vacuum_term for point in curve.points}
    assert len(vacuum) == 1
    frame = curve.to_frame()
    assert list(frame.columns) == ["carrier", "probability", "error", "vacuum_term", "packet_term", "evaluations"]
    assert (frame.evaluations > 0).all()
    assert curve.argmax_carrier() in (0.8, 1.0, 1.2)
    assert "[SCAN]" in capsys.readouterr().out


def test_spectral_response_validation() -> None:
    with pytest.raises(ValueError):
        spectral_response(_config(), [1.0, -1.0], packet_width=0.1)
    with pytest.raises(ValueError):
        spectral_response(_config(), [1.0], packet_width=0.0)


def test_chirped_G_pm_of_a_modulated_profile() -> None:
    frame = TrajectoryFrame(acceleration=0.5)
    profile = modulate(SpatialProfile.gaussian(0.7), 1.0)
    tau = 1.3
    k = math.exp(0.5 * tau)

    expected = 0.5 * (1.0 + math.exp(-2.0 * 0.49))
    for sign in (1, -1):
        value = G_pm(profile, sign, np.array([k]), tau, frame)[0]
        assert complex(value) == pytest.approx(expected, rel=1e-12)


def test_tau_panels_follow_the_chirped_band() -> None:
    inertial = _config(window=(0.0, 10.0))
    accelerated = _config(frame=TrajectoryFrame(acceleration=0.1), window=(0.0, 10.0))

    # gap 1 plus the Gaussian cutoff 8 / L, once per 2 pi over 10 time units
    assert _tau_panels(inertial) == math.ceil(10.0 * 9.0 / (2.0 * math.pi))
    assert _tau_panels(accelerated) == _tau_panels(inertial)

    pointlike = _config(SpatialProfile.delta(), window=(0.0, 10.0)).with_numerics(k_max=3.0)
    assert _tau_panels(pointlike) == math.ceil(10.0 * 4.0 / (2.0 * math.pi))


def test_tabulated_profile_covers_packet_beyond_k_max() -> None:
    x = np.linspace(-8.0, 8.0, 401)
    table = SpatialProfile.tabulated(x, np.exp(-0.5 * x ** 2) / math.sqrt(2.0 * math.pi))
    frame = TrajectoryFrame(acceleration=0.1)
    taus = np.linspace(0.0, 2.0, 3)

    sampled = build_kernel(_packet(), _config(table, frame=frame).with_numerics(k_min=0.5, k_max=1.2))
    exact = build_kernel(_packet(), _config(frame=frame).with_numerics(k_min=0.5, k_max=1.2))

    np.testing.assert_allclose(sampled.packet_amplitude(taus), exact.packet_amplitude(taus), rtol=1e-3)


def test_short_window_probability_collapses_to_the_diagonal() -> None:
    packet = _packet()

    def probability(duration: float) -> float:
        config = _config(window=(0.5 - 0.5 * duration, 0.5 + 0.5 * duration))
        return excitation_probability(packet, config.with_numerics(cutoff_sensitivity=False)).value

    centre = build_kernel(packet, _config())(0.5, 0.5).real
    T = 1e-2

    assert probability(T) / (T ** 2 * centre) == pytest.approx(1.0, abs=1e-2)
    assert probability(T) / probability(0.5 * T) == pytest.approx(4.0, rel=1e-2)


def test_probability_matches_dense_midpoint_sum() -> None:
    config = _config().with_numerics(cutoff_sensitivity=False)
    packet = _packet()
    kernel = build_kernel(packet, config)

    def integrand(tau_p: np.ndarray, tau_dp: np.ndarray) -> np.ndarray:
        rotation = np.exp(1j * config.gap * (tau_p[:, None] - tau_dp[None, :]))
        return rotation * kernel.grid(tau_p, tau_dp).sum(axis=-1)

    dense = oracle_riemann(integrand, 400, (config.window, config.window))

    assert excitation_probability(packet, config, kernel=kernel).value == pytest.approx(dense.real, rel=1e-3)


def test_narrow_packet_on_a_pointlike_detector() -> None:
    width = 0.01
    packet = WavepacketSpectrum.gaussian(1.0, width)
    kernel = build_kernel(packet, _config(SpatialProfile.delta(), window=(0.0, 1.0)))
    taus = np.linspace(0.0, 1.0, 5)

    overlap = (math.pi * width ** 2) ** -0.25 / math.sqrt(math.erf(5.0))
    overlap *= math.sqrt(2.0 * math.pi) * width * math.erf(5.0 / math.sqrt(2.0))
    scale = overlap ** 2 / (2.0 * math.pi)
    expected = scale * np.cos(taus[:, None] - taus[None, :])

    packet_part = kernel.grid(taus, taus)[..., 1].real
    assert np.max(np.abs(packet_part - expected)) <= 1e-3 * scale


def test_negative_probability_beyond_its_error_is_rejected() -> None:
    config = _config().with_numerics(method="factorized", cutoff_sensitivity=False)

    with pytest.raises(NegativeBeyondTolerance):
        excitation_probability(_packet(), config, vacuum_term=(-10.0, 0.0))
