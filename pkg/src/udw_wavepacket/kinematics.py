"""
Fermi-Walker geometry of a rigid, uniformly accelerated detector.

The detector centre follows the hyperbola of proper acceleration a; a
point at Fermi-normal distance chi from the centre sits at

    t = (c/a + chi/c) sinh(a tau / c)
    x = (c^2/a + chi) cosh(a tau / c)

in the lab frame. a = 0 is the inertial detector t = tau, x = chi and is
always handled by its own branch rather than by small-a numerics.

A right-moving plane wave (k > 0) seen along a chi = const worldline has
phase k x - c|k| t = L(k, tau) (chi + c^2/a) with L(k, tau) = k exp(-a tau/c);
left movers (k < 0) chirp the other way, L = k exp(+a tau/c).

Signature (+, -, -, -); four-vectors are (time, x, y, z) components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonCrossing, ZeroWavenumber


@dataclass(frozen=True)
class TrajectoryFrame:
    """
    Uniform proper acceleration plus the extent of the body it carries.

    extent is the largest |chi| the smearing reaches; it must stay in front
    of the horizon, a * extent / c^2 < 1.
    """

    acceleration: float = 0.0
    c: float = 1.0
    extent: float = 0.0

    def __post_init__(self) -> None:
        if self.acceleration < 0 or not math.isfinite(self.acceleration):
            raise ValueError(f"Proper acceleration must be finite and >= 0, got {self.acceleration}")
        if not self.c > 0:
            raise ValueError(f"Speed of light must be positive, got {self.c}")
        if self.extent < 0:
            raise ValueError(f"Detector extent must be >= 0, got {self.extent}")
        if self.acceleration * self.extent / self.c ** 2 >= 1.0:
            raise HorizonCrossing(
                f"Detector extent {self.extent:g} reaches the horizon at distance "
                f"{self.horizon_distance:g} from the centre (a * extent / c^2 must be < 1)."
            )

    @property
    def inertial(self) -> bool:
        return self.acceleration == 0.0

    @property
    def horizon_distance(self) -> float:
        """c^2 / a, infinite for the inertial frame."""
        return math.inf if self.inertial else self.c ** 2 / self.acceleration

    def rapidity(self, tau):
        return self.acceleration * np.asarray(tau, dtype=float) / self.c


@dataclass(frozen=True)
class FermiWalkerEvent:
    tau: float | np.ndarray
    chi: float | np.ndarray
    t: float | np.ndarray
    x: float | np.ndarray


def _check_horizon(frame: TrajectoryFrame, chi) -> None:
    if frame.inertial:
        return
    if np.any(np.asarray(chi) + frame.horizon_distance <= 0):
        raise HorizonCrossing(
            f"chi must exceed -c^2/a = {-frame.horizon_distance:g} to stay in front of the horizon."
        )


def fw_event(frame: TrajectoryFrame, tau, chi) -> FermiWalkerEvent:
    """Lab coordinates (t, x) of the Fermi-Walker point (tau, chi)."""
    _check_horizon(frame, chi)
    tau_a = np.asarray(tau, dtype=float)
    chi_a = np.asarray(chi, dtype=float)
    if frame.inertial:
        t = tau_a + 0.0 * chi_a
        x = chi_a + 0.0 * tau_a
    else:
        eta = frame.rapidity(tau_a)
        c = frame.c
        t = (c / frame.acceleration + chi_a / c) * np.sinh(eta)
        x = (frame.horizon_distance + chi_a) * np.cosh(eta)
    return FermiWalkerEvent(tau=tau, chi=chi, t=_scalar(t), x=_scalar(x))


def fw_displacement(frame: TrajectoryFrame, tau, chi) -> tuple:
    """
    (t, x - c^2/a) without the cancellation in x - c^2/a.

    For the inertial frame the second entry is simply chi.
    """
    _check_horizon(frame, chi)
    tau_a = np.asarray(tau, dtype=float)
    chi_a = np.asarray(chi, dtype=float)
    if frame.inertial:
        return _scalar(tau_a + 0.0 * chi_a), _scalar(chi_a + 0.0 * tau_a)
    eta = frame.rapidity(tau_a)
    t = (frame.c / frame.acceleration + chi_a / frame.c) * np.sinh(eta)
    # cosh(eta) - 1 = 2 sinh^2(eta / 2)
    dx = frame.horizon_distance * 2.0 * np.sinh(0.5 * eta) ** 2 + chi_a * np.cosh(eta)
    return _scalar(t), _scalar(dx)


def dreibein(frame: TrajectoryFrame, tau) -> np.ndarray:
    """Spatial unit vector e_chi along the acceleration, (sinh, cosh, 0, 0)."""
    eta = float(frame.rapidity(tau))
    return np.array([math.sinh(eta), math.cosh(eta), 0.0, 0.0])


def four_velocity(frame: TrajectoryFrame, tau) -> np.ndarray:
    """Dimensionless four-velocity of the centre, (cosh, sinh, 0, 0)."""
    eta = float(frame.rapidity(tau))
    return np.array([math.cosh(eta), math.sinh(eta), 0.0, 0.0])


def minkowski_inner(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(u[0] * v[0] - u[1] * v[1] - u[2] * v[2] - u[3] * v[3])


def _nonzero_k(k) -> np.ndarray:
    k_a = np.asarray(k, dtype=float)
    if np.any(k_a == 0):
        raise ZeroWavenumber("Wavenumber k = 0 is excluded (the mode measure diverges there).")
    return k_a


def wavenumber_scale(frame: TrajectoryFrame, k, tau):
    """L(k, tau) = k exp(-sgn(k) a tau / c)."""
    k_a = _nonzero_k(k)
    if frame.inertial:
        return _scalar(k_a + 0.0 * np.asarray(tau, dtype=float))
    return _scalar(k_a * np.exp(-np.sign(k_a) * frame.rapidity(tau)))


def phase(frame: TrajectoryFrame, k, tau, chi):
    """Plane-wave phase k x - c|k| t at the Fermi-Walker point (tau, chi)."""
    k_a = _nonzero_k(k)
    event = fw_event(frame, tau, chi)
    return _scalar(k_a * np.asarray(event.x) - frame.c * np.abs(k_a) * np.asarray(event.t))


def packet_phase(frame: TrajectoryFrame, k, tau):
    """
    Phase of mode k at the detector centre, relative to the centre's position at tau = 0.

    Equal to phase(k, tau, 0) - k c^2/a, written with expm1 so that it is
    accurate for small a tau / c and reduces to -c|k| tau at a = 0.
    """
    k_a = _nonzero_k(k)
    tau_a = np.asarray(tau, dtype=float)
    if frame.inertial:
        return _scalar(-frame.c * np.abs(k_a) * tau_a)
    return _scalar(k_a * frame.horizon_distance * np.expm1(-np.sign(k_a) * frame.rapidity(tau_a)))


def resonance_frequency(frame: TrajectoryFrame, gap: float, tau):
    """Lab frequency resonant with the gap at proper time tau, gap * exp(a tau / c)."""
    if not gap > 0:
        raise ValueError(f"Gap must be positive, got {gap}")
    if frame.inertial:
        return _scalar(gap + 0.0 * np.asarray(tau, dtype=float))
    return _scalar(gap * np.exp(frame.rapidity(tau)))


def _scalar(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value
