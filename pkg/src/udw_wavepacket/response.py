"""
Wavepacket correlation kernel and excitation probability of a smeared detector.

The smeared field seen by the detector at proper time tau is

    Psi(tau) = integral dk [u_k(tau) a_k + conj(u_k(tau)) a_k^dag]
    u_k(tau) = F_hat(-L(k, tau)) exp(i theta_k(tau)) / sqrt(4 pi c |k|)

with L(k, tau) the chirped wavenumber and theta_k(tau) the phase of mode k
at the detector centre (see kinematics). For the one-particle state
|y> = integral dk y(k) a_k^dag |0> the kernel W(tau', tau'') = <y|Psi(tau'')Psi(tau')|y>
splits into

    vacuum part:  <y|y> integral dk u_k(tau'') conj(u_k(tau'))
    packet part:  2 Re[conj(Y(tau'')) Y(tau')],   Y(tau) = integral dk y(k) u_k(tau)

and the first-order excitation probability is

    P = |g|^2 iint dtau' dtau'' exp(i Omega (tau' - tau'')) W(tau', tau'')

over the sharp switching window. The k-integrals use fixed composite
Kronrod rules calibrated once per kernel; the tau-integrals go through the
adaptive 2-D engine, which may exploit the Hermitian symmetry of the integrand.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline
from scipy.special import erf

from .errors import (
    HorizonCrossing,
    NegativeBeyondTolerance,
    PreconditionViolated,
    QuadratureFailure,
)
from .kinematics import TrajectoryFrame, packet_phase, wavenumber_scale
from .logging_utils import log_info, log_k_rule, log_scan_point
from .profiles import ProfileKind, Provenance, SpatialProfile, SpectralProfile, spectral
from .quadrature import FixedRule, IntegrationResult, QuadratureSpec, composite_rule, integrate_1d, integrate_2d


# Default k-domain: [K_MIN_FRACTION * Omega/c, Omega/c + K_MAX_WIDTHS / L].
K_MIN_FRACTION = 1e-3
K_MAX_WIDTHS = 12.0
# Pointlike profiles have no spectral roll-off: k_max = DELTA_K_MAX * Omega/c.
DELTA_K_MAX = 40.0
NORM_TOL = 1e-8
EVEN_TOL = 1e-9
# Row caches are bounded by total size in bytes.
_ROW_CACHE_BYTES = 256 * 1024 * 1024


class KernelVariant(str, Enum):
    GENERAL = "general"
    COS_SIMPLIFIED = "cos"


@dataclass(frozen=True, eq=False)
class WavepacketSpectrum:
    """
    Spectral amplitude y(k) of a one-particle signal state, unit-normalized.

    The support must not contain k = 0.
    """

    amplitude: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    is_real: bool = True
    center: Optional[float] = None
    width: Optional[float] = None
    label: str = "custom"

    def __post_init__(self) -> None:
        k_lo, k_hi = float(self.support[0]), float(self.support[1])
        if not k_lo < k_hi:
            raise ValueError(f"Packet support must satisfy k_lo < k_hi, got [{k_lo}, {k_hi}]")
        if k_lo <= 0.0 <= k_hi:
            raise ValueError(f"Packet support [{k_lo:g}, {k_hi:g}] must exclude k = 0.")
        object.__setattr__(self, "support", (k_lo, k_hi))
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"Packet amplitude is not unit-normalized: integral |y|^2 = {norm:.12g}")

    @classmethod
    def gaussian(cls, center: float, width: float, n_sigma: float = 5.0) -> "WavepacketSpectrum":
        """
        Real Gaussian (pi w^2)^(-1/4) exp(-(k - k0)^2 / (2 w^2)) on k0 +- n_sigma w.

        The amplitude is rescaled by erf(n_sigma)^(-1/2) so that the truncated
        packet keeps unit norm.
        """
        if not width > 0:
            raise ValueError(f"Packet width must be positive, got {width}")
        if not n_sigma > 0:
            raise ValueError(f"n_sigma must be positive, got {n_sigma}")
        scale = (math.pi * width ** 2) ** -0.25 / math.sqrt(erf(n_sigma))

        def amplitude(k: np.ndarray) -> np.ndarray:
            return scale * np.exp(-0.5 * ((np.asarray(k, dtype=float) - center) / width) ** 2)

        return cls(
            amplitude,
            (center - n_sigma * width, center + n_sigma * width),
            is_real=True,
            center=float(center),
            width=float(width),
            label="gaussian",
        )

    @classmethod
    def tabulated(cls, k_grid: Sequence[float], values: Sequence[complex]) -> "WavepacketSpectrum":
        """Spline through sampled amplitudes, normalized on the sampled support."""
        k = np.asarray(k_grid, dtype=float)
        v = np.asarray(values, dtype=complex)
        if k.ndim != 1 or k.shape != v.shape or k.size < 4 or np.any(np.diff(k) <= 0):
            raise ValueError("Tabulated packet needs a strictly increasing k grid of length >= 4.")
        re = CubicSpline(k, v.real)
        im = CubicSpline(k, v.imag)
        real_valued = bool(np.all(v.imag == 0))
        rule = composite_rule(k)
        samples = re(rule.nodes) + 1j * im(rule.nodes)
        norm = float(rule.integrate(np.abs(samples) ** 2)[0])
        if not norm > 0:
            raise ValueError("Tabulated packet is identically zero.")
        scale = 1.0 / math.sqrt(norm)

        def amplitude(kk: np.ndarray) -> np.ndarray:
            kk = np.asarray(kk, dtype=float)
            out = scale * (re(kk) + 1j * im(kk))
            return out.real if real_valued else out

        weight = np.abs(v) ** 2
        center = float(np.sum(weight * k) / np.sum(weight))
        return cls(amplitude, (float(k[0]), float(k[-1])), is_real=real_valued, center=center, label="tabulated")

    def __call__(self, k):
        return self.amplitude(k)

    def norm(self, n_panels: int = 64) -> float:
        rule = composite_rule(np.linspace(self.support[0], self.support[1], n_panels + 1))
        return float(rule.integrate(np.abs(self.amplitude(rule.nodes)) ** 2)[0])

    def describe(self) -> dict:
        out = {"shape": self.label, "support": list(self.support), "real": self.is_real}
        if self.center is not None:
            out["center"] = self.center
        if self.width is not None:
            out["width"] = self.width
        return out


@dataclass(frozen=True)
class ResponseNumerics:
    """
    Numerical controls of the response computation.

    spec drives the 2-D tau integration; the k-rules are calibrated to
    k_rel_tol relative to the largest sampled value. method "double" runs
    the 2-D engine, "factorized" the equivalent single-time transforms.
    """

    spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-30, max_panels=40000)
    k_min: Optional[float] = None
    k_max: Optional[float] = None
    k_rel_tol: float = 1e-10
    k_abs_tol: float = 1e-30
    max_k_panels: int = 20000
    cutoff_sensitivity: bool = True
    method: str = "double"

    def __post_init__(self) -> None:
        if self.method not in ("double", "factorized"):
            raise ValueError(f"Unknown response method: {self.method!r}")
        if not (self.k_rel_tol > 0 and self.k_abs_tol > 0):
            raise ValueError("k-rule tolerances must be positive.")
        if self.k_min is not None and not self.k_min > 0:
            raise ValueError(f"k_min must be positive, got {self.k_min}")
        if self.k_min is not None and self.k_max is not None and not self.k_max > self.k_min:
            raise ValueError(f"k_max must exceed k_min, got [{self.k_min}, {self.k_max}]")


@dataclass(frozen=True)
class DetectorConfig:
    """Gap, coupling, smearing, trajectory and sharp switching window of one detector."""

    gap: float
    coupling: float
    profile: SpatialProfile
    frame: TrajectoryFrame = TrajectoryFrame()
    window: tuple[float, float] = (0.0, 1.0)
    numerics: ResponseNumerics = ResponseNumerics()

    def __post_init__(self) -> None:
        if not self.gap > 0:
            raise ValueError(f"Detector gap must be positive, got {self.gap}")
        if not math.isfinite(self.coupling):
            raise ValueError(f"Coupling must be finite, got {self.coupling}")
        t0, t1 = float(self.window[0]), float(self.window[1])
        if not t1 > t0:
            raise ValueError(f"Switching window must satisfy tau1 > tau0, got [{t0}, {t1}]")
        object.__setattr__(self, "window", (t0, t1))
        extent = self.profile.extent
        if self.frame.acceleration * extent / self.c ** 2 >= 1.0:
            raise HorizonCrossing(
                f"Profile extent {extent:g} reaches the horizon at {self.frame.horizon_distance:g}."
            )

    @property
    def c(self) -> float:
        return self.frame.c

    @property
    def duration(self) -> float:
        return self.window[1] - self.window[0]

    @property
    def chirp_factor(self) -> float:
        """Largest exp(a |tau| / c) over the window."""
        if self.frame.inertial:
            return 1.0
        tau_max = max(abs(self.window[0]), abs(self.window[1]))
        return math.exp(self.frame.acceleration * tau_max / self.c)

    @property
    def k_domain(self) -> tuple[float, float]:
        """Field wavenumber range |k| in [k_min, k_max] integrated for the vacuum part."""
        q = self.gap / self.c
        k_min = self.numerics.k_min if self.numerics.k_min is not None else K_MIN_FRACTION * q
        if self.numerics.k_max is not None:
            k_max = self.numerics.k_max
        else:
            length = self.profile.length_scale
            k_max = DELTA_K_MAX * q if length is None else q + K_MAX_WIDTHS / length
            k_max *= self.chirp_factor
        if not k_max > k_min:
            raise ValueError(f"Empty k-domain [{k_min:g}, {k_max:g}]")
        return k_min, k_max

    def with_numerics(self, **changes) -> "DetectorConfig":
        return replace(self, numerics=replace(self.numerics, **changes))

    def describe(self) -> dict:
        k_min, k_max = self.k_domain
        return {
            "gap": self.gap,
            "coupling": self.coupling,
            "profile": self.profile.describe(),
            "acceleration": self.frame.acceleration,
            "c": self.c,
            "window": list(self.window),
            "k_min": k_min,
            "k_max": k_max,
        }


def G_pm(profile: SpatialProfile | SpectralProfile, sign: int, k, tau, frame: TrajectoryFrame):
    """G^{+-}(k, tau) = F_hat(+-L(k, tau))."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    transform = profile if isinstance(profile, SpectralProfile) else spectral(profile)
    return transform(sign * np.asarray(wavenumber_scale(frame, k, tau)))


def mode_function(transform: SpectralProfile, frame: TrajectoryFrame, k, tau) -> np.ndarray:
    """u_k(tau) on the tensor grid tau (rows) x k (columns)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    scaled = np.asarray(wavenumber_scale(frame, k[None, :], tau[:, None]))
    theta = np.asarray(packet_phase(frame, k[None, :], tau[:, None]))
    measure = 1.0 / np.sqrt(4.0 * math.pi * frame.c * np.abs(k))
    return transform(-scaled) * np.exp(1j * theta) * measure[None, :]


def _phase_slope_range(frame: TrajectoryFrame, window: tuple[float, float]) -> float:
    """Largest spread of d theta_k / dk over the window, over both signs of k."""
    t0, t1 = window
    spreads = []
    for sign in (1.0, -1.0):
        if frame.inertial:
            g0, g1 = -sign * frame.c * t0, -sign * frame.c * t1
        else:
            r = frame.horizon_distance
            g0 = r * math.expm1(-sign * frame.acceleration * t0 / frame.c)
            g1 = r * math.expm1(-sign * frame.acceleration * t1 / frame.c)
        spreads.append(abs(g1 - g0))
    return max(spreads)


def _breakpoints(k_lo: float, k_hi: float, h: float, geometric: bool) -> np.ndarray:
    """Doubling panels from k_lo until they reach width h, then uniform panels of width <= h."""
    points = [k_lo]
    if geometric:
        while points[-1] < h and 2.0 * points[-1] < k_hi:
            points.append(2.0 * points[-1])
    last = points[-1]
    n = max(1, math.ceil((k_hi - last) / h))
    return np.concatenate([np.asarray(points), np.linspace(last, k_hi, n + 1)[1:]])


class _RowCache:
    """Thread-safe bounded memo of mode rows keyed by the exact tau nodes."""

    def __init__(self, compute: Callable[[np.ndarray], np.ndarray], row_bytes: int) -> None:
        self._compute = compute
        self._entries: OrderedDict[bytes, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()
        self._row_bytes = max(row_bytes, 1)
        self._rows_held = 0

    def __call__(self, tau: np.ndarray) -> np.ndarray:
        tau = np.ascontiguousarray(tau, dtype=float)
        key = tau.tobytes()
        with self._lock:
            hit = self._entries.get(key)
            if hit is not None:
                self._entries.move_to_end(key)
                return hit
        rows = self._compute(tau)
        with self._lock:
            if key not in self._entries:
                self._entries[key] = rows
                self._rows_held += tau.size
                while self._rows_held * self._row_bytes > _ROW_CACHE_BYTES and len(self._entries) > 1:
                    _, old = self._entries.popitem(last=False)
                    self._rows_held -= old.shape[0]
        return rows


@dataclass
class _KRule:
    """Composite Kronrod rule over one or two sign branches of k."""

    nodes: np.ndarray
    weights: np.ndarray
    branches: list[tuple[int, FixedRule]]
    h: float

    @property
    def panels(self) -> int:
        return sum(rule.n_panels for _, rule in self.branches)

    def branch_errors(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray, tuple]:
        """Value, error and worst panel of sum over k of values (..., nodes)."""
        offset = 0
        value = 0.0
        error = 0.0
        worst = (None, -1.0)
        for sign, rule in self.branches:
            n = rule.nodes.size
            part = values[..., offset:offset + n]
            if sign < 0:
                part = part[..., ::-1]
            v, e, panel_errors = rule.integrate(part)
            value = value + v
            error = error + e
            flat = panel_errors.reshape(-1, rule.n_panels).max(axis=0)
            j = int(np.argmax(flat))
            if flat[j] > worst[1]:
                edges = rule.breakpoints[j:j + 2] * sign
                worst = ((float(min(edges)), float(max(edges))), float(flat[j]))
            offset += n
        return np.asarray(value), np.asarray(error), worst


def _make_rule(k_lo: float, k_hi: float, h: float, both_signs: bool, geometric: bool) -> _KRule:
    breakpoints = _breakpoints(k_lo, k_hi, h, geometric)
    rule = composite_rule(breakpoints)
    branches = []
    nodes = []
    weights = []
    if both_signs:
        branches.append((-1, rule))
        nodes.append(-rule.nodes[::-1])
        weights.append(rule.kronrod_weights[::-1])
    branches.append((1, rule))
    nodes.append(rule.nodes)
    weights.append(rule.kronrod_weights)
    return _KRule(np.concatenate(nodes), np.concatenate(weights), branches, h)


def _calibrate(
    build: Callable[[float], _KRule],
    sampled_rows: Callable[[_KRule], np.ndarray],
    h0: float,
    rel_tol: float,
    abs_tol: float,
    max_panels: int,
    what: str,
) -> tuple[_KRule, float]:
    """Halve the panel width until the Kronrod-Gauss error passes on the checkpoints."""
    h = h0
    while True:
        rule = build(h)
        value, error, worst = rule.branch_errors(sampled_rows(rule))
        tolerance = rel_tol * float(np.max(np.abs(value))) + abs_tol
        if float(np.max(error)) <= tolerance:
            log_k_rule(what, rule.panels, h, float(np.max(error)))
            return rule, float(np.max(error))
        if 2 * rule.panels > max_panels:
            raise QuadratureFailure(
                f"{what} k-integral did not reach tolerance {tolerance:.3e} within {max_panels} panels",
                worst_panel=worst[0],
                worst_error=worst[1],
            )
        h *= 0.5


class _DetectorModes:
    """Vacuum k-rule of a detector and the cached mode rows on its nodes."""

    def __init__(self, config: DetectorConfig) -> None:
        self.config = config
        frame = config.frame
        k_min, k_max = config.k_domain
        self.k_domain = (k_min, k_max)
        self._exact = spectral(config.profile)
        self._reach = None
        self.transform = self._exact
        if self._exact.provenance == Provenance.NUMERIC:
            # |L| = |k| exp(-sgn(k) a tau / c) stays below k_max * chirp on the window
            self._reach = 1.01 * k_max * config.chirp_factor
            self.transform = self._exact.tabulated(-self._reach, self._reach)

        t0, t1 = config.window
        spread = _phase_slope_range(frame, config.window)
        h0 = math.pi / (4.0 * spread)
        length = config.profile.length_scale
        if length is not None:
            h0 = min(h0, 1.0 / (length * config.chirp_factor))
        h0 = min(h0, (k_max - k_min) / 8.0)

        checkpoints = np.array([t0, 0.5 * (t0 + t1), t1])
        numerics = config.numerics

        def sampled_rows(rule: _KRule) -> np.ndarray:
            rows = mode_function(self.transform, frame, rule.nodes, checkpoints)
            return np.conj(rows)[:, None, :] * rows[None, :, :]

        self.rule, self.k_error = _calibrate(
            lambda h: _make_rule(k_min, k_max, h, True, True),
            sampled_rows,
            h0,
            numerics.k_rel_tol,
            numerics.k_abs_tol,
            numerics.max_k_panels,
            "Vacuum",
        )
        self.rows = _RowCache(
            lambda tau: mode_function(self.transform, frame, self.rule.nodes, tau),
            16 * self.rule.nodes.size,
        )

    def transform_covering(self, k_abs: float) -> SpectralProfile:
        """The transform, re-tabulated when |k| up to k_abs chirps past the cached range."""
        if self._reach is None:
            return self.transform
        needed = k_abs * self.config.chirp_factor
        if needed <= self._reach:
            return self.transform
        reach = 1.01 * needed
        log_info(f"Packet reaches |k| = {k_abs:g}; widening the transform cache to +-{reach:.3g}")
        return self._exact.tabulated(-reach, reach)

    def vacuum_grid(self, tau_p: np.ndarray, tau_dp: np.ndarray) -> np.ndarray:
        """sum_k w_k conj(u_k(tau'_i)) u_k(tau''_j), shape (n', n'')."""
        left = np.conj(self.rows(tau_p)) * self.rule.weights[None, :]
        return left @ self.rows(tau_dp).T


class _PacketModes:
    """k-rule over the packet support with y(k) folded into the weights."""

    def __init__(self, y: WavepacketSpectrum, modes: _DetectorModes) -> None:
        config = modes.config
        frame = config.frame
        self.y = y
        k_lo, k_hi = y.support
        sign = 1.0 if k_lo > 0 else -1.0
        a_lo, a_hi = sorted((abs(k_lo), abs(k_hi)))
        self.transform = modes.transform_covering(a_hi)
        t0, t1 = config.window

        spread = _phase_slope_range(frame, config.window)
        h0 = min(math.pi / (4.0 * spread), (a_hi - a_lo) / 16.0)
        if y.width is not None:
            h0 = min(h0, 0.5 * y.width)
        length = config.profile.length_scale
        if length is not None:
            h0 = min(h0, 1.0 / (length * config.chirp_factor))

        checkpoints = np.array([t0, 0.5 * (t0 + t1), t1])
        numerics = config.numerics

        def build(h: float) -> _KRule:
            rule = _make_rule(a_lo, a_hi, h, False, False)
            if sign < 0:
                rule = _KRule(-rule.nodes[::-1], rule.weights[::-1], [(-1, rule.branches[0][1])], h)
            return rule

        def sampled_rows(rule: _KRule) -> np.ndarray:
            rows = mode_function(self.transform, frame, rule.nodes, checkpoints)
            return rows * y(rule.nodes)[None, :]

        self.rule, self.k_error = _calibrate(
            build, sampled_rows, h0, numerics.k_rel_tol, numerics.k_abs_tol, numerics.max_k_panels, "Packet"
        )
        self.coefficients = self.rule.weights * y(self.rule.nodes)
        self.rows = _RowCache(
            lambda tau: mode_function(self.transform, frame, self.rule.nodes, tau),
            16 * self.rule.nodes.size,
        )

    def amplitude(self, tau: np.ndarray) -> np.ndarray:
        """Y(tau) = integral dk y(k) u_k(tau)."""
        return self.rows(tau) @ self.coefficients

    def cos_sin(self, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """C(tau), S(tau): the y-weighted cos and sin quadratures of the modes."""
        rows = self.rows(tau)
        return rows.real @ self.coefficients.real, rows.imag @ self.coefficients.real


@dataclass
class CorrelationKernel:
    """
    W(tau', tau'') for one detector and packet.

    components() and grid() return the vacuum and packet parts separately;
    calling the kernel returns their sum.
    """

    variant: KernelVariant
    config: DetectorConfig
    packet: WavepacketSpectrum
    _modes: _DetectorModes = field(repr=False)
    _packet_modes: _PacketModes = field(repr=False)

    @property
    def k_error(self) -> float:
        return self._modes.k_error + self._packet_modes.k_error

    @property
    def k_panels(self) -> dict:
        return {"vacuum": self._modes.rule.panels, "packet": self._packet_modes.rule.panels}

    def grid(self, tau_p: np.ndarray, tau_dp: np.ndarray, vacuum: bool = True) -> np.ndarray:
        """
        Tensor grid of (vacuum, packet) parts, shape (n', n'', 2).

        With vacuum=False only the packet part is computed, shape (n', n'', 1).
        """
        tau_p = np.atleast_1d(np.asarray(tau_p, dtype=float))
        tau_dp = np.atleast_1d(np.asarray(tau_dp, dtype=float))
        if self.variant == KernelVariant.COS_SIMPLIFIED:
            c_p, s_p = self._packet_modes.cos_sin(tau_p)
            c_dp, s_dp = self._packet_modes.cos_sin(tau_dp)
            packet = 2.0 * (np.outer(c_p, c_dp) + np.outer(s_p, s_dp))
        else:
            y_p = self._packet_modes.amplitude(tau_p)
            y_dp = self._packet_modes.amplitude(tau_dp)
            packet = 2.0 * np.real(np.outer(y_p, np.conj(y_dp)))
        packet = packet.astype(complex)
        if not vacuum:
            return packet[..., None]
        return np.stack([self._modes.vacuum_grid(tau_p, tau_dp), packet], axis=-1)

    def components(self, tau_p: float, tau_dp: float) -> tuple[complex, float]:
        values = self.grid(np.array([tau_p]), np.array([tau_dp]))[0, 0]
        return complex(values[0]), float(values[1].real)

    def __call__(self, tau_p: float, tau_dp: float) -> complex:
        vacuum, packet = self.components(tau_p, tau_dp)
        return vacuum + packet

    def packet_amplitude(self, tau: np.ndarray) -> np.ndarray:
        return self._packet_modes.amplitude(np.atleast_1d(np.asarray(tau, dtype=float)))

    def mode_rows(self, tau: np.ndarray) -> np.ndarray:
        return self._modes.rows(np.atleast_1d(np.asarray(tau, dtype=float)))

    @property
    def vacuum_rule(self) -> tuple[np.ndarray, np.ndarray]:
        return self._modes.rule.nodes, self._modes.rule.weights


def _check_symmetric_preconditions(y: WavepacketSpectrum, modes: _DetectorModes) -> None:
    if not y.is_real:
        raise PreconditionViolated("The cos-simplified kernel needs a real packet amplitude.")
    k_min, k_max = modes.k_domain
    checkpoints = np.linspace(k_min, k_max * modes.config.chirp_factor, 257)
    transform = modes.transform
    values = transform(checkpoints)
    scale = max(float(np.max(np.abs(values))), 1.0)
    if transform.even_defect(checkpoints) > EVEN_TOL * scale:
        raise PreconditionViolated("The cos-simplified kernel needs an even spectral profile.")
    if float(np.max(np.abs(values.imag))) > EVEN_TOL * scale:
        raise PreconditionViolated("The cos-simplified kernel needs a real spectral profile.")


def build_kernel(
    y: WavepacketSpectrum,
    config: DetectorConfig,
    variant: KernelVariant = KernelVariant.GENERAL,
) -> CorrelationKernel:
    """Calibrate the k-rules for this detector and packet and return the kernel."""
    return _assemble_kernel(y, _DetectorModes(config), variant)


def _assemble_kernel(y: WavepacketSpectrum, modes: _DetectorModes, variant: KernelVariant) -> CorrelationKernel:
    if variant == KernelVariant.COS_SIMPLIFIED:
        _check_symmetric_preconditions(y, modes)
    return CorrelationKernel(variant, modes.config, y, modes, _PacketModes(y, modes))


def correlation_general(y: WavepacketSpectrum, config: DetectorConfig, tau_p: float, tau_dp: float) -> complex:
    """W(tau', tau'') from the full vacuum plus packet-cross-term form."""
    return build_kernel(y, config, KernelVariant.GENERAL)(tau_p, tau_dp)


def correlation_symmetric(y: WavepacketSpectrum, config: DetectorConfig, tau_p: float, tau_dp: float) -> complex:
    """W(tau', tau'') from the cos/sin form, valid for even spectral profiles and real packets."""
    return build_kernel(y, config, KernelVariant.COS_SIMPLIFIED)(tau_p, tau_dp)


@dataclass
class ProbabilityResult:
    value: float
    quadrature_error: float
    evaluations: int
    breakdown: dict[str, float]
    converged: bool = True
    cutoff_sensitivity: dict[float, float] = field(default_factory=dict)
    k_panels: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "probability": self.value,
            "error": self.quadrature_error,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "breakdown": dict(self.breakdown),
            "cutoff_sensitivity": {repr(k): v for k, v in self.cutoff_sensitivity.items()},
            "k_panels": dict(self.k_panels),
        }


def _tau_panels(config: DetectorConfig) -> int:
    """Initial panels per tau axis: one per 2 pi of the fastest expected phase."""
    q = config.gap / config.c
    k_min, k_max = config.k_domain
    profile = config.profile
    length = profile.length_scale
    # |L| never exceeds k_max * chirp; the smearing cuts it off near carrier + a few / L
    reach = k_max * config.chirp_factor
    if length is not None:
        carrier = profile.carrier if profile.kind == ProfileKind.MODULATED else 0.0
        widths = K_MAX_WIDTHS if profile.kind == ProfileKind.LORENTZIAN else 8.0
        reach = min(reach, carrier + widths / length)
    omega = config.gap + config.c * max(reach, q)
    return max(1, math.ceil(config.duration * omega / (2.0 * math.pi)))


def _double_integral(kernel: CorrelationKernel, include_vacuum: bool = True) -> IntegrationResult:
    config = kernel.config
    gap = config.gap
    spec = config.numerics.spec
    spec = spec.with_overrides(min_panels=max(spec.min_panels, _tau_panels(config)))

    def integrand(tau_p: np.ndarray, tau_dp: np.ndarray) -> np.ndarray:
        rotation = np.exp(1j * gap * (tau_p[:, None] - tau_dp[None, :]))
        return rotation[..., None] * kernel.grid(tau_p, tau_dp, vacuum=include_vacuum)

    return integrate_2d(integrand, config.window, spec, hermitian=True)


def _factorized(kernel: CorrelationKernel, include_vacuum: bool = True) -> IntegrationResult:
    """
    The same double integral through single-time transforms:
    vacuum = sum_k w_k |int exp(-i Omega tau) u_k|^2, packet = |int exp(i Omega tau) Y|^2 + |int exp(-i Omega tau) Y|^2.
    """
    config = kernel.config
    gap = config.gap
    spec = config.numerics.spec.with_overrides(min_panels=_tau_panels(config), workers=1)

    def packet_integrand(tau: np.ndarray) -> np.ndarray:
        y = kernel.packet_amplitude(tau)
        return np.stack([np.exp(1j * gap * tau) * y, np.exp(-1j * gap * tau) * y], axis=-1)

    packet = integrate_1d(packet_integrand, config.window, spec)
    amplitudes = np.asarray(packet.value)
    packet_value = float(np.sum(np.abs(amplitudes) ** 2))
    packet_error = float(np.sum(2.0 * np.abs(amplitudes) * np.asarray(packet.error_estimate)))
    values = [packet_value]
    errors = [packet_error]
    evaluations = packet.evaluations
    converged = packet.converged

    if include_vacuum:
        nodes, weights = kernel.vacuum_rule

        def vacuum_integrand(tau: np.ndarray) -> np.ndarray:
            return np.exp(-1j * gap * tau)[:, None] * kernel.mode_rows(tau)

        vacuum = integrate_1d(vacuum_integrand, config.window, spec)
        transforms = np.asarray(vacuum.value)
        values.insert(0, float(np.sum(weights * np.abs(transforms) ** 2)))
        errors.insert(0, float(np.sum(weights * 2.0 * np.abs(transforms) * np.asarray(vacuum.error_estimate))))
        evaluations += vacuum.evaluations
        converged = converged and vacuum.converged

    return IntegrationResult(
        value=np.asarray(values, dtype=complex),
        error_estimate=np.asarray(errors),
        evaluations=evaluations,
        converged=converged,
    )


def _vacuum_slice(kernel: CorrelationKernel, k_lo: float, k_hi: float) -> float:
    """Vacuum part of P carried by |k| in [k_lo, k_hi], before the g^2 factor."""
    config = kernel.config
    gap = config.gap
    rule = composite_rule(np.array([k_lo, k_hi]))
    nodes = np.concatenate([-rule.nodes[::-1], rule.nodes])
    weights = np.concatenate([rule.kronrod_weights[::-1], rule.kronrod_weights])
    transform = kernel._modes.transform
    spec = config.numerics.spec.with_overrides(min_panels=_tau_panels(config), workers=1)

    def integrand(tau: np.ndarray) -> np.ndarray:
        return np.exp(-1j * gap * tau)[:, None] * mode_function(transform, config.frame, nodes, tau)

    result = integrate_1d(integrand, config.window, spec)
    return float(np.sum(weights * np.abs(np.asarray(result.value)) ** 2))


def excitation_probability(
    y: WavepacketSpectrum,
    config: DetectorConfig,
    variant: KernelVariant = KernelVariant.GENERAL,
    kernel: Optional[CorrelationKernel] = None,
    vacuum_term: Optional[tuple[float, float]] = None,
) -> ProbabilityResult:
    """
    First-order excitation probability over the switching window.

    A prebuilt kernel may be passed to reuse its calibrated k-rules, and a
    known (vacuum value, error) pair skips the packet-independent vacuum part.
    """
    kernel = kernel or build_kernel(y, config, variant)
    g2 = abs(config.coupling) ** 2
    include_vacuum = vacuum_term is None
    engine = _double_integral if config.numerics.method == "double" else _factorized
    result = engine(kernel, include_vacuum)

    values = np.real(np.atleast_1d(np.asarray(result.value)))
    errors = np.atleast_1d(np.asarray(result.error_estimate, dtype=float))
    if include_vacuum:
        vacuum, packet = float(values[0]), float(values[-1])
        vacuum_error, packet_error = float(errors[0]), float(errors[-1])
    else:
        vacuum, vacuum_error = vacuum_term
        packet, packet_error = float(values[-1]), float(errors[-1])

    if not result.converged:
        raise QuadratureFailure(
            "Probability double integral did not converge",
            worst_panel=result.worst_panel,
            worst_error=result.worst_error,
        )

    k_error = kernel.k_error * config.duration ** 2
    value = g2 * (vacuum + packet)
    error = g2 * (vacuum_error + packet_error + k_error)
    if value < -5.0 * error:
        raise NegativeBeyondTolerance(f"P = {value:.6e} is negative beyond its error {error:.3e}")

    sensitivity: dict[float, float] = {}
    if config.numerics.cutoff_sensitivity:
        k_min, _ = config.k_domain
        sliced = _vacuum_slice(kernel, k_min, 2.0 * k_min)
        sensitivity = {k_min: value, 2.0 * k_min: value - g2 * sliced}

    return ProbabilityResult(
        value=value,
        quadrature_error=error,
        evaluations=result.evaluations,
        breakdown={
            "vacuum_term": g2 * vacuum,
            "packet_term": g2 * packet,
            "vacuum_error": g2 * vacuum_error,
            "packet_error": g2 * packet_error,
        },
        converged=result.converged,
        cutoff_sensitivity=sensitivity,
        k_panels=kernel.k_panels,
    )


@dataclass
class ScanPoint:
    carrier: float
    probability: float
    error: float
    vacuum_term: float
    packet_term: float
    evaluations: int = 0


@dataclass
class ResponseCurve:
    points: list[ScanPoint]
    packet_width: float
    config: Optional[DetectorConfig] = None

    @property
    def carriers(self) -> np.ndarray:
        return np.array([p.carrier for p in self.points])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p.probability for p in self.points])

    def argmax_carrier(self) -> float:
        return float(self.carriers[int(np.argmax(self.probabilities))])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "carrier": [p.carrier for p in self.points],
                "probability": [p.probability for p in self.points],
                "error": [p.error for p in self.points],
                "vacuum_term": [p.vacuum_term for p in self.points],
                "packet_term": [p.packet_term for p in self.points],
                "evaluations": [p.evaluations for p in self.points],
            }
        )


def spectral_response(
    config: DetectorConfig,
    carrier_grid: Sequence[float],
    packet_width: float,
    n_sigma: float = 5.0,
    variant: KernelVariant = KernelVariant.GENERAL,
) -> ResponseCurve:
    """
    Excitation probability for a real Gaussian packet at each carrier frequency.

    The vacuum part does not depend on the packet, so it is integrated once
    and shared by every point.
    """
    carriers = [float(w) for w in carrier_grid]
    if not carriers or any(w <= 0 for w in carriers):
        raise ValueError("Carrier frequencies must be positive.")
    if not packet_width > 0:
        raise ValueError(f"Packet width must be positive, got {packet_width}")
    c = config.c
    points: list[ScanPoint] = []
    vacuum_term: Optional[tuple[float, float]] = None
    g2 = abs(config.coupling) ** 2
    scan_config = config.with_numerics(cutoff_sensitivity=False)
    modes = _DetectorModes(scan_config)

    for index, carrier in enumerate(carriers, start=1):
        packet = WavepacketSpectrum.gaussian(carrier / c, packet_width / c, n_sigma)
        kernel = _assemble_kernel(packet, modes, variant)
        result = excitation_probability(packet, scan_config, variant, kernel=kernel, vacuum_term=vacuum_term)
        if vacuum_term is None and g2 > 0:
            vacuum_term = (result.breakdown["vacuum_term"] / g2, result.breakdown["vacuum_error"] / g2)
        points.append(
            ScanPoint(
                carrier=carrier,
                probability=result.value,
                error=result.quadrature_error,
                vacuum_term=result.breakdown["vacuum_term"],
                packet_term=result.breakdown["packet_term"],
                evaluations=result.evaluations,
            )
        )
        log_scan_point(index, len(carriers), carrier, result.value, result.quadrature_error)

    log_info(f"Scan complete: {len(points)} carriers.")
    return ResponseCurve(points=points, packet_width=packet_width, config=config)


def kernel_table(kernel: CorrelationKernel, grid: Sequence[float]) -> pd.DataFrame:
    """W on every (tau', tau'') pair of grid, one row per pair."""
    taus = np.asarray(grid, dtype=float)
    values = kernel.grid(taus, taus)
    total = values[..., 0] + values[..., 1]
    tau_p, tau_dp = np.meshgrid(taus, taus, indexing="ij")
    return pd.DataFrame(
        {
            "tau_prime": tau_p.ravel(),
            "tau_dprime": tau_dp.ravel(),
            "re_W": total.real.ravel(),
            "im_W": total.imag.ravel(),
        }
    )
