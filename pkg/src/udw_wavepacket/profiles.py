"""
Spatial smearing profiles and their Fourier transforms.

Convention used throughout the package:

    F_hat(k) = integral F(x) exp(-i k x) dx        (no 2*pi prefactor)

so a unit-integral profile has F_hat(0) = 1. Closed forms are used for the
Delta, Gaussian, Lorentzian and Modulated kinds; Tabulated profiles are
transformed numerically, panel by panel between the sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import DeltaNotEvaluable, DeltaNotModulable, NestedModulation, QuadratureFailure
from .logging_utils import log_info, log_quad
from .quadrature import QuadratureSpec, composite_rule, integrate_1d
from .table_reader import load_complex_table


class ProfileKind(str, Enum):
    DELTA = "delta"
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"
    MODULATED = "modulated"
    TABULATED = "tabulated"


class Provenance(str, Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"


# Relative level below which a tabulated profile counts as decayed.
TABLE_DECAY = 1e-12
# Fraction of the peak defining the support radius of tabulated profiles.
EXTENT_LEVEL = 1e-6
# Number of widths used as support radius for Gaussian and Lorentzian kinds.
EXTENT_WIDTHS = 5.0

_K_CHUNK = 64


@dataclass(frozen=True, eq=False)
class SpatialProfile:
    """
    A localisation function F(x) with tagged analytic structure.

    Build instances through the classmethods and modulate(); the raw
    constructor does not validate.
    """

    kind: ProfileKind
    width: Optional[float] = None
    center: float = 0.0
    envelope: Optional["SpatialProfile"] = None
    carrier: float = 0.0
    x_grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    @classmethod
    def delta(cls, center: float = 0.0) -> "SpatialProfile":
        return cls(ProfileKind.DELTA, center=float(center))

    @classmethod
    def gaussian(cls, width: float, center: float = 0.0) -> "SpatialProfile":
        if not width > 0:
            raise ValueError(f"Gaussian width must be positive, got {width}")
        return cls(ProfileKind.GAUSSIAN, width=float(width), center=float(center))

    @classmethod
    def lorentzian(cls, width: float, center: float = 0.0) -> "SpatialProfile":
        if not width > 0:
            raise ValueError(f"Lorentzian width must be positive, got {width}")
        return cls(ProfileKind.LORENTZIAN, width=float(width), center=float(center))

    @classmethod
    def tabulated(
        cls,
        x_grid: np.ndarray,
        values: np.ndarray,
        normalize: bool = False,
        decay_tol: float = TABLE_DECAY,
    ) -> "SpatialProfile":
        """
        Sampled profile, interpolated by cubic splines and zero off the grid.

        With normalize=True a real non-negative table is rescaled to unit
        integral; other tables are left untouched.
        """
        x = np.array(x_grid, dtype=float)
        v = np.array(values, dtype=complex)
        if x.ndim != 1 or x.shape != v.shape or x.size < 4:
            raise ValueError("Tabulated profile needs matching 1-D x and value arrays of length >= 4.")
        if np.any(np.diff(x) <= 0):
            raise ValueError("Tabulated profile grid must be strictly increasing.")
        peak = np.max(np.abs(v))
        if peak == 0:
            raise ValueError("Tabulated profile is identically zero.")
        if max(abs(v[0]), abs(v[-1])) >= decay_tol * peak:
            raise ValueError(
                f"Tabulated profile does not decay at the grid ends "
                f"(|F| must drop below {decay_tol:g} of its peak)."
            )
        if normalize and np.all(v.imag == 0) and np.all(v.real >= 0):
            v = v / _spline_integral(x, v).real
        x.setflags(write=False)
        v.setflags(write=False)
        return cls(ProfileKind.TABULATED, x_grid=x, values=v)

    @property
    def is_real_even(self) -> bool:
        """Real and symmetric about x = 0, so that F_hat is real and even."""
        if self.kind == ProfileKind.DELTA:
            return self.center == 0.0
        if self.kind in (ProfileKind.GAUSSIAN, ProfileKind.LORENTZIAN):
            return self.center == 0.0
        if self.kind == ProfileKind.MODULATED:
            return self.envelope.is_real_even
        return False

    @property
    def length_scale(self) -> Optional[float]:
        """Characteristic width L, or None for a pointlike profile."""
        if self.kind in (ProfileKind.GAUSSIAN, ProfileKind.LORENTZIAN):
            return self.width
        if self.kind == ProfileKind.MODULATED:
            return self.envelope.length_scale
        if self.kind == ProfileKind.TABULATED:
            weight = np.abs(self.values)
            mean = np.sum(weight * self.x_grid) / np.sum(weight)
            return float(np.sqrt(np.sum(weight * (self.x_grid - mean) ** 2) / np.sum(weight)))
        return None

    @property
    def extent(self) -> float:
        """Largest |x| on which the profile is appreciable."""
        if self.kind == ProfileKind.DELTA:
            return abs(self.center)
        if self.kind in (ProfileKind.GAUSSIAN, ProfileKind.LORENTZIAN):
            return abs(self.center) + EXTENT_WIDTHS * self.width
        if self.kind == ProfileKind.MODULATED:
            return self.envelope.extent
        magnitude = np.abs(self.values)
        inside = self.x_grid[magnitude >= EXTENT_LEVEL * magnitude.max()]
        return float(np.max(np.abs(inside)))

    @cached_property
    def _splines(self) -> tuple[CubicSpline, CubicSpline]:
        return (
            CubicSpline(self.x_grid, self.values.real),
            CubicSpline(self.x_grid, self.values.imag),
        )

    def describe(self) -> dict:
        """Flat description used in provenance headers."""
        out = {"kind": self.kind.value}
        if self.width is not None:
            out["width"] = self.width
        if self.kind != ProfileKind.TABULATED:
            out["center"] = self.center
        if self.kind == ProfileKind.MODULATED:
            out["carrier"] = self.carrier
            out["envelope"] = self.envelope.describe()
        if self.kind == ProfileKind.TABULATED:
            out["samples"] = int(self.x_grid.size)
            out["x_range"] = [float(self.x_grid[0]), float(self.x_grid[-1])]
        return out


def _spline_integral(x: np.ndarray, v: np.ndarray) -> complex:
    re = CubicSpline(x, v.real).integrate(x[0], x[-1])
    im = CubicSpline(x, v.imag).integrate(x[0], x[-1])
    return complex(re, im)


def eval_spatial(profile: SpatialProfile, x) -> np.ndarray | complex:
    """F(x), vectorized over x. Modulated profiles return S(x) cos(q x)."""
    kind = profile.kind
    if kind == ProfileKind.DELTA:
        raise DeltaNotEvaluable("A Delta profile has no pointwise value.")

    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise ValueError("Profile evaluation point must be finite.")

    if kind == ProfileKind.GAUSSIAN:
        L = profile.width
        u = xs - profile.center
        out = np.exp(-0.5 * (u / L) ** 2) / (math.sqrt(2.0 * math.pi) * L) + 0j
    elif kind == ProfileKind.LORENTZIAN:
        L = profile.width
        u = xs - profile.center
        out = (L / math.pi) / (u ** 2 + L ** 2) + 0j
    elif kind == ProfileKind.MODULATED:
        out = eval_spatial(profile.envelope, xs) * np.cos(profile.carrier * xs)
    else:
        re_spline, im_spline = profile._splines
        inside = (xs >= profile.x_grid[0]) & (xs <= profile.x_grid[-1])
        out = np.where(inside, re_spline(xs) + 1j * im_spline(xs), 0.0)

    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SpectralProfile:
    """The Fourier transform F_hat(k), callable on scalars or arrays."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    provenance: Provenance
    spec: Optional[QuadratureSpec] = None

    def __call__(self, k):
        ks = np.asarray(k, dtype=float)
        out = np.asarray(self.evaluator(np.atleast_1d(ks).ravel()), dtype=complex)
        return complex(out[0]) if ks.ndim == 0 else out.reshape(ks.shape)

    def even_defect(self, k_sample: np.ndarray) -> float:
        """max |F_hat(k) - F_hat(-k)| over the sampled wavenumbers."""
        k_sample = np.asarray(k_sample, dtype=float)
        return float(np.max(np.abs(self(k_sample) - self(-k_sample))))

    def tabulated(self, k_lo: float, k_hi: float, n: int = 2049) -> "SpectralProfile":
        """
        Spline cache of this transform on [k_lo, k_hi].

        Analytic transforms are cheap and returned unchanged.
        """
        if self.provenance == Provenance.ANALYTIC:
            return self
        grid = np.linspace(k_lo, k_hi, n)
        samples = self(grid)
        re_spline = CubicSpline(grid, samples.real)
        im_spline = CubicSpline(grid, samples.imag)

        def cached(k: np.ndarray) -> np.ndarray:
            if np.any((k < k_lo) | (k > k_hi)):
                raise ValueError(f"Wavenumber outside cached range [{k_lo:g}, {k_hi:g}].")
            return re_spline(k) + 1j * im_spline(k)

        return SpectralProfile(cached, Provenance.NUMERIC, self.spec)


def _shifted(center: float, evaluator: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    if center == 0.0:
        return evaluator
    return lambda k: np.exp(-1j * k * center) * evaluator(k)


def spectral(profile: SpatialProfile, spec: Optional[QuadratureSpec] = None) -> SpectralProfile:
    """Closed-form transform where one exists, numeric for Tabulated profiles."""
    kind = profile.kind

    if kind == ProfileKind.DELTA:
        evaluator = _shifted(profile.center, lambda k: np.ones_like(k, dtype=complex))
        return SpectralProfile(evaluator, Provenance.ANALYTIC)

    if kind == ProfileKind.GAUSSIAN:
        L = profile.width
        evaluator = _shifted(profile.center, lambda k: np.exp(-0.5 * (k * L) ** 2) + 0j)
        return SpectralProfile(evaluator, Provenance.ANALYTIC)

    if kind == ProfileKind.LORENTZIAN:
        L = profile.width
        evaluator = _shifted(profile.center, lambda k: np.exp(-L * np.abs(k)) + 0j)
        return SpectralProfile(evaluator, Provenance.ANALYTIC)

    if kind == ProfileKind.MODULATED:
        inner = spectral(profile.envelope, spec)
        q = profile.carrier

        def split(k: np.ndarray) -> np.ndarray:
            return 0.5 * (inner.evaluator(k - q) + inner.evaluator(k + q))

        return SpectralProfile(split, inner.provenance, inner.spec)

    return _tabulated_transform(profile, spec or QuadratureSpec(rel_tol=1e-9, abs_tol=1e-12))


def _tabulated_transform(profile: SpatialProfile, spec: QuadratureSpec) -> SpectralProfile:
    """
    Transform of a spline table, one Kronrod panel per grid interval.

    The spline is a cubic on each interval, so the panels only have to
    resolve exp(-ikx). Intervals are subdivided uniformly until the
    Kronrod-Gauss difference passes for every requested k.
    """
    x = profile.x_grid

    def evaluator(k: np.ndarray) -> np.ndarray:
        out = np.empty(k.shape, dtype=complex)
        for start in range(0, k.size, _K_CHUNK):
            ks = k[start:start + _K_CHUNK]
            out[start:start + _K_CHUNK] = _tabulated_chunk(profile, x, ks, spec)
        return out

    return SpectralProfile(evaluator, Provenance.NUMERIC, spec)


def _tabulated_chunk(profile: SpatialProfile, x: np.ndarray, ks: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    k_max = float(np.max(np.abs(ks))) if ks.size else 0.0
    h = float(np.max(np.diff(x)))
    # enough subdivisions that each panel spans at most pi/4 of the carrier phase
    split = max(1, math.ceil(h * k_max / (math.pi / 4.0)))

    while True:
        breakpoints = _subdivide(x, split)
        rule = composite_rule(breakpoints)
        samples = eval_spatial(profile, rule.nodes)
        integrand = samples[None, :] * np.exp(-1j * ks[:, None] * rule.nodes[None, :])
        value, error, panel_errors = rule.integrate(integrand)
        tolerance = spec.tolerance(value)
        if np.all(error <= tolerance):
            return value
        if (len(breakpoints) - 1) * 2 > max(spec.max_panels, 16 * len(x)):
            worst_k, worst_panel = np.unravel_index(np.argmax(panel_errors), panel_errors.shape)
            raise QuadratureFailure(
                f"Tabulated transform at k = {ks[worst_k]:g} did not converge",
                worst_panel=(float(breakpoints[worst_panel]), float(breakpoints[worst_panel + 1])),
                worst_error=float(panel_errors[worst_k, worst_panel]),
            )
        split *= 2
        log_quad(f"Refining tabulated transform to {split} panels per sample interval.")


def _subdivide(x: np.ndarray, split: int) -> np.ndarray:
    if split == 1:
        return x
    fractions = np.arange(split) / split
    inner = x[:-1, None] + np.diff(x)[:, None] * fractions[None, :]
    return np.concatenate([inner.ravel(), x[-1:]])


def modulate(envelope: SpatialProfile, gap: float, c: float = 1.0) -> SpatialProfile:
    """S(x) cos(gap * x / c): an envelope carrying internal oscillations at the gap."""
    if envelope.kind == ProfileKind.DELTA:
        raise DeltaNotModulable("A Delta profile cannot be modulated.")
    if envelope.kind == ProfileKind.MODULATED:
        raise NestedModulation("The envelope of a modulated profile must not be modulated.")
    if gap < 0 or not c > 0:
        raise ValueError(f"Modulation needs gap >= 0 and c > 0, got gap={gap}, c={c}")
    return SpatialProfile(
        ProfileKind.MODULATED,
        center=envelope.center,
        envelope=envelope,
        carrier=float(gap) / float(c),
    )


def _truncation_radius(profile: SpatialProfile) -> float:
    base = profile.envelope if profile.kind == ProfileKind.MODULATED else profile
    if base.kind == ProfileKind.GAUSSIAN:
        return 14.0 * base.width
    if base.kind == ProfileKind.LORENTZIAN:
        return 40.0 * base.width
    raise ValueError(f"No numeric transform radius for {base.kind.value} profiles.")


def _lorentzian_tail(envelope: SpatialProfile, radius: float, k: float) -> float:
    """2 * integral_R^inf F(u) cos(k u) du for the centred Lorentzian."""
    L = envelope.width

    def density(u: float) -> float:
        return (L / math.pi) / (u * u + L * L)

    if k == 0.0:
        return 2.0 * math.atan(L / radius) / math.pi
    value, _ = quad(density, radius, np.inf, weight="cos", wvar=abs(k), epsabs=1e-13, limlst=200)
    return 2.0 * value


def numeric_spectral(profile: SpatialProfile, spec: Optional[QuadratureSpec] = None) -> SpectralProfile:
    """
    Transform any function-valued profile by direct quadrature.

    Used to cross-check the closed forms. The integral runs over
    center +- R (R = 14 L for Gaussians, 40 L for Lorentzians); the
    Lorentzian algebraic tail beyond R is added with Fourier-weighted quad.
    """
    if profile.kind == ProfileKind.DELTA:
        raise DeltaNotEvaluable("A Delta profile has no numeric transform.")
    if profile.kind == ProfileKind.TABULATED:
        return spectral(profile, spec)

    spec = spec or QuadratureSpec(rel_tol=1e-11, abs_tol=1e-13, max_panels=4000)
    radius = _truncation_radius(profile)
    center = profile.center
    q = profile.carrier if profile.kind == ProfileKind.MODULATED else 0.0
    base = profile.envelope if profile.kind == ProfileKind.MODULATED else profile

    def evaluator(k: np.ndarray) -> np.ndarray:
        out = np.empty(k.shape, dtype=complex)
        for start in range(0, k.size, _K_CHUNK):
            ks = k[start:start + _K_CHUNK]
            hint = float(np.max(np.abs(ks))) + q + 1.0 / radius

            def integrand(u: np.ndarray) -> np.ndarray:
                # u is measured from the centre; the shift becomes a phase below
                f = eval_spatial(profile, u + center)
                return f[:, None] * np.exp(-1j * np.outer(u, ks))

            result = integrate_1d(integrand, (-radius, radius), spec.with_overrides(phase_hint=hint))
            if not result.converged:
                raise QuadratureFailure(
                    "Numeric Fourier transform did not converge",
                    worst_panel=result.worst_panel,
                    worst_error=result.worst_error,
                )
            values = np.asarray(result.value, dtype=complex)
            if base.kind == ProfileKind.LORENTZIAN:
                tails = []
                for kv in ks:
                    if q == 0.0:
                        tails.append(_lorentzian_tail(base, radius, kv))
                    else:
                        # cos(qu) cos(ku) = [cos((k-q)u) + cos((k+q)u)] / 2
                        tails.append(
                            0.5 * (_lorentzian_tail(base, radius, kv - q) + _lorentzian_tail(base, radius, kv + q))
                        )
                values = values + np.asarray(tails)
            out[start:start + _K_CHUNK] = np.exp(-1j * ks * center) * values
        return out

    return SpectralProfile(evaluator, Provenance.NUMERIC, spec)


def energy_balance(
    profile: SpatialProfile,
    k_limit: float,
    spec: Optional[QuadratureSpec] = None,
) -> tuple[float, float]:
    """
    Both sides of the Parseval identity.

    Returns (integral |F|^2 dx, (1/2pi) integral_{-K}^{K} |F_hat|^2 dk).
    """
    if profile.kind == ProfileKind.DELTA:
        raise DeltaNotEvaluable("A Delta profile has infinite energy.")
    spec = spec or QuadratureSpec(rel_tol=1e-9, abs_tol=1e-14)

    if profile.kind == ProfileKind.TABULATED:
        rule = composite_rule(_subdivide(profile.x_grid, 2))
        spatial = float(rule.integrate(np.abs(eval_spatial(profile, rule.nodes)) ** 2)[0])
    else:
        radius = _truncation_radius(profile)
        result = integrate_1d(
            lambda u: np.abs(eval_spatial(profile, u)) ** 2,
            (profile.center - radius, profile.center + radius),
            spec,
        )
        spatial = float(result.value)

    transform = spectral(profile, spec)
    result = integrate_1d(lambda k: np.abs(transform(k)) ** 2, (-k_limit, k_limit), spec)
    if not result.converged:
        raise QuadratureFailure(
            "Spectral energy integral did not converge",
            worst_panel=result.worst_panel,
            worst_error=result.worst_error,
        )
    return spatial, float(result.value) / (2.0 * math.pi)


def load_profile(path: str | Path) -> SpatialProfile:
    """Tabulated profile from a (x, Re F [, Im F]) file; real non-negative tables are normalized."""
    x, values = load_complex_table(path)
    profile = SpatialProfile.tabulated(x, values, normalize=True)
    log_info(f"Tabulated profile: {x.size} samples on [{x[0]:g}, {x[-1]:g}]")
    return profile
