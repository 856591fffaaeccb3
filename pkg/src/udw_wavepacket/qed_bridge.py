"""
From atomic wavefunctions to detector smearings.

The minimal-coupling interaction e p_D . A of a two-level atom, written in
the Pauli basis of the atom, reads

    H = alpha I + beta sigma_z + gamma sigma_x + delta sigma_y

where each coefficient is a field operator built from the spectral densities

    G_ij(p) = integral dx exp(-i p x) eps(p, lambda) conj(Psi_i(x)) (-i dPsi_j/dx).

Comparing the sigma_x / sigma_y channel with a smeared detector coupling
identifies the smearing F(x) = -i conj(Psi_e(x)) dPsi_g/dx.

Everything here works on 1-D grids, except the hydrogen helpers, which use
the radial path of a spherically symmetric pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.special import eval_hermite

from .errors import GridMismatch, IRCutoffRequired, ZeroMomentum
from .logging_utils import log_info, log_warning
from .profiles import SpatialProfile
from .table_reader import load_complex_table


NORM_TOL = 1e-8
DECAY_TOL = 1e-10
# Samples per sign branch for the 1/|p| constant integrals.
CONSTANT_SAMPLES = 513
_P_CHUNK = 128


class StateLabel(str, Enum):
    GROUND = "ground"
    EXCITED = "excited"


@dataclass(frozen=True, eq=False)
class WavefunctionGrid:
    """A normalized complex wavefunction sampled on a strictly increasing grid."""

    x_grid: np.ndarray
    values: np.ndarray
    label: StateLabel = StateLabel.GROUND

    def __post_init__(self) -> None:
        x = np.asarray(self.x_grid, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if x.ndim != 1 or x.shape != v.shape or x.size < 5:
            raise ValueError("Wavefunction needs matching 1-D grid and values of length >= 5.")
        if np.any(np.diff(x) <= 0):
            raise ValueError("Wavefunction grid must be strictly increasing.")
        norm = simpson(np.abs(v) ** 2, x=x)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"Wavefunction is not normalized: integral |Psi|^2 = {norm:.12g}")
        peak = np.max(np.abs(v))
        if max(abs(v[0]), abs(v[-1])) >= DECAY_TOL * peak:
            raise ValueError(
                f"Wavefunction does not decay at the grid ends (|Psi| must drop below {DECAY_TOL:g} of its peak)."
            )
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_samples(
        cls,
        x_grid: Sequence[float],
        values: Sequence[complex],
        label: StateLabel = StateLabel.GROUND,
    ) -> "WavefunctionGrid":
        """Normalize raw samples, then validate."""
        x = np.asarray(x_grid, dtype=float)
        v = np.asarray(values, dtype=complex)
        norm = simpson(np.abs(v) ** 2, x=x)
        if not norm > 0:
            raise ValueError("Wavefunction samples are identically zero.")
        return cls(x, v / math.sqrt(norm), label)

    def gradient(self) -> np.ndarray:
        return finite_gradient(self.x_grid, self.values)

    def shares_grid(self, other: "WavefunctionGrid") -> bool:
        return self.x_grid.shape == other.x_grid.shape and np.array_equal(self.x_grid, other.x_grid)


def finite_gradient(x: np.ndarray, values: np.ndarray) -> np.ndarray:
    """
    Derivative of sampled values.

    Uniform grids use fourth-order centred differences, with fourth-order
    one-sided stencils on the two points at each end. Non-uniform grids
    fall back to numpy's second-order gradient.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(values)
    steps = np.diff(x)
    h = steps[0]
    if x.size < 5 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        return np.gradient(f, x, edge_order=2)

    df = np.empty_like(f)
    df[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    df[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    df[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    df[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    df[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return df


def _unit_polarization(p: np.ndarray, helicity: int) -> np.ndarray:
    return np.ones_like(p, dtype=complex)


@dataclass(frozen=True)
class PolarizationSetup:
    """
    Polarization factor eps(p, lambda) of the field modes.

    In one spatial dimension eps is a unit complex number per mode; the
    default is 1 for both helicities.
    """

    epsilon: Callable[[np.ndarray, int], np.ndarray] = _unit_polarization
    helicities: tuple[int, ...] = (1, -1)

    def factor(self, p: np.ndarray, helicity: int) -> np.ndarray:
        eps = np.asarray(self.epsilon(np.asarray(p, dtype=float), helicity), dtype=complex)
        if np.any(np.abs(np.abs(eps) - 1.0) > 1e-12):
            raise ValueError(f"Polarization factor for helicity {helicity} is not unit modulus.")
        return np.broadcast_to(eps, np.shape(p))

    @staticmethod
    def mode_measure(p) -> np.ndarray:
        """1 / sqrt(2|p|)."""
        p = np.asarray(p, dtype=float)
        if np.any(p == 0):
            raise ZeroMomentum("The mode measure 1/sqrt(2p) is singular at p = 0.")
        return 1.0 / np.sqrt(2.0 * np.abs(p))


def _require_shared_grid(a: WavefunctionGrid, b: WavefunctionGrid) -> None:
    if not a.shares_grid(b):
        raise GridMismatch("Wavefunctions must be sampled on the same grid.")


def matrix_element_G(
    psi_i: WavefunctionGrid,
    psi_j: WavefunctionGrid,
    pol: PolarizationSetup,
    p,
    helicity: Optional[int] = None,
):
    """G_ij(p) by Simpson quadrature on the shared grid, vectorized over p."""
    _require_shared_grid(psi_i, psi_j)
    helicity = pol.helicities[0] if helicity is None else helicity
    x = psi_i.x_grid
    current = np.conj(psi_i.values) * (-1j * psi_j.gradient())

    ps = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty(ps.shape, dtype=complex)
    for start in range(0, ps.size, _P_CHUNK):
        chunk = ps[start:start + _P_CHUNK]
        integrand = np.exp(-1j * np.outer(chunk, x)) * current[None, :]
        out[start:start + _P_CHUNK] = simpson(integrand, x=x, axis=-1)
    out = out * pol.factor(ps, helicity)
    return complex(out[0]) if np.ndim(p) == 0 else out


@dataclass(frozen=True, eq=False)
class VectorSmearing:
    """F(x) = -i conj(Psi_e) dPsi_g/dx sampled on the wavefunction grid."""

    x_grid: np.ndarray
    values: np.ndarray
    source: tuple[WavefunctionGrid, WavefunctionGrid]

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        re = CubicSpline(self.x_grid, self.values.real)(xs)
        im = CubicSpline(self.x_grid, self.values.imag)(xs)
        inside = (xs >= self.x_grid[0]) & (xs <= self.x_grid[-1])
        out = np.where(inside, re + 1j * im, 0.0)
        return complex(out) if out.ndim == 0 else out

    def to_profile(self) -> SpatialProfile:
        """The smearing as a Tabulated profile, ready for the response module."""
        return SpatialProfile.tabulated(self.x_grid, self.values)


def smearing_from_wavefunctions(psi_e: WavefunctionGrid, psi_g: WavefunctionGrid) -> VectorSmearing:
    _require_shared_grid(psi_e, psi_g)
    values = -1j * np.conj(psi_e.values) * psi_g.gradient()
    return VectorSmearing(psi_e.x_grid, values, (psi_e, psi_g))


@dataclass(frozen=True, eq=False)
class HamiltonianDecomposition:
    """
    Pauli-basis decomposition of the QED interaction for one atomic pair.

    The G arrays are tabulated on p_grid with one row per helicity; exact
    values at any other p come from G(). The constants are integrated on
    +-[ir_cutoff, p_max] with measure dp/|p|.
    """

    ground: WavefunctionGrid
    excited: WavefunctionGrid
    polarization: PolarizationSetup
    coupling: float
    p_grid: np.ndarray
    G_gg: np.ndarray
    G_ee: np.ndarray
    G_ge: np.ndarray
    G_eg: np.ndarray
    alpha_gamma: float
    alpha_delta: float
    alpha_beta: float
    ir_cutoff: float
    dominant_p: float
    cutoff_sensitivity: dict = field(default_factory=dict)

    @property
    def gap_shift(self) -> float:
        """Constant absorbed into the detector gap."""
        return self.alpha_beta

    def G(self, pair: str, p, helicity: Optional[int] = None):
        """Exact G for pair in {'gg', 'ee', 'ge', 'eg'} at arbitrary p."""
        states = {"g": self.ground, "e": self.excited}
        if len(pair) != 2 or any(s not in states for s in pair):
            raise ValueError(f"Unknown matrix element pair: {pair!r}")
        return matrix_element_G(states[pair[0]], states[pair[1]], self.polarization, p, helicity)

    def densities(self) -> dict[str, np.ndarray]:
        """Spectral densities of the alpha, beta, gamma, delta operators on p_grid."""
        return {
            "alpha": 0.5 * (self.G_gg + self.G_ee),
            "beta": 0.5 * (self.G_gg - self.G_ee),
            "gamma": 0.5 * (self.G_ge + self.G_eg),
            "delta": (self.G_ge - self.G_eg) / 2j,
        }

    def to_frame(self):
        """Long table: p, helicity and Re/Im of each G and each density."""
        import pandas as pd

        rows = {"p": np.tile(self.p_grid, len(self.polarization.helicities))}
        rows["helicity"] = np.repeat(self.polarization.helicities, self.p_grid.size)
        named = {"G_gg": self.G_gg, "G_ee": self.G_ee, "G_ge": self.G_ge, "G_eg": self.G_eg}
        named.update(self.densities())
        for name, values in named.items():
            rows[f"re_{name}"] = values.real.ravel()
            rows[f"im_{name}"] = values.imag.ravel()
        return pd.DataFrame(rows)

    def summary(self) -> dict:
        return {
            "coupling": self.coupling,
            "alpha_gamma": self.alpha_gamma,
            "alpha_delta": self.alpha_delta,
            "alpha_beta": self.alpha_beta,
            "gap_shift": self.gap_shift,
            "ir_cutoff": self.ir_cutoff,
            "dominant_p": self.dominant_p,
            "cutoff_sensitivity": dict(self.cutoff_sensitivity),
        }


def _log_branch(p_min: float, p_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Geometric grid on [p_min, p_max] and its log-spaced variable."""
    log_p = np.linspace(math.log(p_min), math.log(p_max), CONSTANT_SAMPLES)
    return np.exp(log_p), log_p


def _constants(
    ground: WavefunctionGrid,
    excited: WavefunctionGrid,
    pol: PolarizationSetup,
    coupling: float,
    p_min: float,
    p_max: float,
) -> tuple[float, float, float]:
    """(alpha_gamma, alpha_delta, alpha_beta) on +-[p_min, p_max]."""
    p_pos, log_p = _log_branch(p_min, p_max)
    totals = np.zeros(3)
    for sign in (1.0, -1.0):
        p = sign * p_pos
        for helicity in pol.helicities:
            g_gg = matrix_element_G(ground, ground, pol, p, helicity)
            g_ee = matrix_element_G(excited, excited, pol, p, helicity)
            g_ge = matrix_element_G(ground, excited, pol, p, helicity)
            g_eg = matrix_element_G(excited, ground, pol, p, helicity)
            s = np.conj(g_gg + g_ee)
            # dp / |p| = d(log |p|)
            totals[0] += simpson((s * (g_ge + g_eg)).real, x=log_p)
            totals[1] += simpson((s * (g_ge - g_eg) / 1j).real, x=log_p)
            totals[2] += simpson((s * (g_gg - g_ee)).real, x=log_p)
    return tuple(0.25 * coupling ** 2 * totals)


def decompose(
    psi_g: WavefunctionGrid,
    psi_e: WavefunctionGrid,
    pol: Optional[PolarizationSetup] = None,
    p_grid: Sequence[float] = (),
    coupling: float = 1.0,
    ir_fraction: float = 1e-3,
) -> HamiltonianDecomposition:
    """
    Tabulate the G densities on p_grid and integrate the constant shifts.

    The infrared cutoff is ir_fraction times the dominant wavenumber, the
    p on the grid where sum |G| peaks. The constants are also reported at
    twice the cutoff so their sensitivity to it can be judged.
    """
    _require_shared_grid(psi_g, psi_e)
    pol = pol or PolarizationSetup()
    p_grid = np.asarray(p_grid, dtype=float)
    if p_grid.ndim != 1 or p_grid.size == 0:
        raise ValueError("p_grid must be a non-empty 1-D array.")
    if not 0 < ir_fraction < 1:
        raise ValueError(f"ir_fraction must lie in (0, 1), got {ir_fraction}")

    n_hel = len(pol.helicities)
    G = {name: np.empty((n_hel, p_grid.size), dtype=complex) for name in ("gg", "ee", "ge", "eg")}
    states = {"g": psi_g, "e": psi_e}
    for row, helicity in enumerate(pol.helicities):
        for name in G:
            G[name][row] = matrix_element_G(states[name[0]], states[name[1]], pol, p_grid, helicity)

    weight = sum(np.abs(values).sum(axis=0) for values in G.values())
    dominant_p = abs(float(p_grid[int(np.argmax(weight))]))
    if dominant_p == 0:
        raise IRCutoffRequired("The densities peak at p = 0; no dominant wavenumber sets the cutoff.")
    ir_cutoff = ir_fraction * dominant_p
    if np.min(np.abs(p_grid)) < ir_cutoff:
        raise IRCutoffRequired(
            f"p_grid reaches |p| = {np.min(np.abs(p_grid)):g}, below the infrared cutoff {ir_cutoff:g}."
        )
    p_max = float(np.max(np.abs(p_grid)))
    if p_max <= 2.0 * ir_cutoff:
        raise IRCutoffRequired(f"p_grid must extend beyond twice the infrared cutoff {ir_cutoff:g}.")

    alpha_gamma, alpha_delta, alpha_beta = _constants(psi_g, psi_e, pol, coupling, ir_cutoff, p_max)
    shifted = _constants(psi_g, psi_e, pol, coupling, 2.0 * ir_cutoff, p_max)
    sensitivity = {
        "cutoff": 2.0 * ir_cutoff,
        "alpha_gamma": shifted[0],
        "alpha_delta": shifted[1],
        "alpha_beta": shifted[2],
    }
    log_info(
        f"Decomposition: alpha_gamma = {alpha_gamma:.6g}, alpha_delta = {alpha_delta:.6g}, "
        f"alpha_beta = {alpha_beta:.6g} (IR cutoff {ir_cutoff:.3g})"
    )
    if abs(alpha_gamma - shifted[0]) > 0.1 * max(abs(alpha_gamma), 1e-300):
        log_warning("alpha_gamma changes by more than 10% when the IR cutoff is doubled.")

    return HamiltonianDecomposition(
        ground=psi_g,
        excited=psi_e,
        polarization=pol,
        coupling=float(coupling),
        p_grid=p_grid,
        G_gg=G["gg"],
        G_ee=G["ee"],
        G_ge=G["ge"],
        G_eg=G["eg"],
        alpha_gamma=float(alpha_gamma),
        alpha_delta=float(alpha_delta),
        alpha_beta=float(alpha_beta),
        ir_cutoff=ir_cutoff,
        dominant_p=dominant_p,
        cutoff_sensitivity=sensitivity,
    )


def vacuum_mode_shift(decomp: HamiltonianDecomposition, p, helicity: Optional[int] = None):
    """Offset b_p - a_p of the displaced free-field modes, e (G_gg + G_ee) / (2|p|)^(3/2)."""
    ps = np.asarray(p, dtype=float)
    if np.any(ps == 0):
        raise ZeroMomentum("The mode shift is singular at p = 0.")
    total = decomp.G("gg", ps, helicity) + decomp.G("ee", ps, helicity)
    return decomp.coupling * total / (2.0 * np.abs(ps)) ** 1.5


def perturbativity_ratio(decomp: HamiltonianDecomposition) -> float:
    """alpha_gamma / e; of order one or less for atomic inputs."""
    if decomp.coupling == 0:
        return 0.0
    return decomp.alpha_gamma / decomp.coupling


def interaction_matrix(
    decomp: HamiltonianDecomposition,
    p: float,
    n_max: int,
    helicity: Optional[int] = None,
) -> np.ndarray:
    """
    Single-mode interaction on qubit (x) oscillator truncated at n_max quanta.

    Each Pauli channel P contributes P (x) e (c_P a^dag + conj(c_P) a) / sqrt(2|p|),
    which is Hermitian for any complex density c_P.
    """
    if p == 0:
        raise ZeroMomentum("Single-mode interaction needs p != 0.")
    if n_max < 1:
        raise ValueError("n_max must be at least 1.")
    g_gg = decomp.G("gg", p, helicity)
    g_ee = decomp.G("ee", p, helicity)
    g_ge = decomp.G("ge", p, helicity)
    g_eg = decomp.G("eg", p, helicity)
    channels = (
        (np.eye(2), 0.5 * (g_gg + g_ee)),
        (np.array([[1.0, 0.0], [0.0, -1.0]]), 0.5 * (g_gg - g_ee)),
        (np.array([[0.0, 1.0], [1.0, 0.0]]), 0.5 * (g_ge + g_eg)),
        (np.array([[0.0, -1j], [1j, 0.0]]), (g_ge - g_eg) / 2j),
    )
    annihilator = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1)
    creator = annihilator.T
    scale = decomp.coupling / math.sqrt(2.0 * abs(p))
    dim = 2 * (n_max + 1)
    H = np.zeros((dim, dim), dtype=complex)
    for pauli, density in channels:
        field_op = scale * (density * creator + np.conj(density) * annihilator)
        H += np.kron(pauli, field_op)
    return H


def gaussian_wavefunction(
    sigma: float,
    half_width: Optional[float] = None,
    n_points: int = 4001,
    label: StateLabel = StateLabel.GROUND,
    center: float = 0.0,
) -> WavefunctionGrid:
    """(pi sigma^2)^(-1/4) exp(-(x - x0)^2 / (2 sigma^2)); then G_gg(p) = (p/2) exp(-p^2 sigma^2 / 4)."""
    return hermite_wavefunction(0, sigma, half_width, n_points, label, center)


def hermite_wavefunction(
    n: int,
    sigma: float,
    half_width: Optional[float] = None,
    n_points: int = 4001,
    label: StateLabel = StateLabel.EXCITED,
    center: float = 0.0,
) -> WavefunctionGrid:
    """Harmonic-oscillator eigenfunction of order n with length scale sigma."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n < 0:
        raise ValueError(f"Hermite order must be >= 0, got {n}")
    half_width = half_width if half_width is not None else (9.0 + math.sqrt(2.0 * n + 1.0)) * sigma
    x = np.linspace(center - half_width, center + half_width, n_points)
    u = (x - center) / sigma
    norm = 1.0 / math.sqrt(2.0 ** n * math.factorial(n) * math.sqrt(math.pi) * sigma)
    values = norm * eval_hermite(n, u) * np.exp(-0.5 * u ** 2)
    return WavefunctionGrid.from_samples(x, values.astype(complex), label)


def load_wavefunction(path: str | Path, label: StateLabel = StateLabel.GROUND) -> WavefunctionGrid:
    x, values = load_complex_table(path)
    return WavefunctionGrid.from_samples(x, values, label)


def radial_smearing(r_grid: np.ndarray, psi_e: np.ndarray, psi_g: np.ndarray) -> np.ndarray:
    """Radial component of -i conj(Psi_e) grad Psi_g for spherically symmetric states."""
    r = np.asarray(r_grid, dtype=float)
    return -1j * np.conj(np.asarray(psi_e)) * finite_gradient(r, np.asarray(psi_g, dtype=complex))


def hydrogen_1s(r_grid: np.ndarray, bohr_radius: float = 1.0) -> np.ndarray:
    r = np.asarray(r_grid, dtype=float)
    return np.exp(-r / bohr_radius) / math.sqrt(math.pi * bohr_radius ** 3)


def hydrogen_1s_smearing(r_grid: np.ndarray, bohr_radius: float = 1.0) -> np.ndarray:
    """Radial smearing of the 1s pair by finite differences."""
    psi = hydrogen_1s(r_grid, bohr_radius)
    return radial_smearing(r_grid, psi, psi)


def hydrogen_1s_smearing_exact(r_grid: np.ndarray, bohr_radius: float = 1.0) -> np.ndarray:
    """
    Closed form i exp(-2r/a0) / (pi a0^4) along the radial unit vector.

    Printed versions of this result sometimes show exp(-r/a0) with the
    opposite sign; the expression here is what the definition gives.
    """
    r = np.asarray(r_grid, dtype=float)
    return 1j * np.exp(-2.0 * r / bohr_radius) / (math.pi * bohr_radius ** 4)
