"""
Discrete-mode oracle for the wavepacket correlation kernel.

The field is replaced by N midpoint modes (N/2 per sign of k) on the
configured k-window, with exact ladder operators on a truncated Fock space.
Each mode couples to the detector through

    u_k(tau) = integral dchi F(chi) exp(i [Phi(k, tau, chi) - Phi(k, 0, 0)]) / sqrt(4 pi c |k|)

integrated directly over the smearing support, with Phi the plane-wave
phase at the Fermi-Walker point (tau, chi). Neither the profile transform
nor the chirped-wavenumber factorization enters, so the oracle shares no
formula with CorrelationKernel beyond the definition of the field.
The kernel <y|Psi(tau'')Psi(tau')|y> is then evaluated by applying the
smeared field operator to the state vector, with no Wick contraction.

Psi changes particle number by one and only ever acts on the one-particle
state |y>, so the vacuum plus the one- and two-particle sectors hold the
computation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .kinematics import TrajectoryFrame, phase
from .logging_utils import log_info
from .profiles import ProfileKind, SpatialProfile, eval_spatial
from .quadrature import FixedRule, composite_rule
from .response import DetectorConfig, WavepacketSpectrum, build_kernel

# Gaussian envelopes are integrated over center +- SUPPORT_WIDTHS widths.
SUPPORT_WIDTHS = 12.0
# Fraction of the horizon distance the chi-range may approach.
HORIZON_MARGIN = 1.0 - 1e-9


class TruncatedFockSpace:
    """
    Bosonic Fock space of n_modes modes holding at most two quanta.

    Basis order: vacuum, the n one-particle states |j>, then the pairs
    |i j> with i <= j, where |j j> = (a_j^dag)^2 / sqrt(2) |0>.
    """

    def __init__(self, n_modes: int) -> None:
        if n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {n_modes}")
        self.n_modes = n_modes
        self.pairs = [(i, j) for i in range(n_modes) for j in range(i, n_modes)]
        self.pair_index = {pair: 1 + n_modes + idx for idx, pair in enumerate(self.pairs)}
        self.dim = 1 + n_modes + len(self.pairs)
        self._annihilators = [self._build_annihilator(m) for m in range(n_modes)]

    def _build_annihilator(self, mode: int) -> sp.csr_matrix:
        rows, cols, vals = [0], [1 + mode], [1.0]
        for j in range(self.n_modes):
            i, k = sorted((mode, j))
            source = self.pair_index[(i, k)]
            if j == mode:
                rows.append(1 + mode)
                vals.append(math.sqrt(2.0))
            else:
                rows.append(1 + j)
                vals.append(1.0)
            cols.append(source)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    def annihilator(self, mode: int) -> sp.csr_matrix:
        if not 0 <= mode < self.n_modes:
            raise ValueError(f"Mode {mode} out of range [0, {self.n_modes - 1}]")
        return self._annihilators[mode]

    def creator(self, mode: int) -> sp.csr_matrix:
        return self.annihilator(mode).T.tocsr()

    def vacuum(self) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[0] = 1.0
        return vec

    def one_particle(self, amplitudes: Sequence[complex]) -> np.ndarray:
        """sum_j y_j a_j^dag |0>."""
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (self.n_modes,):
            raise ValueError(f"Expected {self.n_modes} amplitudes, got shape {amplitudes.shape}")
        vec = np.zeros(self.dim, dtype=complex)
        vec[1:1 + self.n_modes] = amplitudes
        return vec

    def number_operator(self) -> sp.csr_matrix:
        total = sp.csr_matrix((self.dim, self.dim))
        for m in range(self.n_modes):
            total = total + self.creator(m) @ self.annihilator(m)
        return total


@dataclass
class DiscreteModes:
    """Midpoint modes on +-[k_min, k_max] and the packet sampled on them."""

    k: np.ndarray
    dk: float
    amplitudes: np.ndarray


def discretize(y: WavepacketSpectrum, config: DetectorConfig, n_modes: int) -> DiscreteModes:
    if n_modes < 2 or n_modes % 2:
        raise ValueError(f"n_modes must be an even number >= 2, got {n_modes}")
    k_min, k_max = config.k_domain
    lo, hi = sorted(abs(v) for v in y.support)
    if lo < k_min or hi > k_max:
        raise ValueError(
            f"Packet support [{y.support[0]:g}, {y.support[1]:g}] must lie inside the k-window +-[{k_min:g}, {k_max:g}]."
        )
    half = n_modes // 2
    dk = (k_max - k_min) / half
    positive = k_min + dk * (np.arange(half) + 0.5)
    k = np.concatenate([-positive[::-1], positive])
    inside = (k >= y.support[0]) & (k <= y.support[1])
    amplitudes = np.where(inside, y(k), 0.0) * math.sqrt(dk)
    norm = float(np.linalg.norm(amplitudes))
    if norm == 0:
        raise ValueError("No discrete mode falls inside the packet support; increase n_modes.")
    return DiscreteModes(k=k, dk=dk, amplitudes=amplitudes / norm)


def _support_breakpoints(profile: SpatialProfile, max_panel: float) -> np.ndarray:
    """Panel edges covering the smearing, no panel wider than max_panel."""
    kind = profile.kind
    if kind == ProfileKind.MODULATED:
        return _support_breakpoints(profile.envelope, max_panel)
    if kind == ProfileKind.GAUSSIAN:
        reach = SUPPORT_WIDTHS * profile.width
        knots = np.array([profile.center - reach, profile.center + reach])
    elif kind == ProfileKind.TABULATED:
        knots = np.asarray(profile.x_grid, dtype=float)
    else:
        raise ValueError(f"The discrete-mode oracle cannot integrate a {kind.value} smearing directly.")
    pieces = [knots[:1]]
    for lo, hi in zip(knots[:-1], knots[1:]):
        n = max(1, math.ceil((hi - lo) / max_panel))
        pieces.append(np.linspace(lo, hi, n + 1)[1:])
    return np.concatenate(pieces)


def _smearing_rule(config: DetectorConfig, k_reach: float) -> FixedRule:
    profile = config.profile
    width = profile.length_scale
    carrier = abs(profile.carrier) if profile.kind == ProfileKind.MODULATED else 0.0
    max_panel = min(0.25 * width, math.pi / (4.0 * (k_reach + carrier)))
    breakpoints = _support_breakpoints(profile, max_panel)
    frame = config.frame
    if not frame.inertial:
        floor = -HORIZON_MARGIN * frame.horizon_distance
        breakpoints = np.unique(np.concatenate([[max(breakpoints[0], floor)], breakpoints[breakpoints > floor]]))
    return composite_rule(breakpoints)


def smeared_mode_coefficients(config: DetectorConfig, k: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """
    Coupling of each discrete mode to the detector, shape (n_tau, n_k).

    The plane wave is integrated against F(chi) along the Fermi-Walker
    slice at each tau, with the phase referred to the detector centre at
    tau = 0.
    """
    frame = config.frame
    k = np.asarray(k, dtype=float)
    taus = np.asarray(taus, dtype=float)
    measure = 1.0 / np.sqrt(4.0 * math.pi * frame.c * np.abs(k))
    reference = np.asarray(phase(frame, k, 0.0, 0.0))

    profile = config.profile
    if profile.kind == ProfileKind.DELTA:
        theta = np.asarray(phase(frame, k[None, :], taus[:, None], profile.center)) - reference[None, :]
        return np.exp(1j * theta) * measure[None, :]

    chirp = 1.0 if frame.inertial else math.exp(float(np.max(np.abs(frame.rapidity(taus)))))
    rule = _smearing_rule(config, float(np.max(np.abs(k))) * chirp)
    chi = rule.nodes
    weights = eval_spatial(profile, chi)

    out = np.empty((taus.size, k.size), dtype=complex)
    for row, tau in enumerate(taus):
        theta = np.asarray(phase(frame, k[:, None], tau, chi[None, :])) - reference[:, None]
        value, _, _ = rule.integrate(weights[None, :] * np.exp(1j * theta))
        out[row] = value * measure
    return out


def discrete_mode_kernel(
    y: WavepacketSpectrum,
    config: DetectorConfig,
    n_modes: int,
    tau_p: Sequence[float],
    tau_dp: Sequence[float],
) -> np.ndarray:
    """<y|Psi(tau''_j) Psi(tau'_i)|y> on the tensor grid, shape (n', n'')."""
    modes = discretize(y, config, n_modes)
    space = TruncatedFockSpace(n_modes)
    state = space.one_particle(modes.amplitudes)

    lowered = np.array([space.annihilator(m) @ state for m in range(n_modes)])
    raised = np.array([space.creator(m) @ state for m in range(n_modes)])
    scale = math.sqrt(modes.dk)

    def field_on_state(taus: np.ndarray) -> np.ndarray:
        # rows: Psi(tau)|y> for each tau
        u = smeared_mode_coefficients(config, modes.k, taus) * scale
        return u @ lowered + np.conj(u) @ raised

    left = field_on_state(np.atleast_1d(np.asarray(tau_p, dtype=float)))
    right = field_on_state(np.atleast_1d(np.asarray(tau_dp, dtype=float)))
    # <Psi(tau'') y | Psi(tau') y>
    return left @ np.conj(right).T


def discrete_mode_correlation(
    y: WavepacketSpectrum,
    config: DetectorConfig,
    n_modes: int,
    tau_p: float,
    tau_dp: float,
) -> complex:
    return complex(discrete_mode_kernel(y, config, n_modes, [tau_p], [tau_dp])[0, 0])


def richardson_errors(
    y: WavepacketSpectrum,
    config: DetectorConfig,
    taus: Sequence[float],
    mode_counts: Sequence[int] = (16, 32, 64),
) -> dict[int, float]:
    """
    Oracle-vs-continuum error for each mode count.

    The error is max |W_N - W| over the tau grid, relative to max |W|.
    """
    taus = np.asarray(taus, dtype=float)
    kernel = build_kernel(y, config)
    values = kernel.grid(taus, taus)
    continuum = values[..., 0] + values[..., 1]
    scale = float(np.max(np.abs(continuum)))
    errors = {}
    for n in mode_counts:
        oracle = discrete_mode_kernel(y, config, n, taus, taus)
        errors[int(n)] = float(np.max(np.abs(oracle - continuum))) / scale
        log_info(f"Discrete-mode oracle N = {n}: relative deviation {errors[int(n)]:.3e}")
    return errors
