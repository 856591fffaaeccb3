"""
Adaptive Gauss-Kronrod integration engine.

Every integral in the package goes through this module:
- integrate_1d: global adaptive bisection of 15-point Kronrod panels, with the
  embedded 7-point Gauss rule as the error estimator.
- integrate_2d: tensor-product panels on a square, optionally restricted to the
  upper triangle for Hermitian integrands.
- composite_rule: a fixed panel partition reused for many integrands at once.
- oracle_riemann: a dense midpoint rule, used only to cross-check the above.

Integrands are vectorized. In 1-D, f(x) receives an array of nodes of shape (n,)
and returns an array of shape (n, *tail). In 2-D, f(x_nodes, y_nodes) returns
the tensor grid of shape (n, m, *tail). A non-empty tail makes the integral
vector-valued; each component must reach the tolerance on its own.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .logging_utils import log_unconverged


# Kronrod 15-point abscissae on [0, 1] (descending) and weights, with the
# weights of the embedded 7-point Gauss rule (nodes xgk[1], xgk[3], xgk[5], xgk[7]).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_gauss_half = np.zeros(8)
_gauss_half[1::2] = _WG

# Full rule on [-1, 1], ascending.
NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
GAUSS_WEIGHTS = np.concatenate([_gauss_half[:7], [_gauss_half[7]], _gauss_half[6::-1]])
DIFF_WEIGHTS = KRONROD_WEIGHTS - GAUSS_WEIGHTS

_EPS = np.finfo(float).eps

# Panels per worker task; fixed so the reduction never depends on worker count.
_CHUNK = 8

PhaseHint = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class QuadratureSpec:
    """Error-control contract for integrate_1d and integrate_2d."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_panels: int = 2000
    phase_hint: Optional[PhaseHint] = None
    min_panels: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("Quadrature tolerances must be positive.")
        if self.max_panels < 4:
            raise ValueError("max_panels must be at least 4.")
        if self.min_panels < 1:
            raise ValueError("min_panels must be at least 1.")
        if self.workers < 1:
            raise ValueError("workers must be at least 1.")

    def tolerance(self, value: np.ndarray) -> np.ndarray:
        return np.maximum(self.rel_tol * np.abs(value), self.abs_tol)

    def with_overrides(self, **changes) -> "QuadratureSpec":
        fields = {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_panels": self.max_panels,
            "phase_hint": self.phase_hint,
            "min_panels": self.min_panels,
            "workers": self.workers,
        }
        fields.update(changes)
        return QuadratureSpec(**fields)


@dataclass
class IntegrationResult:
    """Outcome of an adaptive integration."""

    value: Union[complex, float, np.ndarray]
    error_estimate: Union[float, np.ndarray]
    evaluations: int
    converged: bool
    panels: int = 0
    worst_panel: Optional[tuple] = None
    worst_error: float = 0.0


def _local_phase_bound(hint: PhaseHint, x: float) -> float:
    if callable(hint):
        return abs(float(hint(x)))
    return abs(float(hint))


def _initial_breakpoints(a: float, b: float, spec: QuadratureSpec) -> np.ndarray:
    """Uniform min_panels split, refined so no panel exceeds pi / (4 * phase bound)."""
    coarse = np.linspace(a, b, spec.min_panels + 1)
    if spec.phase_hint is None:
        return coarse

    points = [a]
    for left, right in zip(coarse[:-1], coarse[1:]):
        x = left
        while x < right:
            bound = _local_phase_bound(spec.phase_hint, x)
            width = math.pi / (4.0 * bound) if bound > 0 else right - left
            x = min(x + width, right)
            if right - x < 1e-12 * (right - left):
                x = right
            points.append(x)
    return np.asarray(points)


def _as_components(values: np.ndarray, n_points: int) -> tuple[np.ndarray, tuple]:
    values = np.asarray(values)
    tail = values.shape[1:] if values.ndim > 1 else ()
    return values.reshape(n_points, -1), tail


def _panel_sums(values: np.ndarray, half: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kronrod value and error per panel; values has shape (panels, 15, m)."""
    kronrod = np.einsum("j,pjm->pm", KRONROD_WEIGHTS, values) * half[:, None]
    diff = np.einsum("j,pjm->pm", DIFF_WEIGHTS, values) * half[:, None]
    floor = 50.0 * _EPS * np.einsum("j,pjm->pm", KRONROD_WEIGHTS, np.abs(values)) * np.abs(half)[:, None]
    return kronrod, np.abs(diff) + floor


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    interval: Sequence[float],
    spec: Optional[QuadratureSpec] = None,
) -> IntegrationResult:
    """
    Integrate a vectorized f over [a, b] by adaptive Gauss-Kronrod bisection.

    Panels whose error exceeds their share of the tolerance (proportional to
    their width) are bisected together, one round at a time. When the panel
    budget runs out the best estimate is returned with converged=False.
    """
    spec = spec or QuadratureSpec()
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"Integration interval must satisfy a < b, got [{a}, {b}].")

    breakpoints = _initial_breakpoints(a, b, spec)
    lefts = breakpoints[:-1].copy()
    rights = breakpoints[1:].copy()

    values_k = None
    errors = None
    tail: tuple = ()
    evaluations = 0
    pending = np.arange(len(lefts))
    total_width = b - a

    while True:
        mid = 0.5 * (lefts[pending] + rights[pending])
        half = 0.5 * (rights[pending] - lefts[pending])
        nodes = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
        raw, tail = _as_components(f(nodes), nodes.size)
        evaluations += nodes.size
        kronrod, err = _panel_sums(raw.reshape(len(pending), 15, -1), half)

        if values_k is None:
            values_k = kronrod
            errors = err
        else:
            grow = len(lefts) - values_k.shape[0]
            if grow > 0:
                values_k = np.vstack([values_k, np.zeros((grow, values_k.shape[1]), dtype=np.result_type(values_k, kronrod))])
                errors = np.vstack([errors, np.zeros((grow, errors.shape[1]))])
            values_k = values_k.astype(np.result_type(values_k, kronrod), copy=False)
            values_k[pending] = kronrod
            errors[pending] = err

        total = values_k.sum(axis=0)
        total_err = errors.sum(axis=0)
        tol = spec.tolerance(total)
        if np.all(total_err <= tol):
            converged = True
            break

        widths = rights - lefts
        # normalized error: how many times over its share each panel is
        share = tol[None, :] * (widths / total_width)[:, None]
        excess = np.max(errors / np.maximum(share, np.finfo(float).tiny), axis=1)
        candidates = np.flatnonzero(excess > 1.0)
        if candidates.size == 0:
            candidates = np.array([int(np.argmax(excess))])

        budget = spec.max_panels - len(lefts)
        if budget <= 0:
            converged = False
            break
        if candidates.size > budget:
            order = np.argsort(-excess[candidates], kind="stable")
            candidates = np.sort(candidates[order[:budget]])

        split_mid = 0.5 * (lefts[candidates] + rights[candidates])
        new_lefts = split_mid.copy()
        new_rights = rights[candidates].copy()
        rights[candidates] = split_mid
        start = len(lefts)
        lefts = np.concatenate([lefts, new_lefts])
        rights = np.concatenate([rights, new_rights])
        pending = np.concatenate([candidates, np.arange(start, len(lefts))])

    order = np.argsort(lefts, kind="stable")
    total = values_k[order].sum(axis=0)
    total_err = errors[order].sum(axis=0)
    worst = int(np.argmax(errors.max(axis=1)))

    if not converged:
        log_unconverged(f"1-D integral on [{a:g}, {b:g}]", len(lefts), float(np.max(total_err)))

    return IntegrationResult(
        value=total.reshape(tail) if tail else total[0],
        error_estimate=total_err.reshape(tail) if tail else float(total_err[0]),
        evaluations=evaluations,
        converged=converged,
        panels=len(lefts),
        worst_panel=(float(lefts[worst]), float(rights[worst])),
        worst_error=float(errors[worst].max()),
    )


# Panel kinds for the 2-D engine.
_FULL, _DIAG, _UPPER = 0, 1, 2


def _eval_square(f, x0, x1, y0, y1) -> tuple[np.ndarray, np.ndarray]:
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    xs = 0.5 * (x0 + x1) + hx * NODES
    ys = 0.5 * (y0 + y1) + hy * NODES
    grid = np.asarray(f(xs, ys))
    grid = grid.reshape(15, 15, -1)
    scale = hx * hy
    kronrod = np.einsum("i,j,ijm->m", KRONROD_WEIGHTS, KRONROD_WEIGHTS, grid) * scale
    gauss = np.einsum("i,j,ijm->m", GAUSS_WEIGHTS, GAUSS_WEIGHTS, grid) * scale
    floor = 50.0 * _EPS * np.einsum("i,j,ijm->m", KRONROD_WEIGHTS, KRONROD_WEIGHTS, np.abs(grid)) * abs(scale)
    return kronrod, np.abs(kronrod - gauss) + floor


def _tail_shape(f, x0, x1, y0, y1) -> tuple:
    midpoint = np.asarray(f(np.array([0.5 * (x0 + x1)]), np.array([0.5 * (y0 + y1)])))
    return midpoint.shape[2:]


def integrate_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    square: Sequence[float],
    spec: Optional[QuadratureSpec] = None,
    hermitian: bool = False,
) -> IntegrationResult:
    """
    Integrate f(x, y) over [lo, hi]^2 with adaptive tensor-product panels.

    If the caller certifies f(x, y) = conj(f(y, x)) (hermitian=True), only
    panels on or above the diagonal are evaluated: the result is the sum over
    diagonal squares plus 2 * Re of the sum over squares with y > x.
    Panels are evaluated in fixed-size chunks on spec.workers threads and
    reduced in panel order, so the result does not depend on the worker count.
    """
    spec = spec or QuadratureSpec()
    lo, hi = float(square[0]), float(square[1])
    if not lo < hi:
        raise ValueError(f"Integration square must satisfy lo < hi, got [{lo}, {hi}].")

    edges = np.linspace(lo, hi, spec.min_panels + 1)
    panels: list[tuple[float, float, float, float, int]] = []
    for i in range(spec.min_panels):
        for j in range(spec.min_panels):
            x0, x1, y0, y1 = edges[i], edges[i + 1], edges[j], edges[j + 1]
            if not hermitian:
                panels.append((x0, x1, y0, y1, _FULL))
            elif i == j:
                panels.append((x0, x1, y0, y1, _DIAG))
            elif j > i:
                panels.append((x0, x1, y0, y1, _UPPER))

    tail = _tail_shape(f, *panels[0][:4])
    area = (hi - lo) ** 2

    def evaluate(batch: list[tuple]) -> list[tuple[np.ndarray, np.ndarray]]:
        return [_eval_square(f, *p[:4]) for p in batch]

    def evaluate_all(batch: list[tuple]) -> list[tuple[np.ndarray, np.ndarray]]:
        chunks = [batch[i:i + _CHUNK] for i in range(0, len(batch), _CHUNK)]
        if spec.workers == 1 or len(chunks) == 1:
            results = [evaluate(chunk) for chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                results = list(pool.map(evaluate, chunks))
        return [item for chunk in results for item in chunk]

    def contribution(kind: int, kronrod: np.ndarray, err: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if kind == _UPPER:
            return 2.0 * kronrod.real, 2.0 * err
        return kronrod, err

    evaluations = 0
    values: list[np.ndarray] = []
    errors: list[np.ndarray] = []
    pending = list(range(len(panels)))
    converged = False

    while True:
        batch = [panels[i] for i in pending]
        results = evaluate_all(batch)
        evaluations += 225 * len(batch)
        for index, (kronrod, err) in zip(pending, results):
            value, error = contribution(panels[index][4], kronrod, err)
            if index < len(values):
                values[index] = value
                errors[index] = error
            else:
                values.append(value)
                errors.append(error)

        value_arr = np.array(values)
        error_arr = np.array(errors)
        total = value_arr.sum(axis=0)
        total_err = error_arr.sum(axis=0)
        tol = spec.tolerance(total)
        if np.all(total_err <= tol):
            converged = True
            break

        weights = np.array([
            ((p[1] - p[0]) * (p[3] - p[2])) * (2.0 if p[4] == _UPPER else 1.0)
            for p in panels
        ]) / area
        share = tol[None, :] * weights[:, None]
        excess = np.max(error_arr / np.maximum(share, np.finfo(float).tiny), axis=1)
        candidates = np.flatnonzero(excess > 1.0)
        if candidates.size == 0:
            candidates = np.array([int(np.argmax(excess))])

        budget = (spec.max_panels - len(panels)) // 3
        if budget <= 0:
            break
        if candidates.size > budget:
            order = np.argsort(-excess[candidates], kind="stable")
            candidates = np.sort(candidates[order[:budget]])

        pending = []
        for index in candidates:
            x0, x1, y0, y1, kind = panels[index]
            xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            if kind == _DIAG:
                children = [
                    (x0, xm, y0, ym, _DIAG),
                    (xm, x1, ym, y1, _DIAG),
                    (x0, xm, ym, y1, _UPPER),
                ]
            else:
                children = [
                    (x0, xm, y0, ym, kind),
                    (xm, x1, y0, ym, kind),
                    (x0, xm, ym, y1, kind),
                    (xm, x1, ym, y1, kind),
                ]
            panels[index] = children[0]
            pending.append(int(index))
            for child in children[1:]:
                panels.append(child)
                pending.append(len(panels) - 1)

    order = sorted(range(len(panels)), key=lambda i: panels[i][:4])
    total = np.array([values[i] for i in order]).sum(axis=0)
    total_err = np.array([errors[i] for i in order]).sum(axis=0)
    worst = int(np.argmax([float(np.max(e)) for e in errors]))

    if not converged:
        log_unconverged(f"2-D integral on [{lo:g}, {hi:g}]^2", len(panels), float(np.max(total_err)))

    return IntegrationResult(
        value=total.reshape(tail) if tail else total[0],
        error_estimate=total_err.reshape(tail) if tail else float(total_err[0]),
        evaluations=evaluations,
        converged=converged,
        panels=len(panels),
        worst_panel=tuple(float(v) for v in panels[worst][:4]),
        worst_error=float(np.max(errors[worst])),
    )


@dataclass(frozen=True)
class FixedRule:
    """A composite Kronrod rule on a fixed set of panels."""

    nodes: np.ndarray
    kronrod_weights: np.ndarray
    gauss_weights: np.ndarray
    breakpoints: np.ndarray

    @property
    def n_panels(self) -> int:
        return len(self.breakpoints) - 1

    def integrate(self, values: np.ndarray, axis: int = -1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Apply the rule along `axis` of sampled values.

        Returns (value, error, panel_errors); panel_errors has the panel
        index as its last axis.
        """
        values = np.moveaxis(np.asarray(values), axis, -1)
        value = values @ self.kronrod_weights
        panel_shape = values.shape[:-1] + (self.n_panels, 15)
        diff = (values * (self.kronrod_weights - self.gauss_weights)).reshape(panel_shape).sum(axis=-1)
        panel_errors = np.abs(diff)
        return value, panel_errors.sum(axis=-1), panel_errors


def composite_rule(breakpoints: Sequence[float]) -> FixedRule:
    """Kronrod nodes and weights over consecutive panels [b_i, b_{i+1}]."""
    breakpoints = np.asarray(breakpoints, dtype=float)
    if breakpoints.ndim != 1 or breakpoints.size < 2 or np.any(np.diff(breakpoints) <= 0):
        raise ValueError("Breakpoints must be a strictly increasing sequence of length >= 2.")
    mid = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    half = 0.5 * np.diff(breakpoints)
    nodes = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    kronrod = (half[:, None] * KRONROD_WEIGHTS[None, :]).ravel()
    gauss = (half[:, None] * GAUSS_WEIGHTS[None, :]).ravel()
    return FixedRule(nodes=nodes, kronrod_weights=kronrod, gauss_weights=gauss, breakpoints=breakpoints)


def oracle_riemann(
    f: Callable[..., np.ndarray],
    grid_n: int,
    domain: Sequence,
) -> Union[complex, float, np.ndarray]:
    """
    Dense midpoint rule with grid_n cells per axis, no adaptivity.

    domain is (a, b) for 1-D integrands or ((a, b), (c, d)) for 2-D ones,
    which are called on the tensor grid like integrate_2d integrands.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2.")

    def midpoints(a: float, b: float) -> tuple[np.ndarray, float]:
        h = (b - a) / grid_n
        return a + h * (np.arange(grid_n) + 0.5), h

    first = domain[0]
    if np.ndim(first) == 0:
        x, h = midpoints(float(domain[0]), float(domain[1]))
        return np.asarray(f(x)).sum(axis=0) * h

    (a, b), (c, d) = domain
    x, hx = midpoints(float(a), float(b))
    y, hy = midpoints(float(c), float(d))
    return np.asarray(f(x, y)).sum(axis=(0, 1)) * hx * hy
