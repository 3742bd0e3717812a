"""
Empirical smoothness functionals consumed by the theorem bounds.

Every supremum over [0, inf) is taken on a GridSpec window: a coarse uniform pass picks the
best cell, then `refine_levels` dyadic passes resample around it. Step arguments (eps, xi)
run over a geometric ladder h = step * 2^{-k/STEP_SAMPLES} cut at DT_MIN_STEP, so the ladder
for step/2 is a subset of the ladder for step.
"""

import math
from typing import Callable, Tuple

import numpy as np

from szmk.constants import (
    DT_MIN_STEP,
    REFINE_SAMPLES,
    STEP_SAMPLES,
    TV_BASE_INTERVALS,
    TV_REFINE_LEVELS,
    TV_REL_STOP,
    WINDOW_HI,
    WINDOW_LO,
    WINDOW_POINTS,
)
from szmk.errors import DomainError, GridError
from szmk.kernel import evaluate_finite
from szmk.protocol import GridSpec, ModulusResult, TestFunction


def default_window(hi: float = WINDOW_HI) -> GridSpec:
    return GridSpec(lo=WINDOW_LO, hi=hi, points=WINDOW_POINTS)


def psi(x: float) -> float:
    if x < 0:
        raise DomainError(f"psi needs x >= 0, got {x}")
    return math.sqrt(x * (1.0 + x))


def u_of_x(x: float) -> float:
    if x < 0:
        raise DomainError(f"u needs x >= 0, got {x}")
    return math.sqrt(x) + math.sqrt(1.0 + x)


def step_ladder(step: float) -> np.ndarray:
    if not step > 0:
        raise DomainError(f"step argument must be > 0, got {step}")
    octaves = max(0.0, math.log2(step / DT_MIN_STEP))
    k = np.arange(int(math.floor(octaves * STEP_SAMPLES)) + 1)
    return step * 2.0 ** (-k / STEP_SAMPLES)


def _refine(
    objective: Callable[[np.ndarray], np.ndarray],
    center: float,
    best: float,
    width: float,
    lo: float,
    hi: float,
    levels: int,
) -> Tuple[float, float]:
    """
    Dyadic local search: resample [center - width, center + width] inside [lo, hi], move to
    the best sample, halve the width. `objective` returns -inf where a point is excluded.
    """
    for _ in range(levels):
        points = np.linspace(max(lo, center - width), min(hi, center + width), REFINE_SAMPLES)
        values = objective(points)
        i = int(np.argmax(values))
        if values[i] > best:
            best, center = float(values[i]), float(points[i])
        width /= 2.0
    return center, best


def lipschitz_maximal(f: TestFunction, x: float, alpha: float, grid: GridSpec) -> ModulusResult:
    """
    eta_alpha(f; x) = sup_{t != x} |f(t) - f(x)| / |t - x|^alpha over the window.

    Returns:
        ModulusResult with argmax_location = (x, t*).
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not grid.lo <= x <= grid.hi:
        raise DomainError(f"x={x} outside the window [{grid.lo}, {grid.hi}]")
    fx = float(f(x))

    def quotient(t: np.ndarray) -> np.ndarray:
        distance = np.abs(t - x)
        out = np.full(t.shape, -np.inf)
        keep = distance > 0
        out[keep] = np.abs(evaluate_finite(f, t[keep]) - fx) / distance[keep] ** alpha
        return out

    nodes = grid.nodes()
    values = quotient(nodes)
    if not np.any(np.isfinite(values)):
        raise GridError("no grid point left after excluding t = x")
    i = int(np.argmax(values))
    t_best, best = _refine(
        quotient, float(nodes[i]), float(values[i]), grid.spacing, grid.lo, grid.hi, grid.refine_levels
    )
    return ModulusResult(value=best, argmax_location=(x, t_best), grid=grid)


def lipschitz_maximal_global(f: TestFunction, alpha: float, grid: GridSpec) -> ModulusResult:
    """sup over grid x of the pointwise Lipschitz maximal function."""
    results = [lipschitz_maximal(f, float(x), alpha, grid) for x in grid.nodes()]
    return max(results, key=lambda result: result.value)


def dt_modulus(f: TestFunction, eps: float, grid: GridSpec) -> ModulusResult:
    """
    Ditzian-Totik modulus with step weight psi:

        sup_{0 < h <= eps} sup_x |f(x + h psi(x)/2) - f(x - h psi(x)/2)|,

    over x with x +- h psi(x)/2 inside (0, grid.hi]. The x-coordinate of the best pair is
    refined; h stays on the ladder.

    Returns:
        ModulusResult with argmax_location = (x*, h*).
    """
    hs = step_ladder(eps)

    def difference(xs: np.ndarray, h: np.ndarray) -> np.ndarray:
        half = h * np.sqrt(xs * (1.0 + xs)) / 2.0
        left, right = xs - half, xs + half
        out = np.full(np.broadcast(xs, h).shape, -np.inf)
        feasible = (left > 0) & (right <= grid.hi)
        if np.any(feasible):
            out[feasible] = np.abs(
                evaluate_finite(f, right[feasible]) - evaluate_finite(f, left[feasible])
            )
        return out

    nodes = grid.nodes()
    table = difference(nodes[:, None], hs[None, :])
    if not np.any(np.isfinite(table)):
        raise GridError(f"no (x, h) with x +- h psi(x)/2 inside (0, {grid.hi}] for eps={eps}")
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    h_best = float(hs[j])
    x_best, best = _refine(
        lambda xs: difference(xs, h_best),
        float(nodes[i]), float(table[i, j]), grid.spacing, grid.lo, grid.hi, grid.refine_levels,
    )
    return ModulusResult(value=best, argmax_location=(x_best, h_best), grid=grid)


def lip_uv_constant(f: TestFunction, u: float, v: float, a_exp: float, grid: GridSpec) -> float:
    """
    Smallest M on the grid with |f(y) - f(x)| <= M |y - x|^a / (y + u x^2 + v x)^{a/2}.

    Pairs with x = 0 are left out: the weight vanishes there together with y.
    """
    if u <= 0 or v <= 0:
        raise DomainError(f"u and v must be > 0, got u={u}, v={v}")
    if not 0.0 < a_exp <= 1.0:
        raise DomainError(f"exponent must lie in (0, 1], got {a_exp}")
    nodes = grid.nodes()
    xs = nodes[nodes > 0]
    if xs.size < 2:
        raise GridError("grid has fewer than two points with x > 0")
    values = evaluate_finite(f, nodes)
    fx = values[nodes > 0]
    xx, yy = xs[:, None], nodes[None, :]
    distance = np.abs(yy - xx)
    keep = distance > 0
    weight = (yy + u * xx ** 2 + v * xx) ** (a_exp / 2.0)
    ratio = np.zeros(distance.shape)
    increments = np.abs(values[None, :] - fx[:, None]) * weight
    ratio[keep] = increments[keep] / distance[keep] ** a_exp
    return float(ratio.max())


def weighted_modulus(f: TestFunction, xi: float, grid: GridSpec) -> ModulusResult:
    """
    Delta(f; xi) = sup_{0 <= h <= xi} sup_x |f(x + h) - f(x)| / ((1 + h^2)(1 + x^2)).

    Returns:
        ModulusResult with argmax_location = (x*, h*).
    """
    hs = step_ladder(xi)

    def quotient(xs: np.ndarray, h: np.ndarray) -> np.ndarray:
        xs, h = np.broadcast_arrays(xs, h)
        increment = np.abs(evaluate_finite(f, xs + h) - evaluate_finite(f, xs))
        return increment / ((1.0 + h ** 2) * (1.0 + xs ** 2))

    nodes = grid.nodes()
    table = quotient(nodes[:, None], hs[None, :])
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    h_best = float(hs[j])
    x_best, best = _refine(
        lambda xs: quotient(xs, h_best),
        float(nodes[i]), float(table[i, j]), grid.spacing, grid.lo, grid.hi, grid.refine_levels,
    )
    return ModulusResult(value=best, argmax_location=(x_best, h_best), grid=grid)


def check_weighted_scaling(f: TestFunction, xi: float, lam: float, grid: GridSpec) -> bool:
    """Delta(f; lam xi) <= 2 (1 + xi^2)(1 + lam) Delta(f; xi), for lam > 0 and xi in (0, 1)."""
    if not 0.0 < xi < 1.0 or lam <= 0:
        raise DomainError(f"need xi in (0, 1) and lam > 0, got xi={xi}, lam={lam}")
    scaled = weighted_modulus(f, lam * xi, grid).value
    base = weighted_modulus(f, xi, grid).value
    return scaled <= 2.0 * (1.0 + xi ** 2) * (1.0 + lam) * base * (1.0 + 1e-12)


def total_variation(
    f: TestFunction, lo: float, hi: float, refine_levels: int = TV_REFINE_LEVELS
) -> float:
    """
    Partition-sum estimate of the variation of f on [lo, hi].

    Starts from TV_BASE_INTERVALS uniform intervals and doubles them until the relative
    change drops below TV_REL_STOP or `refine_levels` doublings are spent. Partitions are
    nested, so the estimate never decreases.
    """
    if not hi > lo:
        raise DomainError(f"total_variation needs lo < hi, got [{lo}, {hi}]")
    intervals = TV_BASE_INTERVALS
    variation = float(np.sum(np.abs(np.diff(evaluate_finite(f, np.linspace(lo, hi, intervals + 1))))))
    for _ in range(refine_levels):
        intervals *= 2
        refined = float(np.sum(np.abs(np.diff(evaluate_finite(f, np.linspace(lo, hi, intervals + 1))))))
        change = refined - variation
        variation = max(variation, refined)
        if change <= TV_REL_STOP * max(variation, 1e-300):
            break
    return variation
