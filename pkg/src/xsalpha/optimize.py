"""Two-stage tracking-error-budgeted portfolio construction.

Stage 1 maximizes the window-mean excess return ``delta . x`` over the
admissible set (weights sum to 1, per-asset box bounds, daily tracking-error
variance ``x' omega x`` at most the budget). Stage 2 minimizes the
tracking-error variance among the stage-1 maximizers, relaxed one-sidedly by
``RETURN_TIE_EPS`` to keep the tie set numerically meaningful.

Both subproblems are convex (linear / convex-quadratic objective over a
convex set), so any KKT point is a global optimum. They are solved with
sequential least-squares programming from a fixed sequence of start points,
followed by a feasibility repair (clip to the box, rebalance the sum,
shrink toward the all-benchmark portfolio if the variance budget is
exceeded). The all-benchmark portfolio has zero tracking variance because
the benchmark carries a zero covariance row, so the shrink always restores
feasibility without leaving the box or the sum-to-one plane.

Determinism: start points are tried in a fixed order and stage 2 starts from
the stage-1 maximizer; repeated solves on identical inputs return identical
weights. When the stage-2 minimizer is not unique (singular covariance),
this fixed iteration order is the tie-break.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .conventions import daily_te_variance_budget
from .errors import (
    ConvergenceError,
    DimensionError,
    InfeasibleError,
    ValidationError,
)
from .panel import _frozen
from .stats import ExcessStats

# One-sided relaxation of the stage-2 tie constraint, in daily return units.
RETURN_TIE_EPS = 1e-9
# Budget per stage: iterations across all starts, and wall-clock seconds.
MAX_STAGE_ITERATIONS = 10_000
MAX_STAGE_SECONDS = 5.0

_SUM_TOL = 1e-8
_BOUND_TOL = 1e-8
_TE_TOL = 1e-10


@dataclass(frozen=True)
class BoundSet:
    """Per-asset weight box, benchmark entry first."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _frozen(self.lower))
        object.__setattr__(self, "upper", _frozen(self.upper))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValidationError("lower/upper bounds must be equal-length vectors")
        if self.lower.size < 2:
            raise ValidationError("bounds must cover the benchmark and >= 1 index")
        if np.any(self.lower > self.upper):
            raise ValidationError("lower bound exceeds upper bound")
        if np.any(self.lower[1:] > 0.0) or np.any(self.upper[1:] < 0.0):
            raise ValidationError("index bounds must satisfy lower <= 0 <= upper")

    @property
    def size(self) -> int:
        return self.lower.size

    @classmethod
    def long_only(cls, n_indices: int, benchmark: tuple[float, float] = (0.0, 1.0)) -> "BoundSet":
        """Index weights in [0, 1], benchmark in the given box."""
        lower = np.zeros(n_indices + 1)
        upper = np.ones(n_indices + 1)
        lower[0], upper[0] = benchmark
        return cls(lower, upper)

    @classmethod
    def long_short(cls, n_indices: int, benchmark: tuple[float, float] = (0.0, 1.0)) -> "BoundSet":
        """Index weights in [-1, 1], benchmark in the given box."""
        lower = -np.ones(n_indices + 1)
        upper = np.ones(n_indices + 1)
        lower[0], upper[0] = benchmark
        return cls(lower, upper)

    @classmethod
    def explicit(
        cls,
        index_lower,
        index_upper,
        benchmark: tuple[float, float] = (0.0, 1.0),
    ) -> "BoundSet":
        """Per-index boxes with the benchmark box prepended."""
        lower = np.concatenate([[benchmark[0]], np.asarray(index_lower, dtype=float)])
        upper = np.concatenate([[benchmark[1]], np.asarray(index_upper, dtype=float)])
        return cls(lower, upper)


@dataclass(frozen=True)
class WeightVector:
    """A full allocation, benchmark weight first, summing to one."""

    names: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.weights.shape != (len(self.names),):
            raise ValidationError("weights length does not match names")
        total = float(self.weights.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValidationError(f"weights sum to {total!r}, expected 1")

    def as_dict(self) -> dict[str, float]:
        return {n: float(w) for n, w in zip(self.names, self.weights)}


@dataclass(frozen=True)
class SolveOutcome:
    """Result of a two-stage solve."""

    weights: WeightVector
    max_excess_return: float
    realized_te_variance: float
    stage1_status: str
    stage2_status: str


def _check_inputs(stats: ExcessStats, bounds: BoundSet, sigma_annual: float) -> float:
    if sigma_annual <= 0.0:
        raise ValidationError(f"sigma_annual must be positive, got {sigma_annual}")
    if bounds.size != len(stats.names):
        raise ValidationError(
            f"bounds cover {bounds.size} assets, stats cover {len(stats.names)}"
        )
    # The all-benchmark portfolio is the canonical feasible point: zero
    # tracking variance and sum one. It only needs to fit the box.
    if not (bounds.lower[0] <= 1.0 <= bounds.upper[0]):
        raise InfeasibleError(
            "all-benchmark portfolio violates the benchmark bounds "
            f"[{bounds.lower[0]}, {bounds.upper[0]}]; no feasible start exists"
        )
    return daily_te_variance_budget(sigma_annual)


def _repair(x: np.ndarray, omega: np.ndarray, s2: float, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Project a near-feasible iterate into the admissible set."""
    x = np.clip(x, lower, upper)
    resid = 1.0 - float(x.sum())
    for i in range(x.size):
        if abs(resid) < 1e-15:
            break
        room = (upper[i] - x[i]) if resid > 0 else (lower[i] - x[i])
        take = min(resid, room) if resid > 0 else max(resid, room)
        x[i] += take
        resid -= take
    q = float(x @ omega @ x)
    if q > s2 and q > 0.0:
        bench = np.zeros_like(x)
        bench[0] = 1.0
        t = np.sqrt(s2 / q) * (1.0 - 1e-12)
        x = bench + t * (x - bench)
    return x


def _solve_convex(
    objective,
    gradient,
    starts: list[np.ndarray],
    omega: np.ndarray,
    s2: float,
    bounds: BoundSet,
    extra_constraints: list[dict],
) -> tuple[list[tuple[np.ndarray, str]], bool]:
    """Run SLSQP from each start; return repaired candidates in start order."""
    lower, upper = bounds.lower, bounds.upper
    omega_n = omega / s2
    constraints = [
        {"type": "eq", "fun": lambda x: float(x.sum()) - 1.0,
         "jac": lambda x: np.ones_like(x)},
        {"type": "ineq", "fun": lambda x: 1.0 - float(x @ omega_n @ x),
         "jac": lambda x: -2.0 * (omega_n @ x)},
    ] + extra_constraints

    deadline = time.monotonic() + MAX_STAGE_SECONDS
    candidates: list[tuple[np.ndarray, str]] = []
    converged = False
    per_start = max(MAX_STAGE_ITERATIONS // (len(starts) + 1), 100)

    def attempt(x0: np.ndarray) -> bool:
        result = minimize(
            objective,
            x0,
            jac=gradient,
            bounds=list(zip(lower, upper)),
            constraints=constraints,
            method="SLSQP",
            options={"maxiter": per_start, "ftol": 1e-12},
        )
        repaired = _repair(np.asarray(result.x, dtype=float), omega, s2, lower, upper)
        candidates.append((repaired, str(result.message)))
        return result.status == 0

    for x0 in starts:
        if candidates and time.monotonic() > deadline:
            break
        converged = attempt(x0) or converged
    if not converged and time.monotonic() <= deadline:
        # One deterministic polish pass from the best repaired iterate; a
        # restart at a feasible point often settles a flaky SLSQP exit.
        best = min(candidates, key=lambda c: objective(c[0]))[0]
        converged = attempt(best)
    return candidates, converged


def _greedy_start(delta: np.ndarray, omega: np.ndarray, s2: float, bounds: BoundSet) -> np.ndarray:
    """Water-fill toward the highest-delta indices, then repair."""
    x = np.zeros(delta.size)
    x[0] = 1.0
    room = 1.0 - bounds.lower[0]
    for i in sorted(range(1, delta.size), key=lambda j: -delta[j]):
        if delta[i] <= 0.0 or room <= 0.0:
            break
        step = min(bounds.upper[i], room)
        x[i] = step
        x[0] -= step
        room -= step
    return _repair(x, omega, s2, bounds.lower, bounds.upper)


def _validate_outcome(x: np.ndarray, bounds: BoundSet, omega: np.ndarray, s2: float) -> None:
    if abs(float(x.sum()) - 1.0) > _SUM_TOL:
        raise ValidationError(f"solver produced weights summing to {float(x.sum())!r}")
    if np.any(x < bounds.lower - _BOUND_TOL) or np.any(x > bounds.upper + _BOUND_TOL):
        raise ValidationError("solver produced weights outside the bounds")
    q = float(x @ omega @ x)
    if q > s2 + _TE_TOL:
        raise ValidationError(
            f"solver produced tracking variance {q!r} above budget {s2!r}"
        )


def solve(stats: ExcessStats, bounds: BoundSet, sigma_annual: float) -> SolveOutcome:
    """Two-stage solve: maximize window excess return, then minimize variance.

    Parameters
    ----------
    stats : ExcessStats
        Window mean vector and covariance, benchmark slot zeroed.
    bounds : BoundSet
        Per-asset weight box, benchmark entry first.
    sigma_annual : float
        Annual tracking-error budget; the daily variance cap is
        ``sigma_annual**2 / 365.25``.

    Returns
    -------
    SolveOutcome
        Weights within bounds summing to one, the stage-1 maximum
        ``max_excess_return`` (daily units) and the realized daily
        tracking-error variance of the returned weights.
    """
    s2 = _check_inputs(stats, bounds, sigma_annual)
    delta = np.asarray(stats.delta, dtype=float)
    omega = np.asarray(stats.omega, dtype=float)
    n1 = delta.size

    bench = np.zeros(n1)
    bench[0] = 1.0

    scale = float(np.max(np.abs(delta)))
    if scale == 0.0:
        # Every feasible portfolio earns zero window excess return; stage 2
        # then wants minimal variance, which the benchmark attains exactly.
        x1 = bench
        m_t = 0.0
        stage1_status = "trivial: zero excess-return vector"
    else:
        delta_n = delta / scale
        starts = [bench, _greedy_start(delta, omega, s2, bounds)]
        stage1_candidates, converged = _solve_convex(
            lambda x: -float(delta_n @ x),
            lambda x: -delta_n,
            starts,
            omega,
            s2,
            bounds,
            extra_constraints=[],
        )
        best = max(range(len(stage1_candidates)),
                   key=lambda k: float(delta @ stage1_candidates[k][0]))
        x1, stage1_status = stage1_candidates[best]
        m_t = float(delta @ x1)
        if not converged:
            raise ConvergenceError(
                f"stage 1 failed to converge within budget: {stage1_status}",
                best_weights=x1,
                status=stage1_status,
            )

    # Stage 2: minimum variance over the (relaxed) set of return maximizers.
    # The relaxation is RETURN_TIE_EPS in normalized units (so the solve is
    # invariant under rescaling delta) but never wider than RETURN_TIE_EPS in
    # original daily units.
    omega_n = omega / s2
    if scale == 0.0:
        tie_eps = 0.0
        return_floor = []
    else:
        delta_n = delta / scale
        tie_eps = RETURN_TIE_EPS * min(scale, 1.0)
        floor = (m_t - tie_eps) / scale
        return_floor = [
            {"type": "ineq", "fun": lambda x: float(delta_n @ x) - floor,
             "jac": lambda x: delta_n}
        ]
    stage2_candidates, converged2 = _solve_convex(
        lambda x: float(x @ omega_n @ x),
        lambda x: 2.0 * (omega_n @ x),
        [x1],
        omega,
        s2,
        bounds,
        extra_constraints=return_floor,
    )
    if not converged2:
        _, status2 = stage2_candidates[0]
        raise ConvergenceError(
            f"stage 2 failed to converge within budget: {status2}",
            best_weights=stage2_candidates[0][0],
            status=status2,
        )

    # Repair may nudge a candidate off the tie set; fall back to the stage-1
    # point, which satisfies the return floor by construction.
    x2, stage2_status = x1, stage1_status
    best_q = float(x1 @ omega @ x1)
    for cand, status in stage2_candidates:
        if float(delta @ cand) < m_t - tie_eps - 1e-12 * max(scale, 1.0):
            continue
        q = float(cand @ omega @ cand)
        if q < best_q:
            x2, stage2_status, best_q = cand, status, q

    _validate_outcome(x2, bounds, omega, s2)
    return SolveOutcome(
        weights=WeightVector(stats.names, x2),
        max_excess_return=m_t,
        realized_te_variance=float(x2 @ omega @ x2),
        stage1_status=stage1_status,
        stage2_status=stage2_status,
    )


def _axis_points(lower: float, upper: float, step: float) -> np.ndarray:
    span = upper - lower
    count = int(np.floor(span / step + 1e-9))
    points = lower + step * np.arange(count + 1)
    if span - count * step > 1e-12:
        points = np.append(points, upper)
    if points.size > 201:
        raise ValidationError(
            f"grid_step {step} yields {points.size} points on [{lower}, {upper}], "
            "limit is 200"
        )
    return points


def brute_force_solve(
    stats: ExcessStats,
    bounds: BoundSet,
    sigma_annual: float,
    grid_step: float,
) -> SolveOutcome:
    """Exhaustive grid oracle for the two-stage solve (n <= 4 indices).

    Index weights run over axis grids of pitch ``grid_step`` (bound
    endpoints always included); the benchmark weight is the remainder
    ``1 - sum``. Candidates outside the benchmark box or the variance
    budget are discarded, then the maximum-return / minimum-variance
    selection mirrors :func:`solve` on the surviving grid.
    """
    if grid_step <= 0.0:
        raise ValidationError("grid_step must be positive")
    n = len(stats.names) - 1
    if n > 4:
        raise DimensionError(f"grid oracle supports at most 4 indices, got {n}")
    s2 = _check_inputs(stats, bounds, sigma_annual)
    delta = np.asarray(stats.delta, dtype=float)
    omega = np.asarray(stats.omega, dtype=float)

    axes = [_axis_points(bounds.lower[i + 1], bounds.upper[i + 1], grid_step) for i in range(n)]
    outer_axes, inner_axes = axes[:-2], axes[-2:]
    if len(inner_axes) == 1:
        inner = inner_axes[0].reshape(-1, 1)
    else:
        g = np.meshgrid(*inner_axes, indexing="ij")
        inner = np.stack([a.ravel() for a in g], axis=1)

    def candidates():
        if not outer_axes:
            yield inner
            return
        for combo in itertools.product(*outer_axes):
            head = np.broadcast_to(np.asarray(combo), (inner.shape[0], len(combo)))
            yield np.hstack([head, inner])

    def feasible(block: np.ndarray):
        x0 = 1.0 - block.sum(axis=1)
        ok = (x0 >= bounds.lower[0] - 1e-12) & (x0 <= bounds.upper[0] + 1e-12)
        full = np.column_stack([x0, block])[ok]
        if full.size == 0:
            return None
        q = np.einsum("ij,jk,ik->i", full, omega, full)
        keep = q <= s2
        if not keep.any():
            return None
        return full[keep], q[keep]

    best_m = -np.inf
    any_feasible = False
    for block in candidates():
        got = feasible(block)
        if got is None:
            continue
        any_feasible = True
        best_m = max(best_m, float((got[0] @ delta).max()))
    if not any_feasible:
        raise InfeasibleError("no grid point satisfies the constraints")

    tie_floor = best_m - 1e-12
    best_q = np.inf
    best_x = None
    for block in candidates():
        got = feasible(block)
        if got is None:
            continue
        full, q = got
        vals = full @ delta
        ties = vals >= tie_floor
        if not ties.any():
            continue
        k = int(np.argmin(q[ties]))
        if q[ties][k] < best_q:
            best_q = float(q[ties][k])
            best_x = full[ties][k]

    return SolveOutcome(
        weights=WeightVector(stats.names, best_x),
        max_excess_return=best_m,
        realized_te_variance=best_q,
        stage1_status="grid",
        stage2_status="grid",
    )
