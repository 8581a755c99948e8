r"""Constrained least-squares engine.

Minimizes the empirical squared loss

    (1 / 2m) * sum_i (y_i - <a_i, x>)^2    subject to  x in K,

for any :class:`~superlasso.projections.ConstraintSet` K, by accelerated
projected gradient descent with gradient-based adaptive restart. Matrix-valued
problems are handled by flattening: the caller passes design rows
``vec(A_i)`` and a constraint set that understands the flattened layout.

Non-convergence is reported, never raised: long parameter sweeps should see a
diagnostic, not an abort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, check_design_matrix, check_observations
from .projections import ConstraintSet

__all__ = ["SolverConfig", "SolveReport", "estimate_lipschitz", "solve_k_lasso"]

_STEP_RULES = ("lipschitz_power_iteration", "backtracking")
_STEP_SAFETY = 1.02          # inflate the Lipschitz estimate before stepping
_OBJ_STALL_WINDOW = 10       # iterations over which objective stalls count


@dataclass
class SolverConfig:
    """Tuning knobs for :func:`solve_k_lasso`."""

    max_iters: int = 10_000
    rel_obj_tol: float = 1e-12
    step_rule: str = "lipschitz_power_iteration"
    acceleration: bool = True
    restart: bool = True
    fixed_point_tol: float = 1e-8
    check_every: int = 10

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_obj_tol > 0:
            raise ValueError("rel_obj_tol must be positive")
        if not self.fixed_point_tol > 0:
            raise ValueError("fixed_point_tol must be positive")
        if self.step_rule not in _STEP_RULES:
            raise ValueError(
                f"unknown step_rule {self.step_rule!r}, expected one of {_STEP_RULES}"
            )
        if self.check_every < 1:
            raise ValueError("check_every must be at least 1")


@dataclass
class SolveReport:
    """Outcome of one solve: iterate, diagnostics, and convergence status."""

    minimizer: np.ndarray
    objective: float
    iterations: int
    converged: bool
    fixed_point_residual: float


def estimate_lipschitz(
    A_rows,
    tol: float = 1e-6,
    max_iters: int = 5_000,
    seed: int = 0,
) -> float:
    """Largest eigenvalue of (1/m) A^T A by power iteration.

    Returns 0 for an all-zero design, in which case the solver falls back to
    backtracking. The relative tolerance applies to the eigenvalue estimate.
    """
    A = check_design_matrix(A_rows, "A_rows")
    m, d = A.shape
    if not np.any(A):
        return 0.0
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v) / m
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / norm_w
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def _objective_from_residual(residual: np.ndarray, m: int) -> float:
    return 0.5 * float(residual @ residual) / m


def solve_k_lasso(
    A_rows,
    y,
    K: ConstraintSet,
    cfg: SolverConfig | None = None,
) -> SolveReport:
    """Solve the K-constrained least-squares problem.

    Declares convergence when the fixed-point residual
    ``||x - P_K(x - step * grad)|| / step`` drops below
    ``fixed_point_tol * (1 + ||x||)``, or when the objective has changed by
    less than ``rel_obj_tol`` (relatively) over the last 10 iterations. If the
    iteration budget runs out first, the best iterate seen is returned with
    ``converged=False``.
    """
    cfg = cfg or SolverConfig()
    A = check_design_matrix(A_rows, "A_rows")
    m, d = A.shape
    yv = check_observations(as_float_array(y, "y"), m)

    if cfg.step_rule == "lipschitz_power_iteration":
        lipschitz = estimate_lipschitz(A)
    else:
        lipschitz = 0.0
    backtracking = cfg.step_rule == "backtracking" or lipschitz == 0.0
    if backtracking:
        # Crude but safe starting guess; grown on demand.
        scale = float(np.abs(A).max())
        lipschitz = max(scale**2 / m, 1e-12) if scale > 0 else 1e-12

    step = 1.0 / (lipschitz * _STEP_SAFETY)

    x = np.asarray(K.project(np.zeros(d)), dtype=float).reshape(-1)
    momentum = x.copy()
    t = 1.0

    res_x = A @ x - yv          # residual at the main iterate
    res_mom = res_x.copy()      # residual at the momentum point
    objective = _objective_from_residual(res_x, m)

    best_x = x.copy()
    best_obj = objective
    obj_history = [objective]

    def fixed_point_residual(point, res_point):
        grad = A.T @ res_point / m
        proj = np.asarray(K.project(point - step * grad), dtype=float).reshape(-1)
        return float(np.linalg.norm(point - proj)) / step

    converged = False
    fp_res = fixed_point_residual(x, res_x)
    if fp_res <= cfg.fixed_point_tol * (1.0 + float(np.linalg.norm(x))):
        converged = True

    iterations = 0
    while not converged and iterations < cfg.max_iters:
        iterations += 1
        grad = A.T @ res_mom / m
        x_new = np.asarray(K.project(momentum - step * grad), dtype=float).reshape(-1)
        res_new = A @ x_new - yv
        obj_new = _objective_from_residual(res_new, m)

        if backtracking:
            # Grow L until the quadratic upper bound at the momentum point holds.
            while True:
                diff = x_new - momentum
                bound = (
                    _objective_from_residual(res_mom, m)
                    + float(grad @ diff)
                    + 0.5 * lipschitz * float(diff @ diff)
                )
                if obj_new <= bound + 1e-15 * max(1.0, abs(obj_new)):
                    break
                lipschitz *= 2.0
                step = 1.0 / (lipschitz * _STEP_SAFETY)
                x_new = np.asarray(
                    K.project(momentum - step * grad), dtype=float
                ).reshape(-1)
                res_new = A @ x_new - yv
                obj_new = _objective_from_residual(res_new, m)

        if not cfg.acceleration:
            momentum = x_new
            res_mom = res_new
        elif cfg.restart and float((momentum - x_new) @ (x_new - x)) > 0.0:
            # Momentum points uphill: restart from the latest iterate.
            t = 1.0
            momentum = x_new
            res_mom = res_new
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_new
            momentum = x_new + beta * (x_new - x)
            res_mom = res_new + beta * (res_new - res_x)
            t = t_new

        x = x_new
        res_x = res_new
        objective = obj_new
        obj_history.append(objective)
        if objective < best_obj:
            best_obj = objective
            best_x = x.copy()

        if iterations % cfg.check_every == 0 or iterations == cfg.max_iters:
            fp_res = fixed_point_residual(x, res_x)
            if fp_res <= cfg.fixed_point_tol * (1.0 + float(np.linalg.norm(x))):
                converged = True
            elif len(obj_history) > _OBJ_STALL_WINDOW:
                recent = obj_history[-(_OBJ_STALL_WINDOW + 1) :]
                if abs(recent[0] - recent[-1]) < cfg.rel_obj_tol * (
                    1.0 + abs(recent[-1])
                ):
                    converged = True

    if not converged and best_obj < objective:
        x = best_x
        res_x = A @ x - yv
        objective = _objective_from_residual(res_x, m)
        fp_res = fixed_point_residual(x, res_x)

    return SolveReport(
        minimizer=x,
        objective=objective,
        iterations=iterations,
        converged=converged,
        fixed_point_residual=fp_res,
    )
