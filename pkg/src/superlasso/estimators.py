"""Recovery estimators with a scikit-learn compatible surface.

Three strategies reconstruct the shared source from superimposed readings:

* :class:`DirectRecovery` sums the per-node vectors and runs an l1-ball
  Lasso; its estimate targets ``mu_bar * x0``.
* :class:`LiftingRecovery` fits one column per node under an l1,2-ball
  constraint; the stacked estimate targets the rank-one matrix
  ``x0 mu^T``, from which source and per-node scalings are factored out.
* :class:`HybridRecovery` first combines nodes with a weight matrix ``W``
  and solves the group problem over an arbitrary convex constraint set;
  its estimate targets ``x0 mu_tilde^T`` with ``mu_tilde = (N/M) W^T mu``.

All three implement ``fit(X, y)`` / ``predict(X)`` / ``get_params`` on the
raw measurement tensor ``X`` of shape ``(m, M, n)``, so they compose with
model selection and pipeline tooling. Thin functional wrappers returning a
:class:`RecoveryResult` are provided for one-shot use on generated ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_measurement_tensor,
    check_observations,
    check_weight_matrix,
    require_positive,
)
from .model import MeasurementEnsemble
from .projections import ConstraintSet, L1Ball, L12Ball
from .solver import SolveReport, SolverConfig, solve_k_lasso

__all__ = [
    "RecoveryResult",
    "DirectRecovery",
    "LiftingRecovery",
    "HybridRecovery",
    "direct_method",
    "lifting_method",
    "hybrid_method",
    "rank_one_factor",
    "is_semi_orthogonal",
    "semi_orthogonalize",
]


SEMI_ORTHOGONALITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# Weight-matrix utilities
# ---------------------------------------------------------------------------

def is_semi_orthogonal(W, tol: float = SEMI_ORTHOGONALITY_TOL) -> bool:
    """Whether ``W^T W`` equals ``(M/N) I`` within the Frobenius tolerance."""
    W = check_weight_matrix(W)
    M, N = W.shape
    gram = W.T @ W
    target = (M / N) * np.eye(N)
    return float(np.linalg.norm(gram - target)) <= tol * (M / N) * np.sqrt(N)


def semi_orthogonalize(W) -> np.ndarray:
    """Rescale the columns of ``W`` so that ``W^T W = (M/N) I``.

    Multiplies by the inverse square root of ``(N/M) W^T W`` (symmetric
    eigendecomposition). Requires full column rank and at least as many rows
    as columns.
    """
    W = check_weight_matrix(W)
    M, N = W.shape
    if M < N:
        raise ValueError(f"need at least as many rows as columns, got {M}x{N}")
    U = (N / M) * (W.T @ W)
    eigvals, eigvecs = np.linalg.eigh(U)
    if eigvals[0] <= 1e-12 * max(eigvals[-1], 1.0):
        raise ValueError("weight matrix is rank deficient")
    inv_sqrt = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
    return W @ inv_sqrt


def rank_one_factor(X) -> tuple[np.ndarray, np.ndarray]:
    """Best rank-one factorization ``X ~ x0_hat mu_hat^T``.

    Returns the dominant left singular vector (unit norm) and the dominant
    right singular vector scaled by the top singular value. The sign pair is
    fixed so that the largest-magnitude entry of ``mu_hat`` is positive.

    Raises
    ------
    ValueError
        If ``X`` is the zero matrix (degenerate input).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.any(X):
        raise ValueError("cannot factor the zero matrix")
    U, sv, Vt = np.linalg.svd(X, full_matrices=False)
    source = U[:, 0].copy()
    scalings = sv[0] * Vt[0].copy()
    k = int(np.argmax(np.abs(scalings)))
    if scalings[k] < 0:
        source = -source
        scalings = -scalings
    return source, scalings


# ---------------------------------------------------------------------------
# Result container and shared machinery
# ---------------------------------------------------------------------------

@dataclass
class RecoveryResult:
    """Estimate matrix ``[x^1 ... x^N]`` plus optional rank-one extraction."""

    estimate_matrix: np.ndarray
    extracted_source: np.ndarray | None
    extracted_scalings: np.ndarray | None
    report: SolveReport


def _flatten_stacks(tensor: np.ndarray) -> np.ndarray:
    # Row i becomes vec([a_i^1 ... a_i^K]) in row-major (coordinate, node) order,
    # matching the flattened layout used by L12Ball.
    m = tensor.shape[0]
    return np.ascontiguousarray(tensor.transpose(0, 2, 1)).reshape(m, -1)


def _safe_rank_one(estimate: np.ndarray):
    if not np.any(estimate):
        return None, None
    return rank_one_factor(estimate)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

class DirectRecovery(BaseEstimator, RegressorMixin):
    """l1-constrained Lasso on the plain node sums.

    Parameters
    ----------
    radius : float
        l1-ball radius. The oracle choice is ``|mu_bar| * ||x0||_1``.
    solver : SolverConfig, optional
        Solver settings; defaults are adequate for desk-scale problems.

    Attributes
    ----------
    estimate_ : ndarray of shape (n,)
        The recovered vector; approximates ``mu_bar * x0``.
    report_ : SolveReport
        Solver diagnostics (convergence flag is never raised as an error).
    """

    def __init__(self, radius: float = 1.0, solver: SolverConfig | None = None):
        self.radius = radius
        self.solver = solver

    def _design(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            return X
        return check_measurement_tensor(X).sum(axis=1)

    def fit(self, X, y):
        require_positive(self.radius, "radius")
        design = self._design(X)
        y = check_observations(y, design.shape[0])
        report = solve_k_lasso(design, y, L1Ball(self.radius), self.solver)
        self.estimate_ = report.minimizer
        self.report_ = report
        self.n_features_in_ = design.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimate_")
        return self._design(X) @ self.estimate_


class LiftingRecovery(BaseEstimator, RegressorMixin):
    """Group Lasso over one column per node, l1,2-ball constrained.

    Attributes
    ----------
    estimate_matrix_ : ndarray of shape (n, M)
        Stacked per-node estimates; approximates ``x0 mu^T``.
    source_ : ndarray of shape (n,) or None
        Unit-norm dominant left singular vector (None for a zero estimate).
    scalings_ : ndarray of shape (M,) or None
        Estimated per-node scaling parameters.
    """

    def __init__(self, radius: float = 1.0, solver: SolverConfig | None = None):
        self.radius = radius
        self.solver = solver

    def fit(self, X, y):
        require_positive(self.radius, "radius")
        X = check_measurement_tensor(X)
        m, M, n = X.shape
        y = check_observations(y, m)
        design = _flatten_stacks(X)
        constraint = L12Ball(self.radius, rows=n, cols=M)
        report = solve_k_lasso(design, y, constraint, self.solver)
        self.estimate_matrix_ = report.minimizer.reshape(n, M)
        self.source_, self.scalings_ = _safe_rank_one(self.estimate_matrix_)
        self.report_ = report
        self.n_features_in_ = n
        return self

    def predict(self, X):
        check_is_fitted(self, "estimate_matrix_")
        X = check_measurement_tensor(X)
        return _flatten_stacks(X) @ self.estimate_matrix_.reshape(-1)


class HybridRecovery(BaseEstimator, RegressorMixin):
    """Group Lasso on weighted node combinations over a convex constraint.

    Parameters
    ----------
    weights : array-like of shape (M, N) or (M,)
        Combination matrix; column k yields the combined vectors
        ``sum_j W[j, k] a_i^j``. Should be semi-orthogonal
        (``W^T W = (M/N) I``); pass ``allow_unnormalized_weights=True`` to
        skip the check, or call :func:`semi_orthogonalize` first.
    constraint : ConstraintSet
        Convex set in the (n, N) matrix space (flattened row-major).

    Attributes
    ----------
    estimate_matrix_ : ndarray of shape (n, N)
        Approximates ``x0 mu_tilde^T``.
    source_, scalings_ :
        Rank-one extraction when N >= 2, else None.
    """

    def __init__(
        self,
        weights=None,
        constraint: ConstraintSet | None = None,
        solver: SolverConfig | None = None,
        allow_unnormalized_weights: bool = False,
    ):
        self.weights = weights
        self.constraint = constraint
        self.solver = solver
        self.allow_unnormalized_weights = allow_unnormalized_weights

    def fit(self, X, y):
        X = check_measurement_tensor(X)
        m, M, n = X.shape
        y = check_observations(y, m)
        if self.weights is None:
            raise ValueError("weights must be provided")
        if self.constraint is None:
            raise ValueError("constraint must be provided")
        W = check_weight_matrix(self.weights, node_count=M)
        if not self.allow_unnormalized_weights and not is_semi_orthogonal(W):
            raise ValueError(
                "weights are not semi-orthogonal; call semi_orthogonalize() "
                "or pass allow_unnormalized_weights=True"
            )
        N = W.shape[1]
        combined = np.einsum("ijn,jk->ikn", X, W)
        design = _flatten_stacks(combined)
        report = solve_k_lasso(design, y, self.constraint, self.solver)
        self.estimate_matrix_ = report.minimizer.reshape(n, N)
        if N >= 2:
            self.source_, self.scalings_ = _safe_rank_one(self.estimate_matrix_)
        else:
            self.source_, self.scalings_ = None, None
        self.weights_ = W
        self.report_ = report
        self.n_features_in_ = n
        return self

    def predict(self, X):
        check_is_fitted(self, "estimate_matrix_")
        X = check_measurement_tensor(X)
        combined = np.einsum("ijn,jk->ikn", X, self.weights_)
        return _flatten_stacks(combined) @ self.estimate_matrix_.reshape(-1)


# ---------------------------------------------------------------------------
# Functional wrappers over generated ensembles
# ---------------------------------------------------------------------------

def direct_method(
    ens: MeasurementEnsemble, radius: float, config: SolverConfig | None = None
) -> RecoveryResult:
    """Run :class:`DirectRecovery` on an ensemble. No extraction: the single
    column estimates ``mu_bar * x0`` directly."""
    est = DirectRecovery(radius=radius, solver=config)
    est.fit(ens.vectors, ens.observations)
    return RecoveryResult(
        estimate_matrix=est.estimate_[:, None],
        extracted_source=None,
        extracted_scalings=None,
        report=est.report_,
    )


def lifting_method(
    ens: MeasurementEnsemble, radius: float, config: SolverConfig | None = None
) -> RecoveryResult:
    """Run :class:`LiftingRecovery` on an ensemble, including the rank-one
    factorization of the stacked estimate."""
    est = LiftingRecovery(radius=radius, solver=config)
    est.fit(ens.vectors, ens.observations)
    return RecoveryResult(
        estimate_matrix=est.estimate_matrix_,
        extracted_source=est.source_,
        extracted_scalings=est.scalings_,
        report=est.report_,
    )


def hybrid_method(
    ens: MeasurementEnsemble,
    weights,
    constraint: ConstraintSet,
    config: SolverConfig | None = None,
    allow_unnormalized_weights: bool = False,
) -> RecoveryResult:
    """Run :class:`HybridRecovery` on an ensemble."""
    est = HybridRecovery(
        weights=weights,
        constraint=constraint,
        solver=config,
        allow_unnormalized_weights=allow_unnormalized_weights,
    )
    est.fit(ens.vectors, ens.observations)
    return RecoveryResult(
        estimate_matrix=est.estimate_matrix_,
        extracted_source=est.source_,
        extracted_scalings=est.scalings_,
        report=est.report_,
    )
