r"""Euclidean projections onto the constraint sets used by the recovery programs.

Three bounded sets are supported behind one interface:

* ``L1Ball(R)``: :math:`\{x : \|x\|_1 \le R\}`,
* ``L12Ball(R, rows, cols)``: matrices with :math:`\sum_l \|X_{l,:}\|_2 \le R`
  (row-wise mixed norm, promoting jointly sparse rows),
* ``DictionaryL1Ball(R, D)``: :math:`\{D c : \|c\|_1 \le R\}`.

``Unconstrained`` completes the interface for plain least squares. All
projections are pure functions of their inputs and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, require_positive

__all__ = [
    "UnboundedSetError",
    "l1_norm",
    "l12_norm",
    "project_l1_ball",
    "project_l12_ball",
    "project_dictionary_ball",
    "ConstraintSet",
    "L1Ball",
    "L12Ball",
    "DictionaryL1Ball",
    "Unconstrained",
]

MEMBERSHIP_TOL = 1e-10


class UnboundedSetError(ValueError):
    """Raised when an operation needs a bounded constraint set."""


def l1_norm(v) -> float:
    return float(np.abs(np.asarray(v, dtype=float)).sum())


def l12_norm(X) -> float:
    """Sum of the Euclidean norms of the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"l12_norm expects a matrix, got shape {X.shape}")
    return float(np.linalg.norm(X, axis=1).sum())


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto the l1 ball of the given radius.

    Sort-based thresholding: the projection is the soft-thresholding of ``v``
    at the unique level that makes the result land on the sphere, found from
    the sorted absolute values in O(n log n).
    """
    require_positive(radius, "radius")
    v = as_float_array(v, "v").reshape(-1)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    c = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    last = np.nonzero(u * k > c - radius)[0][-1]
    theta = (c[last] - radius) / (last + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_l12_ball(X, radius: float) -> np.ndarray:
    """Frobenius projection of ``X`` onto the l1,2 ball of the given radius.

    The row-norm vector is projected onto the l1 ball and each row is rescaled
    accordingly; zero rows stay zero. With a single column this reduces to
    :func:`project_l1_ball`.
    """
    require_positive(radius, "radius")
    X = as_float_array(X, "X")
    if X.ndim != 2:
        raise ValueError(f"project_l12_ball expects a matrix, got shape {X.shape}")
    norms = np.linalg.norm(X, axis=1)
    if norms.sum() <= radius:
        return X.copy()
    shrunk = project_l1_ball(norms, radius)
    factors = np.divide(shrunk, norms, out=np.zeros_like(norms), where=norms > 0)
    return X * factors[:, None]


def project_dictionary_ball(x, radius: float, dictionary, tol: float = 1e-8) -> np.ndarray:
    """Project ``x`` onto the set of dictionary representations ``{D c : ||c||_1 <= R}``.

    Computed as ``D c*`` where ``c*`` solves the l1-constrained least-squares
    fit of ``x`` (a small inner Lasso run to the requested tolerance); no
    closed form exists for a general dictionary.
    """
    require_positive(radius, "radius")
    x = as_float_array(x, "x").reshape(-1)
    D = as_float_array(dictionary, "dictionary")
    if D.ndim != 2:
        raise ValueError(f"dictionary must be a matrix, got shape {D.shape}")
    if D.shape[0] != x.size:
        raise ValueError(
            f"dictionary has {D.shape[0]} rows, expected {x.size} to match x"
        )
    from .solver import SolverConfig, solve_k_lasso

    cfg = SolverConfig(max_iters=20_000, fixed_point_tol=tol)
    report = solve_k_lasso(D, x, L1Ball(radius), cfg)
    return D @ report.minimizer


# ---------------------------------------------------------------------------
# Constraint-set interface
# ---------------------------------------------------------------------------

class ConstraintSet:
    """Convex set exposing projection, membership, and support function."""

    is_bounded: bool = True

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float | None = None) -> bool:
        raise NotImplementedError

    def support_value(self, g) -> float:
        """sup over the set of <g, h>; requires boundedness."""
        raise NotImplementedError


@dataclass(frozen=True)
class L1Ball(ConstraintSet):
    radius: float

    def __post_init__(self):
        require_positive(self.radius, "radius")

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return project_l1_ball(x, self.radius).reshape(x.shape)

    def contains(self, x, tol=None):
        tol = MEMBERSHIP_TOL * max(1.0, self.radius) if tol is None else tol
        return l1_norm(x) <= self.radius + tol

    def support_value(self, g):
        return self.radius * float(np.abs(np.asarray(g, dtype=float)).max())


@dataclass(frozen=True)
class L12Ball(ConstraintSet):
    """l1,2 ball over matrices with ``rows`` rows and ``cols`` columns.

    Accepts flattened (row-major) vectors as well as matrices and preserves
    the input shape, so it plugs directly into the vectorized solver.
    """

    radius: float
    rows: int
    cols: int

    def __post_init__(self):
        require_positive(self.radius, "radius")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("group shape must be positive")

    def _as_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows}x{self.cols} entries, got {x.size}"
            )
        return x.reshape(self.rows, self.cols)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        out = project_l12_ball(self._as_matrix(x), self.radius)
        return out.reshape(x.shape)

    def contains(self, x, tol=None):
        tol = MEMBERSHIP_TOL * max(1.0, self.radius) if tol is None else tol
        return l12_norm(self._as_matrix(x)) <= self.radius + tol

    def support_value(self, g):
        row_norms = np.linalg.norm(self._as_matrix(g), axis=1)
        return self.radius * float(row_norms.max())


@dataclass(frozen=True)
class DictionaryL1Ball(ConstraintSet):
    """Image of the l1 ball under a dictionary: ``{D c : ||c||_1 <= R}``.

    Projection is an inner iterative solve (tolerance ``projection_tol``), so
    membership uses a correspondingly looser distance test.
    """

    radius: float
    dictionary: np.ndarray
    projection_tol: float = 1e-8

    def __post_init__(self):
        require_positive(self.radius, "radius")
        D = as_float_array(self.dictionary, "dictionary")
        D.setflags(write=False)
        object.__setattr__(self, "dictionary", D)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        out = project_dictionary_ball(
            x, self.radius, self.dictionary, tol=self.projection_tol
        )
        return out.reshape(x.shape)

    def contains(self, x, tol=None):
        x = np.asarray(x, dtype=float)
        if tol is None:
            tol = 100.0 * self.projection_tol * (1.0 + float(np.linalg.norm(x)))
        return float(np.linalg.norm(x - self.project(x))) <= tol

    def support_value(self, g):
        g = np.asarray(g, dtype=float).reshape(-1)
        return self.radius * float(np.abs(self.dictionary.T @ g).max())


@dataclass(frozen=True)
class Unconstrained(ConstraintSet):
    is_bounded = False

    def project(self, x):
        return np.asarray(x, dtype=float).copy()

    def contains(self, x, tol=None):
        return True

    def support_value(self, g):
        raise UnboundedSetError("the unconstrained set has no finite mean width")
