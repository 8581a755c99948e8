"""Independent oracles used to cross-check the package's numerics.

Everything here deliberately avoids the algorithms under test: projections
are certified by exhaustive enumeration, scalar root-finding on the KKT
system, or slow subgradient iterations; integrals come from adaptive
quadrature; expectations over tiny discrete designs are enumerated exactly.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import integrate, optimize


# ---------------------------------------------------------------------------
# l1-ball projection: exhaustive active-set enumeration
# ---------------------------------------------------------------------------

def l1_projection_active_set(v, radius):
    """Projection onto the l1 ball by KKT enumeration over active sets.

    For every candidate active set, the multiplier is solved in closed form
    and the KKT sign/threshold conditions are checked; the unique consistent
    candidate is returned. Exponential in the dimension, for small n only.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    sgn = np.sign(v)
    best = None
    best_dist = np.inf
    for size in range(1, n + 1):
        for idx in itertools.combinations(range(n), size):
            idx = list(idx)
            theta = (a[idx].sum() - radius) / len(idx)
            if theta < -1e-14:
                continue
            # Active coordinates must clear the threshold, inactive must not.
            if np.any(a[idx] - theta < -1e-12):
                continue
            rest = np.setdiff1d(np.arange(n), idx)
            if rest.size and np.any(a[rest] > theta + 1e-12):
                continue
            x = np.zeros(n)
            x[idx] = sgn[idx] * (a[idx] - theta)
            dist = np.linalg.norm(x - v)
            if dist < best_dist:
                best_dist = dist
                best = x
    assert best is not None, "no KKT-consistent candidate found"
    return best


# ---------------------------------------------------------------------------
# l1,2-ball projection: scalar KKT root-finding, plus a subgradient method
# ---------------------------------------------------------------------------

def l12_projection_rootfind(X, radius):
    """Projection onto the l1,2 ball via root-finding on the multiplier.

    The optimality system forces every row to shrink toward zero by a common
    multiplier theta with total remaining row-norm mass equal to the radius;
    theta is found by bracketed root-finding (no sorting involved) and the
    KKT conditions of the returned point are verified explicitly.
    """
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    if norms.sum() <= radius:
        return X.copy()

    def mass(theta):
        return np.maximum(norms - theta, 0.0).sum() - radius

    theta = optimize.brentq(mass, 0.0, norms.max(), xtol=1e-15, rtol=1e-15)
    factors = np.maximum(norms - theta, 0.0) / np.where(norms > 0, norms, 1.0)
    out = X * factors[:, None]

    # KKT verification: active rows shrink by exactly theta along themselves,
    # inactive rows must have norm at most theta.
    out_norms = np.linalg.norm(out, axis=1)
    for k in range(X.shape[0]):
        if out_norms[k] > 1e-12:
            gap = np.linalg.norm(X[k] - out[k])
            assert abs(gap - theta) <= 1e-8 * (1.0 + theta)
        else:
            assert norms[k] <= theta + 1e-8
    assert abs(out_norms.sum() - radius) <= 1e-8 * (1.0 + radius)
    return out


def l12_projection_subgradient(X, radius, iters=200_000, tol=2e-3):
    """Alternating projected-subgradient method for the same projection.

    Feasibility steps move along the constraint subgradient by the exact
    violation; objective steps use a diminishing 1/k schedule. The O(1/sqrt(k))
    rate limits this oracle to coarse tolerances; it serves as an
    algorithm-independent cross-check.
    """
    X = np.asarray(X, dtype=float)
    Z = X.copy()
    best = None
    best_val = np.inf
    for k in range(1, iters + 1):
        norms = np.linalg.norm(Z, axis=1)
        violation = norms.sum() - radius
        if violation > tol * 1e-2:
            # Subgradient of the row-norm sum: unit rows (zero rows stay put).
            G = Z / np.where(norms > 0, norms, 1.0)[:, None]
            Z = Z - (violation / max(float((G**2).sum()), 1e-12)) * G
        else:
            val = 0.5 * float(((Z - X) ** 2).sum())
            if val < best_val:
                best_val = val
                best = Z.copy()
            Z = Z - (1.0 / k) * (Z - X)
    return best if best is not None else Z


# ---------------------------------------------------------------------------
# Least squares and spectra
# ---------------------------------------------------------------------------

def least_squares_normal_equations(A, y):
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.linalg.solve(A.T @ A, A.T @ y)


def top_eigenvalue_dense(A):
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    return float(np.linalg.eigvalsh(A.T @ A / m)[-1])


# ---------------------------------------------------------------------------
# Gaussian integrals
# ---------------------------------------------------------------------------

def gaussian_expectation_quad(fn, points=(), bound=30.0, tol=1e-12):
    """Adaptive Gauss-Kronrod estimate of E[fn(g)], g ~ N(0, 1)."""
    phi = lambda x: np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    pts = [p for p in points if -bound < p < bound]
    value, _ = integrate.quad(
        lambda x: fn(x) * phi(x),
        -bound,
        bound,
        points=pts or None,
        limit=400,
        epsabs=tol,
        epsrel=tol,
    )
    return value


def clip_scaling_quad(threshold):
    """Adaptive-quadrature scaling parameter of the clip distortion."""
    fn = lambda x: np.sign(x) * min(abs(x), threshold) * x
    return gaussian_expectation_quad(fn, points=(-threshold, threshold))


def expected_max_abs_gaussian_2d(tol=1e-10):
    """E[max(|g1|, |g2|)] for independent standard Gaussians, by 2-D quadrature."""
    phi = lambda x: np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    inner = lambda x, y: max(abs(x), abs(y)) * phi(x) * phi(y)
    value, _ = integrate.dblquad(
        inner, -12.0, 12.0, lambda _: -12.0, lambda _: 12.0, epsabs=tol
    )
    return value


# ---------------------------------------------------------------------------
# Exact enumeration for tiny Rademacher designs
# ---------------------------------------------------------------------------

def rademacher_mismatch_enumeration(f, x0, scale=1.0):
    """Exact isotropy mismatch vector for an n-dimensional Rademacher design.

    Enumerates all 2^n sign patterns with equal probability; feasible for
    small n only.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    unit = x0 / np.linalg.norm(x0)
    total = np.zeros(n)
    for signs in itertools.product((-1.0, 1.0), repeat=n):
        a = np.array(signs)
        t = float(a @ x0)
        val = float(f(scale * t))
        total += val * (a - (a @ unit) * unit)
    return total / 2.0**n


# ---------------------------------------------------------------------------
# Rank-one certification
# ---------------------------------------------------------------------------

def power_iteration_rank_one(X, iters=500, seed=0):
    """Dominant singular pair by plain power iteration on X^T X."""
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = X.T @ (X @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        v = w / nw
    u = X @ v
    sigma = np.linalg.norm(u)
    u = u / sigma if sigma > 0 else u
    return u, sigma, v
