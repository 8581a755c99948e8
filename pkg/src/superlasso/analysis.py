r"""Model parameters and geometric quantities behind the recovery guarantees.

Scaling parameters
    ``mu_j = E[f_j(g) g]`` with ``g ~ N(0, 1)`` measures how well the j-th
    distortion aligns with the identity; ``mu_bar`` is their mean and
    ``mu_tilde = (N/M) W^T mu`` the target after combining nodes with ``W``.

Mismatch quantities
    ``rho(x) = || E[(<a, x> - y) a] ||`` (mismatch covariance) and the
    sub-Gaussian norm of ``<a, x> - y`` (mismatch deviation) quantify how far
    the non-linear observations are from the best linear surrogate. The
    per-node isotropy mismatch vectors capture the covariance between the
    distorted reading and the component of ``a`` orthogonal to the source;
    they vanish for Gaussian designs.

Mean widths
    Global and conic Gaussian mean widths of the constraint sets drive the
    sample-complexity formulas; the conic widths are estimated through the
    subdifferential distance bound (duality), minimized over the scale
    parameter by ternary search.

Sub-Gaussian norms are approximated by the finite-moment proxy
``max_p p^{-1/2} (E|z|^p)^{1/p}`` over p in {2, 4, 6, 8}; exact Orlicz norms
are not identifiable from samples, so downstream tests compare ratios and
orders of magnitude only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import as_float_array, check_weight_matrix
from .estimators import _flatten_stacks
from .model import (
    DistributionSpec,
    MeasurementEnsemble,
    Nonlinearity,
    SourceVector,
    substream,
)
from .projections import (
    ConstraintSet,
    DictionaryL1Ball,
    L12Ball,
    UnboundedSetError,
)

__all__ = [
    "UnsupportedNonlinearityError",
    "ScalingProfile",
    "MismatchEstimate",
    "MismatchProfile",
    "WidthEstimate",
    "gaussian_expectation",
    "scaling_parameter",
    "scaling_parameter_monte_carlo",
    "nonlinearity_second_moment",
    "scaling_profile",
    "subgaussian_norm_proxy",
    "model_deviation",
    "empirical_mismatch_covariance",
    "mismatch_covariance_mc",
    "empirical_mismatch_deviation",
    "isotropy_mismatch_vectors",
    "rho_hybrid",
    "compute_mismatch_profile",
    "global_mean_width",
    "conic_mean_width_l1",
    "conic_mean_width_l12",
    "sample_complexity",
]


class UnsupportedNonlinearityError(ValueError):
    """Raised when a computation cannot handle the given distortion kind."""


# ---------------------------------------------------------------------------
# Gaussian quadrature
# ---------------------------------------------------------------------------

_QUAD_HALF_RANGE = 15.0   # phi mass beyond is ~5e-50, negligible at 1e-12
_QUAD_PANEL_LEN = 1.0
_QUAD_PANEL_NODES = 24    # >= 200 nodes in total over the default panels


@lru_cache(maxsize=8)
def _leggauss(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


def gaussian_expectation(fn, breakpoints=(), half_range=_QUAD_HALF_RANGE) -> float:
    """E[fn(g)] for g ~ N(0, 1) by composite Gauss-Legendre quadrature.

    The integration range is split at the supplied breakpoints (kinks or
    jumps of ``fn``) and into panels of unit length, with a fixed-order
    Gauss-Legendre rule per panel. The integrand is analytic inside each
    panel, so the rule converges to machine precision for the piecewise
    smooth functions used here.
    """
    edges = {-half_range, half_range}
    for b in breakpoints:
        b = float(b)
        if -half_range < b < half_range:
            edges.add(b)
    edges = sorted(edges)
    xs, ws = _leggauss(_QUAD_PANEL_NODES)
    total = 0.0
    inv_sqrt_2pi = 1.0 / math.sqrt(2.0 * math.pi)
    for lo, hi in zip(edges[:-1], edges[1:]):
        panels = max(1, math.ceil((hi - lo) / _QUAD_PANEL_LEN))
        bounds = np.linspace(lo, hi, panels + 1)
        for a, b in zip(bounds[:-1], bounds[1:]):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            pts = mid + half * xs
            vals = np.asarray(fn(pts), dtype=float)
            total += half * float(ws @ (vals * np.exp(-0.5 * pts**2)))
    return total * inv_sqrt_2pi


def scaling_parameter(
    f: Nonlinearity,
    method: str = "quadrature",
    trials: int = 1_000_000,
    seed: int = 0,
    scale: float = 1.0,
) -> float:
    """Scaling parameter of one distortion: ``E[f(scale * g) g] / scale``.

    ``method='quadrature'`` uses deterministic breakpoint-aware quadrature
    (Monte-Carlo is required for randomized distortions and raises
    :class:`UnsupportedNonlinearityError` otherwise).
    """
    if method == "quadrature":
        if not f.deterministic:
            raise UnsupportedNonlinearityError(
                f"{f!r} is randomized; use method='monte_carlo'"
            )
        pts = tuple(b / scale for b in f.breakpoints())
        return gaussian_expectation(lambda x: f(scale * x) * x, pts) / scale
    if method == "monte_carlo":
        value, _ = scaling_parameter_monte_carlo(f, trials=trials, seed=seed, scale=scale)
        return value
    raise ValueError(f"unknown method {method!r}")


def scaling_parameter_monte_carlo(
    f: Nonlinearity,
    trials: int = 1_000_000,
    seed: int = 0,
    scale: float = 1.0,
    block: int = 1_000_000,
) -> tuple[float, float]:
    """Monte-Carlo scaling parameter with its standard error."""
    trials = int(trials)
    total = 0.0
    total_sq = 0.0
    done = 0
    rng = substream(seed, 11)
    while done < trials:
        b = min(block, trials - done)
        g = rng.standard_normal(b)
        vals = np.asarray(f(scale * g, rng=rng), dtype=float) * g / scale
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += b
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    return mean, math.sqrt(var / trials)


def nonlinearity_second_moment(f: Nonlinearity, scale: float = 1.0) -> float:
    """``E[f(scale * g)^2]`` by the same breakpoint-aware quadrature."""
    if not f.deterministic:
        raise UnsupportedNonlinearityError(
            f"{f!r} is randomized; estimate the moment by Monte Carlo"
        )
    pts = tuple(b / scale for b in f.breakpoints())
    return gaussian_expectation(lambda x: f(scale * x) ** 2, pts)


# ---------------------------------------------------------------------------
# Scaling profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingProfile:
    """Per-node scaling parameters and their combinations."""

    mu: np.ndarray                 # (M,)
    mu_bar: float
    mu_tilde: np.ndarray | None    # (N,), requires a weight matrix
    method: str

    def __post_init__(self):
        self.mu.setflags(write=False)
        if self.mu_tilde is not None:
            self.mu_tilde.setflags(write=False)


def scaling_profile(
    nonlinearities,
    weights=None,
    source_scale: float = 1.0,
    method: str = "quadrature",
    trials: int = 1_000_000,
    seed: int = 0,
) -> ScalingProfile:
    """Compute ``mu``, ``mu_bar``, and (given weights) ``mu_tilde``."""
    nonlinearities = tuple(nonlinearities)
    M = len(nonlinearities)
    mu = np.array(
        [
            scaling_parameter(
                f, method=method, trials=trials, seed=seed + 1000 * j, scale=source_scale
            )
            for j, f in enumerate(nonlinearities)
        ]
    )
    mu_tilde = None
    if weights is not None:
        W = check_weight_matrix(weights, node_count=M)
        mu_tilde = (W.shape[1] / M) * (W.T @ mu)
    return ScalingProfile(mu=mu, mu_bar=float(mu.mean()), mu_tilde=mu_tilde, method=method)


# ---------------------------------------------------------------------------
# Sub-Gaussian norm proxy and model deviations
# ---------------------------------------------------------------------------

_PROXY_MOMENTS = (2, 4, 6, 8)


def subgaussian_norm_proxy(samples) -> float:
    """Finite-moment proxy for the sub-Gaussian norm of a sample."""
    z = np.abs(as_float_array(samples, "samples").reshape(-1))
    best = 0.0
    for p in _PROXY_MOMENTS:
        best = max(best, float(np.mean(z**p)) ** (1.0 / p) / math.sqrt(p))
    return best


def model_deviation(
    nonlinearities,
    combined: str = "direct",
    weights=None,
    trials: int = 200_000,
    seed: int = 0,
    scale: float = 1.0,
) -> float:
    """Monte-Carlo estimate of the model deviation parameter.

    ``combined`` selects the linear surrogate whose residual is measured:
    ``'direct'`` compares each node with ``mu_bar * g``, ``'lifting'`` with
    ``mu_j * g``, and ``'hybrid'`` with the weighted back-projection
    ``(W W^T mu)_j * g``. Returns the root mean square of the per-node
    sub-Gaussian norm proxies.
    """
    nonlinearities = tuple(nonlinearities)
    M = len(nonlinearities)
    quad_ok = all(f.deterministic for f in nonlinearities)
    profile = scaling_profile(
        nonlinearities,
        source_scale=scale,
        method="quadrature" if quad_ok else "monte_carlo",
        seed=seed,
    )
    if combined == "direct":
        coeffs = np.full(M, profile.mu_bar)
    elif combined == "lifting":
        coeffs = profile.mu
    elif combined == "hybrid":
        if weights is None:
            raise ValueError("hybrid deviation requires a weight matrix")
        W = check_weight_matrix(weights, node_count=M)
        # Back-projection of the hybrid scaling vector onto the nodes; the
        # N/M factor makes all-ones weights reproduce the direct case and
        # identity weights the lifting case.
        coeffs = (W.shape[1] / M) * (W @ (W.T @ profile.mu))
    else:
        raise ValueError(f"unknown combination {combined!r}")

    rng = substream(seed, 21)
    g = rng.standard_normal(trials)
    total = 0.0
    for j, f in enumerate(nonlinearities):
        residual = coeffs[j] * scale * g - np.asarray(f(scale * g, rng=rng), dtype=float)
        total += subgaussian_norm_proxy(residual) ** 2
    return math.sqrt(total / M)


# ---------------------------------------------------------------------------
# Mismatch covariance and deviation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MismatchEstimate:
    """Norm of an empirical mean vector with its jackknife standard error.

    ``std_error`` is the multivariate (total-variance) jackknife error of the
    mean vector, i.e. the root of the summed per-coordinate variances; under a
    true value of zero the norm estimate is of the same order, so the
    ``value <= 4 * std_error`` test behaves as a consistency check.
    """

    value: float
    std_error: float
    samples: int


def _design_samples(
    ensemble: MeasurementEnsemble, design: str, weights=None
) -> tuple[np.ndarray, np.ndarray]:
    """Flattened measurement rows and transformed observations for a design."""
    y = ensemble.observations
    if design == "direct":
        M = ensemble.node_count
        return ensemble.superposed() / math.sqrt(M), y / math.sqrt(M)
    if design == "lifting":
        return _flatten_stacks(ensemble.vectors), y.copy()
    if design == "hybrid":
        if weights is None:
            raise ValueError("hybrid design requires a weight matrix")
        W = check_weight_matrix(weights, node_count=ensemble.node_count)
        M, N = W.shape
        combined = np.einsum("ijn,jk->ikn", ensemble.vectors, W)
        factor = math.sqrt(N / M)
        return factor * _flatten_stacks(combined), factor * y
    raise ValueError(f"unknown design {design!r}")


def _mean_norm_with_error(rows: np.ndarray, z: np.ndarray) -> MismatchEstimate:
    m = rows.shape[0]
    mean_vec = rows.T @ z / m
    norm_sq = float(mean_vec @ mean_vec)
    sumsq = float((z**2) @ (rows**2).sum(axis=1))
    spread = max(sumsq - m * norm_sq, 0.0)
    std_error = math.sqrt(spread / (m * (m - 1))) if m > 1 else float("inf")
    return MismatchEstimate(value=math.sqrt(norm_sq), std_error=std_error, samples=m)


def empirical_mismatch_covariance(
    x_natural, ensemble: MeasurementEnsemble, design: str = "direct", weights=None
) -> MismatchEstimate:
    """Estimate the mismatch covariance ``||E[(<a, x> - y) a]||`` from a
    stored ensemble, under the direct, lifting, or hybrid measurement map."""
    rows, y = _design_samples(ensemble, design, weights)
    x_flat = as_float_array(x_natural, "x_natural").reshape(-1)
    if x_flat.size != rows.shape[1]:
        raise ValueError(
            f"x_natural has {x_flat.size} entries, design expects {rows.shape[1]}"
        )
    z = rows @ x_flat - y
    return _mean_norm_with_error(rows, z)


def mismatch_covariance_mc(
    x_natural,
    x0: SourceVector,
    nonlinearities,
    distribution: DistributionSpec | None = None,
    design: str = "direct",
    weights=None,
    trials: int = 100_000,
    seed: int = 0,
    scale: float = 1.0,
    noise_sigma: float = 0.0,
    block: int = 4_000,
) -> MismatchEstimate:
    """Streaming Monte-Carlo version of :func:`empirical_mismatch_covariance`.

    Draws fresh measurement rounds in blocks instead of storing an ensemble,
    so sample counts of 10^5 and beyond stay cheap on memory.
    """
    distribution = distribution or DistributionSpec()
    nonlinearities = tuple(nonlinearities)
    M = len(nonlinearities)
    n = x0.dimension
    x_flat = as_float_array(x_natural, "x_natural").reshape(-1)

    if design == "hybrid":
        W = check_weight_matrix(weights, node_count=M)
        N = W.shape[1]
        d = n * N
    elif design == "lifting":
        d = n * M
    elif design == "direct":
        d = n
    else:
        raise ValueError(f"unknown design {design!r}")
    if x_flat.size != d:
        raise ValueError(f"x_natural has {x_flat.size} entries, design expects {d}")

    rng = substream(seed, 31)
    sum_vec = np.zeros(d)
    sumsq = 0.0
    done = 0
    while done < trials:
        b = min(block, trials - done)
        A = distribution.sample(rng, (b, M, n))
        readings = scale * np.einsum("bjn,n->bj", A, x0.entries)
        y = np.zeros(b)
        for j, f in enumerate(nonlinearities):
            y += np.asarray(f(readings[:, j], rng=rng), dtype=float)
        if noise_sigma > 0:
            y += noise_sigma * rng.standard_normal(b)
        if design == "direct":
            rows = A.sum(axis=1) / math.sqrt(M)
            y = y / math.sqrt(M)
        elif design == "lifting":
            rows = _flatten_stacks(A)
        else:
            combined = np.einsum("bjn,jk->bkn", A, W)
            factor = math.sqrt(W.shape[1] / M)
            rows = factor * _flatten_stacks(combined)
            y = factor * y
        z = rows @ x_flat - y
        sum_vec += rows.T @ z
        sumsq += float((z**2) @ (rows**2).sum(axis=1))
        done += b

    mean_vec = sum_vec / trials
    norm_sq = float(mean_vec @ mean_vec)
    spread = max(sumsq - trials * norm_sq, 0.0)
    std_error = math.sqrt(spread / (trials * (trials - 1)))
    return MismatchEstimate(
        value=math.sqrt(norm_sq), std_error=std_error, samples=trials
    )


def empirical_mismatch_deviation(
    x_natural, ensemble: MeasurementEnsemble, design: str = "direct", weights=None
) -> float:
    """Sub-Gaussian norm proxy of the surrogate residual ``<a, x> - y``."""
    rows, y = _design_samples(ensemble, design, weights)
    x_flat = as_float_array(x_natural, "x_natural").reshape(-1)
    return subgaussian_norm_proxy(rows @ x_flat - y)


# ---------------------------------------------------------------------------
# Isotropy mismatch vectors
# ---------------------------------------------------------------------------

def isotropy_mismatch_vectors(
    nonlinearities,
    distribution: DistributionSpec,
    x0: SourceVector,
    trials: int = 100_000,
    seed: int = 0,
    scale: float = 1.0,
    block: int = 20_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of the per-node isotropy mismatch vectors.

    Column j estimates the expectation of ``f_j(reading) * P(a)`` where ``P``
    projects onto the orthogonal complement of the source direction. Returns
    the (n, M) estimate and entrywise standard errors.
    """
    trials = int(trials)
    if trials < 10_000:
        raise ValueError("isotropy mismatch estimation needs at least 10^4 trials")
    nonlinearities = tuple(nonlinearities)
    M = len(nonlinearities)
    n = x0.dimension
    direction = x0.entries
    rho = np.zeros((n, M))
    rho_sq = np.zeros((n, M))
    for j, f in enumerate(nonlinearities):
        rng = substream(seed, 41, j)
        done = 0
        while done < trials:
            b = min(block, trials - done)
            a = distribution.sample(rng, (b, n))
            t = a @ direction
            vals = np.asarray(f(scale * t, rng=rng), dtype=float)
            orth = a - np.outer(t, direction)
            contrib = orth * vals[:, None]
            rho[:, j] += contrib.sum(axis=0)
            rho_sq[:, j] += (contrib**2).sum(axis=0)
            done += b
    rho /= trials
    var = np.maximum(rho_sq / trials - rho**2, 0.0)
    return rho, np.sqrt(var / trials)


def rho_hybrid(rho_vectors, weights) -> float:
    """Combine isotropy mismatch vectors with a weight matrix:
    ``||rho W||_F / sqrt(N)``."""
    rho = as_float_array(rho_vectors, "rho_vectors")
    W = check_weight_matrix(weights, node_count=rho.shape[1])
    N = W.shape[1]
    return float(np.linalg.norm(rho @ W)) / math.sqrt(N)


@dataclass(frozen=True)
class MismatchProfile:
    """Bundle of mismatch quantities for one model configuration."""

    rho_vectors: np.ndarray           # (n, M)
    rho_vector_errors: np.ndarray     # (n, M)
    sigma_dir: float
    sigma_lift: float
    sigma_hyb: float | None = None
    rho_hyb: float | None = None
    rho_norm: float | None = None     # rho at a supplied anchor point
    sigma: float | None = None        # deviation at a supplied anchor point


def compute_mismatch_profile(
    nonlinearities,
    distribution: DistributionSpec,
    x0: SourceVector,
    weights=None,
    trials: int = 100_000,
    seed: int = 0,
    scale: float = 1.0,
) -> MismatchProfile:
    """Estimate isotropy mismatch vectors and all deviation parameters."""
    rho, rho_err = isotropy_mismatch_vectors(
        nonlinearities, distribution, x0, trials=trials, seed=seed, scale=scale
    )
    sigma_dir = model_deviation(
        nonlinearities, combined="direct", trials=trials, seed=seed, scale=scale
    )
    sigma_lift = model_deviation(
        nonlinearities, combined="lifting", trials=trials, seed=seed, scale=scale
    )
    sigma_hyb = None
    r_hyb = None
    if weights is not None:
        sigma_hyb = model_deviation(
            nonlinearities,
            combined="hybrid",
            weights=weights,
            trials=trials,
            seed=seed,
            scale=scale,
        )
        r_hyb = rho_hybrid(rho, weights)
    return MismatchProfile(
        rho_vectors=rho,
        rho_vector_errors=rho_err,
        sigma_dir=sigma_dir,
        sigma_lift=sigma_lift,
        sigma_hyb=sigma_hyb,
        rho_hyb=r_hyb,
    )


# ---------------------------------------------------------------------------
# Mean widths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WidthEstimate:
    """Monte-Carlo mean-width estimate.

    ``value`` averages the per-sample quantity (supremum for global widths,
    minimized subdifferential distance for conic widths); ``value_squared``
    averages its square, which is the form the sample-complexity bounds use.
    """

    value: float
    std_error: float
    trials: int
    kind: str
    value_squared: float
    std_error_squared: float


def _summarize_width(samples: np.ndarray, kind: str) -> WidthEstimate:
    trials = samples.size
    sq = samples**2
    return WidthEstimate(
        value=float(samples.mean()),
        std_error=float(samples.std(ddof=1)) / math.sqrt(trials),
        trials=trials,
        kind=kind,
        value_squared=float(sq.mean()),
        std_error_squared=float(sq.std(ddof=1)) / math.sqrt(trials),
    )


def _infer_dim(constraint: ConstraintSet) -> int | None:
    if isinstance(constraint, L12Ball):
        return constraint.rows * constraint.cols
    if isinstance(constraint, DictionaryL1Ball):
        return constraint.dictionary.shape[0]
    return None


def global_mean_width(
    constraint: ConstraintSet,
    dim: int | None = None,
    trials: int = 10_000,
    seed: int = 0,
) -> WidthEstimate:
    """Monte-Carlo global mean width ``E[sup_{h in K} <g, h>]``.

    The per-sample supremum is the support function of the set, available in
    closed form for every bounded constraint here (l1 ball: radius times the
    max absolute entry; l1,2 ball: radius times the largest row norm;
    dictionary ball: radius times the largest absolute atom correlation).
    """
    if not constraint.is_bounded:
        raise UnboundedSetError("global mean width requires a bounded set")
    dim = dim if dim is not None else _infer_dim(constraint)
    if dim is None:
        raise ValueError("dim must be given for this constraint kind")
    rng = substream(seed, 51)
    vals = np.empty(trials)
    for t in range(trials):
        vals[t] = constraint.support_value(rng.standard_normal(dim))
    return _summarize_width(vals, "global")


_TERNARY_ITERS = 120


def _min_subdifferential_distance_sq(
    q0: np.ndarray, c1: np.ndarray, s: int, offsupport: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Vectorized ternary search for the minimized squared distance.

    Per sample, minimizes over tau in [0, hi] the convex function
    ``q0 - 2 tau c1 + s tau^2 + sum((offsupport - tau)_+^2)``.
    """

    def value(tau):
        clipped = np.maximum(offsupport - tau[:, None], 0.0)
        return q0 - 2.0 * tau * c1 + s * tau**2 + (clipped**2).sum(axis=1)

    lo = np.zeros_like(hi)
    hi = hi.astype(float).copy()
    for _ in range(_TERNARY_ITERS):
        third = (hi - lo) / 3.0
        m1 = lo + third
        m2 = hi - third
        mask = value(m1) <= value(m2)
        hi = np.where(mask, m2, hi)
        lo = np.where(mask, lo, m1)
    return np.maximum(value(0.5 * (lo + hi)), 0.0)


def conic_mean_width_l1(
    x_natural, trials: int = 10_000, seed: int = 0, block: int = 10_000
) -> WidthEstimate:
    """Conic mean width of the l1 ball touched at ``x_natural``.

    Uses the duality bound: per Gaussian sample the squared distance to the
    scaled subdifferential of the l1 norm at ``x_natural`` is minimized over
    the scale. ``value_squared`` estimates the squared conic width.
    """
    x = as_float_array(x_natural, "x_natural").reshape(-1)
    if not np.any(x):
        raise ValueError("x_natural must be nonzero")
    support = np.nonzero(x)[0]
    signs = np.sign(x[support])
    s = support.size
    off = np.setdiff1d(np.arange(x.size), support)

    rng = substream(seed, 52)
    chunks = []
    done = 0
    while done < trials:
        b = min(block, trials - done)
        g = rng.standard_normal((b, x.size))
        q0 = (g[:, support] ** 2).sum(axis=1)
        c1 = g[:, support] @ signs
        r = np.abs(g[:, off])
        hi = 10.0 * np.linalg.norm(g, axis=1)
        chunks.append(_min_subdifferential_distance_sq(q0, c1, s, r, hi))
        done += b
    dist_sq = np.concatenate(chunks)
    return _summarize_width(np.sqrt(dist_sq), "conic_l1")


def conic_mean_width_l12(
    x0, mu, trials: int = 10_000, seed: int = 0, block: int = 2_000
) -> WidthEstimate:
    """Conic mean width of the l1,2 ball touched at the rank-one matrix
    built from a sparse source and a nonzero scaling vector.

    On the support, the subdifferential rows are the signed unit scaling
    direction; off the support, any row inside the unit ball is admissible,
    so only the row norms enter. The same reduced ternary search as in the
    l1 case applies.
    """
    x = as_float_array(x0, "x0").reshape(-1)
    mu = as_float_array(mu, "mu").reshape(-1)
    if not np.any(x):
        raise ValueError("x0 must be nonzero")
    if not np.any(mu):
        raise ValueError("mu must be nonzero")
    M = mu.size
    support = np.nonzero(x)[0]
    signs = np.sign(x[support])
    s = support.size
    off = np.setdiff1d(np.arange(x.size), support)
    mu_unit = mu / np.linalg.norm(mu)

    rng = substream(seed, 53)
    chunks = []
    done = 0
    while done < trials:
        b = min(block, trials - done)
        G = rng.standard_normal((b, x.size, M))
        rows_sup = G[:, support, :]
        q0 = (rows_sup**2).sum(axis=(1, 2))
        c1 = np.einsum("bkm,m,k->b", rows_sup, mu_unit, signs)
        r = np.linalg.norm(G[:, off, :], axis=2)
        hi = 10.0 * np.sqrt((G**2).sum(axis=(1, 2)))
        chunks.append(_min_subdifferential_distance_sq(q0, c1, s, r, hi))
        done += b
    dist_sq = np.concatenate(chunks)
    return _summarize_width(np.sqrt(dist_sq), "conic_l12")


# ---------------------------------------------------------------------------
# Sample-complexity formulas
# ---------------------------------------------------------------------------

def sample_complexity(
    kind: str,
    *,
    s: int | None = None,
    n: int | None = None,
    M: int | None = None,
    width: float | None = None,
    delta: float,
    kappa: float = 1.0,
) -> float:
    """Evaluate a sample-complexity formula with its constant set to one.

    Kinds: ``'direct'`` gives ``delta^-2 s log(2n/s)``, ``'lifting'`` gives
    ``delta^-2 s max(M, log(2n/s))``, ``'hybrid_conic'`` gives
    ``kappa^4 delta^-2 width^2``, and ``'hybrid_global'`` gives
    ``kappa^4 delta^-4 width^2``. The guarantees only fix these expressions
    up to unspecified numerical constants, so outputs order configurations
    rather than predict absolute thresholds.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if kind == "direct":
        if s is None or n is None:
            raise ValueError("direct formula needs s and n")
        return delta**-2 * s * math.log(2.0 * n / s)
    if kind == "lifting":
        if s is None or n is None or M is None:
            raise ValueError("lifting formula needs s, n, and M")
        return delta**-2 * s * max(float(M), math.log(2.0 * n / s))
    if kind == "hybrid_conic":
        if width is None:
            raise ValueError("hybrid_conic formula needs a width")
        return kappa**4 * delta**-2 * width**2
    if kind == "hybrid_global":
        if width is None:
            raise ValueError("hybrid_global formula needs a width")
        return kappa**4 * delta**-4 * width**2
    raise ValueError(f"unknown formula kind {kind!r}")
