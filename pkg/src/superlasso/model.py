"""Measurement model: sparse sources, scalar distortions, and superimposed observations.

A network of ``M`` nodes measures the same source vector ``x0``. Node ``j``
reads ``<a_i^j, x0>`` in round ``i``, pushes the reading through a scalar
distortion ``f_j``, and all nodes transmit at once, so the receiver sees

    y_i = sum_j f_j(<a_i^j, scale * x0>) + e_i,    i = 1..m,

with additive Gaussian noise ``e_i`` of standard deviation ``nu``. This module
generates such ensembles reproducibly from a counter-based RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import require_positive

__all__ = [
    "ModelViolationError",
    "Nonlinearity",
    "Identity",
    "Clip",
    "Scale",
    "Sign",
    "Compose",
    "RandomSignFlip",
    "Custom",
    "DistributionSpec",
    "SourceVector",
    "ObservationSpec",
    "MeasurementEnsemble",
    "CenteringReport",
    "generate_sparse_source",
    "eval_nonlinearity",
    "generate_ensemble",
    "check_centering",
    "substream",
]


class ModelViolationError(ValueError):
    """Raised when a requested configuration breaks a model assumption."""


def substream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the substream addressed by ``path``.

    Streams with distinct paths are statistically independent, and the mapping
    (seed, path) -> stream is stable across processes and thread counts.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# Scalar distortions
# ---------------------------------------------------------------------------

class Nonlinearity:
    """Base class for the per-node scalar distortions.

    Subclasses are small frozen dataclasses so they hash, compare, and print
    sensibly. ``__call__`` is vectorized over numpy arrays. ``is_odd`` drives
    the centering gate in :func:`generate_ensemble`: an odd distortion fed a
    symmetric reading is automatically mean-zero.
    """

    is_odd: bool = True
    deterministic: bool = True

    def __call__(self, v, rng: np.random.Generator | None = None):
        raise NotImplementedError

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the function is not smooth (kinks or jumps)."""
        return ()

    def preimages(self, b: float) -> tuple[float, ...]:
        """Isolated inputs mapped onto ``b``; used to propagate breakpoints
        through compositions. Saturated or constant regions contribute none."""
        return ()


@dataclass(frozen=True)
class Identity(Nonlinearity):
    """f(v) = v."""

    def __call__(self, v, rng=None):
        return np.asarray(v, dtype=float)

    def preimages(self, b):
        return (float(b),)


@dataclass(frozen=True)
class Clip(Nonlinearity):
    """Amplitude saturation f(v) = sign(v) * min(|v|, threshold)."""

    threshold: float = 1.0

    def __post_init__(self):
        require_positive(self.threshold, "clip threshold")

    def __call__(self, v, rng=None):
        v = np.asarray(v, dtype=float)
        return np.sign(v) * np.minimum(np.abs(v), self.threshold)

    def breakpoints(self):
        return (-self.threshold, self.threshold)

    def preimages(self, b):
        # |b| >= threshold is reached only on the saturated plateaus.
        if abs(b) < self.threshold:
            return (float(b),)
        return ()


@dataclass(frozen=True)
class Scale(Nonlinearity):
    """Constant gain f(v) = factor * v (a flat channel coefficient)."""

    factor: float = 1.0

    def __call__(self, v, rng=None):
        return self.factor * np.asarray(v, dtype=float)

    def preimages(self, b):
        if self.factor == 0.0:
            return ()
        return (float(b) / self.factor,)


@dataclass(frozen=True)
class Sign(Nonlinearity):
    """One-bit output f(v) = sign(v)."""

    def __call__(self, v, rng=None):
        return np.sign(np.asarray(v, dtype=float))

    def breakpoints(self):
        return (0.0,)

    def preimages(self, b):
        return ()


@dataclass(frozen=True)
class Compose(Nonlinearity):
    """f(v) = outer(inner(v))."""

    outer: Nonlinearity = field(default_factory=Identity)
    inner: Nonlinearity = field(default_factory=Identity)

    @property
    def is_odd(self):  # type: ignore[override]
        return self.outer.is_odd and self.inner.is_odd

    @property
    def deterministic(self):  # type: ignore[override]
        return self.outer.deterministic and self.inner.deterministic

    def __call__(self, v, rng=None):
        return self.outer(self.inner(v, rng=rng), rng=rng)

    def breakpoints(self):
        pts = set(self.inner.breakpoints())
        for b in self.outer.breakpoints():
            pts.update(self.inner.preimages(b))
        return tuple(sorted(pts))

    def preimages(self, b):
        pts: set[float] = set()
        for mid in self.outer.preimages(b):
            pts.update(self.inner.preimages(mid))
        return tuple(sorted(pts))


@dataclass(frozen=True)
class RandomSignFlip(Nonlinearity):
    """Flips the sign of ``base``'s output with probability ``prob`` per call."""

    prob: float = 0.0
    base: Nonlinearity = field(default_factory=Identity)

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"flip probability must be in [0, 1], got {self.prob}")

    @property
    def is_odd(self):  # type: ignore[override]
        # Sign flips preserve the centering property of an odd base.
        return self.base.is_odd

    @property
    def deterministic(self):  # type: ignore[override]
        return False

    def __call__(self, v, rng=None):
        if rng is None:
            raise ValueError("random_sign_flip evaluation requires an rng")
        out = np.asarray(self.base(v, rng=rng), dtype=float)
        flips = rng.random(out.shape) < self.prob
        return np.where(flips, -out, out)

    def breakpoints(self):
        return self.base.breakpoints()


@dataclass(frozen=True)
class Custom(Nonlinearity):
    """Wrap an arbitrary scalar callable (mainly a test hook).

    ``odd`` must be declared by the caller; non-odd customs are admitted to
    ensemble generation only if a Monte-Carlo centering check passes.
    """

    fn: Callable[[np.ndarray], np.ndarray] = field(default=lambda v: v)
    odd: bool = False
    label: str = "custom"

    @property
    def is_odd(self):  # type: ignore[override]
        return self.odd

    def __call__(self, v, rng=None):
        return np.asarray(self.fn(np.asarray(v, dtype=float)), dtype=float)


def eval_nonlinearity(f: Nonlinearity, v, rng: np.random.Generator | None = None):
    """Evaluate ``f`` at ``v`` (scalar or array). Random kinds need ``rng``."""
    return f(v, rng=rng)


# ---------------------------------------------------------------------------
# Measurement-vector distributions
# ---------------------------------------------------------------------------

_UNIFORM_HALF_WIDTH = math.sqrt(3.0)  # unit variance on [-sqrt(3), sqrt(3)]


@dataclass(frozen=True)
class DistributionSpec:
    """Isotropic, mean-zero law for the per-node measurement vectors.

    Families: ``gaussian`` (standard normal entries), ``rademacher`` (+/-1
    entries), ``uniform_isotropic`` (entries uniform on [-sqrt(3), sqrt(3)]).
    All three have identity covariance and symmetric marginals.
    ``kappa_hint`` records the sub-Gaussian norm bound used in rate formulas.
    """

    family: str = "gaussian"
    kappa_hint: float = 1.0

    _FAMILIES = ("gaussian", "rademacher", "uniform_isotropic")

    def __post_init__(self):
        if self.family not in self._FAMILIES:
            raise ValueError(
                f"unknown family {self.family!r}, expected one of {self._FAMILIES}"
            )
        require_positive(self.kappa_hint, "kappa_hint")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.family == "gaussian":
            return rng.standard_normal(size)
        if self.family == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        return rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH, size=size)


# ---------------------------------------------------------------------------
# Source vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceVector:
    """An s-sparse source with unit Euclidean norm and known support."""

    entries: np.ndarray
    support: np.ndarray
    sparsity_budget: int

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        support = np.asarray(self.support, dtype=int)
        entries.setflags(write=False)
        support.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "support", support)
        if entries.ndim != 1:
            raise ValueError("source entries must be a 1-d vector")
        if abs(np.linalg.norm(entries) - 1.0) > 1e-12:
            raise ValueError("source vector must have unit Euclidean norm")
        if support.size > self.sparsity_budget:
            raise ValueError("support exceeds the sparsity budget")
        off = np.setdiff1d(np.arange(entries.size), support)
        if np.any(entries[off] != 0.0):
            raise ValueError("entries outside the support must be exactly zero")

    @property
    def dimension(self) -> int:
        return self.entries.size


def generate_sparse_source(n: int, s: int, seed: int) -> SourceVector:
    """Draw an s-sparse unit-norm source on a uniformly random support.

    Nonzeros are independent standard Gaussians before normalization.

    Raises
    ------
    ValueError
        If ``s`` is zero or exceeds ``n``.
    """
    n = int(n)
    s = int(s)
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
    rng = substream(seed, 7)
    support = np.sort(rng.choice(n, size=s, replace=False))
    values = rng.standard_normal(s)
    while np.linalg.norm(values) == 0.0:  # vanishing draw has probability zero
        values = rng.standard_normal(s)
    entries = np.zeros(n)
    entries[support] = values / np.linalg.norm(values)
    return SourceVector(entries=entries, support=support, sparsity_budget=s)


# ---------------------------------------------------------------------------
# Observation specification and ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservationSpec:
    """Everything needed to draw one measurement ensemble.

    Exactly one of ``noise_sigma`` and ``snr_db`` may be set. With ``snr_db``,
    the noise scale is calibrated against the empirical variance of the
    superposed distorted signal (pilot Monte Carlo with >= 10^4 samples).
    """

    node_count: int
    sample_count: int
    nonlinearities: tuple[Nonlinearity, ...]
    distribution: DistributionSpec = field(default_factory=DistributionSpec)
    noise_sigma: float | None = 0.0
    snr_db: float | None = None
    seed: int = 0
    source_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nonlinearities", tuple(self.nonlinearities))
        if self.node_count < 1:
            raise ValueError("node_count must be at least 1")
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if len(self.nonlinearities) != self.node_count:
            raise ValueError(
                f"expected {self.node_count} nonlinearities, "
                f"got {len(self.nonlinearities)}"
            )
        if (self.noise_sigma is None) == (self.snr_db is None):
            raise ValueError("set exactly one of noise_sigma and snr_db")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        require_positive(self.source_scale, "source_scale")


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Stored draw: per-node vectors ``a_i^j``, observations ``y_i``, and the
    spec + source that regenerate it bit-exactly."""

    vectors: np.ndarray       # (m, M, n)
    observations: np.ndarray  # (m,)
    spec: ObservationSpec
    source: SourceVector
    noise_sigma: float        # resolved scale, after any SNR calibration

    def __post_init__(self):
        self.vectors.setflags(write=False)
        self.observations.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.vectors.shape[1]

    @property
    def sample_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[2]

    def superposed(self) -> np.ndarray:
        """Plain node sums: row i is sum_j a_i^j."""
        return self.vectors.sum(axis=1)


_PILOT_SAMPLES = 20_000
_PILOT_BLOCK = 2_000

# substream tags
_TAG_MEASUREMENT = 0
_TAG_NOISE = 1
_TAG_PILOT = 2
_TAG_CENTERING = 3


def _pilot_signal_variance(x0: SourceVector, spec: ObservationSpec) -> float:
    """Monte-Carlo variance of the noiseless superposed signal."""
    direction = x0.entries
    total = 0.0
    total_sq = 0.0
    count = 0
    block_idx = 0
    while count < _PILOT_SAMPLES:
        b = min(_PILOT_BLOCK, _PILOT_SAMPLES - count)
        acc = np.zeros(b)
        for j, f in enumerate(spec.nonlinearities):
            rng = substream(spec.seed, _TAG_PILOT, block_idx, j)
            a = spec.distribution.sample(rng, (b, x0.dimension))
            acc += f(spec.source_scale * (a @ direction), rng=rng)
        total += acc.sum()
        total_sq += (acc**2).sum()
        count += b
        block_idx += 1
    mean = total / count
    return max(total_sq / count - mean**2, 0.0)


def _resolve_noise_sigma(x0: SourceVector, spec: ObservationSpec) -> float:
    if spec.noise_sigma is not None:
        return float(spec.noise_sigma)
    signal_var = _pilot_signal_variance(x0, spec)
    return math.sqrt(signal_var * 10.0 ** (-spec.snr_db / 10.0))


def generate_ensemble(x0: SourceVector, spec: ObservationSpec) -> MeasurementEnsemble:
    """Draw the full ensemble prescribed by ``spec``.

    Vectors for sample ``i`` and node ``j`` come from the substream addressed
    by ``(seed, i, j)``, so generation is reproducible under any parallel
    schedule. Distortions that are not structurally odd must pass a centering
    check first; otherwise a :class:`ModelViolationError` is raised rather
    than silently biasing the estimators downstream.
    """
    m, M, n = spec.sample_count, spec.node_count, x0.dimension

    for j, f in enumerate(spec.nonlinearities):
        if not f.is_odd:
            report = check_centering(
                f,
                spec.distribution,
                trials=100_000,
                seed=spec.seed,
                direction=x0.entries,
                scale=spec.source_scale,
            )
            if not report.passed:
                raise ModelViolationError(
                    f"nonlinearity {f!r} at node {j} is not centered "
                    f"(estimate {report.mean:+.4g}, std error {report.std_error:.3g})"
                )

    sigma = _resolve_noise_sigma(x0, spec)
    direction = x0.entries

    vectors = np.empty((m, M, n))
    signal = np.zeros(m)
    for i in range(m):
        for j, f in enumerate(spec.nonlinearities):
            rng = substream(spec.seed, _TAG_MEASUREMENT, i, j)
            a = spec.distribution.sample(rng, n)
            vectors[i, j] = a
            signal[i] += float(f(spec.source_scale * (a @ direction), rng=rng))

    noise = np.zeros(m)
    if sigma > 0.0:
        for i in range(m):
            noise[i] = sigma * substream(spec.seed, _TAG_NOISE, i).standard_normal()

    return MeasurementEnsemble(
        vectors=vectors,
        observations=signal + noise,
        spec=spec,
        source=x0,
        noise_sigma=sigma,
    )


# ---------------------------------------------------------------------------
# Centering diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CenteringReport:
    mean: float
    std_error: float
    trials: int
    passed: bool


def check_centering(
    f: Nonlinearity,
    dist: DistributionSpec,
    trials: int = 100_000,
    seed: int = 0,
    direction: np.ndarray | None = None,
    scale: float = 1.0,
) -> CenteringReport:
    """Monte-Carlo estimate of E[f(reading)] with a pass/fail verdict.

    The reading is ``scale * <a, direction>`` with ``a`` drawn from ``dist``;
    ``direction`` defaults to a coordinate axis, in which case the reading has
    the family's scalar marginal. Passes iff the estimated mean is within four
    standard errors of zero.
    """
    trials = int(trials)
    if trials < 1_000:
        raise ValueError("centering check needs at least 10^3 trials")
    total = 0.0
    total_sq = 0.0
    done = 0
    block_idx = 0
    while done < trials:
        b = min(50_000, trials - done)
        rng = substream(seed, _TAG_CENTERING, block_idx)
        if direction is None:
            readings = scale * dist.sample(rng, b)
        else:
            d = np.asarray(direction, dtype=float)
            a = dist.sample(rng, (b, d.size))
            readings = scale * (a @ d)
        vals = np.asarray(f(readings, rng=rng), dtype=float)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += b
        block_idx += 1
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    std_error = math.sqrt(var / trials)
    passed = abs(mean) <= 4.0 * std_error
    return CenteringReport(mean=mean, std_error=std_error, trials=trials, passed=passed)
