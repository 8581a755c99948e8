"""Reproducible experiment harness.

Configs are strict JSON documents (unknown or duplicate keys are rejected),
runs are seeded per trial so results are independent of thread count and
execution order, and results land in a fixed-schema CSV:

    experiment,n,s,M,m,A,snr_db,metric_name,mean,median,std,trials,seed

Numeric cells use %.12g formatting; a run with identical config and seed is
byte-identical. A sidecar ``<out>.meta.json`` records the config hash,
package version, and wall time.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import (
    conic_mean_width_l1,
    conic_mean_width_l12,
    global_mean_width,
    mismatch_covariance_mc,
    scaling_parameter,
    nonlinearity_second_moment,
)
from .estimators import direct_method, lifting_method
from .model import (
    Clip,
    Compose,
    ObservationSpec,
    Scale,
    generate_ensemble,
    generate_sparse_source,
)
from .projections import L1Ball

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "parse_config",
    "serialize_config",
    "config_hash",
    "run_experiment",
    "render_csv",
    "write_csv",
    "run_to_file",
    "default_thread_count",
]

EXPERIMENTS = (
    "clip_sweep",
    "coherent_vs_noncoherent",
    "phase_transition",
    "mismatch_audit",
    "width_study",
)
R_RULES = ("oracle", "paper")
W_RULES = ("ones", "identity", "sign_mu")

THREADS_ENV_VAR = "SUPERLASSO_THREADS"

CSV_COLUMNS = (
    "experiment",
    "n",
    "s",
    "M",
    "m",
    "A",
    "snr_db",
    "metric_name",
    "mean",
    "median",
    "std",
    "trials",
    "seed",
)

SUCCESS_TOL = 1e-5  # rescaled error norm below this counts as exact recovery


class ConfigError(ValueError):
    """Configuration document is malformed or violates an invariant."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int
    s: int
    M_list: tuple[int, ...] = (8,)
    m_list: tuple[int, ...] = (32,)
    A_list: tuple[float, ...] = (1.0,)
    snr_db: float | None = None
    trials: int = 100
    seed: int = 0
    r_rule: str = "oracle"
    r_scale: float = 1.0
    w_rule: str = "identity"
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "M_list", tuple(int(v) for v in self.M_list))
        object.__setattr__(self, "m_list", tuple(int(v) for v in self.m_list))
        object.__setattr__(self, "A_list", tuple(float(v) for v in self.A_list))
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}"
            )
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if not 1 <= self.s <= self.n:
            raise ConfigError("s must satisfy 1 <= s <= n")
        for name, values, low in (
            ("M_list", self.M_list, 1),
            ("m_list", self.m_list, 1),
        ):
            if len(values) == 0:
                raise ConfigError(f"{name} must be nonempty")
            if any(v < low for v in values):
                raise ConfigError(f"{name} entries must be >= {low}")
        if len(self.A_list) == 0:
            raise ConfigError("A_list must be nonempty")
        if any(a <= 0 for a in self.A_list):
            raise ConfigError("A_list entries must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.r_rule not in R_RULES:
            raise ConfigError(f"r_rule must be one of {R_RULES}, got {self.r_rule!r}")
        if not self.r_scale > 0:
            raise ConfigError("r_scale must be positive")
        if self.w_rule not in W_RULES:
            raise ConfigError(f"w_rule must be one of {W_RULES}, got {self.w_rule!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {
    "experiment": str,
    "n": int,
    "s": int,
    "M_list": list,
    "m_list": list,
    "A_list": list,
    "snr_db": (int, float, type(None)),
    "trials": int,
    "seed": int,
    "r_rule": str,
    "r_scale": (int, float),
    "w_rule": str,
    "output_path": (str, type(None)),
}
_REQUIRED_FIELDS = ("experiment", "n", "s")


def _reject_duplicates(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} in config")
        seen.add(key)
    return dict(pairs)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON config document with strict validation.

    Unknown keys, duplicate keys, type mismatches, and constraint violations
    all raise :class:`ConfigError` naming the offending key.
    """
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    for key in raw:
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r} in config")
    for key in _REQUIRED_FIELDS:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    for key, value in raw.items():
        expected = _FIELD_TYPES[key]
        if not isinstance(value, expected):
            raise ConfigError(
                f"key {key!r} has type {type(value).__name__}, expected {expected}"
            )
        if isinstance(value, bool):  # bool passes isinstance(int) checks
            raise ConfigError(f"key {key!r} must not be a boolean")
    return ExperimentConfig(**raw)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON form; ``parse_config`` round-trips it losslessly."""
    payload = {
        "experiment": cfg.experiment,
        "n": cfg.n,
        "s": cfg.s,
        "M_list": list(cfg.M_list),
        "m_list": list(cfg.m_list),
        "A_list": list(cfg.A_list),
        "snr_db": cfg.snr_db,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "r_rule": cfg.r_rule,
        "r_scale": cfg.r_scale,
        "w_rule": cfg.w_rule,
        "output_path": cfg.output_path,
    }
    return json.dumps(payload, indent=2) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Result rows and CSV rendering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    experiment: str
    n: int
    s: int
    M: int
    m: int
    A: float | None
    snr_db: float | None
    metric_name: str
    mean: float
    median: float
    std: float
    trials: int
    seed: int


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("refusing to write a non-finite CSV cell")
    return "%.12g" % value


def render_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(_fmt(getattr(row, col)) for col in CSV_COLUMNS)
        )
    return "\n".join(lines) + "\n"


def write_csv(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(rows))


def _sort_rows(rows):
    return sorted(
        rows,
        key=lambda r: (
            r.M,
            r.m,
            -math.inf if r.A is None else r.A,
            r.metric_name,
        ),
    )


def default_thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Trial seeding
# ---------------------------------------------------------------------------

def _trial_seeds(base_seed: int, point: int, trial: int, count: int = 4):
    ss = np.random.SeedSequence(base_seed, spawn_key=(point, trial))
    return [int(v) for v in ss.generate_state(count, dtype=np.uint64)]


def _summaries(values: np.ndarray) -> tuple[float, float, float]:
    values = np.asarray(values, dtype=float)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), float(np.median(values)), std


def _aggregate(cfg, points, per_trial_metrics) -> list[ResultRow]:
    """per_trial_metrics[p][t] is a dict metric -> value for point p, trial t."""
    rows = []
    for p, point in enumerate(points):
        M, m, A = point
        metric_names = sorted(per_trial_metrics[p][0])
        for name in metric_names:
            values = np.array([per_trial_metrics[p][t][name] for t in range(cfg.trials)])
            mean, median, std = _summaries(values)
            rows.append(
                ResultRow(
                    experiment=cfg.experiment,
                    n=cfg.n,
                    s=cfg.s,
                    M=M,
                    m=m,
                    A=A,
                    snr_db=cfg.snr_db,
                    metric_name=name,
                    mean=mean,
                    median=median,
                    std=std,
                    trials=cfg.trials,
                    seed=cfg.seed,
                )
            )
    return _sort_rows(rows)


def _run_trials(cfg, points, worker, threads: int):
    results = [[None] * cfg.trials for _ in points]

    def run_one(task):
        p, t = task
        results[p][t] = worker(p, points[p], t)

    tasks = [(p, t) for p in range(len(points)) for t in range(cfg.trials)]
    if threads <= 1:
        for task in tasks:
            run_one(task)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_one, tasks))
    return results


# ---------------------------------------------------------------------------
# Experiment drivers
# ---------------------------------------------------------------------------

def _direct_radius(cfg, mu_bar: float, x0) -> float:
    if cfg.r_rule == "oracle":
        base = abs(mu_bar) * float(np.abs(x0.entries).sum())
    else:
        base = abs(mu_bar) * math.sqrt(cfg.s)
    return max(cfg.r_scale * base, 1e-12)


def _run_clip_sweep(cfg: ExperimentConfig, threads: int) -> list[ResultRow]:
    points = [(M, m, A) for M in cfg.M_list for m in cfg.m_list for A in cfg.A_list]
    mu_by_A = {A: scaling_parameter(Clip(A)) for A in cfg.A_list}

    def worker(p, point, t):
        M, m, A = point
        seeds = _trial_seeds(cfg.seed, p, t)
        x0 = generate_sparse_source(cfg.n, cfg.s, seed=seeds[0])
        spec = ObservationSpec(
            node_count=M,
            sample_count=m,
            nonlinearities=(Clip(A),) * M,
            noise_sigma=0.0 if cfg.snr_db is None else None,
            snr_db=cfg.snr_db,
            seed=seeds[1],
        )
        ens = generate_ensemble(x0, spec)
        mu_bar = mu_by_A[A]
        result = direct_method(ens, _direct_radius(cfg, mu_bar, x0))
        estimate = result.estimate_matrix[:, 0]
        err_raw = estimate - mu_bar * x0.entries
        err_rescaled = estimate / mu_bar - x0.entries
        rescaled_norm = float(np.linalg.norm(err_rescaled))
        return {
            "mse_raw": float(err_raw @ err_raw),
            "mse_rescaled": rescaled_norm**2,
            "success": 1.0 if rescaled_norm <= SUCCESS_TOL else 0.0,
        }

    return _aggregate(cfg, points, _run_trials(cfg, points, worker, threads))


# The m-sweep reuses the clip-sweep trial body; only the swept lists differ.
_run_phase_transition = _run_clip_sweep


def _fixed_noise_sigma(cfg: ExperimentConfig, A: float) -> float:
    """Receiver noise floor for the node-count sweep, fixed across the sweep.

    ``snr_db`` positions the noise power relative to the aggregate distorted
    signal power of the full network (the largest node count in the sweep,
    with unit-variance channel gains integrated out); negative values put the
    noise below the signal. The floor is a receiver property, so it stays
    fixed while the sweep removes nodes, which makes small-M configurations
    relatively noisier.
    """
    if cfg.snr_db is None:
        return 0.0
    ref_nodes = max(cfg.M_list)
    signal_var = ref_nodes * nonlinearity_second_moment(Clip(A))
    return math.sqrt(signal_var * 10.0 ** (cfg.snr_db / 10.0))


def _run_coherent_vs_noncoherent(cfg: ExperimentConfig, threads: int) -> list[ResultRow]:
    A = cfg.A_list[0]
    mu_clip = scaling_parameter(Clip(A))
    sigma = _fixed_noise_sigma(cfg, A)
    points = [(M, m, A) for M in cfg.M_list for m in cfg.m_list]

    def worker(p, point, t):
        M, m, _ = point
        seeds = _trial_seeds(cfg.seed, p, t)
        x0 = generate_sparse_source(cfg.n, cfg.s, seed=seeds[0])
        gains_rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seeds[3]))
        )
        gains = gains_rng.standard_normal(M)

        coherent = tuple(Compose(Scale(abs(h)), Clip(A)) for h in gains)
        ens_c = generate_ensemble(
            x0,
            ObservationSpec(
                node_count=M,
                sample_count=m,
                nonlinearities=coherent,
                noise_sigma=sigma,
                seed=seeds[1],
            ),
        )
        mu_bar = float(np.abs(gains).mean()) * mu_clip
        direct = direct_method(ens_c, _direct_radius(cfg, mu_bar, x0))
        est = direct.estimate_matrix[:, 0]
        direct_rescaled = est / mu_bar - x0.entries

        noncoherent = tuple(Compose(Scale(h), Clip(A)) for h in gains)
        ens_n = generate_ensemble(
            x0,
            ObservationSpec(
                node_count=M,
                sample_count=m,
                nonlinearities=noncoherent,
                noise_sigma=sigma,
                seed=seeds[2],
            ),
        )
        mu = gains * mu_clip
        if cfg.r_rule == "oracle":
            radius = float(np.linalg.norm(mu)) * float(np.abs(x0.entries).sum())
        else:
            radius = math.sqrt(M) * math.sqrt(cfg.s)
        lifted = lifting_method(ens_n, max(cfg.r_scale * radius, 1e-12))
        target = np.outer(x0.entries, mu)
        frob_sq = float(np.linalg.norm(lifted.estimate_matrix - target) ** 2)
        if lifted.extracted_source is not None:
            diff = [
                float(np.linalg.norm(lifted.extracted_source - x0.entries)),
                float(np.linalg.norm(lifted.extracted_source + x0.entries)),
            ]
            source_error = min(diff)
        else:
            source_error = 1.0
        return {
            "direct_mse_raw": float(np.linalg.norm(est - mu_bar * x0.entries) ** 2),
            "direct_mse_rescaled": float(direct_rescaled @ direct_rescaled),
            "lifting_mse_pernode": frob_sq / M,
            "lifting_source_error": source_error,
        }

    return _aggregate(cfg, points, _run_trials(cfg, points, worker, threads))


def _run_mismatch_audit(cfg: ExperimentConfig, threads: int) -> list[ResultRow]:
    A = cfg.A_list[0]
    mu_clip = scaling_parameter(Clip(A))
    samples = cfg.m_list[0]
    points = [(M, samples, A) for M in cfg.M_list]

    def worker(p, point, t):
        M, T, _ = point
        seeds = _trial_seeds(cfg.seed, p, t)
        x0 = generate_sparse_source(cfg.n, cfg.s, seed=seeds[0])
        gains_rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seeds[3]))
        )
        gains = gains_rng.standard_normal(M)
        fs = tuple(Compose(Scale(h), Clip(A)) for h in gains)
        mu = gains * mu_clip
        mu_bar = float(mu.mean())

        direct = mismatch_covariance_mc(
            mu_bar * x0.entries, x0, fs, design="direct", trials=T, seed=seeds[1]
        )
        lifting = mismatch_covariance_mc(
            np.outer(x0.entries, mu), x0, fs, design="lifting", trials=T, seed=seeds[2]
        )
        metrics = {
            "rho_direct": direct.value,
            "rho_direct_z": direct.value / direct.std_error,
            "rho_lifting": lifting.value,
            "rho_lifting_z": lifting.value / lifting.std_error,
        }
        if cfg.w_rule in ("ones", "sign_mu"):
            W = np.ones((M, 1)) if cfg.w_rule == "ones" else np.sign(mu)[:, None]
            mu_tilde = (1.0 / M) * (W.T @ mu)
            hybrid = mismatch_covariance_mc(
                np.outer(x0.entries, mu_tilde),
                x0,
                fs,
                design="hybrid",
                weights=W,
                trials=T,
                seed=seeds[1],
            )
            metrics["rho_hybrid"] = hybrid.value
            metrics["rho_hybrid_z"] = hybrid.value / hybrid.std_error
        return metrics

    return _aggregate(cfg, points, _run_trials(cfg, points, worker, threads))


def _run_width_study(cfg: ExperimentConfig, threads: int) -> list[ResultRow]:
    rows = []
    for p, M in enumerate(cfg.M_list):
        seeds = _trial_seeds(cfg.seed, p, 0)
        x0 = generate_sparse_source(cfg.n, cfg.s, seed=seeds[0])
        conic_l1 = conic_mean_width_l1(x0.entries, trials=cfg.trials, seed=seeds[1])
        conic_l12 = conic_mean_width_l12(
            x0.entries, np.ones(M), trials=cfg.trials, seed=seeds[2]
        )
        glob = global_mean_width(
            L1Ball(math.sqrt(cfg.s)), dim=cfg.n, trials=cfg.trials, seed=seeds[3]
        )
        for name, est in (
            ("conic_l1_width_sq", (conic_l1.value_squared, conic_l1.std_error_squared)),
            ("conic_l12_width_sq", (conic_l12.value_squared, conic_l12.std_error_squared)),
            ("global_l1_width", (glob.value, glob.std_error)),
        ):
            value, err = est
            rows.append(
                ResultRow(
                    experiment=cfg.experiment,
                    n=cfg.n,
                    s=cfg.s,
                    M=M,
                    m=cfg.m_list[0],
                    A=None,
                    snr_db=cfg.snr_db,
                    metric_name=name,
                    mean=value,
                    median=value,
                    std=err,
                    trials=cfg.trials,
                    seed=cfg.seed,
                )
            )
    return _sort_rows(rows)


_DRIVERS = {
    "clip_sweep": _run_clip_sweep,
    "phase_transition": _run_phase_transition,
    "coherent_vs_noncoherent": _run_coherent_vs_noncoherent,
    "mismatch_audit": _run_mismatch_audit,
    "width_study": _run_width_study,
}


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Run the configured experiment and return sorted result rows."""
    threads = default_thread_count() if threads is None else max(1, int(threads))
    return _DRIVERS[cfg.experiment](cfg, threads)


def run_to_file(
    cfg: ExperimentConfig, out_path: str, threads: int | None = None
) -> list[ResultRow]:
    """Run, write the CSV, and drop a sidecar metadata file."""
    start = time.time()
    rows = run_experiment(cfg, threads=threads)
    write_csv(rows, out_path)
    meta = {
        "config_sha256": config_hash(cfg),
        "version": __version__,
        "wall_time_s": time.time() - start,
        "rows": len(rows),
    }
    with open(out_path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return rows
