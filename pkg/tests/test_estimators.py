import numpy as np
import pytest
from scipy import linalg as sla
from sklearn.base import clone

import superlasso as sl
from oracles import power_iteration_rank_one

SOLVE = sl.SolverConfig(max_iters=30_000, fixed_point_tol=1e-10)


def _ensemble(seed, M=8, m=32, n=64, s=4, fs=None, noise=0.0):
    x0 = sl.generate_sparse_source(n, s, seed=seed)
    fs = fs or tuple(sl.Identity() for _ in range(M))
    spec = sl.ObservationSpec(M, m, fs, noise_sigma=noise, seed=seed + 10_000)
    return x0, sl.generate_ensemble(x0, spec)


def test_direct_identity_exact():
    x0, ens = _ensemble(0)
    res = sl.direct_method(ens, float(np.abs(x0.entries).sum()), SOLVE)
    assert res.estimate_matrix.shape == (64, 1)
    assert res.extracted_source is None
    assert np.linalg.norm(res.estimate_matrix[:, 0] - x0.entries) <= 1e-5


def test_direct_single_node_gain_absorbed():
    x0 = sl.generate_sparse_source(64, 4, seed=5)
    spec = sl.ObservationSpec(1, 48, (sl.Scale(2.0),), noise_sigma=0.0, seed=77)
    ens = sl.generate_ensemble(x0, spec)
    res = sl.direct_method(ens, 2.0 * float(np.abs(x0.entries).sum()), SOLVE)
    assert np.linalg.norm(res.estimate_matrix[:, 0] - 2.0 * x0.entries) <= 1e-5


def test_direct_radius_validation():
    x0, ens = _ensemble(1)
    with pytest.raises(ValueError):
        sl.direct_method(ens, 0.0)


def test_lifting_single_node_reduces_to_direct():
    x0 = sl.generate_sparse_source(32, 3, seed=2)
    spec = sl.ObservationSpec(1, 40, (sl.Clip(1.0),), noise_sigma=0.0, seed=3)
    ens = sl.generate_ensemble(x0, spec)
    direct = sl.direct_method(ens, 0.9, SOLVE)
    lifted = sl.lifting_method(ens, 0.9, SOLVE)
    assert np.linalg.norm(direct.estimate_matrix - lifted.estimate_matrix) <= 1e-8


def test_lifting_recovers_gain_pattern():
    for seed in range(3):
        x0 = sl.generate_sparse_source(64, 4, seed=seed)
        rng = np.random.default_rng(seed + 40)
        gains = rng.standard_normal(8)
        fs = tuple(sl.Scale(h) for h in gains)
        spec = sl.ObservationSpec(8, 128, fs, noise_sigma=0.0, seed=seed + 50)
        ens = sl.generate_ensemble(x0, spec)
        radius = float(np.linalg.norm(gains) * np.abs(x0.entries).sum())
        res = sl.lifting_method(ens, radius, SOLVE)
        per_node = np.linalg.norm(
            res.estimate_matrix - np.outer(x0.entries, gains)
        ) ** 2 / 8
        assert per_node <= 1e-6


def test_hybrid_all_ones_matches_direct():
    for seed in range(20):
        x0 = sl.generate_sparse_source(24, 3, seed=seed)
        rng = np.random.default_rng(seed)
        fs = tuple(sl.Compose(sl.Scale(h), sl.Clip(1.0)) for h in rng.standard_normal(4))
        spec = sl.ObservationSpec(4, 20, fs, noise_sigma=0.05, seed=seed + 90)
        ens = sl.generate_ensemble(x0, spec)
        direct = sl.direct_method(ens, 0.8, SOLVE)
        hybrid = sl.hybrid_method(ens, np.ones((4, 1)), sl.L1Ball(0.8), SOLVE)
        assert abs(direct.report.objective - hybrid.report.objective) <= 1e-8
        assert np.linalg.norm(direct.estimate_matrix - hybrid.estimate_matrix) <= 1e-6


def test_hybrid_identity_matches_lifting():
    for seed in range(20):
        x0, ens = _ensemble(seed + 200, M=4, m=24, n=32, s=3,
                            fs=tuple(sl.Clip(0.8) for _ in range(4)))
        lifted = sl.lifting_method(ens, 1.2, SOLVE)
        hybrid = sl.hybrid_method(
            ens, np.eye(4), sl.L12Ball(1.2, rows=32, cols=4), SOLVE
        )
        assert abs(lifted.report.objective - hybrid.report.objective) <= 1e-8
        assert np.linalg.norm(lifted.estimate_matrix - hybrid.estimate_matrix) <= 1e-6


def test_hybrid_sign_weights_beat_cancellation():
    mu_clip = sl.scaling_parameter(sl.Clip(1.0))
    rng = np.random.default_rng(123)
    while True:
        gains = rng.standard_normal(8)
        if abs(gains.sum()) <= 0.1 * np.abs(gains).sum():
            break
    x0 = sl.generate_sparse_source(64, 4, seed=11)
    fs = tuple(sl.Compose(sl.Scale(h), sl.Clip(1.0)) for h in gains)
    spec = sl.ObservationSpec(8, 64, fs, noise_sigma=0.0, seed=12)
    ens = sl.generate_ensemble(x0, spec)
    mu = gains * mu_clip
    mu_tilde = float(np.abs(mu).mean())
    hybrid = sl.hybrid_method(
        ens, np.sign(mu)[:, None], sl.L1Ball(mu_tilde * 2.0), SOLVE
    )
    hybrid_err = np.linalg.norm(hybrid.estimate_matrix[:, 0] / mu_tilde - x0.entries)
    mu_bar = mu.mean()
    direct = sl.direct_method(ens, max(abs(mu_bar) * 2.0, 1e-9), SOLVE)
    direct_err = np.linalg.norm(direct.estimate_matrix[:, 0] / mu_bar - x0.entries)
    assert hybrid_err < 0.5
    assert hybrid_err < 0.25 * direct_err


def test_hybrid_requires_semi_orthogonal_weights():
    x0, ens = _ensemble(3, M=3, m=10, n=8, s=2,
                        fs=tuple(sl.Identity() for _ in range(3)))
    skew = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        sl.hybrid_method(ens, skew, sl.L12Ball(1.0, rows=8, cols=2))
    res = sl.hybrid_method(
        ens, skew, sl.L12Ball(1.0, rows=8, cols=2), allow_unnormalized_weights=True
    )
    assert res.estimate_matrix.shape == (8, 2)


def test_semi_orthogonalize_fixed_points():
    already = np.ones((5, 1))
    np.testing.assert_allclose(sl.semi_orthogonalize(already), already, atol=1e-12)
    M, N = 8, 3
    base = np.linalg.qr(np.random.default_rng(0).standard_normal((M, N)))[0]
    W = base * np.sqrt(M / N)
    np.testing.assert_allclose(sl.semi_orthogonalize(W), W, atol=1e-12)


def test_semi_orthogonalize_small_case_against_matrix_root():
    W = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    out = sl.semi_orthogonalize(W)
    M, N = W.shape
    gram = out.T @ out
    np.testing.assert_allclose(gram, (M / N) * np.eye(N), atol=1e-12)
    oracle = W @ np.linalg.inv(sla.sqrtm((N / M) * W.T @ W).real)
    np.testing.assert_allclose(out, oracle, atol=1e-10)


def test_semi_orthogonalize_rejects_rank_deficient():
    with pytest.raises(ValueError):
        sl.semi_orthogonalize(np.ones((4, 2)))
    with pytest.raises(ValueError):
        sl.semi_orthogonalize(np.ones((2, 3)))


def test_is_semi_orthogonal_flag():
    assert sl.is_semi_orthogonal(np.ones((6, 1)))
    assert sl.is_semi_orthogonal(np.eye(4))
    assert not sl.is_semi_orthogonal(np.array([[1.0, 0.2], [0.1, 1.0], [0.0, 0.3]]))


def test_rank_one_exact_input():
    rng = np.random.default_rng(9)
    x0 = rng.standard_normal(12)
    x0 /= np.linalg.norm(x0)
    mu = rng.standard_normal(5)
    source, scalings = sl.rank_one_factor(np.outer(x0, mu))
    assert scalings[np.argmax(np.abs(scalings))] > 0
    sign = 1.0 if np.linalg.norm(source - x0) < np.linalg.norm(source + x0) else -1.0
    np.testing.assert_allclose(sign * source, x0, atol=1e-10)
    np.testing.assert_allclose(sign * scalings, mu, atol=1e-10)


def test_rank_one_perturbation_stability():
    rng = np.random.default_rng(10)
    x0 = rng.standard_normal(40)
    x0 /= np.linalg.norm(x0)
    mu = rng.standard_normal(8)
    X = np.outer(x0, mu)
    E = rng.standard_normal(X.shape)
    E *= 0.01 * np.linalg.norm(X) / np.linalg.norm(E)
    source, _ = sl.rank_one_factor(X + E)
    err = min(np.linalg.norm(source - x0), np.linalg.norm(source + x0))
    assert err <= 0.05


def test_rank_one_certified_by_power_iteration():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((20, 6))
    source, scalings = sl.rank_one_factor(X)
    assert abs(np.linalg.norm(source) - 1.0) <= 1e-10
    u, sigma, v = power_iteration_rank_one(X)
    ours = np.linalg.norm(np.outer(source, scalings) - X)
    certified = np.linalg.norm(sigma * np.outer(u, v) - X)
    assert ours <= certified + 1e-8


def test_rank_one_vector_input():
    v = np.array([3.0, 0.0, -4.0])
    source, scalings = sl.rank_one_factor(v)
    np.testing.assert_allclose(np.abs(scalings), [5.0])
    np.testing.assert_allclose(source * scalings[0], v, atol=1e-12)


def test_rank_one_zero_rejected():
    with pytest.raises(ValueError):
        sl.rank_one_factor(np.zeros((3, 2)))


def test_sklearn_surface():
    x0, ens = _ensemble(4, M=3, m=25, n=16, s=2,
                        fs=tuple(sl.Identity() for _ in range(3)))
    est = sl.DirectRecovery(radius=1.0)
    params = est.get_params()
    assert params["radius"] == 1.0
    cloned = clone(est)
    cloned.set_params(radius=float(np.abs(x0.entries).sum()))
    cloned.fit(ens.vectors, ens.observations)
    preds = cloned.predict(ens.vectors)
    np.testing.assert_allclose(preds, ens.superposed() @ cloned.estimate_, atol=1e-12)
    assert cloned.score(ens.vectors, ens.observations) > 0.99


def test_predict_before_fit_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        sl.LiftingRecovery(radius=1.0).predict(np.zeros((2, 1, 3)))


def test_estimator_input_validation():
    est = sl.LiftingRecovery(radius=1.0)
    with pytest.raises(ValueError):
        est.fit(np.zeros((4, 3)), np.zeros(4))  # lifting needs the node axis
    with pytest.raises(ValueError):
        sl.DirectRecovery(radius=1.0).fit(np.full((4, 2, 3), np.nan), np.zeros(4))


def test_error_monotone_in_sample_count():
    taus = {16: [], 32: [], 64: [], 128: []}
    mu_bar = sl.scaling_parameter(sl.Clip(1.0))
    for m in taus:
        for trial in range(100):
            x0 = sl.generate_sparse_source(64, 4, seed=trial)
            spec = sl.ObservationSpec(
                8, m, (sl.Clip(1.0),) * 8, noise_sigma=0.0, seed=trial + 600
            )
            ens = sl.generate_ensemble(x0, spec)
            res = sl.direct_method(
                ens, mu_bar * float(np.abs(x0.entries).sum()), SOLVE
            )
            taus[m].append(
                np.linalg.norm(res.estimate_matrix[:, 0] - mu_bar * x0.entries)
            )
    medians = [float(np.median(taus[m])) for m in (16, 32, 64, 128)]
    inversions = [
        (medians[i + 1] - medians[i]) / medians[i]
        for i in range(3)
        if medians[i + 1] > medians[i]
    ]
    assert len(inversions) <= 1
    assert all(gap <= 0.05 for gap in inversions)
