import json
import math
import os

import numpy as np
import pytest

import superlasso as sl
from superlasso.cli import main as cli_main


MINIMAL = '{"experiment": "clip_sweep", "n": 16, "s": 2}'


def small_config(**overrides):
    base = dict(
        experiment="clip_sweep",
        n=16,
        s=2,
        M_list=(2,),
        m_list=(12,),
        A_list=(0.5, 2.0),
        trials=3,
        seed=5,
    )
    base.update(overrides)
    return sl.ExperimentConfig(**base)


def test_parse_minimal_defaults():
    cfg = sl.parse_config(MINIMAL)
    assert cfg.trials == 100
    assert cfg.seed == 0
    assert cfg.M_list == (8,)
    assert cfg.r_rule == "oracle"


def test_parse_duplicate_key_named():
    text = '{"experiment": "clip_sweep", "n": 16, "n": 32, "s": 2}'
    with pytest.raises(sl.ConfigError, match="duplicate key 'n'"):
        sl.parse_config(text)


def test_parse_unknown_key_named():
    text = '{"experiment": "clip_sweep", "n": 16, "s": 2, "bogus": 1}'
    with pytest.raises(sl.ConfigError, match="bogus"):
        sl.parse_config(text)


def test_parse_empty_list_rejected():
    text = '{"experiment": "clip_sweep", "n": 16, "s": 2, "m_list": []}'
    with pytest.raises(sl.ConfigError, match="m_list must be nonempty"):
        sl.parse_config(text)


def test_parse_type_mismatch():
    text = '{"experiment": "clip_sweep", "n": "sixteen", "s": 2}'
    with pytest.raises(sl.ConfigError, match="'n'"):
        sl.parse_config(text)


def test_parse_rejects_bad_experiment_and_bounds():
    with pytest.raises(sl.ConfigError):
        sl.parse_config('{"experiment": "nope", "n": 16, "s": 2}')
    with pytest.raises(sl.ConfigError):
        sl.parse_config('{"experiment": "clip_sweep", "n": 16, "s": 17}')
    with pytest.raises(sl.ConfigError):
        sl.parse_config('{"experiment": "clip_sweep", "n": 16, "s": 2, "trials": 0}')


def test_config_round_trip_lossless():
    cfg = small_config(snr_db=-11.0, output_path="out.csv", r_rule="paper")
    text = sl.serialize_config(cfg)
    again = sl.parse_config(text)
    assert again == cfg
    assert sl.serialize_config(again) == text


def test_config_hash_stable():
    cfg = small_config()
    assert sl.config_hash(cfg) == sl.config_hash(small_config())
    assert sl.config_hash(cfg) != sl.config_hash(small_config(seed=6))


def test_run_deterministic_across_threads():
    cfg = small_config()
    rows1 = sl.run_experiment(cfg, threads=1)
    rows3 = sl.run_experiment(cfg, threads=3)
    assert sl.render_csv(rows1) == sl.render_csv(rows3)


def test_run_repeatable():
    cfg = small_config()
    first = sl.render_csv(sl.run_experiment(cfg))
    second = sl.render_csv(sl.run_experiment(cfg))
    assert first == second


def test_csv_schema_and_finiteness():
    cfg = small_config()
    rows = sl.run_experiment(cfg)
    text = sl.render_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(sl.experiments.CSV_COLUMNS)
    assert len(lines) == 1 + len(rows)
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == len(sl.experiments.CSV_COLUMNS)
        for col, cell in zip(sl.experiments.CSV_COLUMNS, cells):
            if col in ("mean", "median", "std") and cell:
                assert math.isfinite(float(cell))
    assert text.endswith("\n")
    assert "\r" not in text


def test_all_experiment_drivers_produce_finite_rows():
    configs = [
        small_config(),
        small_config(experiment="phase_transition", m_list=(8, 16), A_list=(1.0,)),
        small_config(
            experiment="coherent_vs_noncoherent",
            M_list=(1, 2),
            m_list=(16,),
            A_list=(1.0,),
            snr_db=-11.0,
            r_rule="paper",
        ),
        small_config(
            experiment="mismatch_audit", m_list=(2_000,), A_list=(1.0,), trials=2
        ),
        small_config(experiment="width_study", trials=500),
    ]
    for cfg in configs:
        rows = sl.run_experiment(cfg)
        assert rows, cfg.experiment
        for row in rows:
            assert math.isfinite(row.mean) and math.isfinite(row.median)
            assert math.isfinite(row.std)


def test_run_to_file_with_sidecar(tmp_path):
    cfg = small_config(trials=2)
    out = tmp_path / "result.csv"
    rows = sl.run_to_file(cfg, str(out))
    assert out.exists()
    meta = json.loads((tmp_path / "result.csv.meta.json").read_text())
    assert meta["config_sha256"] == sl.config_hash(cfg)
    assert meta["rows"] == len(rows)


def test_cli_run_and_determinism(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(sl.serialize_config(small_config(trials=2)))
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert cli_main(["run", str(cfg_path), "--out", str(out1), "--threads", "1"]) == 0
    assert cli_main(["run", str(cfg_path), "--out", str(out2), "--threads", "2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_audit_forces_experiment(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        sl.serialize_config(
            small_config(trials=2, m_list=(1_000,), A_list=(1.0,))
        )
    )
    out = tmp_path / "audit.csv"
    assert cli_main(["audit", str(cfg_path), "--out", str(out)]) == 0
    content = out.read_text()
    assert "mismatch_audit" in content
    assert "rho_direct" in content


def test_cli_widths(tmp_path):
    out = tmp_path / "w.csv"
    code = cli_main(
        ["widths", "--n", "16", "--s", "2", "--M", "2", "--trials", "400",
         "--out", str(out)]
    )
    assert code == 0
    assert "conic_l1_width_sq" in out.read_text()


def test_cli_bad_config_exit_code(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text('{"experiment": "clip_sweep"}')
    assert cli_main(["run", str(cfg_path)]) == 2
    assert cli_main(["run", str(tmp_path / "missing.json")]) == 2


def test_seed_override_changes_output(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(sl.serialize_config(small_config(trials=2)))
    out1 = tmp_path / "s0.csv"
    out2 = tmp_path / "s1.csv"
    assert cli_main(["run", str(cfg_path), "--out", str(out1), "--seed", "123"]) == 0
    assert cli_main(["run", str(cfg_path), "--out", str(out2), "--seed", "124"]) == 0
    assert out1.read_bytes() != out2.read_bytes()


def test_shipped_configs_parse_and_run_finite():
    config_dir = os.path.join(os.path.dirname(__file__), "..", "configs")
    paths = sorted(
        os.path.join(config_dir, name)
        for name in os.listdir(config_dir)
        if name.endswith(".json")
    )
    assert len(paths) == 5
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            cfg = sl.parse_config(fh.read())
        # Shrink the workload; the schema and finiteness are what is checked.
        small = cfg.replace(trials=2 if cfg.experiment != "width_study" else 300)
        if cfg.experiment == "mismatch_audit":
            small = small.replace(m_list=(2_000,))
        rows = sl.run_experiment(small)
        assert rows
        for row in rows:
            for col in ("mean", "median", "std"):
                assert math.isfinite(getattr(row, col))


def test_radius_mistuning_knob_changes_results():
    base = small_config(A_list=(0.5,), trials=4)
    tight = sl.run_experiment(base.replace(r_scale=0.8))
    slack = sl.run_experiment(base.replace(r_scale=1.2))
    assert sl.render_csv(tight) != sl.render_csv(slack)


def test_node_sweep_generation_at_paper_scale():
    # Channel-gain clipping setup at the published figure's dimensions.
    rng = np.random.default_rng(0)
    gains = rng.standard_normal(16)
    fs = tuple(sl.Compose(sl.Scale(h), sl.Clip(1.0)) for h in gains)
    x0 = sl.generate_sparse_source(64, 4, seed=0)
    ens = sl.generate_ensemble(
        x0, sl.ObservationSpec(16, 128, fs, noise_sigma=0.0, seed=1)
    )
    assert ens.vectors.shape == (128, 16, 64)
    assert np.all(np.isfinite(ens.observations))


def test_thread_env_default(monkeypatch):
    monkeypatch.setenv(sl.experiments.THREADS_ENV_VAR, "3")
    assert sl.experiments.default_thread_count() == 3
    monkeypatch.setenv(sl.experiments.THREADS_ENV_VAR, "junk")
    assert sl.experiments.default_thread_count() == 1
