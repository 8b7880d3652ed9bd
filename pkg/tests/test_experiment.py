"""Tests for experiment configuration, validation and the run driver."""

import json

import pytest

from corrlab.errors import ConfigValidationError
from corrlab.experiment import (
    ExperimentConfig,
    classify_periodic_experiment,
    config_from_dict,
    config_hash,
    flatten_config,
    load_config,
    run,
    validate_config,
)
from corrlab.catalog import builtin
from corrlab.persistence import read_csv, read_json
from corrlab.run_log import RUN_LOG_FILE


def _make_config(tmp_path, name: str = "out", **kwargs) -> ExperimentConfig:
    defaults = dict(grid=16, coarse_grid=8, forms=["Omega"], limit_depth=6, out_dir=str(tmp_path / name))
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


def test_default_config_is_valid():
    validate_config(ExperimentConfig())


def test_validation_collects_every_problem():
    config = ExperimentConfig(n_max=0, kind="nope", grid=8, coarse_grid=8, forms=["bogus"])
    with pytest.raises(ConfigValidationError) as info:
        validate_config(config)
    fields = {message.split(":")[0] for message in info.value.errors}
    assert {"n_max", "kind", "coarse_grid", "forms"} <= fields


def test_sampled_mode_needs_samples():
    with pytest.raises(ConfigValidationError):
        validate_config(ExperimentConfig(mode="sampled"))
    validate_config(ExperimentConfig(mode="sampled", samples=64))


def test_flatten_config_sections():
    flat = flatten_config({"quadrature": {"grid": 64}, "contraction": {"trials": 8}, "kind": "pair"})
    assert flat == {"grid": 64, "contraction_trials": 8, "kind": "pair"}


def test_unknown_field_rejected():
    with pytest.raises(ConfigValidationError) as info:
        config_from_dict({"grdi": 64})
    assert info.value.errors == ["grdi: unknown field"]


def test_load_config_applies_overrides(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"source": "sqrt", "quadrature": {"grid": 32, "coarse_grid": 16}}), encoding="utf-8")
    config = load_config(str(path), {"n_max": 5, "grid": None})
    assert config.source == "sqrt"
    assert config.grid == 32
    assert config.n_max == 5


def test_load_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        load_config(str(path))
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        load_config(str(path))


def test_config_hash_ignores_output_directory(tmp_path):
    a = _make_config(tmp_path, "a")
    b = _make_config(tmp_path, "b")
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 12
    assert config_hash(_make_config(tmp_path, "a", grid=24)) != config_hash(a)


def test_invalid_run_writes_nothing(tmp_path):
    config = _make_config(tmp_path, n_max=0)
    with pytest.raises(ConfigValidationError):
        run(config)
    assert not (tmp_path / "out").exists()


def test_classify_periodic_points_of_square():
    summary = classify_periodic_experiment(builtin("square"), 2)
    assert summary.distinct == 5
    assert summary.total_multiplicity == 5
    assert summary.attracting == 2
    assert summary.repelling == 3


def test_periodic_run_writes_records_and_log(tmp_path):
    messages = []
    result = run(_make_config(tmp_path, kind="periodic", period=2), progress=messages.append)
    assert result.summary["total_multiplicity"] == 5
    names = {p.name for p in result.files}
    assert names == {"periodic.csv", "periodic_summary.json", RUN_LOG_FILE}
    provenance, rows = read_csv(tmp_path / "out" / "periodic.csv")
    assert provenance["config_hash"] == result.config_hash
    assert len(rows) == 5
    assert read_json(tmp_path / "out" / "periodic_summary.json")["period"] == 2
    assert messages and messages[0].startswith("[periodic n=2]")

    lines = (tmp_path / "out" / RUN_LOG_FILE).read_text(encoding="utf-8").splitlines()
    entries = [json.loads(line) for line in lines]
    assert [e["stage"] for e in entries] == ["config", "summary", "done"]
    assert all(e["config_hash"] == result.config_hash for e in entries)


def test_pair_runs_are_reproducible(tmp_path):
    first = run(_make_config(tmp_path, "a", n_max=3))
    second = run(_make_config(tmp_path, "b", n_max=3))
    assert first.config_hash == second.config_hash
    a = (tmp_path / "a" / "pairing_Omega.csv").read_bytes()
    b = (tmp_path / "b" / "pairing_Omega.csv").read_bytes()
    assert a == b
    summary = read_json(tmp_path / "a" / "pairing_summary.json")
    assert summary["correspondence"] == "square"
    assert [form["form_id"] for form in summary["forms"]] == ["Omega"]


def test_equilibrium_run(tmp_path):
    result = run(_make_config(tmp_path, kind="equilibrium", source="chebyshev", depth=8))
    names = {p.name for p in result.files}
    assert {"cloud.csv", "moments.json"} <= names
    assert result.summary["total_mass"] == pytest.approx(1.0)
    assert 0 < result.summary["atoms"] <= 256
    _, rows = read_csv(tmp_path / "out" / "cloud.csv")
    assert len(rows) == result.summary["atoms"]


def test_fourier_run(tmp_path):
    result = run(_make_config(tmp_path, kind="fourier", fourier_n=4, fourier_grid=16))
    doc = read_json(tmp_path / "out" / "fourier.json")
    assert doc["N"] == 4
    assert set(doc["shell_counts"]) == {"1", "2", "3", "4"}
    assert result.summary["decay_ratio"] == doc["decay_ratio"]
    assert doc["cutoff_defect"] == 0.0
    assert doc["partial_sum_error"] <= doc["partial_sum_tail"] <= doc["partial_sum_bound"]


def test_contraction_run(tmp_path):
    config = _make_config(
        tmp_path,
        kind="contraction",
        source="identity",
        contraction_trials=2,
        contraction_iterations=5,
        contraction_grid=16,
        contraction_coarse_grid=8,
    )
    run(config)
    doc = read_json(tmp_path / "out" / "contraction.json")
    assert doc["correspondence"] == "identity"
    assert doc["lower_bound"] == pytest.approx(1.0, abs=1e-6)


def test_unknown_source_fails_before_running(tmp_path):
    with pytest.raises(ValueError):
        run(_make_config(tmp_path, source=str(tmp_path / "missing.corr")))
