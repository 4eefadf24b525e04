"""Config loading, strict key checking, and field validation."""

import dataclasses
import json

import pytest

from beliefmesh.config import (
    ConfigInvalidError,
    ExperimentConfig,
    config_from_dict,
    load_config,
)


def test_minimal_config_uses_documented_defaults():
    cfg = ExperimentConfig(scenario="tmaze")
    assert cfg.agents == 1
    assert cfg.steps == 2
    assert cfg.seed == 0
    assert cfg.share is True
    assert cfg.k is None
    assert cfg.gamma == 16.0
    assert cfg.depth == 2
    assert cfg.prune_threshold == 1.0 / 16.0
    assert cfg.transport == "mem"
    assert cfg.out_dir is None


def test_config_is_frozen():
    cfg = ExperimentConfig(scenario="tmaze")
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.steps = 5


def test_resolved_k_defaults_to_all_other_agents():
    cfg = ExperimentConfig(scenario="elephant", agents=4)
    assert cfg.resolved_k() == 3
    cfg = ExperimentConfig(scenario="elephant", agents=4, k=2)
    assert cfg.resolved_k() == 2


@pytest.mark.parametrize(
    "overrides",
    [
        {"scenario": "labyrinth"},
        {"agents": 0},
        {"agents": True},
        {"steps": 0},
        {"seed": -1},
        {"share": "yes"},
        {"k": 0},
        {"gamma": 0.0},
        {"gamma": -2.0},
        {"depth": 0},
        {"prune_threshold": 1.0},
        {"prune_threshold": -0.1},
        {"noise": -0.01},
        {"noise": 1.5},
        {"transport": "pigeon"},
        {"out_dir": 7},
    ],
)
def test_each_bad_field_is_rejected(overrides):
    base = dict(scenario="tmaze")
    base.update(overrides)
    with pytest.raises(ConfigInvalidError):
        ExperimentConfig(**base)


def test_elephant_needs_two_agents():
    with pytest.raises(ConfigInvalidError, match="at least 2"):
        ExperimentConfig(scenario="elephant", agents=1)


def test_k_cannot_exceed_available_sources():
    with pytest.raises(ConfigInvalidError, match="exceeds"):
        ExperimentConfig(scenario="elephant", agents=3, k=3)


def test_error_lists_every_problem_at_once():
    with pytest.raises(ConfigInvalidError) as err:
        ExperimentConfig(scenario="nope", steps=0, gamma=-1.0)
    assert len(err.value.problems) == 3


class TestFromDict:
    def test_round_trip(self):
        cfg = ExperimentConfig(scenario="elephant", agents=3, steps=5, seed=9, k=2)
        assert config_from_dict(cfg.to_dict()) == cfg

    def test_unknown_keys_rejected_by_name(self):
        with pytest.raises(ConfigInvalidError, match="unknown key 'sped'"):
            config_from_dict({"scenario": "tmaze", "sped": 3})

    def test_missing_scenario_rejected(self):
        with pytest.raises(ConfigInvalidError, match="scenario"):
            config_from_dict({"steps": 3})

    def test_non_object_rejected(self):
        with pytest.raises(ConfigInvalidError, match="object"):
            config_from_dict(["tmaze"])

    def test_json_integers_accepted_for_float_fields(self):
        cfg = config_from_dict({"scenario": "tmaze", "gamma": 4, "noise": 0})
        assert cfg.gamma == 4.0
        assert cfg.noise == 0.0

    def test_boolean_is_not_a_number(self):
        with pytest.raises(ConfigInvalidError):
            config_from_dict({"scenario": "tmaze", "gamma": True})


class TestLoadConfig:
    def test_load_happy_path(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps({"scenario": "elephant", "agents": 3, "steps": 4}))
        cfg = load_config(path)
        assert cfg.scenario == "elephant"
        assert cfg.agents == 3
        assert cfg.steps == 4

    def test_load_rejects_broken_json(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text("{not json")
        with pytest.raises(ConfigInvalidError, match="JSON"):
            load_config(path)

    def test_load_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps({"scenario": "tmaze", "font": "comic sans"}))
        with pytest.raises(ConfigInvalidError, match="unknown key"):
            load_config(path)
