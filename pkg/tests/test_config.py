import json

import pytest

from digitpad.config import GlobalConfig, from_dict, load_config
from digitpad.errors import ConfigError


def test_defaults_validate():
    cfg = load_config(None)
    assert cfg.thresholds.fz == 0.5
    assert cfg.capture_window == 300
    assert cfg.task_registry.get(2).name == "orange"


def test_load_from_file(tmp_path):
    payload = {
        "thresholds": {"fz": 0.7, "tau2": 0.3},
        "confidence_threshold": 0.9,
        "task_registry": {"5": {"name": "kiwi", "motion_id": "deliver_kiwi"}},
        "port": 9100,
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(payload))
    cfg = load_config(p)
    assert cfg.thresholds.fz == 0.7
    assert cfg.confidence_threshold == 0.9
    assert cfg.task_registry.get(5).name == "kiwi"
    assert cfg.task_registry.get(1) is None
    assert cfg.port == 9100


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/cfg.json")


def test_invalid_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{oops")
    with pytest.raises(ConfigError):
        load_config(p)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        from_dict({"not_a_key": 1})
    with pytest.raises(ConfigError, match="thresholds"):
        from_dict({"thresholds": {"fz": 0.5, "bogus": 1}})


def test_out_of_range_values_rejected():
    with pytest.raises(ConfigError):
        from_dict({"confidence_threshold": 1.5})
    with pytest.raises(ConfigError):
        from_dict({"port": 0})
    with pytest.raises(ConfigError):
        from_dict({"thresholds": {"fz": -1.0}})
    with pytest.raises(ConfigError):
        from_dict({"task_registry": {"x": {"name": "y"}}})


def test_empty_object_is_all_defaults():
    cfg = from_dict({})
    assert cfg == GlobalConfig().validate()
