from pathlib import Path

import orjson
import pytest

from exceptions import ConfigError
from schemas import BoxSpec, ExperimentConfig, load_config, parse_config
from tests.conftest import BANDIT_SMALL, MONO_SMOKE, RESPONSIVE_SMALL

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


def test_base_configs_parse(make_config):
    for base in (MONO_SMOKE, BANDIT_SMALL, RESPONSIVE_SMALL):
        config = make_config(base)
        assert isinstance(config, ExperimentConfig)
    assert make_config(MONO_SMOKE).oracle.oracle == "ftpl"


def test_parse_accepts_json_bytes():
    config = parse_config(orjson.dumps(MONO_SMOKE))
    assert isinstance(config.constraint, BoxSpec)
    assert config.horizon == 1024


def test_bad_json_is_a_config_error():
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config(b"{horizon: 10")


def test_unknown_keys_are_rejected(make_config):
    with pytest.raises(ConfigError):
        make_config(MONO_SMOKE, learning_rate=0.1)


def test_dimension_cross_check(make_config):
    with pytest.raises(ConfigError, match="does not match"):
        make_config(MONO_SMOKE, constraint={"family": "box", "dim": 3})


def test_responsive_needs_a_set_objective_on_a_matroid(make_config):
    with pytest.raises(ConfigError, match="set-function"):
        make_config(RESPONSIVE_SMALL, adversary={"family": "iid", "objective": {"kind": "quadratic", "d": 6}})
    with pytest.raises(ConfigError, match="uniform or partition matroid"):
        parse_config({**RESPONSIVE_SMALL, "constraint": {"family": "box", "dim": 6}})


def test_mono_override_checks(make_config):
    with pytest.raises(ConfigError, match="even"):
        make_config(MONO_SMOKE, overrides={"K": 3})
    with pytest.raises(ConfigError):
        make_config(MONO_SMOKE, overrides={"delta": 0.1})
    with pytest.raises(ConfigError, match="gamma"):
        make_config(MONO_SMOKE, overrides={"gamma": 0.5})


def test_box_needs_exactly_one_shape(make_config):
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config({**MONO_SMOKE, "constraint": {"family": "box"}})
    with pytest.raises(ConfigError):
        make_config(MONO_SMOKE, constraint={"family": "box", "dim": 4, "upper": [1, 1, 1, 1]})


def test_shifting_adversary_needs_a_period(make_config):
    with pytest.raises(ConfigError, match="period"):
        make_config(MONO_SMOKE, adversary={"family": "shifting", "objective": {"kind": "linear", "d": 4}})


def test_ogd_on_a_graphic_matroid_is_rejected():
    with pytest.raises(ConfigError, match="LMO-only"):
        parse_config({
            **MONO_SMOKE,
            "constraint": {"family": "graphic_matroid", "nodes": 3, "edges": [[0, 1], [1, 2], [0, 2]]},
            "adversary": {"family": "fixed", "objective": {"kind": "linear", "d": 3}},
            "oracle": {"oracle": "ogd"},
        })


def test_load_config_reports_missing_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.json")


def test_shipped_configs_parse():
    for name in ("mono_smoke", "mono_simplex", "bandit_box", "responsive_coverage", "shifting_linear"):
        assert load_config(CONFIG_DIR / f"{name}.json").horizon >= 2
