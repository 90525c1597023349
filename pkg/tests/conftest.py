import copy

import numpy as np
import pytest
import structlog

from config import get_settings
from schemas import ExperimentConfig, parse_config
from services.rng import RngStreams

MONO_SMOKE = {
    "algorithm": "mono_fw",
    "horizon": 1024,
    "seed": 1,
    "constraint": {"family": "box", "dim": 4, "value": 1.0},
    "adversary": {"family": "iid", "objective": {"kind": "quadratic", "d": 4, "sigma0": 0.5}},
    "oracle": {"oracle": "ftpl"},
    "output": {"stem": "smoke"},
}

BANDIT_SMALL = {
    "algorithm": "bandit_fw",
    "horizon": 2000,
    "seed": 2,
    "constraint": {"family": "box", "dim": 2, "value": 1.0},
    "adversary": {"family": "iid", "objective": {"kind": "quadratic", "d": 2, "sigma0": 0.0}},
    "output": {"stem": "bandit"},
}

RESPONSIVE_SMALL = {
    "algorithm": "responsive_fw",
    "horizon": 2000,
    "seed": 3,
    "constraint": {"family": "uniform_matroid", "rank": 2, "dim": 6},
    "adversary": {"family": "iid", "objective": {"kind": "coverage", "d": 6, "extension": "exact"}},
    "output": {"stem": "responsive"},
}


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are cached process-wide; tests that patch the environment need a clean cache."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def reset_logging():
    """main() binds structlog to the captured stderr of the test that called it."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def streams():
    return RngStreams(0)


@pytest.fixture
def rng():
    return RngStreams(0).generator("test", 0)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    target = tmp_path / "out"
    monkeypatch.setenv("SUBMAX_OUT", str(target))
    get_settings.cache_clear()
    return target


@pytest.fixture
def make_config():
    """Build an ExperimentConfig from one of the base dicts plus nested overrides."""

    def _make(base: dict, **updates) -> ExperimentConfig:
        raw = copy.deepcopy(base)
        for key, value in updates.items():
            if isinstance(value, dict) and isinstance(raw.get(key), dict):
                raw[key].update(value)
            else:
                raw[key] = value
        return parse_config(raw)

    return _make


def random_simplex_points(rng: np.random.Generator, n: int, dim: int, budget: float) -> np.ndarray:
    """Points of {x >= 0, sum x <= budget}, scaled Dirichlet draws."""
    w = rng.dirichlet(np.ones(dim + 1), size=n)[:, :dim]
    return budget * w
