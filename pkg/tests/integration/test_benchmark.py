import math

import numpy as np
import pytest

from config import get_settings
from services.adversary import FixedSequence, generate_adversary
from services.benchmark import benchmark_objective, compute_benchmark
from services.geometry import Box, GraphicMatroidPolytope, ScaledSimplex, UniformMatroidPolytope
from services.objectives import ModularFunction, MultilinearExtension, QuadraticDR, make_random_set_objective
from services.rng import RngStreams
from services.rounding import UniformMatroid

CURVED = QuadraticDR([2.0, 1.0], [[-1.0, 0.0], [0.0, -1.0]], [1, 1])


def test_linear_aggregate_uses_the_lmo():
    seq = FixedSequence(QuadraticDR.linear([1.0, 3.0, 2.0, 0.5], np.ones(4)))
    result = compute_benchmark(seq, UniformMatroidPolytope(2, 4), 100)
    assert result.mode == "lmo_exact"
    assert result.exact
    assert result.value == pytest.approx(500.0)
    assert result.argmax == [0.0, 1.0, 1.0, 0.0]


def test_box_uses_the_upper_corner():
    result = benchmark_objective(CURVED, Box([1, 1]), 1)
    assert result.mode == "box_corner"
    assert result.value == pytest.approx(CURVED.value([1, 1]))


def test_modular_set_function_by_enumeration():
    seq = FixedSequence(ModularFunction([1.0, 2.0, 3.0, 4.0]))
    result = compute_benchmark(seq, UniformMatroidPolytope(2, 4), 10, UniformMatroid(2, 4))
    assert result.mode == "exhaustive"
    assert result.value == pytest.approx(70.0)
    assert result.argmax == [0.0, 0.0, 1.0, 1.0]


def test_extension_on_a_matroid_is_maximised_at_an_independent_set(rng):
    f = make_random_set_objective("coverage", {"d": 6}, rng)
    result = benchmark_objective(MultilinearExtension(f, mode="exact"), UniformMatroidPolytope(2, 6), 1)
    assert result.mode == "exhaustive"
    best = max(f.value({i, j}) for i in range(6) for j in range(i + 1, 6))
    assert result.value == pytest.approx(best)


def test_grid_search_on_a_small_simplex():
    result = benchmark_objective(CURVED, ScaledSimplex(1.0, 2), 1)
    assert result.mode == "grid"
    assert result.value == pytest.approx(1.5, abs=1e-6)
    assert ScaledSimplex(1.0, 2).contains(result.argmax)


def test_frank_wolfe_lower_bound_brackets_the_grid(monkeypatch):
    grid = benchmark_objective(CURVED, ScaledSimplex(1.0, 2), 1).value
    monkeypatch.setenv("BENCHMARK_GRID_MAX_DIM", "1")
    get_settings.cache_clear()
    lower = benchmark_objective(CURVED, ScaledSimplex(1.0, 2), 1)
    assert lower.mode == "fw_lower_bound"
    assert not lower.exact
    assert (1 - 1 / math.e) * grid <= lower.value <= grid + 1e-9


def test_lmo_only_sets_fall_back_to_frank_wolfe(monkeypatch):
    monkeypatch.setenv("BENCHMARK_FW_ITERS", "500")
    get_settings.cache_clear()
    F = QuadraticDR([1.0, 1.0, 1.0], -0.1 * np.ones((3, 3)), np.ones(3))
    triangle = GraphicMatroidPolytope(3, [(0, 1), (1, 2), (0, 2)])
    result = benchmark_objective(F, triangle, 1)
    assert result.mode == "fw_lower_bound"
    # any forest has at most two edges
    assert 0 < result.value <= F.value([1.0, 1.0, 0.0]) + 1e-9


@pytest.fixture
def cheap_monte_carlo(monkeypatch):
    monkeypatch.setenv("MC_SAMPLES", "128")
    monkeypatch.setenv("BENCHMARK_FW_ITERS", "10")
    get_settings.cache_clear()


def test_set_benchmark_beyond_the_table_limit_uses_frank_wolfe(cheap_monte_carlo):
    constraint, matroid = UniformMatroidPolytope(2, 22), UniformMatroid(2, 22)
    env = generate_adversary({"family": "fixed", "objective": {"kind": "coverage", "d": 22}}, RngStreams(0),
                             constraint, "responsive_fw", matroid)
    result = compute_benchmark(env.sequence, constraint, 50, matroid)
    assert result.mode == "fw_lower_bound"
    assert constraint.contains(result.argmax)

    f = env.sequence.objective(0)
    best_pair = max(f.value({i, j}) for i in range(22) for j in range(i + 1, 22))
    assert 0 < result.value <= 1.25 * 50 * best_pair


def test_extension_benchmark_beyond_the_table_limit_on_a_box(cheap_monte_carlo):
    env = generate_adversary({"family": "fixed", "objective": {"kind": "coverage", "d": 22}}, RngStreams(0),
                             Box([1.0] * 22), "bandit_fw")
    result = compute_benchmark(env.sequence, Box([1.0] * 22), 50)
    assert result.mode == "box_corner"
    assert result.value == pytest.approx(50 * env.sequence.objective(0).base.value(range(22)))
