import itertools
from collections import Counter

import numpy as np
import pytest

from exceptions import ConfigError, PreconditionError
from services.geometry import Box, PartitionMatroidPolytope, UniformMatroidPolytope
from services.objectives import MultilinearExtension, make_random_set_objective
from services.rounding import (
    PartitionMatroid,
    UniformMatroid,
    impossibility_demo,
    is_independent,
    matroid_from_constraint,
    pipage_round,
    random_round,
)


# --- matroids ---

def test_uniform_independence():
    m = UniformMatroid(2, 4)
    assert is_independent(m, {0, 3})
    assert not is_independent(m, {0, 1, 2})
    assert m.rank({0, 1, 2}) == 2


def test_partition_independence():
    m = PartitionMatroid([[0, 1], [2, 3, 4]], [1, 2])
    assert is_independent(m, {0, 2, 3})
    assert not is_independent(m, {0, 1})
    assert m.rank({0, 1, 2, 3, 4}) == 3
    rows = np.array([[1, 0, 1, 1, 0], [1, 1, 0, 0, 0], [0, 0, 1, 1, 1]], dtype=bool)
    assert m.independent_rows(rows).tolist() == [True, False, False]


def test_elements_outside_the_ground_set():
    with pytest.raises(PreconditionError):
        UniformMatroid(1, 3).is_independent({5})


def test_matroid_from_constraint():
    assert isinstance(matroid_from_constraint(UniformMatroidPolytope(2, 5)), UniformMatroid)
    m = matroid_from_constraint(PartitionMatroidPolytope([[0], [1, 2]], [1, 1]))
    assert isinstance(m, PartitionMatroid)
    with pytest.raises(ConfigError):
        matroid_from_constraint(Box([1, 1]))


# --- rounding ---

def test_random_round_frequencies(rng):
    n = 20_000
    counts = Counter(random_round([0.5, 0.5, 0.5], rng) for _ in range(n))
    for subset in [frozenset(), frozenset({0}), frozenset({0, 1, 2})]:
        assert abs(counts[subset] / n - 1 / 8) < 0.02


def test_random_round_needs_the_unit_cube(rng):
    with pytest.raises(PreconditionError):
        random_round([1.2, 0.0], rng)


def test_pipage_on_rank_one(rng):
    m = UniformMatroid(1, 2)
    counts = Counter(pipage_round([0.5, 0.5], m, rng) for _ in range(4000))
    assert set(counts) == {frozenset({0}), frozenset({1})}
    assert abs(counts[frozenset({0})] / 4000 - 0.5) < 0.05


def test_pipage_keeps_integral_points(rng):
    m = PartitionMatroid([[0, 1], [2, 3]], [1, 2])
    assert pipage_round([0.0, 1.0, 1.0, 1.0], m, rng) == frozenset({1, 2, 3})


def test_pipage_preserves_marginals(rng):
    m = PartitionMatroid([[0, 1, 2], [3, 4]], [2, 1])
    x = np.array([0.7, 0.6, 0.4, 0.3, 0.5])
    n = 20_000
    hits = np.zeros(5)
    for _ in range(n):
        Y = pipage_round(x, m, rng)
        assert m.is_independent(Y)
        hits[list(Y)] += 1
    assert np.all(np.abs(hits / n - x) < 0.02)


def test_pipage_is_lossless_in_expectation(rng):
    f = make_random_set_objective("coverage", {"d": 5}, rng)
    m = UniformMatroid(2, 5)
    x = np.array([0.4, 0.4, 0.4, 0.4, 0.4])
    n = 20_000
    vals = np.array([f.value(pipage_round(x, m, rng)) for _ in range(n)])
    F = MultilinearExtension(f, mode="exact").value(x)
    assert vals.mean() >= F - 4 * vals.std(ddof=1) / np.sqrt(n)


def test_pipage_rejects_points_outside_the_polytope(rng):
    with pytest.raises(PreconditionError):
        pipage_round([0.8, 0.8], UniformMatroid(1, 2), rng)


# --- impossibility ---

def test_impossibility_demo():
    report = impossibility_demo(seed=0, n_points=100)
    assert report.max_residual_family_one < 1e-12
    assert report.max_residual_family_two < 1e-12
    assert report.max_unbiasedness_residual < 1e-12
    assert report.schemes_differ
    assert report.min_gap_interior > 0
    assert report.example_family_one == pytest.approx([0.25, 0.5])
    assert report.example_family_two == pytest.approx([0.5, 0.25])
    assert report.to_dict()["points_checked"] == 100


@pytest.mark.parametrize("d", [1, 4, 7, 10])
@pytest.mark.parametrize("kind", ["coverage", "facility_location", "modular"])
def test_random_round_distribution_reproduces_the_extension(kind, d, rng):
    f = make_random_set_objective(kind, {"d": d}, rng)
    x = rng.uniform(0.0, 1.0, size=d)
    expected = 0.0
    total = 0.0
    for bits in itertools.product((0, 1), repeat=d):
        s = np.array(bits, dtype=bool)
        p = float(np.prod(np.where(s, x, 1.0 - x)))
        total += p
        expected += p * f.value(np.flatnonzero(s).tolist())
    assert total == pytest.approx(1.0, abs=1e-12)
    assert expected == pytest.approx(MultilinearExtension(f, mode="exact").value(x), abs=1e-12)


def test_random_round_matches_the_product_distribution(rng):
    x = np.array([0.2, 0.5, 0.9])
    n = 40_000
    counts = Counter(random_round(x, rng) for _ in range(n))
    for bits in itertools.product((0, 1), repeat=3):
        s = np.array(bits, dtype=bool)
        p = float(np.prod(np.where(s, x, 1.0 - x)))
        freq = counts[frozenset(np.flatnonzero(s).tolist())] / n
        assert abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / n) + 1e-3
