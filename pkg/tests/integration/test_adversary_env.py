import numpy as np
import pytest

from exceptions import ConfigError, FeedbackBudgetError, PreconditionError
from services.adversary import AdversaryEnv, FixedSequence, ShiftingSequence, generate_adversary
from services.benchmark import compute_benchmark
from services.geometry import Box, UniformMatroidPolytope
from services.objectives import QuadraticDR
from services.rng import RngStreams
from services.rounding import UniformMatroid

COVERAGE = {"family": "iid", "objective": {"kind": "coverage", "d": 8}}


def coverage_env(seed: int, spec=COVERAGE) -> AdversaryEnv:
    return generate_adversary(spec, RngStreams(seed), UniformMatroidPolytope(2, 8), "responsive_fw",
                              matroid=UniformMatroid(2, 8))


def test_one_query_per_round():
    env = AdversaryEnv(FixedSequence(QuadraticDR.linear([1, 1], [1, 1])), RngStreams(0), "value")
    env.value(0, [0.5, 0.5])
    with pytest.raises(FeedbackBudgetError):
        env.value(0, [0.5, 0.5])
    env.value(1, [0.5, 0.5])
    assert env.queries == 2


def test_feedback_mode_is_enforced():
    env = AdversaryEnv(FixedSequence(QuadraticDR.linear([1, 1], [1, 1])), RngStreams(0), "value")
    with pytest.raises(PreconditionError):
        env.stochastic_gradient(0, [0.5, 0.5])


def test_reward_is_not_a_query():
    env = AdversaryEnv(FixedSequence(QuadraticDR.linear([1, 2], [1, 1])), RngStreams(0), "gradient")
    assert env.reward(0, [1.0, 1.0]) == pytest.approx(3.0)
    env.stochastic_gradient(0, [1.0, 1.0])
    assert env.queries == 1


def test_dependent_sets_earn_nothing():
    env = coverage_env(0)
    observed, reward, independent = env.play_set(0, np.array([1, 1, 1, 0, 0, 0, 0, 0], dtype=bool))
    assert not independent
    assert reward == 0.0
    assert observed >= 0.0
    observed, reward, independent = env.play_set(1, np.array([1, 1, 0, 0, 0, 0, 0, 0], dtype=bool))
    assert independent
    assert reward == observed


def test_iid_sequence_is_reproducible():
    a = coverage_env(7).sequence.fingerprints(50)
    b = coverage_env(7).sequence.fingerprints(50)
    c = coverage_env(8).sequence.fingerprints(50)
    assert a == b
    assert a != c
    assert len(set(a)) > 1


def test_objective_seed_pins_the_adversary():
    spec = {"family": "iid", "objective": {"kind": "coverage", "d": 8, "seed": 11}}
    assert coverage_env(1, spec).sequence.fingerprints(20) == coverage_env(2, spec).sequence.fingerprints(20)


def test_iid_rounds_regenerate_independently(monkeypatch):
    monkeypatch.setenv("ENV_CHUNK_ROUNDS", "16")
    env = coverage_env(3)
    late = env.sequence.objective(40).fingerprint()
    fresh = coverage_env(3)
    fresh.sequence.objective(0)
    assert fresh.sequence.objective(40).fingerprint() == late


def test_iid_aggregate_matches_the_sum_of_rounds(monkeypatch):
    monkeypatch.setenv("ENV_CHUNK_ROUNDS", "8")
    env = generate_adversary({"family": "iid", "objective": {"kind": "quadratic", "d": 3}}, RngStreams(0),
                             Box([1, 1, 1]), "mono_fw")
    seq = env.sequence
    x = np.array([0.2, 0.5, 0.9])
    assert seq.aggregate(20).value(x) == pytest.approx(sum(seq.objective(t).value(x) for t in range(20)))


def test_set_objectives_need_the_unit_cube():
    with pytest.raises(ConfigError):
        generate_adversary({"family": "fixed", "objective": {"kind": "coverage", "d": 2}}, RngStreams(0),
                           Box([2.0, 2.0]), "bandit_fw")


def test_responsive_rejects_continuous_objectives():
    with pytest.raises(ConfigError):
        generate_adversary({"family": "fixed", "objective": {"kind": "quadratic", "d": 8}}, RngStreams(0),
                           UniformMatroidPolytope(2, 8), "responsive_fw", matroid=UniformMatroid(2, 8))


def test_validation_accepts_generated_objectives():
    env = generate_adversary({"family": "fixed", "objective": {"kind": "quadratic", "d": 3}}, RngStreams(0),
                             Box([1, 1, 1]), "mono_fw", validate=True)
    assert env.mode == "gradient"


def test_shifting_benchmark_uses_one_fixed_comparator():
    pieces = [QuadraticDR.linear([1.0, 0.0], [1, 1]), QuadraticDR.linear([0.0, 1.0], [1, 1])]
    seq = ShiftingSequence(pieces, period=50)
    rank_one = UniformMatroidPolytope(1, 2)
    # each half alone is worth 50; a single vertex cannot collect both
    assert compute_benchmark(seq, rank_one, 50).value == pytest.approx(50.0)
    assert compute_benchmark(seq, rank_one, 100).value == pytest.approx(50.0)
    assert compute_benchmark(seq, Box([1, 1]), 100).value == pytest.approx(100.0)
    assert seq.piece_counts(130).tolist() == [80, 50]


def test_iid_set_aggregate_beyond_the_table_limit(monkeypatch):
    monkeypatch.setenv("ENV_CHUNK_ROUNDS", "4")
    env = generate_adversary({"family": "iid", "objective": {"kind": "coverage", "d": 22}}, RngStreams(0),
                             UniformMatroidPolytope(2, 22), "responsive_fw", matroid=UniformMatroid(2, 22))
    seq = env.sequence
    total = seq.aggregate(10)
    for subset in ([0, 1], [3, 21], list(range(22))):
        assert total.value(subset) == pytest.approx(sum(seq.objective(t).value(subset) for t in range(10)))


def test_validation_leaves_the_sequence_unchanged():
    spec = {"family": "iid", "objective": {"kind": "coverage", "d": 8, "seed": 5}}
    plain = generate_adversary(spec, RngStreams(1), UniformMatroidPolytope(2, 8), "responsive_fw",
                               matroid=UniformMatroid(2, 8))
    checked = generate_adversary(spec, RngStreams(1), UniformMatroidPolytope(2, 8), "responsive_fw",
                                 matroid=UniformMatroid(2, 8), validate=True)
    assert plain.sequence.fingerprints(5) == checked.sequence.fingerprints(5)
