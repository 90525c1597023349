import math

import numpy as np
import pytest

from exceptions import PreconditionError
from services.estimators import (
    MomentumEstimate,
    SmoothingSpec,
    ball_sample,
    momentum_update,
    one_point_from_value,
    one_point_grad,
    rho_schedule_bandit,
    rho_schedule_mono,
    smoothed_value,
    smoothed_value_estimate,
    sphere_sample,
)
from services.geometry import Box
from services.objectives import QuadraticDR, make_random_quadratic


# --- sampling ---

def test_sphere_in_one_dimension_is_plus_minus_one(rng):
    u = sphere_sample(rng, 1, 1000)
    assert set(np.unique(u).tolist()) <= {-1.0, 1.0}


def test_sphere_samples_have_unit_norm(rng):
    u = sphere_sample(rng, 7, 2000)
    assert np.linalg.norm(u, axis=1) == pytest.approx(np.ones(2000))


def test_sphere_sample_is_centred(rng):
    u = sphere_sample(rng, 3, 40_000)
    assert np.all(np.abs(u.mean(axis=0)) < 0.02)


def test_ball_samples_stay_in_the_ball(rng):
    v = ball_sample(rng, 4, 5000)
    norms = np.linalg.norm(v, axis=1)
    assert np.all(norms <= 1.0)
    # P(|v| <= 1/2) = 2^-4
    assert abs(np.mean(norms <= 0.5) - 1 / 16) < 0.02


def test_sampling_needs_a_dimension(rng):
    with pytest.raises(PreconditionError):
        sphere_sample(rng, 0)


# --- smoothing ---

def test_smoothing_a_linear_function_is_exact_in_expectation(rng):
    F = QuadraticDR.linear([1.0, 2.0, 0.5], [1, 1, 1])
    x = np.array([0.5, 0.5, 0.5])
    est = smoothed_value_estimate(F, x, SmoothingSpec(0.2, 3), 20_000, rng)
    assert abs(est.mean - F.value(x)) <= 4 * est.std_error


def test_tiny_delta_recovers_the_value(rng):
    F = QuadraticDR([1.0, 1.0], [[-0.5, -0.5], [-0.5, -0.5]], [1, 1])
    x = np.array([0.4, 0.7])
    assert smoothed_value(F, x, SmoothingSpec(1e-8, 2), 100, rng) == pytest.approx(F.value(x), abs=1e-6)


def test_smoothing_error_is_within_the_lipschitz_band(rng):
    # |F_delta - F| <= L1 * delta on every instance, up to Monte-Carlo error
    for _ in range(100):
        d = int(rng.integers(2, 6))
        F = make_random_quadratic(d, rng, np.ones(d))
        delta = float(rng.uniform(0.01, 0.3))
        x = rng.uniform(delta, 1.0 - delta, size=d)
        est = smoothed_value_estimate(F, x, SmoothingSpec(delta, d), 2000, rng)
        assert abs(est.mean - F.value(x)) <= F.constants.lipschitz * delta + 4 * est.std_error


def test_smoothing_must_stay_in_the_domain(rng):
    F = QuadraticDR.linear([1.0, 1.0], [1, 1])
    with pytest.raises(PreconditionError):
        smoothed_value(F, [0.05, 0.5], SmoothingSpec(0.1, 2), 10, rng)


def test_smoothing_spec_validation():
    with pytest.raises(PreconditionError):
        SmoothingSpec(0.0, 2)
    with pytest.raises(PreconditionError):
        SmoothingSpec(0.1, 0)


# --- one-point gradient ---

def test_one_point_estimate_formula():
    g = one_point_from_value(2.0, np.array([0.6, 0.8]), SmoothingSpec(0.5, 2))
    assert g.tolist() == pytest.approx([4.8, 6.4])


def test_one_point_of_a_constant_has_mean_zero(rng):
    spec = SmoothingSpec(0.1, 3)
    n = 20_000
    draws = np.array([one_point_grad(lambda p: 1.0, np.full(3, 0.5), spec, rng)[0] for _ in range(n)])
    band = 4 * draws.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0)) <= band)


def test_one_point_of_a_linear_function_recovers_its_gradient(rng):
    c = np.array([1.0, -0.5, 2.0])
    spec = SmoothingSpec(0.1, 3)
    n = 20_000
    draws = np.array([one_point_grad(lambda p: float(c @ p), np.full(3, 0.5), spec, rng)[0] for _ in range(n)])
    band = 4 * draws.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(draws.mean(axis=0) - c) <= band)


def test_one_point_mean_matches_the_smoothed_gradient(rng):
    F = QuadraticDR([1.0, 0.8, 1.2], [[-0.6, -0.3, -0.2], [-0.3, -0.8, -0.1], [-0.2, -0.1, -0.4]], [1, 1, 1])
    x = np.array([0.5, 0.4, 0.6])
    spec = SmoothingSpec(0.25, 3)
    n = 40_000
    draws = np.array([one_point_grad(F.value, x, spec, rng)[0] for _ in range(n)])

    # central differences of F_delta with common random numbers on both sides
    h = 1e-3
    fd = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        plus = smoothed_value(F, x + e, spec, 50_000, np.random.default_rng(11))
        minus = smoothed_value(F, x - e, spec, 50_000, np.random.default_rng(11))
        fd[i] = (plus - minus) / (2 * h)

    band = 4 * draws.std(axis=0, ddof=1) / math.sqrt(n) + 0.02
    assert np.all(np.abs(draws.mean(axis=0) - fd) <= band)


def test_probe_is_the_point_that_was_valued(rng):
    seen = []
    x = np.array([0.5, 0.5])

    def value_at(p):
        seen.append(p.copy())
        return 1.0

    _, probe = one_point_grad(value_at, x, SmoothingSpec(0.1, 2), rng, feasible_set=Box([1, 1]))
    assert len(seen) == 1
    assert np.array_equal(seen[0], probe)
    assert np.linalg.norm(probe - x) == pytest.approx(0.1)


def test_probe_outside_the_set_is_rejected(rng):
    with pytest.raises(PreconditionError, match="leaves the feasible set"):
        one_point_grad(lambda p: 0.0, np.full(2, 2.0), SmoothingSpec(0.1, 2), rng, feasible_set=Box([1, 1]))


# --- momentum ---

def test_momentum_update_examples():
    d = momentum_update(MomentumEstimate.zeros(2), [1.0, 1.0], 0.5)
    assert d.d_vec.tolist() == [0.5, 0.5]
    assert d.k == 1
    d = momentum_update(d, [3.0, -1.0], 1.0)
    assert d.d_vec.tolist() == [3.0, -1.0]
    assert d.k == 2


def test_momentum_rejects_bad_rho_and_shape():
    with pytest.raises(PreconditionError):
        momentum_update(MomentumEstimate.zeros(2), [1.0, 1.0], 0.0)
    with pytest.raises(PreconditionError):
        momentum_update(MomentumEstimate.zeros(2), [1.0, 1.0], 1.5)
    with pytest.raises(PreconditionError):
        momentum_update(MomentumEstimate.zeros(2), [1.0], 0.5)


def test_rho_schedule_mono_values():
    assert rho_schedule_mono(1, 4) == pytest.approx(0.7937, abs=1e-4)
    assert rho_schedule_mono(3, 4) == pytest.approx(2 / 6 ** (2 / 3))
    assert rho_schedule_mono(4, 4) == pytest.approx(1.5 / 2 ** (2 / 3))
    assert rho_schedule_mono(8, 10) == pytest.approx(1.5 / 4 ** (2 / 3))


def test_rho_schedule_mono_stays_in_unit_interval():
    K = 200
    assert all(0.0 < rho_schedule_mono(k, K) <= 1.0 for k in range(1, K + 1))


def test_rho_schedule_mono_validation():
    with pytest.raises(PreconditionError, match="even"):
        rho_schedule_mono(1, 5)
    with pytest.raises(PreconditionError):
        rho_schedule_mono(0, 4)


def test_rho_schedule_bandit_values():
    assert rho_schedule_bandit(1) == pytest.approx(0.9615, abs=1e-4)
    assert rho_schedule_bandit(6) == pytest.approx(0.5)
    with pytest.raises(PreconditionError):
        rho_schedule_bandit(0)
