"""
Algorithms Service - Blocked Frank-Wolfe for online monotone maximization

1. offline_fw - Frank-Wolfe from the set's lower bound, the benchmark baseline
2. mono_fw_run - one stochastic gradient per round
3. bandit_fw_run - one function value per round, on the δ-interior
4. responsive_fw_run - one set-function value per round, rounded plays
5. Parameter schedules and the closed-form expected-regret bounds they come with
"""

import math
import time
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import structlog

from config import get_settings
from exceptions import EnvironmentExhausted, PreconditionError, SubmaxError
from services.adversary import AdversaryEnv
from services.estimators import (
    MomentumEstimate,
    SmoothingSpec,
    momentum_update,
    one_point_from_value,
    rho_schedule_bandit,
    rho_schedule_mono,
    sample_probe,
)
from services.geometry import ConstraintSet, InteriorSet, SetBounds, shrink_interior
from services.objectives import ObjectiveConstants
from services.oracles import OracleBank
from services.rng import RngStreams
from services.rounding import Matroid, pipage_round, random_round_mask
from services.trace import APPROX_RATIO, RegretTrace

logger = structlog.get_logger("algorithms")


@dataclass(frozen=True)
class BlockPlan:
    algorithm: str
    t_requested: int
    t_effective: int
    Q: int
    K: int
    L: int
    eta: float
    delta: Optional[float] = None
    alpha: Optional[float] = None
    gamma: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _floor_power(T: int, exponent: float) -> int:
    """floor(T^exponent), robust to T^p landing a hair below an integer."""
    value = T ** exponent
    nearest = round(value)
    if abs(value - nearest) <= 1e-9 * max(1.0, value):
        return int(nearest)
    return int(math.floor(value))


# =============================================================================
# OFFLINE BASELINE
# =============================================================================

def offline_fw(grad: Callable[[np.ndarray], np.ndarray], feasible_set: ConstraintSet, iters: int) -> np.ndarray:
    """x <- x + (v - u)/Kb with v = lmo(grad(x)), started at the lower bound u (the origin for K)."""
    if iters < 1:
        raise PreconditionError("offline Frank-Wolfe needs at least one iteration")
    lower = np.asarray(feasible_set.lower_bound, dtype=float)
    x = lower.copy()
    step = 1.0 / iters
    for _ in range(iters):
        x = x + step * (feasible_set.lmo(grad(x)) - lower)
    return x


# =============================================================================
# PARAMETER SCHEDULES
# =============================================================================

def derive_params_mono(T: int, K: Optional[int] = None) -> BlockPlan:
    """K = floor(T^{3/5}) rounded down to even, Q = floor(T/K), eta = 1/K."""
    if T < 2:
        raise PreconditionError("horizon must be at least 2")
    if K is None:
        K = _floor_power(T, 0.6)
        K -= K % 2
    if K < 2 or K % 2 or K > T:
        raise PreconditionError(f"horizon {T} too small for an even K >= 2 (K={K})")
    Q = T // K
    return BlockPlan(algorithm="mono_fw", t_requested=T, t_effective=Q * K, Q=Q, K=K, L=K, eta=1.0 / K)


def derive_params_bandit(T: int, feasible_set: ConstraintSet, gamma: float = 1.0, c2: Optional[float] = None,
                         delta: Optional[float] = None, K: Optional[int] = None, L: Optional[int] = None,
                         algorithm: str = "bandit_fw") -> Tuple[BlockPlan, InteriorSet]:
    """
    gamma = 1 (down-closed):  δ = r/(√d+2) T^{-1/9},  L = T^{7/9},  K = T^{2/3}
    general m = min(1, gamma): δ = c2 T^{-1/(3+6m)}, L = T^{(3+4m)/(3+6m)}, K = T^{(1+m)/(1+2m)}

    c2 defaults to r/(√d+2), which makes the two schedules coincide at gamma = 1.
    """
    if T < 1:
        raise PreconditionError("horizon must be positive")
    if gamma <= 0:
        raise PreconditionError("gamma must be positive")
    m = min(1.0, gamma)
    r = feasible_set.inscribed_orthant_radius()
    scale = c2 if c2 is not None else r / (math.sqrt(feasible_set.dim) + 2.0)
    if scale <= 0:
        raise PreconditionError("smoothing constant must be positive")

    L = L if L is not None else _floor_power(T, (3.0 + 4.0 * m) / (3.0 + 6.0 * m))
    K = K if K is not None else min(_floor_power(T, (1.0 + m) / (1.0 + 2.0 * m)), L)
    if L < 1 or K < 1 or K > L:
        raise PreconditionError(f"need 1 <= K <= L, got K={K}, L={L}")
    Q = T // L
    if Q < 1:
        raise PreconditionError(f"horizon {T} shorter than one block of length {L}")
    t_effective = Q * L
    if delta is None:
        delta = scale * t_effective ** (-1.0 / (3.0 + 6.0 * m))

    interior = shrink_interior(feasible_set, delta)
    plan = BlockPlan(
        algorithm=algorithm, t_requested=T, t_effective=t_effective, Q=Q, K=K, L=L,
        eta=1.0 / K, delta=float(delta), alpha=interior.alpha, gamma=float(gamma),
    )
    return plan, interior


# =============================================================================
# REGRET BOUNDS (reported next to the empirical regret, never asserted)
# =============================================================================

def regret_bound_mono(T: int, c: ObjectiveConstants, bounds: SetBounds, C: Optional[float] = None) -> float:
    C = get_settings().ORACLE_REGRET_CONSTANT if C is None else C
    D, R = bounds.diameter, bounds.radius
    L1, L2, M0, var = c.lipschitz, c.smoothness, c.grad_norm_bound, c.grad_variance_bound
    G = (L2 * R + 2.0 * L1) ** 2
    N = max(
        5.0 ** (2.0 / 3.0) * (L1 + M0) ** 2,
        4.0 * (L1 ** 2 + var) + 32.0 * G,
        2.25 * (L1 ** 2 + var) + 7.0 * G / 3.0,
    )
    return (N + C + D ** 2) * T ** 0.8 + L2 * D ** 2 / 2.0 * T ** 0.4


def regret_bound_bandit(T: int, c: ObjectiveConstants, bounds: SetBounds, r: float, dim: int,
                        C: Optional[float] = None) -> float:
    C = get_settings().ORACLE_REGRET_CONSTANT if C is None else C
    D, R = bounds.diameter, bounds.radius
    L1, L2, M1 = c.lipschitz, c.smoothness, c.value_bound
    sd = math.sqrt(dim)
    N = (
        APPROX_RATIO * r / (sd + 2.0) * (sd * (R / r + 1.0) + R / r) * L1
        + (2.0 - 1.0 / math.e) * r / (sd + 2.0) * L1
        + 2.0 * M1
        + 3.0 * 4.0 ** (1.0 / 6.0) * (sd + 2.0) * dim ** 2 * M1 ** 2 / r
        + 3.0 * (sd + 2.0) * D ** 2 / (4.0 * r)
        + C
    )
    middle = 3.0 * r * (2.0 * L1 ** 2 + (3.0 * L2 * R + 2.0 * L1) ** 2) / (4.0 ** (1.0 / 3.0) * (sd + 2.0))
    return N * T ** (8.0 / 9.0) + middle * T ** (2.0 / 3.0) + L2 * D ** 2 / 2.0 * T ** (1.0 / 3.0)


def regret_bound_general(T: int, c: ObjectiveConstants, bounds: SetBounds, gamma: float, c1: float, c2: float,
                         dim: int, C: Optional[float] = None) -> float:
    """Bound for an interior with discrepancy c1 δ^gamma and δ = c2 T^{-1/(3+6m)}."""
    C = get_settings().ORACLE_REGRET_CONSTANT if C is None else C
    m = min(1.0, gamma)
    D, R = bounds.diameter, bounds.radius
    L1, L2, M1 = c.lipschitz, c.smoothness, c.value_bound
    lead = (
        APPROX_RATIO * c1 * c2 ** gamma * L1
        + (2.0 - 1.0 / math.e) * c2 * L1
        + 2.0 * M1
        + 3.0 * 4.0 ** (1.0 / 6.0) * dim ** 2 * M1 ** 2 / c2
        + 3.0 * D ** 2 / (4.0 * c2)
        + C
    )
    middle = 3.0 * c2 * (2.0 * L1 ** 2 + (3.0 * L2 * R + 2.0 * L1) ** 2) / 4.0 ** (1.0 / 3.0)
    return (
        lead * T ** ((3.0 + 5.0 * m) / (3.0 + 6.0 * m))
        + middle * T ** ((1.0 + 5.0 * m) / (3.0 + 6.0 * m))
        + L2 * D ** 2 / 2.0 * T ** (m / (1.0 + 2.0 * m))
    )


def regret_bound_responsive(T: int, M1: float, r: float, dim: int, C: Optional[float] = None) -> float:
    C = get_settings().ORACLE_REGRET_CONSTANT if C is None else C
    sd = math.sqrt(dim)
    L1 = 2.0 * M1 * sd
    L2 = 4.0 * M1 * math.sqrt(dim * (dim - 1))
    N = (
        APPROX_RATIO * r / (sd + 2.0) * (dim / r + sd * (1.0 + 1.0 / r)) * L1
        + (2.0 - 1.0 / math.e) * r / (sd + 2.0) * L1
        + 3.0 * M1
        + 3.0 * 4.0 ** (2.0 / 3.0) * (sd + 2.0) * dim ** 2 * M1 ** 2 / r
        + 3.0 * (sd + 2.0) * dim / (4.0 * r)
        + C
    )
    middle = 3.0 * r * (2.0 * L1 ** 2 + (3.0 * sd * L2 + 2.0 * L1) ** 2) / (4.0 ** (1.0 / 3.0) * (sd + 2.0))
    return N * T ** (8.0 / 9.0) + middle * T ** (2.0 / 3.0) + L2 * dim / 2.0 * T ** (1.0 / 3.0)


# =============================================================================
# ONLINE RUNS
# =============================================================================

def _fw_iterates(bank: OracleBank, start: np.ndarray, lower: np.ndarray, K: int, eta: float) -> np.ndarray:
    """Rows x^{(1)}..x^{(K+1)} with x^{(k+1)} = x^{(k)} + eta (v^{(k)} - lower)."""
    iterates = np.empty((K + 1, start.shape[0]))
    iterates[0] = start
    for k in range(K):
        iterates[k + 1] = iterates[k] + eta * (bank.predict(k) - lower)
    return iterates


def _audit_iterates(feasible_set: ConstraintSet, iterates: np.ndarray, block: int) -> None:
    if feasible_set.supports_membership and not np.all(feasible_set.contains_many(iterates)):
        raise SubmaxError(f"Frank-Wolfe iterate left the feasible set in block {block}")


def _feed_momentum(bank: OracleBank, grads: np.ndarray, rho: Callable[[int], float]) -> None:
    """d^{(k)} = (1 - ρ_k) d^{(k-1)} + ρ_k g_k, fed to oracle k in index order."""
    estimate = MomentumEstimate.zeros(grads.shape[1])
    for k in range(grads.shape[0]):
        estimate = momentum_update(estimate, grads[k], rho(k + 1))
        bank.feed(k, estimate.d_vec)


def _finish(trace: RegretTrace, env: AdversaryEnv, started: float, executed: int) -> RegretTrace:
    if executed < trace.t_effective:
        trace.truncate(executed)
    trace.queries = env.queries
    trace.wall_clock = time.perf_counter() - started
    logger.info(
        "Run finished",
        algorithm=trace.algorithm, rounds=len(trace), truncated=trace.truncated,
        queries=trace.queries, seconds=round(trace.wall_clock, 3),
    )
    return trace


def mono_fw_run(env: AdversaryEnv, feasible_set: ConstraintSet, bank: OracleBank, plan: BlockPlan,
                streams: RngStreams, audit: bool = False) -> RegretTrace:
    """
    Per block: K oracle predictions build x^{(1)}..x^{(K+1)}; x_q = x^{(K+1)} is
    played for all K rounds; a uniform permutation assigns each round one inner
    index k' and the round's single stochastic gradient is taken at x^{(k')}.
    """
    if len(bank) != plan.K:
        raise PreconditionError(f"bank has {len(bank)} oracles, plan needs K={plan.K}")

    started = time.perf_counter()
    K, d = plan.K, feasible_set.dim
    trace = RegretTrace.allocate("mono_fw", d, plan.t_requested, plan.t_effective, plan.to_dict(), streams.root_seed)
    origin = np.zeros(d)
    t = 0
    try:
        for q in range(plan.Q):
            rng = streams.generator("block", q)
            iterates = _fw_iterates(bank, origin, origin, K, plan.eta)
            if audit:
                _audit_iterates(feasible_set, iterates, q)
            x_q = iterates[K]
            # LMO-only sets: x_q is an average of oracle outputs, feasible by convexity
            feasible = feasible_set.contains(x_q) if feasible_set.supports_membership else True

            grads = np.empty((K, d))
            for slot_inner in rng.permutation(K):
                grads[slot_inner] = env.stochastic_gradient(t, iterates[slot_inner])
                trace.record(t, q + 1, slot_inner + 1, False, x_q, env.reward(t, x_q), feasible)
                t += 1

            _feed_momentum(bank, grads, lambda k: rho_schedule_mono(k, K))
            logger.debug("Block finished", block=q, reward=float(trace.rewards[t - K:t].sum()))
    except EnvironmentExhausted as e:
        logger.warning("Environment exhausted", round=t, error=str(e))

    return _finish(trace, env, started, t)


PlayResult = Tuple[float, float, np.ndarray, bool]  # observed, reward, played, feasible


def _interior_blocks(name: str, env: AdversaryEnv, interior: InteriorSet, bank: OracleBank, plan: BlockPlan,
                     streams: RngStreams, explore: Callable[[int, np.ndarray, np.random.Generator], PlayResult],
                     exploit: Callable[[int, np.ndarray, np.random.Generator], PlayResult],
                     audit: bool) -> RegretTrace:
    """
    Shared skeleton of the value-feedback algorithms.

    A permutation of the L rounds of a block puts inner index k at slot
    order[k] for k < K (exploration); the other L - K rounds exploit x_q.
    """
    if plan.delta is None or abs(plan.delta - interior.delta) > 1e-15:
        raise PreconditionError("plan delta does not match the interior")
    if len(bank) != plan.K:
        raise PreconditionError(f"bank has {len(bank)} oracles, plan needs K={plan.K}")
    for oracle in bank.oracles:
        if oracle.feasible_set is not interior:
            raise PreconditionError("oracles must live on the interior set")

    started = time.perf_counter()
    K, L, d = plan.K, plan.L, interior.dim
    spec = SmoothingSpec(interior.delta, d)
    lower = interior.lower_bound
    trace = RegretTrace.allocate(name, d, plan.t_requested, plan.t_effective, plan.to_dict(), streams.root_seed)
    t = 0
    try:
        for q in range(plan.Q):
            rng = streams.generator("block", q)
            rounding_rng = streams.generator("rounding", q)
            iterates = _fw_iterates(bank, lower, lower, K, plan.eta)
            if audit:
                _audit_iterates(interior, iterates, q)
            x_q = iterates[K]

            order = rng.permutation(L)
            slot_inner = np.full(L, -1)
            slot_inner[order[:K]] = np.arange(K)

            grads = np.empty((K, d))
            for s in range(L):
                k = int(slot_inner[s])
                if k >= 0:
                    u, probe = sample_probe(iterates[k], spec, rng)
                    observed, reward, played, feasible = explore(t, probe, rounding_rng)
                    grads[k] = one_point_from_value(observed, u, spec)
                else:
                    observed, reward, played, feasible = exploit(t, x_q, rounding_rng)
                trace.record(t, q + 1, k + 1, k >= 0, played, reward, feasible)
                t += 1

            _feed_momentum(bank, grads, rho_schedule_bandit)
            logger.debug("Block finished", block=q, reward=float(trace.rewards[t - L:t].sum()))
    except EnvironmentExhausted as e:
        logger.warning("Environment exhausted", round=t, error=str(e))

    return _finish(trace, env, started, t)


def bandit_fw_run(env: AdversaryEnv, interior: InteriorSet, bank: OracleBank, plan: BlockPlan,
                  streams: RngStreams, audit: bool = False) -> RegretTrace:
    """Exploration plays x^{(k')} + δu and turns the observed value into (d/δ) F u."""
    base = interior.base

    def in_base(point: np.ndarray) -> bool:
        # x + δu stays in K for every x in the δ-interior; LMO-only sets rely on that
        return base.contains(point) if base.supports_membership else True

    def explore(t: int, probe: np.ndarray, _rng: np.random.Generator) -> PlayResult:
        value = env.value(t, probe)
        return value, value, probe, in_base(probe)

    def exploit(t: int, x_q: np.ndarray, _rng: np.random.Generator) -> PlayResult:
        value = env.value(t, x_q)
        return value, value, x_q, in_base(x_q)

    return _interior_blocks("bandit_fw", env, interior, bank, plan, streams, explore, exploit, audit)


def responsive_fw_run(env: AdversaryEnv, interior: InteriorSet, bank: OracleBank, plan: BlockPlan,
                      matroid: Matroid, streams: RngStreams, audit: bool = False) -> RegretTrace:
    """
    Exploration plays RandomRound(x^{(k')} + δu): f(Y) is always observed and
    drives the estimate, the reward is zero when Y is dependent. Exploitation
    plays a fresh pipage rounding of x_q, always independent.
    """
    if matroid.dim != interior.dim:
        raise PreconditionError("matroid and interior dimensions differ")

    def explore(t: int, probe: np.ndarray, rounding_rng: np.random.Generator) -> PlayResult:
        mask = random_round_mask(probe, rounding_rng)
        observed, reward, independent = env.play_set(t, mask)
        return observed, reward, mask.astype(float), independent

    def exploit(t: int, x_q: np.ndarray, rounding_rng: np.random.Generator) -> PlayResult:
        chosen = pipage_round(x_q, matroid, rounding_rng)
        mask = np.zeros(interior.dim, dtype=bool)
        mask[list(chosen)] = True
        observed, reward, independent = env.play_set(t, mask)
        return observed, reward, mask.astype(float), independent

    return _interior_blocks("responsive_fw", env, interior, bank, plan, streams, explore, exploit, audit)
