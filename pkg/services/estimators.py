"""
Estimators Service

1. Uniform ball / sphere sampling
2. δ-smoothing of a continuous objective (Monte-Carlo)
3. One-point gradient estimation from a single function value
4. Variance-reduced momentum update and its two ρ schedules
"""

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, NamedTuple, Optional, Tuple

import numpy as np
import structlog

from exceptions import PreconditionError

if TYPE_CHECKING:
    from services.geometry import ConstraintSet
    from services.objectives import ContinuousObjective

logger = structlog.get_logger("estimators")


# =============================================================================
# SAMPLING
# =============================================================================

def sphere_sample(rng: np.random.Generator, dim: int, size: Optional[int] = None) -> np.ndarray:
    """Uniform on S^{d-1} by normalising a standard Gaussian."""
    if dim < 1:
        raise PreconditionError("dimension must be at least 1")
    shape = (dim,) if size is None else (size, dim)
    z = rng.standard_normal(shape)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    # a zero Gaussian draw has probability zero; guard it anyway for d = 1 underflow
    norms[norms == 0.0] = 1.0
    return z / norms


def ball_sample(rng: np.random.Generator, dim: int, size: Optional[int] = None) -> np.ndarray:
    """Uniform on B^d: sphere direction times U^{1/d}."""
    direction = sphere_sample(rng, dim, size)
    radius = rng.random(() if size is None else (size, 1)) ** (1.0 / dim)
    return direction * radius


# =============================================================================
# SMOOTHING
# =============================================================================

@dataclass(frozen=True)
class SmoothingSpec:
    delta: float
    dim: int

    def __post_init__(self):
        if self.delta <= 0:
            raise PreconditionError("smoothing delta must be positive")
        if self.dim < 1:
            raise PreconditionError("dimension must be at least 1")


class SmoothedEstimate(NamedTuple):
    mean: float
    std_error: float


def smoothed_value_estimate(F: "ContinuousObjective", x: Any, spec: SmoothingSpec, n: int,
                            rng: np.random.Generator) -> SmoothedEstimate:
    """Monte-Carlo estimate of F_δ(x) = E_{v ~ B^d}[F(x + δ v)] with its standard error."""
    if n < 2:
        raise PreconditionError("need at least two samples")
    point = F.check_domain(x)
    if spec.dim != F.dim:
        raise PreconditionError("smoothing dimension does not match the objective")
    if np.any(point - spec.delta < -1e-12) or np.any(point + spec.delta > F.upper + 1e-12):
        raise PreconditionError("x + delta * B^d leaves the objective domain")

    probes = point + spec.delta * ball_sample(rng, spec.dim, n)
    vals = F.value_many(np.clip(probes, 0.0, F.upper))
    return SmoothedEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)))


def smoothed_value(F: "ContinuousObjective", x: Any, spec: SmoothingSpec, n: int,
                   rng: np.random.Generator) -> float:
    return smoothed_value_estimate(F, x, spec, n, rng).mean


# =============================================================================
# ONE-POINT GRADIENT
# =============================================================================

def sample_probe(x: np.ndarray, spec: SmoothingSpec, rng: np.random.Generator,
                 feasible_set: Optional["ConstraintSet"] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Draw u ~ S^{d-1}; return (u, x + δu). The caller must play exactly that probe."""
    u = sphere_sample(rng, spec.dim)
    probe = np.asarray(x, dtype=float) + spec.delta * u
    if feasible_set is not None and feasible_set.supports_membership and not feasible_set.contains(probe):
        raise PreconditionError("probe point leaves the feasible set")
    return u, probe


def one_point_from_value(value: float, u: np.ndarray, spec: SmoothingSpec) -> np.ndarray:
    """(d / δ) · value · u."""
    return (spec.dim / spec.delta) * float(value) * u


def one_point_grad(value_at: Callable[[np.ndarray], float], x: Any, spec: SmoothingSpec,
                   rng: np.random.Generator,
                   feasible_set: Optional["ConstraintSet"] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (gradient estimate, probed point)."""
    u, probe = sample_probe(np.asarray(x, dtype=float), spec, rng, feasible_set)
    return one_point_from_value(value_at(probe), u, spec), probe


# =============================================================================
# MOMENTUM
# =============================================================================

@dataclass(frozen=True)
class MomentumEstimate:
    d_vec: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "MomentumEstimate":
        return cls(np.zeros(dim), 0)


def momentum_update(prev: MomentumEstimate, g: Any, rho: float) -> MomentumEstimate:
    """d_new = (1 - ρ) d_prev + ρ g."""
    if not 0.0 < rho <= 1.0:
        raise PreconditionError(f"rho must be in (0, 1], got {rho}")
    grad = np.asarray(g, dtype=float)
    if grad.shape != prev.d_vec.shape:
        raise PreconditionError("gradient and momentum dimensions differ")
    return MomentumEstimate((1.0 - rho) * prev.d_vec + rho * grad, prev.k + 1)


def rho_schedule_mono(k: int, K: int) -> float:
    """2/(k+3)^{2/3} for k <= K/2 + 1, else 1.5/(K-k+2)^{2/3}."""
    if K % 2:
        raise PreconditionError(f"K must be even, got {K}")
    if not 1 <= k <= K:
        raise PreconditionError(f"k must be in [1, {K}], got {k}")
    if k <= K // 2 + 1:
        return 2.0 / (k + 3) ** (2.0 / 3.0)
    return 1.5 / (K - k + 2) ** (2.0 / 3.0)


def rho_schedule_bandit(k: int) -> float:
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    return min(1.0, 2.0 / (k + 2) ** (2.0 / 3.0))
