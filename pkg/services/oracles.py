"""
Oracles Service

Online linear-maximization oracles with O(√t) regret:
1. FTPLOracle - Follow-the-Perturbed-Leader, needs only the LMO
2. OGDOracle - projected Online Gradient Descent
3. OracleBank - K independent oracles, one RNG stream each
4. Empirical regret measurement against the best fixed point in hindsight
"""

import math
from abc import ABC, abstractmethod
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
import structlog

from exceptions import ConfigError, PreconditionError, UnsupportedOperationError
from services.geometry import ConstraintSet, as_point
from services.rng import RngStreams

logger = structlog.get_logger("oracles")


class LinearOracle(ABC):
    """predict() -> point of the feasible set; feed(d) reveals the reward vector <., d>."""

    name = "abstract"

    def __init__(self, feasible_set: ConstraintSet, eta0: Optional[float] = None):
        self.feasible_set = feasible_set
        self.dim = feasible_set.dim
        self.eta0 = float(eta0) if eta0 is not None else feasible_set.bounds().diameter
        if self.eta0 <= 0:
            raise PreconditionError("eta0 must be positive")
        self.t = 0
        # running max of observed ||d||; scales steps to the unknown reward magnitude
        self.g_max = 0.0

    @abstractmethod
    def predict(self) -> np.ndarray: ...

    def feed(self, d: Any) -> None:
        vec = as_point(d, self.dim, "d")
        self.t += 1
        self.g_max = max(self.g_max, float(np.linalg.norm(vec)))
        self._update(vec)

    @abstractmethod
    def _update(self, d: np.ndarray) -> None: ...


class FTPLOracle(LinearOracle):
    """
    v_t = lmo(Σ_{s<t} d_s + η_t p_t), p_t ~ U[0,1]^d, η_t = η0 · G̃ · √t.

    The perturbation is redrawn once per feed so repeated predict() calls
    within a round agree.
    """

    name = "ftpl"

    def __init__(self, feasible_set: ConstraintSet, rng: np.random.Generator, eta0: Optional[float] = None):
        super().__init__(feasible_set, eta0)
        self.rng = rng
        self.cumulative = np.zeros(self.dim)
        self._noise = rng.random(self.dim)

    @property
    def eta(self) -> float:
        scale = self.g_max if self.g_max > 0 else 1.0
        return self.eta0 * scale * math.sqrt(max(self.t, 1))

    def predict(self) -> np.ndarray:
        return self.feasible_set.lmo(self.cumulative + self.eta * self._noise)

    def _update(self, d: np.ndarray) -> None:
        self.cumulative += d
        self._noise = self.rng.random(self.dim)


class OGDOracle(LinearOracle):
    """x_{t+1} = proj(x_t + η_t d_t), η_t = η0 / (G̃ √t), started at the set's lower bound."""

    name = "ogd"

    def __init__(self, feasible_set: ConstraintSet, rng: Optional[np.random.Generator] = None,
                 eta0: Optional[float] = None):
        if not feasible_set.supports_membership:
            raise UnsupportedOperationError(f"OGD needs a projection; '{feasible_set.family}' is LMO-only")
        super().__init__(feasible_set, eta0)
        self.iterate = np.array(feasible_set.lower_bound, dtype=float)

    def predict(self) -> np.ndarray:
        return self.iterate.copy()

    def _update(self, d: np.ndarray) -> None:
        if self.g_max == 0.0:
            return
        step = self.eta0 / (self.g_max * math.sqrt(self.t))
        self.iterate = self.feasible_set.project(self.iterate + step * d)


ORACLE_TYPES = {FTPLOracle.name: FTPLOracle, OGDOracle.name: OGDOracle}


def make_oracle(kind: str, feasible_set: ConstraintSet, rng: np.random.Generator,
                eta0: Optional[float] = None) -> LinearOracle:
    try:
        cls = ORACLE_TYPES[kind]
    except KeyError:
        raise ConfigError(f"Unknown oracle '{kind}'") from None
    return cls(feasible_set, rng, eta0)


class OracleBank:
    """K independent oracles on the same feasible set; oracle k only sees its own d^{(k)}."""

    def __init__(self, oracles: Sequence[LinearOracle]):
        if not oracles:
            raise PreconditionError("an oracle bank needs at least one oracle")
        self.oracles: List[LinearOracle] = list(oracles)

    @classmethod
    def build(cls, kind: str, feasible_set: ConstraintSet, K: int, streams: RngStreams,
              eta0: Optional[float] = None) -> "OracleBank":
        bank = cls([make_oracle(kind, feasible_set, streams.generator("oracle", k), eta0) for k in range(K)])
        logger.debug("Oracle bank built", oracle=kind, K=K, family=feasible_set.family)
        return bank

    def __len__(self) -> int:
        return len(self.oracles)

    def predict(self, k: int) -> np.ndarray:
        return self.oracles[k].predict()

    def feed(self, k: int, d: Any) -> None:
        self.oracles[k].feed(d)


# =============================================================================
# EMPIRICAL REGRET
# =============================================================================

def oracle_regret_curve(oracle_factory: Callable[[], LinearOracle], rewards: Any,
                        checkpoints: Sequence[int]) -> List[float]:
    """Regret against lmo(Σ d_s) at each checkpoint, in a single pass."""
    d_seq = np.atleast_2d(np.asarray(rewards, dtype=float))
    marks = sorted(set(int(c) for c in checkpoints))
    if not marks or marks[0] < 1 or marks[-1] > d_seq.shape[0]:
        raise PreconditionError("checkpoints must lie in [1, len(rewards)]")

    oracle = oracle_factory()
    earned = 0.0
    total = np.zeros(oracle.dim)
    out: List[float] = []
    wanted = iter(marks)
    next_mark = next(wanted)
    for s in range(marks[-1]):
        v = oracle.predict()
        earned += float(v @ d_seq[s])
        total += d_seq[s]
        oracle.feed(d_seq[s])
        if s + 1 == next_mark:
            best = float(oracle.feasible_set.lmo(total) @ total)
            out.append(best - earned)
            next_mark = next(wanted, None)
    return out


def empirical_oracle_regret(oracle_factory: Callable[[], LinearOracle], rewards: Any, horizon: int) -> float:
    """max_v Σ<v, d_s> - Σ<v_s, d_s> over the first `horizon` reward vectors."""
    if horizon < 1:
        raise PreconditionError("horizon must be at least 1")
    return oracle_regret_curve(oracle_factory, rewards, [horizon])[0]
