"""
Regret Trace

Columnar per-round record of a run plus the (1 - 1/e)-regret computation.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, NamedTuple, Optional

import numpy as np

from exceptions import PreconditionError

APPROX_RATIO = 1.0 - 1.0 / math.e

PHASES = ("exploit", "explore")


class RoundRecord(NamedTuple):
    t: int
    block: int
    inner: int          # inner FW index k' (0 when the round exploits in Algs 2-3)
    phase: str
    played: Any         # point (continuous) or frozenset (responsive)
    reward: float
    feasible: bool


@dataclass
class RegretTrace:
    """
    Arrays have one row per executed round. `inner` is 1-based for rounds
    that carried an FW index, 0 otherwise.
    """

    algorithm: str
    dim: int
    t_requested: int
    t_effective: int
    plan: Dict[str, Any]
    seed: int
    blocks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    inner: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    explore: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))
    feasible: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    played: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    truncated: bool = False
    queries: int = 0
    wall_clock: float = 0.0
    benchmark: Optional[float] = None
    benchmark_mode: Optional[str] = None

    @classmethod
    def allocate(cls, algorithm: str, dim: int, t_requested: int, t_effective: int,
                 plan: Dict[str, Any], seed: int) -> "RegretTrace":
        return cls(
            algorithm=algorithm, dim=dim, t_requested=t_requested, t_effective=t_effective,
            plan=plan, seed=seed,
            blocks=np.zeros(t_effective, dtype=int),
            inner=np.zeros(t_effective, dtype=int),
            explore=np.zeros(t_effective, dtype=bool),
            rewards=np.zeros(t_effective),
            feasible=np.zeros(t_effective, dtype=bool),
            played=np.zeros((t_effective, dim)),
        )

    def record(self, t: int, block: int, inner: int, explore: bool, played: np.ndarray,
               reward: float, feasible: bool) -> None:
        self.blocks[t] = block
        self.inner[t] = inner
        self.explore[t] = explore
        self.played[t] = played
        self.rewards[t] = reward
        self.feasible[t] = feasible

    def truncate(self, rounds: int) -> None:
        """Keep the first `rounds` rows after the environment ran out."""
        self.truncated = True
        self.blocks = self.blocks[:rounds]
        self.inner = self.inner[:rounds]
        self.explore = self.explore[:rounds]
        self.rewards = self.rewards[:rounds]
        self.feasible = self.feasible[:rounds]
        self.played = self.played[:rounds]

    def __len__(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def cumulative_reward(self) -> np.ndarray:
        return np.cumsum(self.rewards)

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())

    def phases(self) -> List[str]:
        return [PHASES[int(e)] for e in self.explore]

    def records(self) -> Iterator[RoundRecord]:
        for t in range(len(self)):
            played: Any = self.played[t]
            if self.algorithm == "responsive_fw":
                played = frozenset(np.flatnonzero(played > 0.5).tolist())
            yield RoundRecord(
                t=t + 1, block=int(self.blocks[t]), inner=int(self.inner[t]),
                phase=PHASES[int(self.explore[t])], played=played,
                reward=float(self.rewards[t]), feasible=bool(self.feasible[t]),
            )

    def final_regret(self) -> float:
        if self.benchmark is None:
            raise PreconditionError("trace has no benchmark attached")
        return compute_regret(self, self.benchmark).final


class RegretSeries(NamedTuple):
    per_round: np.ndarray   # R_s for s = 1..T
    final: float            # exact (1 - 1/e) B - Σ reward


def compute_regret(trace: RegretTrace, benchmark: float) -> RegretSeries:
    """
    R_s = (1 - 1/e) B s / T - Σ_{t<=s} reward_t.

    B is the benchmark over the executed rounds, so T is the trace length.
    """
    horizon = len(trace)
    if horizon == 0:
        return RegretSeries(np.zeros(0), 0.0)
    s = np.arange(1, horizon + 1)
    per_round = APPROX_RATIO * benchmark * s / horizon - trace.cumulative_reward
    return RegretSeries(per_round, float(APPROX_RATIO * benchmark - trace.total_reward))
