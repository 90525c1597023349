"""
Adversary Service

Objective sequences and the feedback environment the algorithms talk to:
1. Sequences - fixed, iid (lazy, chunked), shifting (piecewise constant)
2. AdversaryEnv - exactly one feedback query per round, counted
3. generate_adversary - build an env from its JSON spec

The full sequence (aggregate, per-round objectives) is a harness privilege;
algorithms only see the env's query methods.
"""

from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from config import get_settings
from exceptions import ConfigError, EnvironmentExhausted, FeedbackBudgetError, PreconditionError
from services.geometry import ConstraintSet
from services.objectives import (
    ContinuousObjective,
    ModularFunction,
    MultilinearExtension,
    ObjectiveConstants,
    QuadraticDR,
    SET_KINDS,
    SetObjective,
    SumSetFunction,
    TableSetFunction,
    check_dr_monotone,
    check_monotone_submodular,
    make_random_quadratics,
    make_random_set_objective,
)
from services.rng import RngStreams
from services.rounding import Matroid

logger = structlog.get_logger("adversary")

Objective = Union[ContinuousObjective, SetObjective]


# =============================================================================
# OBJECTIVE SEQUENCES
# =============================================================================

class ObjectiveSequence(ABC):
    """Round-indexed objectives (t is 0-based). `length` is None when unbounded."""

    family = "abstract"
    length: Optional[int] = None

    @abstractmethod
    def objective(self, t: int) -> Objective: ...

    @abstractmethod
    def aggregate(self, horizon: int) -> Objective:
        """Σ_{t < horizon} F_t in closed form."""

    @abstractmethod
    def constants(self, horizon: int) -> ObjectiveConstants: ...

    def fingerprints(self, count: int) -> List[bytes]:
        return [self.objective(t).fingerprint() for t in range(count)]


def _scaled(obj: Objective, factor: float) -> Objective:
    return obj.scaled(float(factor))


def _constants_of(obj: Objective) -> ObjectiveConstants:
    if isinstance(obj, SetObjective):
        return MultilinearExtension(obj).constants
    return obj.constants


class FixedSequence(ObjectiveSequence):
    family = "fixed"

    def __init__(self, obj: Objective, length: Optional[int] = None):
        self.obj = obj
        self.length = length

    def objective(self, t: int) -> Objective:
        return self.obj

    def aggregate(self, horizon: int) -> Objective:
        return _scaled(self.obj, horizon)

    def constants(self, horizon: int) -> ObjectiveConstants:
        return _constants_of(self.obj)


class ListSequence(ObjectiveSequence):
    """An explicit finite list; asking past its end exhausts the environment."""

    family = "list"

    def __init__(self, objs: Sequence[Objective]):
        if not objs:
            raise PreconditionError("objective list is empty")
        self.objs = list(objs)
        self.length = len(self.objs)

    def objective(self, t: int) -> Objective:
        return self.objs[t]

    def aggregate(self, horizon: int) -> Objective:
        total = self.objs[0]
        for obj in self.objs[1:horizon]:
            total = total + obj
        return total

    def constants(self, horizon: int) -> ObjectiveConstants:
        merged = _constants_of(self.objs[0])
        for obj in self.objs[1:horizon]:
            merged = merged.merge(_constants_of(obj))
        return merged


class ShiftingSequence(ObjectiveSequence):
    """Objective switches every `period` rounds, cycling through `pieces`."""

    family = "shifting"

    def __init__(self, pieces: Sequence[Objective], period: int):
        if not pieces or period < 1:
            raise PreconditionError("shifting adversary needs pieces and period >= 1")
        self.pieces = list(pieces)
        self.period = int(period)

    def objective(self, t: int) -> Objective:
        return self.pieces[(t // self.period) % len(self.pieces)]

    def piece_counts(self, horizon: int) -> np.ndarray:
        counts = np.zeros(len(self.pieces), dtype=int)
        pieces_idx = (np.arange(horizon) // self.period) % len(self.pieces)
        np.add.at(counts, pieces_idx, 1)
        return counts

    def aggregate(self, horizon: int) -> Objective:
        total: Optional[Objective] = None
        for piece, count in zip(self.pieces, self.piece_counts(horizon)):
            if count == 0:
                continue
            part = _scaled(piece, count)
            total = part if total is None else total + part
        return total

    def constants(self, horizon: int) -> ObjectiveConstants:
        merged = _constants_of(self.pieces[0])
        for piece in self.pieces[1:]:
            merged = merged.merge(_constants_of(piece))
        return merged


class IIDSequence(ObjectiveSequence):
    """
    Fresh random objective every round.

    Objectives are generated a chunk at a time from the ("adversary", chunk)
    stream, so any round can be regenerated without replaying earlier ones.
    """

    family = "iid"

    def __init__(self, chunk_factory: Callable[[np.random.Generator, int], List[Objective]],
                 streams: RngStreams, chunk_rounds: Optional[int] = None):
        self.chunk_factory = chunk_factory
        self.streams = streams
        self.chunk_rounds = int(chunk_rounds or get_settings().ENV_CHUNK_ROUNDS)
        self._chunk = lru_cache(maxsize=4)(self._build_chunk)

    def _build_chunk(self, index: int) -> List[Objective]:
        return self.chunk_factory(self.streams.generator("adversary", index), self.chunk_rounds)

    def objective(self, t: int) -> Objective:
        chunk, offset = divmod(t, self.chunk_rounds)
        return self._chunk(chunk)[offset]

    def _members(self, horizon: int):
        for chunk in range((horizon + self.chunk_rounds - 1) // self.chunk_rounds):
            members = self._build_chunk(chunk)
            yield members[:max(0, min(self.chunk_rounds, horizon - chunk * self.chunk_rounds))]

    def aggregate(self, horizon: int) -> Objective:
        if horizon < 1:
            raise PreconditionError("horizon must be at least 1")
        first = self.objective(0)
        if isinstance(first, QuadraticDR):
            h_sum = np.zeros(first.dim)
            H_sum = np.zeros((first.dim, first.dim))
            for members in self._members(horizon):
                h_sum += np.sum([q.h for q in members], axis=0)
                H_sum += np.sum([q.H for q in members], axis=0)
            return QuadraticDR(h_sum, H_sum, first.upper, first.sigma0)

        base_of = (lambda o: o.base) if isinstance(first, MultilinearExtension) else (lambda o: o)
        total: SetObjective
        if base_of(first).tabulable():
            table = np.zeros(1 << first.dim)
            for members in self._members(horizon):
                for obj in members:
                    table += base_of(obj).table()
            total = TableSetFunction(table)
        else:
            total = SumSetFunction([(1.0, base_of(obj)) for members in self._members(horizon) for obj in members])
        if isinstance(first, MultilinearExtension):
            return MultilinearExtension(total, first.mode, first.n_samples, first.mc_seed)
        return total

    def constants(self, horizon: int) -> ObjectiveConstants:
        """Max over the first chunk (reported, not enforced)."""
        members = self._chunk(0)[:max(1, min(horizon, self.chunk_rounds))]
        merged = _constants_of(members[0])
        for obj in members[1:]:
            merged = merged.merge(_constants_of(obj))
        return merged


# =============================================================================
# ENVIRONMENT
# =============================================================================

class AdversaryEnv:
    """
    Feedback interface of one run.

    mode "gradient": stochastic_gradient(t, x) + uncounted reward(t, x)
    mode "value":    value(t, x) (the played point's reward is the feedback)
    mode "set":      play_set(t, mask) with zero reward for dependent sets
    """

    MODES = ("gradient", "value", "set")

    def __init__(self, sequence: ObjectiveSequence, streams: RngStreams, mode: str,
                 matroid: Optional[Matroid] = None):
        if mode not in self.MODES:
            raise PreconditionError(f"Unknown feedback mode '{mode}'")
        if mode == "set" and matroid is None:
            raise PreconditionError("set feedback needs a matroid")
        self.sequence = sequence
        self.streams = streams
        self.mode = mode
        self.matroid = matroid
        self.queries = 0
        self._last_query_round = -1
        self._noise_chunk = -1
        self._noise_rng: Optional[np.random.Generator] = None
        self._chunk_rounds = get_settings().ENV_CHUNK_ROUNDS

    @property
    def dim(self) -> int:
        return self.sequence.objective(0).dim

    def _objective(self, t: int) -> Objective:
        if self.sequence.length is not None and t >= self.sequence.length:
            raise EnvironmentExhausted(f"no objective for round {t}")
        return self.sequence.objective(t)

    def _charge(self, t: int, mode: str) -> None:
        if mode != self.mode:
            raise PreconditionError(f"'{mode}' feedback is not available in '{self.mode}' mode")
        if t == self._last_query_round:
            raise FeedbackBudgetError(f"second feedback query in round {t}")
        self._last_query_round = t
        self.queries += 1

    def _noise(self, t: int) -> np.random.Generator:
        chunk = t // self._chunk_rounds
        if chunk != self._noise_chunk:
            self._noise_chunk = chunk
            self._noise_rng = self.streams.generator("noise", chunk)
        return self._noise_rng

    # --- counted queries ---

    def stochastic_gradient(self, t: int, x: Any) -> np.ndarray:
        obj = self._objective(t)
        self._charge(t, "gradient")
        return obj.stoch_grad(x, self._noise(t))

    def value(self, t: int, x: Any) -> float:
        obj = self._objective(t)
        self._charge(t, "value")
        return float(obj.value(x))

    def play_set(self, t: int, mask: np.ndarray) -> Tuple[float, float, bool]:
        """Returns (observed f_t(Y), reward, independent)."""
        obj = self._objective(t)
        self._charge(t, "set")
        observed = float(obj.value_indicators(np.asarray(mask, dtype=bool)[None, :])[0])
        independent = self.matroid.is_independent(np.flatnonzero(mask))
        return observed, (observed if independent else 0.0), independent

    # --- uncounted ---

    def reward(self, t: int, x: Any) -> float:
        """F_t at the point played in a gradient-feedback round."""
        return float(self._objective(t).value(x))


# =============================================================================
# GENERATION FROM SPEC
# =============================================================================

CONTINUOUS_KINDS = ("quadratic", "linear")
FEEDBACK_MODES = {"mono_fw": "gradient", "bandit_fw": "value", "responsive_fw": "set"}


def _objective_chunk_factory(spec: Mapping[str, Any], upper: np.ndarray,
                             continuous: bool) -> Callable[[np.random.Generator, int], List[Objective]]:
    kind = spec.get("kind")
    d = int(spec.get("d", upper.shape[0]))
    if d != upper.shape[0]:
        raise ConfigError(f"objective dimension {d} does not match constraint dimension {upper.shape[0]}")
    settings = get_settings()

    if kind == "quadratic":
        sigma0 = float(spec.get("sigma0") if spec.get("sigma0") is not None else settings.DEFAULT_SIGMA0)
        coupling = float(spec.get("coupling", 1.0))
        return lambda rng, n: make_random_quadratics(n, d, rng, upper, sigma0, coupling)

    if kind == "linear":
        sigma0 = float(spec.get("sigma0") or 0.0)
        weights = spec.get("weights")

        def linear_chunk(rng: np.random.Generator, n: int) -> List[Objective]:
            if weights is not None:
                return [QuadraticDR.linear(weights, upper, sigma0)] * n
            return [QuadraticDR.linear(rng.uniform(0.0, 1.0, size=d), upper, sigma0) for _ in range(n)]
        return linear_chunk

    if kind in SET_KINDS:
        params = {k: v for k, v in spec.items() if v is not None}
        params["d"] = d
        mode = spec.get("extension") or "auto"
        mc_samples = spec.get("mc_samples")
        weights = spec.get("weights")

        def set_chunk(rng: np.random.Generator, n: int) -> List[Objective]:
            out: List[Objective] = []
            for _ in range(n):
                if kind == "modular" and weights is not None:
                    base: SetObjective = ModularFunction(weights)
                else:
                    base = make_random_set_objective(kind, params, rng)
                out.append(MultilinearExtension(base, mode, mc_samples) if continuous else base)
            return out
        return set_chunk

    raise ConfigError(f"Unknown objective kind '{kind}'")


def _validate_properties(sequence: ObjectiveSequence, streams: RngStreams) -> None:
    obj = sequence.objective(0)
    rng = streams.generator("test", 0)
    if isinstance(obj, SetObjective):
        ok = check_monotone_submodular(obj, rng)
    elif isinstance(obj, MultilinearExtension):
        ok = check_monotone_submodular(obj.base, rng)
    else:
        ok = check_dr_monotone(obj, rng, pairs=1000).ok
    if not ok:
        raise PreconditionError("generated objective violates monotone DR-submodularity")


def generate_adversary(spec: Mapping[str, Any], streams: RngStreams, constraint: ConstraintSet,
                       algorithm: str, matroid: Optional[Matroid] = None,
                       validate: bool = False) -> AdversaryEnv:
    """
    spec = {"family": "iid"|"fixed"|"shifting", "objective": {...}, "period": B, "pieces": 2}

    Objective seeds: when the objective spec carries "seed", the sequence is
    drawn from that seed instead of the run seed, so different algorithm seeds
    face the same adversary.
    """
    family = spec.get("family")
    obj_spec = dict(spec.get("objective") or {})
    kind = obj_spec.get("kind")
    mode = FEEDBACK_MODES.get(algorithm)
    if mode is None:
        raise ConfigError(f"Unknown algorithm '{algorithm}'")

    continuous = mode != "set"
    if not continuous and kind in CONTINUOUS_KINDS:
        raise ConfigError("responsive_fw needs a set-function objective")

    upper = constraint.coordinate_caps()
    if kind not in CONTINUOUS_KINDS:
        if np.any(upper > 1.0 + 1e-12):
            raise ConfigError("set objectives need a constraint inside the unit cube")
        upper = np.ones(constraint.dim)

    factory = _objective_chunk_factory(obj_spec, upper, continuous)
    obj_streams = RngStreams(int(obj_spec["seed"])) if obj_spec.get("seed") is not None else streams

    if family == "fixed":
        sequence: ObjectiveSequence = FixedSequence(factory(obj_streams.generator("adversary", 0), 1)[0])
    elif family == "iid":
        sequence = IIDSequence(factory, obj_streams)
    elif family == "shifting":
        pieces = int(spec.get("pieces") or 2)
        period = spec.get("period")
        if period is None or int(period) < 1:
            raise ConfigError("shifting adversary needs period >= 1")
        sequence = ShiftingSequence(factory(obj_streams.generator("adversary", 0), pieces), int(period))
    else:
        raise ConfigError(f"Unknown adversary family '{family}'")

    if validate:
        _validate_properties(sequence, obj_streams)

    logger.info("Adversary generated", family=family, kind=kind, mode=mode, dim=constraint.dim)
    return AdversaryEnv(sequence, streams, mode, matroid)


def adversary_families() -> List[str]:
    return [FixedSequence.family, IIDSequence.family, ShiftingSequence.family]


def objective_kinds() -> List[str]:
    return list(CONTINUOUS_KINDS + SET_KINDS)
