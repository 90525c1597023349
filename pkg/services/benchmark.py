"""
Benchmark Service

max over the feasible set of Σ_t F_t, computed offline from the closed-form
aggregate. Oracles are tried from exact to approximate:
1. lmo_exact - linear aggregate, the LMO vertex is optimal
2. box_corner - monotone aggregate on a box, the upper corner is optimal
3. exhaustive - set functions (or their extensions on a matroid polytope), d small
4. grid - continuous, d small: feasible grid search refined by SLSQP
5. fw_lower_bound - offline Frank-Wolfe, a (1 - 1/e) lower bound; regret is then conservative
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np
import structlog
from scipy.optimize import minimize

from config import get_settings
from exceptions import ConfigError
from services.adversary import ObjectiveSequence
from services.algorithms import offline_fw
from services.geometry import Box, ConstraintSet
from services.objectives import ContinuousObjective, MultilinearExtension, QuadraticDR, SetObjective
from services.rounding import Matroid, matroid_from_constraint

logger = structlog.get_logger("benchmark")

EXACT_MODES = ("lmo_exact", "box_corner", "exhaustive", "grid")
_GRID_AXIS_MAX = 1001
_REFINE_TOP = 5


@dataclass
class BenchmarkResult:
    value: float
    mode: str
    horizon: int
    argmax: List[float]

    @property
    def exact(self) -> bool:
        return self.mode in EXACT_MODES

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["exact"] = self.exact
        return data


def _all_indicators(dim: int) -> np.ndarray:
    masks = np.arange(1 << dim, dtype=np.int64)
    return ((masks[:, None] >> np.arange(dim)) & 1).astype(bool)


def _exhaustive(f: SetObjective, matroid: Matroid, horizon: int) -> BenchmarkResult:
    X = _all_indicators(f.dim)
    independent = matroid.independent_rows(X)
    values = np.where(independent, f.table(), -np.inf)
    best = int(np.argmax(values))
    return BenchmarkResult(float(values[best]), "exhaustive", horizon, X[best].astype(float).tolist())


def _grid(F: ContinuousObjective, constraint: ConstraintSet, horizon: int) -> BenchmarkResult:
    settings = get_settings()
    d = constraint.dim
    caps = constraint.coordinate_caps()
    per_axis = int(min(_GRID_AXIS_MAX, max(2, np.floor(settings.BENCHMARK_GRID_POINTS ** (1.0 / d)))))
    axes = [np.linspace(0.0, c, per_axis) for c in caps]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    grid = grid[constraint.contains_many(grid)]
    values = F.value_many(grid)

    best_idx = int(np.argmax(values))
    best_val, best_x = float(values[best_idx]), grid[best_idx]

    A, b = constraint.linear_constraints()
    cons = []
    if A.shape[0]:
        cons.append({"type": "ineq", "fun": lambda x: b - A @ x, "jac": lambda x: -A})
    bounds = list(zip(np.zeros(d), caps))

    for idx in np.argsort(-values, kind="stable")[:_REFINE_TOP]:
        res = minimize(
            lambda x: -F.value(np.clip(x, 0.0, caps)),
            grid[idx],
            jac=lambda x: -F.grad(np.clip(x, 0.0, caps)),
            method="SLSQP",
            bounds=bounds,
            constraints=cons,
        )
        candidate = np.clip(res.x, 0.0, caps)
        if constraint.contains(candidate):
            val = F.value(candidate)
            if val > best_val:
                best_val, best_x = float(val), candidate

    return BenchmarkResult(best_val, "grid", horizon, best_x.tolist())


def _fw_lower_bound(F: ContinuousObjective, constraint: ConstraintSet, horizon: int) -> BenchmarkResult:
    x = offline_fw(F.grad, constraint, get_settings().BENCHMARK_FW_ITERS)
    logger.warning("Benchmark is a Frank-Wolfe lower bound; regret figures are conservative", horizon=horizon)
    return BenchmarkResult(float(F.value(x)), "fw_lower_bound", horizon, x.tolist())


def benchmark_objective(aggregate: Union[ContinuousObjective, SetObjective], constraint: ConstraintSet,
                        horizon: int, matroid: Optional[Matroid] = None) -> BenchmarkResult:
    """Maximise an already aggregated objective over `constraint` (or the independent sets of `matroid`)."""
    settings = get_settings()

    if isinstance(aggregate, SetObjective):
        matroid = matroid or matroid_from_constraint(constraint)
        if aggregate.dim <= settings.BENCHMARK_EXHAUSTIVE_MAX_DIM:
            return _exhaustive(aggregate, matroid, horizon)
        return _fw_lower_bound(MultilinearExtension(aggregate, mode="mc"), matroid.polytope(), horizon)

    if isinstance(aggregate, QuadraticDR) and aggregate.is_linear:
        v = constraint.lmo(aggregate.h)
        return BenchmarkResult(float(aggregate.value(v)), "lmo_exact", horizon, v.tolist())

    if isinstance(constraint, Box):
        return BenchmarkResult(float(aggregate.value(constraint.upper)), "box_corner", horizon,
                               constraint.upper.tolist())

    if isinstance(aggregate, MultilinearExtension) and aggregate.dim <= settings.BENCHMARK_EXHAUSTIVE_MAX_DIM:
        # on a matroid polytope the extension is maximised at an independent set
        try:
            matroid = matroid or matroid_from_constraint(constraint)
        except ConfigError:
            matroid = None
        if matroid is not None:
            return _exhaustive(aggregate.base, matroid, horizon)

    if constraint.dim <= settings.BENCHMARK_GRID_MAX_DIM and constraint.supports_membership:
        return _grid(aggregate, constraint, horizon)

    return _fw_lower_bound(aggregate, constraint, horizon)


def compute_benchmark(sequence: ObjectiveSequence, constraint: ConstraintSet, horizon: int,
                      matroid: Optional[Matroid] = None) -> BenchmarkResult:
    """max_{x in K} Σ_{t < horizon} F_t(x), or the max over independent sets for set functions."""
    result = benchmark_objective(sequence.aggregate(horizon), constraint, horizon, matroid)
    logger.info("Benchmark computed", mode=result.mode, value=result.value, horizon=horizon)
    return result
