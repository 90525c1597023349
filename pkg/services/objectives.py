"""
Objectives Service

Monotone objectives seen by the online algorithms:
1. Continuous DR-submodular quadratics (exact and bounded-noise gradients)
2. Monotone submodular set functions (coverage, facility location, modular, table)
3. Multilinear extensions of set functions (exact enumeration or Monte-Carlo)

Objectives are immutable; every stochastic method takes the generator from the
caller.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict
from functools import cached_property
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog

from config import get_settings
from exceptions import PreconditionError, UnsupportedOperationError
from services.estimators import ball_sample
from services.geometry import as_point

logger = structlog.get_logger("objectives")

_DOMAIN_TOL = 1e-9
# rows per vectorised set-function evaluation chunk
_CHUNK_ROWS = 65536
SET_KINDS = ("coverage", "facility_location", "modular")


@dataclass(frozen=True)
class ObjectiveConstants:
    """Regularity constants a family guarantees on its domain."""

    lipschitz: float            # L1
    smoothness: float           # L2
    value_bound: float          # M1
    grad_norm_bound: float      # M0
    grad_variance_bound: float  # sigma0^2

    def merge(self, other: "ObjectiveConstants") -> "ObjectiveConstants":
        return ObjectiveConstants(*(max(a, b) for a, b in zip(
            (self.lipschitz, self.smoothness, self.value_bound, self.grad_norm_bound, self.grad_variance_bound),
            (other.lipschitz, other.smoothness, other.value_bound, other.grad_norm_bound, other.grad_variance_bound),
        )))

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


class MonteCarloEstimate(NamedTuple):
    mean: float
    std_error: float


# =============================================================================
# CONTINUOUS OBJECTIVES
# =============================================================================

class ContinuousObjective(ABC):
    """value / grad / stoch_grad on the box [0, upper]."""

    def __init__(self, upper: Sequence[float]):
        self.upper = as_point(upper, name="upper")
        self.dim = self.upper.shape[0]

    def check_domain(self, x: Any, name: str = "x") -> np.ndarray:
        point = as_point(x, self.dim, name)
        if np.any(point < -_DOMAIN_TOL) or np.any(point > self.upper + _DOMAIN_TOL):
            raise PreconditionError(f"{name} lies outside the objective domain")
        return np.clip(point, 0.0, self.upper)

    @abstractmethod
    def value(self, x: Any) -> float: ...

    @abstractmethod
    def grad(self, x: Any) -> np.ndarray: ...

    @abstractmethod
    def stoch_grad(self, x: Any, rng: np.random.Generator) -> np.ndarray: ...

    @property
    @abstractmethod
    def constants(self) -> ObjectiveConstants: ...

    def value_many(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.value(p) for p in np.atleast_2d(points)])


class QuadraticDR(ContinuousObjective):
    """
    F(x) = h.x + 1/2 x.H.x on [0, upper].

    H <= 0 entrywise makes F DR-submodular; monotonicity is enforced at
    construction by flooring h_i at -(H upper)_i.
    """

    def __init__(self, h: Sequence[float], H: Any, upper: Sequence[float], sigma0: float = 0.0):
        super().__init__(upper)
        h_arr = as_point(h, self.dim, "h")
        H_arr = np.asarray(H, dtype=float)
        if H_arr.shape != (self.dim, self.dim):
            raise PreconditionError(f"H must be {self.dim}x{self.dim}")
        if not np.allclose(H_arr, H_arr.T):
            raise PreconditionError("H must be symmetric")
        if np.any(H_arr > 0):
            raise PreconditionError("H must have non-positive entries")
        if np.any(h_arr < 0) or sigma0 < 0:
            raise PreconditionError("h and sigma0 must be non-negative")

        self.H = H_arr
        self.h = np.maximum(h_arr, -H_arr @ self.upper)
        self.sigma0 = float(sigma0)

    @classmethod
    def unchecked(cls, h: np.ndarray, H: np.ndarray, upper: np.ndarray, sigma0: float) -> "QuadraticDR":
        """Construct from parameters already known valid (batch generators); still applies the h floor."""
        obj = cls.__new__(cls)
        obj.upper = upper
        obj.dim = upper.shape[0]
        obj.H = H
        obj.h = np.maximum(h, -H @ upper)
        obj.sigma0 = float(sigma0)
        return obj

    @classmethod
    def linear(cls, c: Sequence[float], upper: Sequence[float], sigma0: float = 0.0) -> "QuadraticDR":
        c_arr = as_point(c, name="c")
        return cls(c_arr, np.zeros((c_arr.shape[0], c_arr.shape[0])), upper, sigma0)

    @property
    def is_linear(self) -> bool:
        return not np.any(self.H)

    def value(self, x: Any) -> float:
        p = self.check_domain(x)
        return float(self.h @ p + 0.5 * p @ self.H @ p)

    def value_many(self, points: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(points, dtype=float))
        return X @ self.h + 0.5 * np.einsum("ij,jk,ik->i", X, self.H, X)

    def grad(self, x: Any) -> np.ndarray:
        p = self.check_domain(x)
        return self.h + self.H @ p

    def stoch_grad(self, x: Any, rng: np.random.Generator) -> np.ndarray:
        g = self.grad(x)
        if self.sigma0 == 0.0:
            return g
        # bounded noise keeps ||stoch_grad|| <= L1 + sigma0 deterministically
        return g + self.sigma0 * ball_sample(rng, self.dim)

    @cached_property
    def constants(self) -> ObjectiveConstants:
        lipschitz = float(np.linalg.norm(self.h))
        d = self.dim
        return ObjectiveConstants(
            lipschitz=lipschitz,
            smoothness=float(np.linalg.norm(self.H, 2)),
            value_bound=float(self.value_many(self.upper[None, :])[0]),
            grad_norm_bound=lipschitz + self.sigma0,
            grad_variance_bound=self.sigma0 ** 2 * d / (d + 2),
        )

    def __add__(self, other: "QuadraticDR") -> "QuadraticDR":
        if not np.allclose(self.upper, other.upper):
            raise PreconditionError("cannot add quadratics on different domains")
        return QuadraticDR(self.h + other.h, self.H + other.H, self.upper, max(self.sigma0, other.sigma0))

    def scaled(self, factor: float) -> "QuadraticDR":
        if factor < 0:
            raise PreconditionError("scale factor must be non-negative")
        return QuadraticDR(factor * self.h, factor * self.H, self.upper, self.sigma0)

    def fingerprint(self) -> bytes:
        return np.concatenate([self.h, self.H.ravel()]).tobytes()


def make_random_quadratic(dim: int, rng: np.random.Generator, upper: Sequence[float],
                          sigma0: float = 0.0, coupling: float = 1.0) -> QuadraticDR:
    """Random monotone DR quadratic: symmetric H with entries in [-coupling, 0]."""
    return make_random_quadratics(1, dim, rng, upper, sigma0, coupling)[0]


def make_random_quadratics(n: int, dim: int, rng: np.random.Generator, upper: Sequence[float],
                           sigma0: float = 0.0, coupling: float = 1.0) -> List[QuadraticDR]:
    """n independent draws in one batch."""
    if dim < 1 or coupling < 0 or sigma0 < 0:
        raise PreconditionError("invalid quadratic parameters")
    box = as_point(upper, dim, "upper")
    if np.any(box <= 0):
        raise PreconditionError("domain upper corner must be strictly positive")
    A = -coupling * rng.uniform(0.0, 1.0, size=(n, dim, dim))
    H = 0.5 * (A + np.transpose(A, (0, 2, 1)))
    h = rng.uniform(0.0, 1.0, size=(n, dim))
    return [QuadraticDR.unchecked(h[i], H[i], box, sigma0) for i in range(n)]


# =============================================================================
# SET FUNCTIONS
# =============================================================================

def _masks_to_indicators(masks: np.ndarray, dim: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(dim)) & 1).astype(bool)


def _indicators_to_masks(X: np.ndarray) -> np.ndarray:
    return X.astype(np.int64) @ (np.int64(1) << np.arange(X.shape[1], dtype=np.int64))


class SetObjective(ABC):
    """f : 2^[d] -> R_{>=0}. Subsets are iterables of 0-based indices."""

    def __init__(self, dim: int):
        if dim < 1:
            raise PreconditionError("ground set must be non-empty")
        self.dim = int(dim)

    @abstractmethod
    def _values(self, X: np.ndarray) -> np.ndarray:
        """Values for boolean indicator rows X of shape (n, d)."""

    def value_indicators(self, X: Any) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(X, dtype=bool))
        if rows.shape[1] != self.dim:
            raise PreconditionError(f"indicator rows must have {self.dim} columns")
        if rows.shape[0] <= _CHUNK_ROWS:
            return self._values(rows)
        return np.concatenate([self._values(rows[i:i + _CHUNK_ROWS]) for i in range(0, rows.shape[0], _CHUNK_ROWS)])

    def indicator(self, subset: Iterable[int]) -> np.ndarray:
        row = np.zeros(self.dim, dtype=bool)
        for i in subset:
            if not 0 <= i < self.dim:
                raise PreconditionError(f"element {i} is outside the ground set")
            row[i] = True
        return row

    def value(self, subset: Iterable[int]) -> float:
        return float(self.value_indicators(self.indicator(subset)[None, :])[0])

    @property
    def value_bound(self) -> float:
        """M1 = sup |f| = f(ground set) for monotone non-negative f."""
        return float(self.value_indicators(np.ones((1, self.dim), dtype=bool))[0])

    def table(self) -> np.ndarray:
        """f over all 2^d subsets; entry m is f({i : bit i of m set})."""
        return self._table

    @cached_property
    def _table(self) -> np.ndarray:
        limit = get_settings().EXACT_ENUM_MAX_DIM
        if self.dim > limit:
            raise UnsupportedOperationError(f"value table limited to d <= {limit}")
        masks = np.arange(1 << self.dim, dtype=np.int64)
        out = np.empty(masks.shape[0])
        for start in range(0, masks.shape[0], _CHUNK_ROWS):
            chunk = masks[start:start + _CHUNK_ROWS]
            out[start:start + chunk.shape[0]] = self._values(_masks_to_indicators(chunk, self.dim))
        return out

    def tabulable(self) -> bool:
        return self.dim <= get_settings().EXACT_ENUM_MAX_DIM

    def __add__(self, other: "SetObjective") -> "SetObjective":
        if other.dim != self.dim:
            raise PreconditionError("cannot add set functions on different ground sets")
        if self.tabulable():
            return TableSetFunction(self.table() + other.table())
        return SumSetFunction([(1.0, self), (1.0, other)])

    def scaled(self, factor: float) -> "SetObjective":
        if self.tabulable():
            return TableSetFunction(factor * self.table())
        return SumSetFunction([(float(factor), self)])

    def fingerprint(self) -> bytes:
        if self.tabulable():
            return self.table().tobytes()
        # values on a fixed pseudo-random family of subsets
        rows = np.random.default_rng(0).random((256, self.dim)) < 0.5
        return self.value_indicators(rows).tobytes()


class TableSetFunction(SetObjective):
    """Explicit value table indexed by bitmask."""

    def __init__(self, table: Sequence[float]):
        values = np.asarray(table, dtype=float)
        dim = int(round(math.log2(values.shape[0]))) if values.shape[0] > 0 else 0
        if values.ndim != 1 or values.shape[0] != (1 << dim):
            raise PreconditionError("table length must be a power of two")
        super().__init__(dim)
        self.values = values

    @classmethod
    def from_mapping(cls, dim: int, mapping: Mapping[frozenset, float]) -> "TableSetFunction":
        table = np.zeros(1 << dim)
        for subset, val in mapping.items():
            table[sum(1 << i for i in subset)] = val
        return cls(table)

    def _values(self, X: np.ndarray) -> np.ndarray:
        return self.values[_indicators_to_masks(X)]

    def table(self) -> np.ndarray:
        return self.values


class SumSetFunction(SetObjective):
    """Σ_i w_i f_i evaluated term by term, for ground sets too large to tabulate."""

    def __init__(self, terms: Sequence[Tuple[float, SetObjective]]):
        flat: List[Tuple[float, SetObjective]] = []
        for weight, f in terms:
            if isinstance(f, SumSetFunction):
                flat.extend((weight * w, g) for w, g in f.terms)
            else:
                flat.append((float(weight), f))
        if not flat:
            raise PreconditionError("sum of set functions needs at least one term")
        if any(f.dim != flat[0][1].dim for _, f in flat):
            raise PreconditionError("cannot add set functions on different ground sets")
        super().__init__(flat[0][1].dim)
        self.terms = flat

    def _values(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        for weight, f in self.terms:
            out += weight * f._values(X)
        return out


class ModularFunction(SetObjective):
    """f(S) = sum_{i in S} w_i."""

    def __init__(self, weights: Sequence[float]):
        w = as_point(weights, name="weights")
        if np.any(w < 0):
            raise PreconditionError("modular weights must be non-negative")
        super().__init__(w.shape[0])
        self.weights = w

    def _values(self, X: np.ndarray) -> np.ndarray:
        return X.astype(float) @ self.weights


class WeightedCoverage(SetObjective):
    """f(S) = sum of weights of universe elements covered by some i in S."""

    def __init__(self, cover: Any, weights: Sequence[float]):
        cover_arr = np.asarray(cover, dtype=bool)
        w = as_point(weights, name="weights")
        if cover_arr.ndim != 2 or cover_arr.shape[1] != w.shape[0]:
            raise PreconditionError("cover must be (d, universe) and match the weights")
        if np.any(w < 0):
            raise PreconditionError("coverage weights must be non-negative")
        super().__init__(cover_arr.shape[0])
        self.cover = cover_arr
        self.weights = w

    def _values(self, X: np.ndarray) -> np.ndarray:
        covered = (X.astype(float) @ self.cover.astype(float)) > 0
        return covered @ self.weights


class FacilityLocation(SetObjective):
    """f(S) = sum_j max_{i in S} v_ij (0 for the empty set)."""

    def __init__(self, v: Any):
        v_arr = np.asarray(v, dtype=float)
        if v_arr.ndim != 2 or np.any(v_arr < 0):
            raise PreconditionError("facility values must be a non-negative (d, clients) matrix")
        super().__init__(v_arr.shape[0])
        self.v = v_arr

    def _values(self, X: np.ndarray) -> np.ndarray:
        masked = np.where(X[:, :, None], self.v[None, :, :], 0.0)
        return masked.max(axis=1).sum(axis=1)


def make_random_set_objective(kind: str, params: Mapping[str, Any], rng: np.random.Generator) -> SetObjective:
    """
    Random monotone submodular function.

    coverage: d, universe, density (0.2), weight range [0.5, 1.5]
    facility_location: d, clients
    modular: d
    """
    d = int(params.get("d", 0))
    if d < 1:
        raise PreconditionError("set objective needs d >= 1")

    if kind == "coverage":
        universe = int(params.get("universe", 4 * d))
        density = float(params.get("density", 0.2))
        if universe < 1 or not 0.0 < density <= 1.0:
            raise PreconditionError("coverage needs universe >= 1 and density in (0, 1]")
        cover = rng.random((d, universe)) < density
        weights = rng.uniform(0.5, 1.5, size=universe)
        return WeightedCoverage(cover, weights)

    if kind == "facility_location":
        clients = int(params.get("clients", 2 * d))
        if clients < 1:
            raise PreconditionError("facility location needs clients >= 1")
        return FacilityLocation(rng.uniform(0.0, 1.0, size=(d, clients)))

    if kind == "modular":
        return ModularFunction(rng.uniform(0.0, 1.0, size=d))

    raise PreconditionError(f"Unknown set objective kind '{kind}'")


# =============================================================================
# MULTILINEAR EXTENSION
# =============================================================================

def _product_probabilities(x: np.ndarray) -> np.ndarray:
    """P(S) for all 2^d masks under independent inclusion with probabilities x."""
    probs = np.ones(1)
    for xi in x:
        probs = np.concatenate([probs * (1.0 - xi), probs * xi])
    return probs


def _batch_product_probabilities(X: np.ndarray) -> np.ndarray:
    probs = np.ones((X.shape[0], 1))
    for i in range(X.shape[1]):
        xi = X[:, i:i + 1]
        probs = np.concatenate([probs * (1.0 - xi), probs * xi], axis=1)
    return probs


def lipschitz_smoothness_of_extension(f: SetObjective) -> Tuple[float, float]:
    """(2 M sqrt(d), 4 M sqrt(d(d-1))) with M = sup |f|."""
    m = f.value_bound
    d = f.dim
    return 2.0 * m * math.sqrt(d), 4.0 * m * math.sqrt(d * (d - 1))


class MultilinearExtension(ContinuousObjective):
    """
    F(x) = E_{S ~ x}[f(S)].

    mode "exact" enumerates all 2^d subsets; "mc" averages n_samples draws.
    "auto" picks exact up to the enumeration cutoff.
    """

    def __init__(self, base: SetObjective, mode: str = "auto", n_samples: Optional[int] = None,
                 mc_seed: int = 0):
        super().__init__(np.ones(base.dim))
        settings = get_settings()
        if mode == "auto":
            mode = "exact" if base.dim <= settings.EXACT_ENUM_MAX_DIM else "mc"
        if mode not in ("exact", "mc"):
            raise PreconditionError(f"Unknown extension mode '{mode}'")
        if mode == "exact" and base.dim > settings.EXACT_ENUM_MAX_DIM:
            raise PreconditionError(f"exact extension limited to d <= {settings.EXACT_ENUM_MAX_DIM}")
        self.base = base
        self.mode = mode
        self.n_samples = int(n_samples or settings.MC_SAMPLES)
        self.mc_seed = mc_seed

    def _rng(self, rng: Optional[np.random.Generator]) -> np.random.Generator:
        return rng if rng is not None else np.random.default_rng(self.mc_seed)

    def estimate(self, x: Any, rng: Optional[np.random.Generator] = None) -> MonteCarloEstimate:
        p = self.check_domain(x)
        if self.mode == "exact":
            return MonteCarloEstimate(float(_product_probabilities(p) @ self.base.table()), 0.0)

        draws = self._rng(rng).random((self.n_samples, self.dim)) < p
        vals = self.base.value_indicators(draws)
        return MonteCarloEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(self.n_samples)))

    def value(self, x: Any, rng: Optional[np.random.Generator] = None) -> float:
        return self.estimate(x, rng).mean

    def value_many(self, points: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if self.mode != "exact":
            return super().value_many(X)
        table = self.base.table()
        rows = max(1, (1 << 22) >> self.dim)
        return np.concatenate([
            _batch_product_probabilities(X[i:i + rows]) @ table for i in range(0, X.shape[0], rows)
        ])

    def grad(self, x: Any, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        p = self.check_domain(x)
        if self.mode == "exact":
            table = self.base.table()
            g = np.empty(self.dim)
            for i in range(self.dim):
                hi, lo = p.copy(), p.copy()
                hi[i], lo[i] = 1.0, 0.0
                g[i] = _product_probabilities(hi) @ table - _product_probabilities(lo) @ table
            return g

        # shared samples across components
        draws = self._rng(rng).random((self.n_samples, self.dim)) < p
        g = np.empty(self.dim)
        for i in range(self.dim):
            with_i, without_i = draws.copy(), draws.copy()
            with_i[:, i], without_i[:, i] = True, False
            g[i] = (self.base.value_indicators(with_i) - self.base.value_indicators(without_i)).mean()
        return g

    def stoch_grad(self, x: Any, rng: np.random.Generator) -> np.ndarray:
        """One sample S ~ x; component i is f(S + i) - f(S - i)."""
        p = self.check_domain(x)
        sample = rng.random(self.dim) < p
        rows = np.tile(sample, (2 * self.dim, 1))
        idx = np.arange(self.dim)
        rows[idx, idx] = True
        rows[self.dim + idx, idx] = False
        vals = self.base.value_indicators(rows)
        return vals[:self.dim] - vals[self.dim:]

    @cached_property
    def constants(self) -> ObjectiveConstants:
        l1, l2 = lipschitz_smoothness_of_extension(self.base)
        m1 = self.base.value_bound
        m0 = 2.0 * m1 * math.sqrt(self.dim)
        return ObjectiveConstants(
            lipschitz=l1, smoothness=l2, value_bound=m1,
            grad_norm_bound=m0, grad_variance_bound=m0 ** 2,
        )

    def __add__(self, other: "MultilinearExtension") -> "MultilinearExtension":
        return MultilinearExtension(self.base + other.base, self.mode, self.n_samples, self.mc_seed)

    def scaled(self, factor: float) -> "MultilinearExtension":
        return MultilinearExtension(self.base.scaled(factor), self.mode, self.n_samples, self.mc_seed)

    def fingerprint(self) -> bytes:
        return self.base.fingerprint()


def multilinear_value(ext: MultilinearExtension, x: Any, rng: Optional[np.random.Generator] = None) -> float:
    return ext.value(x, rng)


def multilinear_grad(ext: MultilinearExtension, x: Any, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    return ext.grad(x, rng)


def multilinear_stoch_grad(ext: MultilinearExtension, x: Any, rng: np.random.Generator) -> np.ndarray:
    return ext.stoch_grad(x, rng)


def multilinear_estimate(ext: MultilinearExtension, x: Any,
                         rng: Optional[np.random.Generator] = None) -> MonteCarloEstimate:
    """Value with its standard error; the error is 0 for an exact extension."""
    return ext.estimate(x, rng)


# =============================================================================
# PROPERTY CHECKERS
# =============================================================================

def check_monotone_submodular(f: SetObjective, rng: Optional[np.random.Generator] = None,
                              samples: int = 5000, tol: float = 1e-9) -> bool:
    """Exhaustive for d <= 12, sampled (S, i, j) triples above."""
    d = f.dim
    if d <= 12:
        table = f.table()
        masks = np.arange(1 << d)
        for i in range(d):
            bit_i = 1 << i
            free = masks[(masks & bit_i) == 0]
            gain_i = table[free | bit_i] - table[free]
            if np.any(gain_i < -tol):
                return False
            for j in range(d):
                if j == i:
                    continue
                bit_j = 1 << j
                base = free[(free & bit_j) == 0]
                if np.any(table[base | bit_i] - table[base] < table[base | bit_j | bit_i] - table[base | bit_j] - tol):
                    return False
        return True

    gen = rng if rng is not None else np.random.default_rng(0)
    for _ in range(samples):
        S = gen.random(d) < gen.random()
        i, j = gen.choice(d, size=2, replace=False)
        S[i] = S[j] = False
        Sj = S.copy()
        Sj[j] = True
        rows = np.array([S, S, Sj, Sj])
        rows[1, i] = True
        rows[3, i] = True
        v = f.value_indicators(rows)
        if v[1] - v[0] < -tol or v[1] - v[0] < v[3] - v[2] - tol:
            return False
    return True


@dataclass(frozen=True)
class DRPropertyReport:
    monotone: bool
    dr: bool
    concave_along_nonneg: bool

    @property
    def ok(self) -> bool:
        return self.monotone and self.dr and self.concave_along_nonneg


def empirical_grad_variance(F: ContinuousObjective, rng: np.random.Generator,
                            points: int = 16, draws: int = 64) -> float:
    """Mean of ||stoch_grad - grad||^2 over uniform points of [0, upper]."""
    xs = rng.random((points, F.dim)) * F.upper
    total = 0.0
    for x in xs:
        exact = F.grad(x)
        noise = np.array([F.stoch_grad(x, rng) for _ in range(draws)]) - exact
        total += float(np.mean(np.sum(noise ** 2, axis=1)))
    return total / points


def check_dr_monotone(F: ContinuousObjective, rng: np.random.Generator, pairs: int = 10_000,
                      tol: float = 1e-9) -> DRPropertyReport:
    """Sample ordered pairs x <= y in the domain and test the three properties."""
    monotone = dr = concave = True
    for _ in range(pairs):
        x = rng.random(F.dim) * F.upper
        y = x + rng.random(F.dim) * (F.upper - x)
        fx, fy = F.value(x), F.value(y)
        gx, gy = F.grad(x), F.grad(y)
        monotone &= fx <= fy + tol
        dr &= bool(np.all(gx >= gy - tol))
        concave &= fy <= fx + float(gx @ (y - x)) + tol
        if not (monotone and dr and concave):
            break
    return DRPropertyReport(bool(monotone), bool(dr), bool(concave))
