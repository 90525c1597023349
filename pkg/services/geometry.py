"""
Geometry Service

Down-closed constraint sets used by every algorithm:
1. Structured families with closed-form membership and greedy LMOs
   (box, scaled simplex, uniform / partition matroid polytopes)
2. An LMO-only general matroid family (graphic matroid)
3. The shrunk-and-translated δ-interior K' = (1-α)K + δ1

All sets are immutable after construction.
"""

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog

from config import get_settings
from exceptions import (
    ConfigError,
    DimensionMismatchError,
    PreconditionError,
    UnsupportedOperationError,
)

logger = structlog.get_logger("geometry")

Point = np.ndarray

# Projection bisection steps; 2^-100 of the threshold range is below FP resolution.
_BISECTION_STEPS = 100
# Slack on α < 1 so that δ = r/(√d+1) is rejected despite rounding.
_ALPHA_SLACK = 1e-12
_GRAPHIC_ENUM_MAX_EDGES = 16


def as_point(x: Any, dim: Optional[int] = None, name: str = "x") -> Point:
    """Validate and convert to a finite float vector of the given length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise PreconditionError(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} has non-finite entries")
    return arr


def default_tolerance(tol: Optional[float]) -> float:
    if tol is None:
        return get_settings().MEMBERSHIP_TOL
    if tol < 0:
        raise PreconditionError("tolerance must be non-negative")
    return float(tol)


@dataclass(frozen=True)
class SetBounds:
    """Diameter D, radius R and the coordinatewise lower bound of a set."""

    diameter: float
    radius: float
    lower_bound: Point


# =============================================================================
# CAPPED SIMPLEX PRIMITIVES  {0 <= x <= caps, sum(x) <= budget}
# =============================================================================

def _capped_simplex_lmo(direction: Point, caps: Point, budget: float) -> Point:
    order = np.argsort(-direction, kind="stable")
    c = np.minimum(caps[order], budget)
    before = np.cumsum(c) - c
    fill = np.clip(budget - before, 0.0, c)
    fill[direction[order] <= 0] = 0.0
    v = np.zeros_like(direction)
    v[order] = fill
    return v


def _capped_simplex_projection(y: Point, caps: Point, budget: float) -> Point:
    x = np.clip(y, 0.0, caps)
    if x.sum() <= budget:
        return x

    lo, hi = 0.0, float(np.max(y))
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if np.clip(y - mid, 0.0, caps).sum() > budget:
            lo = mid
        else:
            hi = mid
    # hi is always on the feasible side
    return np.clip(y - hi, 0.0, caps)


def _capped_simplex_radius(caps: Point, budget: float) -> float:
    c = np.sort(np.minimum(caps, budget))[::-1]
    before = np.cumsum(c) - c
    fill = np.clip(budget - before, 0.0, c)
    return float(np.linalg.norm(fill))


# =============================================================================
# BASE CLASS
# =============================================================================

class ConstraintSet(ABC):
    """
    A compact, convex, down-closed body in R^d_{>=0} containing the origin.

    Subclasses provide the LMO, membership, projection and closed-form
    geometric constants of their family.
    """

    family: ClassVar[str] = "abstract"
    supports_membership: ClassVar[bool] = True

    def __init__(self, dim: int):
        if dim < 1:
            raise PreconditionError("dimension must be at least 1")
        self.dim = int(dim)

    # --- public, validated entry points ---

    def lmo(self, direction: Any) -> Point:
        """argmax_{v in K} <v, direction>; always returns a vertex."""
        return self._lmo(as_point(direction, self.dim, "direction"))

    def contains(self, x: Any, tol: Optional[float] = None) -> bool:
        point = as_point(x, self.dim)
        return bool(self.contains_many(point[None, :], tol)[0])

    def contains_many(self, points: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DimensionMismatchError(f"points have dimension {pts.shape[1]}, expected {self.dim}")
        return self._contains_many(pts, default_tolerance(tol))

    def project(self, y: Any) -> Point:
        """Euclidean projection onto the set."""
        return self._project(as_point(y, self.dim, "y"))

    @property
    def lower_bound(self) -> Point:
        return np.zeros(self.dim)

    # --- family specific ---

    @abstractmethod
    def _lmo(self, direction: Point) -> Point: ...

    @abstractmethod
    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray: ...

    @abstractmethod
    def _project(self, y: Point) -> Point: ...

    @abstractmethod
    def inscribed_orthant_radius(self) -> float:
        """Largest r with r * B^d_{>=0} contained in the set."""

    @abstractmethod
    def bounds(self) -> SetBounds: ...

    @abstractmethod
    def coordinate_caps(self) -> Point:
        """Coordinatewise supremum over the set (its bounding box corner)."""

    @abstractmethod
    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        """(A, b) with K = {0 <= x <= caps, A x <= b}."""

    @abstractmethod
    def to_spec(self) -> Dict[str, Any]: ...

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.to_spec()}>"


# =============================================================================
# STRUCTURED FAMILIES
# =============================================================================

class Box(ConstraintSet):
    """{0 <= x <= upper}."""

    family = "box"

    def __init__(self, upper: Sequence[float]):
        upper_arr = as_point(upper, name="upper")
        if np.any(upper_arr <= 0):
            raise PreconditionError("box upper corner must be strictly positive")
        super().__init__(upper_arr.shape[0])
        self.upper = upper_arr

    def _lmo(self, direction: Point) -> Point:
        return np.where(direction > 0, self.upper, 0.0)

    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        return np.all(points >= -tol, axis=1) & np.all(points <= self.upper + tol, axis=1)

    def _project(self, y: Point) -> Point:
        return np.clip(y, 0.0, self.upper)

    def inscribed_orthant_radius(self) -> float:
        return float(np.min(self.upper))

    def bounds(self) -> SetBounds:
        norm = float(np.linalg.norm(self.upper))
        return SetBounds(diameter=norm, radius=norm, lower_bound=self.lower_bound)

    def coordinate_caps(self) -> Point:
        return self.upper.copy()

    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.zeros((0, self.dim)), np.zeros(0)

    def to_spec(self) -> Dict[str, Any]:
        return {"family": self.family, "upper": self.upper.tolist()}


class ScaledSimplex(ConstraintSet):
    """{x >= 0, sum(x) <= budget, x <= caps} (caps optional)."""

    family = "scaled_simplex"

    def __init__(self, budget: float, dim: int, caps: Optional[Sequence[float]] = None):
        super().__init__(dim)
        if budget <= 0:
            raise PreconditionError("simplex budget must be positive")
        self.budget = float(budget)
        if caps is None:
            self.caps = np.full(self.dim, np.inf)
        else:
            self.caps = as_point(caps, self.dim, "caps")
            if np.any(self.caps <= 0):
                raise PreconditionError("simplex caps must be positive")

    def _lmo(self, direction: Point) -> Point:
        return _capped_simplex_lmo(direction, self.caps, self.budget)

    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        return (
            np.all(points >= -tol, axis=1)
            & np.all(points <= self.caps + tol, axis=1)
            & (points.sum(axis=1) <= self.budget + tol)
        )

    def _project(self, y: Point) -> Point:
        return _capped_simplex_projection(y, self.caps, self.budget)

    def inscribed_orthant_radius(self) -> float:
        return float(min(self.budget / math.sqrt(self.dim), np.min(self.caps)))

    def bounds(self) -> SetBounds:
        # R is exact (largest-cap-first fill majorizes every member); D is exact
        # without caps and an upper bound with them.
        radius = _capped_simplex_radius(self.caps, self.budget)
        box_diag = float(np.linalg.norm(np.minimum(self.caps, self.budget)))
        diameter = min(math.sqrt(2.0) * radius, box_diag)
        return SetBounds(diameter=diameter, radius=radius, lower_bound=self.lower_bound)

    def coordinate_caps(self) -> Point:
        return np.minimum(self.caps, self.budget)

    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.ones((1, self.dim)), np.array([self.budget])

    def to_spec(self) -> Dict[str, Any]:
        spec: Dict[str, Any] = {"family": self.family, "budget": self.budget, "dim": self.dim}
        if np.all(np.isfinite(self.caps)):
            spec["caps"] = self.caps.tolist()
        return spec


class UniformMatroidPolytope(ConstraintSet):
    """conv{1_I : |I| <= rank} = {0 <= x <= 1, sum(x) <= rank}."""

    family = "uniform_matroid"

    def __init__(self, rank: int, dim: int):
        super().__init__(dim)
        if rank < 1:
            raise PreconditionError("matroid rank must be at least 1")
        self.rank = int(rank)
        self._caps = np.ones(self.dim)

    def _lmo(self, direction: Point) -> Point:
        return _capped_simplex_lmo(direction, self._caps, float(self.rank))

    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        return (
            np.all(points >= -tol, axis=1)
            & np.all(points <= 1.0 + tol, axis=1)
            & (points.sum(axis=1) <= self.rank + tol)
        )

    def _project(self, y: Point) -> Point:
        return _capped_simplex_projection(y, self._caps, float(self.rank))

    def inscribed_orthant_radius(self) -> float:
        return float(min(1.0, self.rank / math.sqrt(self.dim)))

    def bounds(self) -> SetBounds:
        return SetBounds(
            diameter=math.sqrt(min(2 * self.rank, self.dim)),
            radius=math.sqrt(min(self.rank, self.dim)),
            lower_bound=self.lower_bound,
        )

    def coordinate_caps(self) -> Point:
        return self._caps.copy()

    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.ones((1, self.dim)), np.array([float(self.rank)])

    def to_spec(self) -> Dict[str, Any]:
        return {"family": self.family, "rank": self.rank, "dim": self.dim}


class PartitionMatroidPolytope(ConstraintSet):
    """{0 <= x <= 1, sum_{i in P} x_i <= cap(P) for every part P}."""

    family = "partition_matroid"

    def __init__(self, parts: Sequence[Sequence[int]], caps: Sequence[int]):
        flat = sorted(i for part in parts for i in part)
        dim = len(flat)
        if flat != list(range(dim)):
            raise PreconditionError("parts must partition {0, ..., d-1}")
        if len(caps) != len(parts):
            raise PreconditionError("one cap per part is required")
        if any(int(c) < 0 for c in caps) or any(len(p) == 0 for p in parts):
            raise PreconditionError("caps must be non-negative and parts non-empty")
        super().__init__(dim)
        self.parts: Tuple[np.ndarray, ...] = tuple(np.asarray(sorted(p), dtype=int) for p in parts)
        self.caps = np.asarray([int(c) for c in caps], dtype=int)
        self._ones = np.ones(self.dim)

    def _lmo(self, direction: Point) -> Point:
        v = np.zeros(self.dim)
        for part, cap in zip(self.parts, self.caps):
            v[part] = _capped_simplex_lmo(direction[part], self._ones[part], float(cap))
        return v

    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        ok = np.all(points >= -tol, axis=1) & np.all(points <= 1.0 + tol, axis=1)
        for part, cap in zip(self.parts, self.caps):
            ok &= points[:, part].sum(axis=1) <= cap + tol
        return ok

    def _project(self, y: Point) -> Point:
        x = np.zeros(self.dim)
        for part, cap in zip(self.parts, self.caps):
            x[part] = _capped_simplex_projection(y[part], self._ones[part], float(cap))
        return x

    def inscribed_orthant_radius(self) -> float:
        return float(min(min(1.0, cap / math.sqrt(len(part))) for part, cap in zip(self.parts, self.caps)))

    def bounds(self) -> SetBounds:
        radius_sq = sum(min(int(cap), len(part)) for part, cap in zip(self.parts, self.caps))
        diameter_sq = sum(min(2 * int(cap), len(part)) for part, cap in zip(self.parts, self.caps))
        return SetBounds(
            diameter=math.sqrt(diameter_sq),
            radius=math.sqrt(radius_sq),
            lower_bound=self.lower_bound,
        )

    def coordinate_caps(self) -> Point:
        caps = np.ones(self.dim)
        for part, cap in zip(self.parts, self.caps):
            if cap == 0:
                caps[part] = 0.0
        return caps

    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        A = np.zeros((len(self.parts), self.dim))
        for row, part in enumerate(self.parts):
            A[row, part] = 1.0
        return A, self.caps.astype(float)

    def to_spec(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "parts": [part.tolist() for part in self.parts],
            "caps": self.caps.tolist(),
        }


# =============================================================================
# LMO-ONLY GENERAL MATROID
# =============================================================================

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


class GraphicMatroidPolytope(ConstraintSet):
    """
    Forest polytope of a multigraph: conv{1_F : F acyclic edge set}.

    Membership is exponential for general matroids, so only the LMO is offered;
    iterates built from LMO vertices are feasible by construction.
    """

    family = "graphic_matroid"
    supports_membership = False

    def __init__(self, nodes: int, edges: Sequence[Sequence[int]]):
        if not edges:
            raise PreconditionError("graphic matroid needs at least one edge")
        for u, v in edges:
            if not (0 <= u < nodes and 0 <= v < nodes):
                raise PreconditionError(f"edge ({u}, {v}) references an unknown node")
        super().__init__(len(edges))
        self.nodes = int(nodes)
        self.edges: Tuple[Tuple[int, int], ...] = tuple((int(u), int(v)) for u, v in edges)

    def rank_of(self, subset: Sequence[int]) -> int:
        uf = _UnionFind(self.nodes)
        return sum(1 for i in subset if uf.union(*self.edges[i]))

    def _lmo(self, direction: Point) -> Point:
        uf = _UnionFind(self.nodes)
        v = np.zeros(self.dim)
        for i in np.argsort(-direction, kind="stable"):
            if direction[i] <= 0:
                break
            if uf.union(*self.edges[i]):
                v[i] = 1.0
        return v

    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        raise UnsupportedOperationError("graphic matroid polytope is LMO-only (no membership test)")

    def _project(self, y: Point) -> Point:
        raise UnsupportedOperationError("graphic matroid polytope is LMO-only (no projection)")

    def inscribed_orthant_radius(self) -> float:
        if self.dim > _GRAPHIC_ENUM_MAX_EDGES:
            raise UnsupportedOperationError(
                f"exact inscribed radius needs enumeration; limited to {_GRAPHIC_ENUM_MAX_EDGES} edges"
            )
        best = 1.0
        for size in range(1, self.dim + 1):
            for subset in itertools.combinations(range(self.dim), size):
                best = min(best, self.rank_of(subset) / math.sqrt(size))
        return float(best)

    def bounds(self) -> SetBounds:
        full_rank = self.rank_of(range(self.dim))
        return SetBounds(
            diameter=math.sqrt(min(self.dim, 2 * full_rank)),
            radius=math.sqrt(full_rank),
            lower_bound=self.lower_bound,
        )

    def coordinate_caps(self) -> Point:
        return np.array([0.0 if u == v else 1.0 for u, v in self.edges])

    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        raise UnsupportedOperationError("graphic matroid polytope has exponentially many facets")

    def to_spec(self) -> Dict[str, Any]:
        return {"family": self.family, "nodes": self.nodes, "edges": [list(e) for e in self.edges]}


# =============================================================================
# δ-INTERIOR
# =============================================================================

class InteriorSet(ConstraintSet):
    """
    K' = (1 - alpha) K + delta 1.

    alpha is stored, not recomputed, so LMO and membership stay consistent with
    the interior that was actually built.
    """

    family = "interior"

    def __init__(self, base: ConstraintSet, delta: float, alpha: float):
        if isinstance(base, InteriorSet):
            raise UnsupportedOperationError("nested interiors are not supported")
        if delta <= 0 or not (0.0 <= alpha < 1.0):
            raise PreconditionError("interior needs delta > 0 and alpha in [0, 1)")
        super().__init__(base.dim)
        self.base = base
        self.delta = float(delta)
        self.alpha = float(alpha)

    @property
    def supports_membership(self) -> bool:  # type: ignore[override]
        return self.base.supports_membership

    @property
    def lower_bound(self) -> Point:
        return np.full(self.dim, self.delta)

    def shrink_point(self, x: Any) -> Point:
        """Image of a base point: (1 - alpha) x + delta 1."""
        return (1.0 - self.alpha) * as_point(x, self.dim) + self.delta

    def _lmo(self, direction: Point) -> Point:
        return (1.0 - self.alpha) * self.base.lmo(direction) + self.delta

    def _contains_many(self, points: np.ndarray, tol: float) -> np.ndarray:
        return self.base.contains_many((points - self.delta) / (1.0 - self.alpha), tol)

    def _project(self, y: Point) -> Point:
        inner = self.base.project((y - self.delta) / (1.0 - self.alpha))
        return self.delta + (1.0 - self.alpha) * inner

    def inscribed_orthant_radius(self) -> float:
        raise UnsupportedOperationError("an interior does not contain the origin")

    def bounds(self) -> SetBounds:
        # the base constants remain valid upper bounds for the shrunk set
        base = self.base.bounds()
        return SetBounds(diameter=base.diameter, radius=base.radius, lower_bound=self.lower_bound)

    def discrepancy_bound(self) -> float:
        """Upper bound on sup_{x in K} d(x, K')."""
        base = self.base.bounds()
        r = self.base.inscribed_orthant_radius()
        ratio = base.radius / r
        return (math.sqrt(self.dim) * (ratio + 1.0) + ratio) * self.delta

    def coordinate_caps(self) -> Point:
        return (1.0 - self.alpha) * self.base.coordinate_caps() + self.delta

    def linear_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        A, b = self.base.linear_constraints()
        # A((x - δ1)/(1-α)) <= b  <=>  A x <= (1-α) b + δ A 1
        return A, (1.0 - self.alpha) * b + self.delta * A.sum(axis=1)

    def to_spec(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "base": self.base.to_spec(),
            "delta": self.delta,
            "alpha": self.alpha,
        }


def interior_alpha(base: ConstraintSet, delta: float) -> float:
    """alpha = (sqrt(d) + 1) delta / r."""
    r = base.inscribed_orthant_radius()
    if r <= 0:
        raise PreconditionError("set has no inscribed non-negative orthant ball (r = 0)")
    return (math.sqrt(base.dim) + 1.0) * delta / r


def shrink_interior(base: ConstraintSet, delta: float) -> InteriorSet:
    """Build the down-closed δ-interior (1 - α) K + δ 1."""
    if isinstance(base, InteriorSet):
        raise UnsupportedOperationError("nested interiors are not supported")
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    alpha = interior_alpha(base, delta)
    if alpha >= 1.0 - _ALPHA_SLACK:
        raise PreconditionError("delta too large for set")

    logger.debug("Interior built", family=base.family, delta=delta, alpha=alpha)
    return InteriorSet(base, delta, alpha)


# =============================================================================
# SPEC (DE)SERIALIZATION
# =============================================================================

def constraint_from_spec(spec: Mapping[str, Any]) -> ConstraintSet:
    """Build a constraint set from its JSON form, e.g. {"family": "uniform_matroid", "rank": 2, "dim": 8}."""
    data = dict(spec)
    family = data.pop("family", None)
    try:
        if family == "box":
            upper = data.get("upper")
            if upper is None:
                upper = [float(data.get("value", 1.0))] * int(data["dim"])
            return Box(upper)
        if family == "scaled_simplex":
            return ScaledSimplex(data["budget"], data["dim"], data.get("caps"))
        if family == "uniform_matroid":
            return UniformMatroidPolytope(data["rank"], data["dim"])
        if family == "partition_matroid":
            return PartitionMatroidPolytope(data["parts"], data["caps"])
        if family == "graphic_matroid":
            return GraphicMatroidPolytope(data["nodes"], data["edges"])
        if family == "interior":
            return InteriorSet(constraint_from_spec(data["base"]), data["delta"], data["alpha"])
    except KeyError as e:
        raise ConfigError(f"constraint family '{family}' is missing field {e}") from None

    raise ConfigError(f"Unknown constraint family '{family}'")


def constraint_families() -> List[str]:
    return [Box.family, ScaledSimplex.family, UniformMatroidPolytope.family,
            PartitionMatroidPolytope.family, GraphicMatroidPolytope.family]
