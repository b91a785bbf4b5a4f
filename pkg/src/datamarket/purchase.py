"""Budget-constrained vertical purchase of a single dataset.

The shopper buys a projection X of one relation.  The objective rewards
low AFD error inside X, the size of X, and attributes taking part in
minimal AFDs contained in X:

    F(X) = (1 - error(X)) + a * |X| / m + |U| / |X|,   a = m * theta
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .errors import ArgumentError, CapacityError, InfeasibleError
from .info import PriceModel, price_projection
from .kernels import _pykernels
from .partition import AFDConfig, discover_afds, g3_error, quality_fds
from .relation import FD, Relation

TABLE_LIMIT = 4096
MAX_BRUTE_ATTRS = 16
START_TRIES = 10_000


@dataclass(frozen=True)
class ObjectiveBreakdown:
    error_term: float
    size_term: float
    useful_term: float

    @property
    def total(self) -> float:
        return self.error_term + self.size_term + self.useful_term

    def to_dict(self) -> dict:
        return {
            "error_term": self.error_term,
            "size_term": self.size_term,
            "useful_term": self.useful_term,
            "total": self.total,
        }


@dataclass
class PurchaseProblem:
    relation: Relation
    budget: float
    theta: float = 0.1
    ell: int = 1000
    seed: int = 0
    price_model: PriceModel = PriceModel()
    max_lhs: int = 3
    error_mode: str = "max"
    afds: list[FD] = field(default=None)
    _price_cache: dict = field(default_factory=dict, repr=False)
    _f_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.budget < 0:
            raise ArgumentError("budget must be nonnegative")
        if not 0.0 < self.theta < 1.0:
            raise ArgumentError("theta must lie in (0, 1)")
        if self.ell < 1:
            raise ArgumentError("ell must be positive")
        if self.error_mode not in ("max", "joint"):
            raise ArgumentError("error_mode must be 'max' or 'joint'")
        if self.relation.m < 1:
            raise ArgumentError("relation has no attributes")
        if self.afds is None:
            self.afds = discover_afds(self.relation, AFDConfig(self.theta, self.max_lhs))

    @property
    def m(self) -> int:
        return self.relation.m

    @property
    def attrs(self) -> tuple[str, ...]:
        return self.relation.schema

    def to_set(self, mask: int) -> frozenset[str]:
        return frozenset(a for i, a in enumerate(self.attrs) if mask >> i & 1)

    def to_mask(self, attrs: Iterable[str]) -> int:
        m = 0
        for a in attrs:
            m |= 1 << self.relation.index(a)
        return m

    def price(self, attrs: Iterable[str]) -> float:
        attrs = frozenset(attrs)
        p = self._price_cache.get(attrs)
        if p is None:
            p = price_projection(self.relation, attrs, self.price_model) if attrs else self.price_model.b
            self._price_cache[attrs] = p
        return p

    def afds_within(self, attrs: Iterable[str]) -> list[FD]:
        attrs = frozenset(attrs)
        return [fd for fd in self.afds if fd.attrs <= attrs]

    def f(self, attrs: Iterable[str]) -> float:
        attrs = frozenset(attrs)
        v = self._f_cache.get(attrs)
        if v is None:
            v = objective(self.relation, attrs, self).total
            self._f_cache[attrs] = v
        return v


def useful_count(rel: Relation, x: Iterable[str], theta: float, afds: list[FD] | None = None, max_lhs: int = 3) -> int:
    """Sum of |L u {R}| over the minimal AFDs L -> R lying inside X."""
    x = frozenset(x)
    for a in x:
        rel.index(a)
    if afds is None:
        afds = discover_afds(rel, AFDConfig(theta, max_lhs))
    return sum(len(fd.attrs) for fd in afds if fd.attrs <= x)


def error_of(rel: Relation, fds: list[FD], mode: str = "max") -> float:
    if not fds:
        return 0.0
    if mode == "joint":
        return 1.0 - quality_fds(rel, fds)
    return max(g3_error(rel, fd) for fd in fds)


def objective(rel: Relation, x: Iterable[str], problem: PurchaseProblem) -> ObjectiveBreakdown:
    x = frozenset(x)
    if not x:
        raise ArgumentError("objective of the empty attribute set is undefined")
    for a in x:
        rel.index(a)
    fds = problem.afds_within(x)
    a = problem.m * problem.theta
    u = sum(len(fd.attrs) for fd in fds)
    return ObjectiveBreakdown(
        1.0 - error_of(rel, fds, problem.error_mode),
        a * len(x) / problem.m,
        u / len(x),
    )


def candidate_set(
    rel: Relation, s: Iterable[str], prices: Callable[[frozenset[str]], float], budget: float
) -> frozenset[str]:
    """S plus every outside attribute whose addition stays within budget."""
    s = frozenset(s)
    if prices(s) > budget:
        raise ArgumentError("current set is not affordable")
    return s | {a for a in rel.schema if a not in s and prices(s | {a}) <= budget}


class _LazyTable:
    """Bitmask-indexed view of a set function with memoization."""

    def __init__(self, problem: PurchaseProblem, fn):
        self.problem = problem
        self.fn = fn
        self.cache: dict[int, float] = {}

    def __getitem__(self, mask: int) -> float:
        mask = int(mask)
        v = self.cache.get(mask)
        if v is None:
            v = self.fn(mask)
            self.cache[mask] = v
        return v


@dataclass
class PurchaseResult:
    best: frozenset[str]
    breakdown: ObjectiveBreakdown
    price: float
    states: np.ndarray
    accepted: np.ndarray
    start: frozenset[str]

    def to_dict(self, problem: PurchaseProblem) -> dict:
        return {
            "attributes": [a for a in problem.attrs if a in self.best],
            "objective": self.breakdown.to_dict(),
            "price": self.price,
            "budget": problem.budget,
            "trace_length": int(len(self.accepted)),
            "acceptance_rate": float(self.accepted.mean()) if len(self.accepted) else 0.0,
            "start": [a for a in problem.attrs if a in self.start],
        }


def _f_of_mask(problem: PurchaseProblem, mask: int) -> float:
    return 0.0 if mask == 0 else problem.f(problem.to_set(mask))


def _price_of_mask(problem: PurchaseProblem, mask: int) -> float:
    return problem.price(problem.to_set(mask))


def random_start(problem: PurchaseProblem, rng: np.random.Generator) -> int:
    full = 1 << problem.m
    for _ in range(START_TRIES):
        mask = int(rng.integers(1, full))
        if problem.price(problem.to_set(mask)) <= problem.budget:
            return mask
    raise InfeasibleError(f"no affordable attribute set found in {START_TRIES} draws")


def mcmc_purchase(problem: PurchaseProblem) -> PurchaseResult:
    """Metropolis-Hastings over affordable attribute sets; returns the best visited."""
    rng = np.random.default_rng(problem.seed)
    start = random_start(problem, rng)
    uniforms = rng.random((problem.ell, 2))
    m = problem.m
    if (1 << m) <= TABLE_LIMIT:
        f = np.array([_f_of_mask(problem, s) for s in range(1 << m)], dtype=np.float64)
        price = np.array([_price_of_mask(problem, s) for s in range(1 << m)], dtype=np.float64)
        if not (f[1:] > 0).all():
            raise AssertionError("objective must be positive on nonempty sets")
        states, accepted = kernels.subset_chain(f, price, float(problem.budget), m, start, uniforms)
        fvals = f[states]
    else:
        f = _LazyTable(problem, lambda s: _f_of_mask(problem, s))
        price = _LazyTable(problem, lambda s: _price_of_mask(problem, s))
        states, accepted = _pykernels.subset_chain(f, price, float(problem.budget), m, start, uniforms)
        fvals = np.array([f[s] for s in states.tolist()])
    best_mask = int(states[int(np.argmax(fvals))])
    best = problem.to_set(best_mask)
    return PurchaseResult(
        best,
        objective(problem.relation, best, problem),
        problem.price(best),
        states,
        accepted,
        problem.to_set(start),
    )


def brute_force_bcqd(problem: PurchaseProblem) -> tuple[frozenset[str], float]:
    """Exact argmax of F over affordable nonempty subsets (ties to the smallest bitmask)."""
    m = problem.m
    if m > MAX_BRUTE_ATTRS:
        raise CapacityError(f"{m} attributes exceed the exhaustive guard of {MAX_BRUTE_ATTRS}")
    best, best_f = None, -np.inf
    for mask in range(1, 1 << m):
        s = problem.to_set(mask)
        if problem.price(s) > problem.budget:
            continue
        v = problem.f(s)
        if v > best_f:
            best, best_f = s, v
    if best is None:
        raise InfeasibleError("no affordable nonempty attribute set")
    return best, float(best_f)
