"""Entropy, mutual information, join informativeness, correlation and pricing.

All logarithms are base 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ArgumentError, DegenerateDistributionError
from .partition import labels
from .relation import NUMERIC, Relation, full_outer_join_pairs


@dataclass(frozen=True)
class DiscreteDistribution:
    support: tuple
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.support) != len(self.probs):
            raise ArgumentError("support and probs differ in length")
        if any(p < 0 or not math.isfinite(p) for p in self.probs):
            raise ArgumentError("probabilities must be finite and nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-9:
            raise ArgumentError(f"probabilities sum to {math.fsum(self.probs)}, not 1")

    @classmethod
    def from_counts(cls, counts: dict) -> DiscreteDistribution:
        total = sum(counts.values())
        if total <= 0:
            raise ArgumentError("empty count table")
        return cls(tuple(counts), tuple(c / total for c in counts.values()))


@dataclass(frozen=True)
class PriceModel:
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ArgumentError("price slope a must be positive")
        if self.b < 0:
            raise ArgumentError("price intercept b must be nonnegative")

    def __call__(self, entropy_bits: float) -> float:
        return self.a * entropy_bits + self.b


def _plogp(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def shannon_entropy(d: DiscreteDistribution) -> float:
    return _plogp(np.asarray(d.probs, dtype=np.float64))


def entropy_of_counts(counts: Iterable[int]) -> float:
    c = np.asarray(list(counts), dtype=np.float64)
    total = c.sum()
    if total <= 0:
        return 0.0
    return _plogp(c / total)


def entropy(rel: Relation, attrs: Iterable[str]) -> float:
    """Empirical joint entropy of ``attrs`` (the partition entropy)."""
    lab, k = labels(rel, attrs)
    return float(kernels.label_entropy(lab, k))


def mutual_information(rel: Relation, x: Iterable[str], y: Iterable[str]) -> float:
    x, y = frozenset(x), frozenset(y)
    return entropy(rel, x) + entropy(rel, y) - entropy(rel, x | y)


def conditional_entropy(rel: Relation, x: Iterable[str], y: Iterable[str]) -> float:
    x, y = frozenset(x), frozenset(y)
    return entropy(rel, x | y) - entropy(rel, y)


def join_informativeness(left: Relation, right: Relation, on: Iterable[str]) -> float:
    """(H - I) / H of the key pair distribution in the full outer join.

    H runs over every pair including the (v, NULL) and (NULL, v) ones.  The
    marginal of a matched value v equals p(v, v), so each matched pair adds
    p(v, v) log(1 / p(v, v)) to I and unmatched pairs add nothing.  Disjoint
    keys therefore score 1 and a perfect one-to-one match scores 0.
    """
    pairs = full_outer_join_pairs(left, right, on)
    counts = np.fromiter(pairs.values(), dtype=np.float64, count=len(pairs))
    total = counts.sum()
    if total == 0:
        raise DegenerateDistributionError("outer join is empty")
    p = counts / total
    h = _plogp(p)
    if h <= 1e-15:
        raise DegenerateDistributionError("outer join key distribution has zero entropy")
    matched = np.fromiter((a is not None and b is not None for a, b in pairs), dtype=np.bool_, count=len(pairs))
    i = _plogp(p[matched])
    return min(1.0, max(0.0, (h - i) / h))


def cumulative_entropy(values: Sequence[float]) -> float:
    """-integral of F log2 F for the empirical CDF F of ``values``.

    F is a step function, so the integral is an exact finite sum over the
    gaps between consecutive distinct observations.
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    if n == 0:
        return 0.0
    xs, idx = np.unique(x, return_index=True)
    if len(xs) < 2:
        return 0.0
    # F just right of xs[j] is the share of samples <= xs[j]
    upto = idx[1:] / n
    gaps = np.diff(xs)
    return float(-(gaps * upto * np.log2(upto)).sum())


def conditional_cumulative_entropy(rel: Relation, x: str, y: Iterable[str]) -> float:
    """Sum over groups y of p(y) * h(X | Y = y)."""
    lab, k = labels(rel, y)
    col = np.array([np.nan if v is None else float(v) for v in rel.column(x)], dtype=np.float64)
    n = int((~np.isnan(col)).sum())
    if n == 0:
        return 0.0
    total = 0.0
    order = np.argsort(lab, kind="stable")
    bounds = np.flatnonzero(np.diff(lab[order])) + 1
    for grp in np.split(order, bounds):
        if len(grp) == 0:
            continue
        vals = col[grp]
        vals = vals[~np.isnan(vals)]
        total += (len(vals) / n) * cumulative_entropy(vals)
    return total


def correlation(joined: Relation, x: Iterable[str], y: Iterable[str]) -> float:
    """Entropy reduction of X given Y.

    A single numeric attribute X uses cumulative entropy; otherwise X is one
    compound categorical variable.  Rows with NULL in a numeric X are ignored
    by the cumulative branch.
    """
    x, y = frozenset(x), frozenset(y)
    if joined.n == 0:
        raise ArgumentError("correlation of an empty relation")
    if not x or not y:
        raise ArgumentError("correlation needs nonempty X and Y")
    for a in x | y:
        joined.index(a)
    if len(x) == 1:
        (a,) = x
        if joined.kind(a) == NUMERIC:
            col = [float(v) for v in joined.column(a) if v is not None]
            c = cumulative_entropy(col) - conditional_cumulative_entropy(joined, a, y)
            return max(0.0, c)
    return max(0.0, mutual_information(joined, x, y))


def price_projection(rel: Relation, attrs: Iterable[str], model: PriceModel = PriceModel()) -> float:
    """a * H(partition over attrs) + b."""
    if rel.n == 0:
        raise ArgumentError(f"{rel.name}: cannot price an empty relation")
    return model(entropy(rel, attrs))
