"""Partitions, g3 error, data quality and approximate FD discovery."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ArgumentError, CapacityError, UndefinedQualityError
from .relation import FD, Relation, natural_join

DEFAULT_JOIN_CAP = 2_000_000


@dataclass(frozen=True)
class Partition:
    """Equivalence classes of rows agreeing on ``over``.

    ``labels[i]`` is the class of row i; classes are numbered by their
    smallest row id.
    """

    over: frozenset[str]
    labels: np.ndarray
    k: int

    @property
    def classes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for i, c in enumerate(self.labels.tolist()):
            out[c].append(i)
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


@dataclass(frozen=True)
class AFDConfig:
    theta: float = 0.1
    max_lhs: int = 3

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ArgumentError(f"theta must lie in (0, 1), got {self.theta}")
        if self.max_lhs < 1:
            raise ArgumentError("max_lhs must be positive")


def labels(rel: Relation, attrs: Iterable[str]) -> tuple[np.ndarray, int]:
    """Class labels of the partition over ``attrs`` (cached on the relation).

    The empty set gives the single all-rows class.
    """
    cols = rel.ordered(attrs)
    return _labels(rel, cols)


def _labels(rel: Relation, cols: tuple[str, ...]) -> tuple[np.ndarray, int]:
    key = ("part", cols)
    hit = rel._cache.get(key)
    if hit is not None:
        return hit
    if not cols:
        res = (np.zeros(rel.n, dtype=np.int64), 1 if rel.n else 0)
    elif len(cols) == 1:
        c = rel.codes(cols[0])
        res = (c, int(c.max()) + 1 if rel.n else 0)
    else:
        base, _ = _labels(rel, cols[:-1])
        res = kernels.refine(base, rel.codes(cols[-1]))
    rel._cache[key] = res
    return res


def compute_partition(rel: Relation, attrs: Iterable[str]) -> Partition:
    attrs = frozenset(attrs)
    if not attrs:
        raise ArgumentError("partition needs a nonempty attribute set")
    lab, k = labels(rel, attrs)
    return Partition(attrs, lab, k)


def _check_fd(rel: Relation, fd: FD) -> None:
    for a in fd.attrs:
        rel.index(a)


def correct_mask(rel: Relation, fd: FD) -> np.ndarray:
    """Rows kept by the largest XY-class inside each X-class."""
    _check_fd(rel, fd)
    xl, kx = labels(rel, fd.lhs)
    xyl, kxy = labels(rel, fd.attrs)
    return kernels.correct_mask(xl, kx, xyl, kxy)


def correct_set(rel: Relation, fd: FD) -> frozenset[int]:
    return frozenset(np.flatnonzero(correct_mask(rel, fd)).tolist())


def quality_fd(rel: Relation, fd: FD) -> float:
    if rel.n == 0:
        raise UndefinedQualityError(f"{rel.name}: quality of an empty relation")
    return int(correct_mask(rel, fd).sum()) / rel.n


def g3_error(rel: Relation, fd: FD) -> float:
    """Smallest fraction of rows whose removal makes ``fd`` exact."""
    if rel.n == 0:
        raise UndefinedQualityError(f"{rel.name}: g3 error of an empty relation")
    return (rel.n - int(correct_mask(rel, fd).sum())) / rel.n


def quality_fds(rel: Relation, fds: Iterable[FD]) -> float:
    """Fraction of rows correct with respect to every FD at once."""
    if rel.n == 0:
        raise UndefinedQualityError(f"{rel.name}: quality of an empty relation")
    mask = np.ones(rel.n, dtype=np.bool_)
    for fd in fds:
        mask &= correct_mask(rel, fd)
    return int(mask.sum()) / rel.n


def discover_afds(rel: Relation, cfg: AFDConfig = AFDConfig()) -> list[FD]:
    """All minimal X -> Y with 1 <= |X| <= max_lhs and g3 error <= theta.

    Works level by level per right-hand side; a candidate is skipped when it
    contains an already accepted left-hand side.
    """
    if rel.n == 0:
        raise UndefinedQualityError(f"{rel.name}: cannot profile an empty relation")
    found: list[FD] = []
    for rhs in rel.schema:
        others = [a for a in rel.schema if a != rhs]
        accepted: list[frozenset[str]] = []
        for size in range(1, min(cfg.max_lhs, len(others)) + 1):
            for lhs in combinations(others, size):
                ls = frozenset(lhs)
                if any(a <= ls for a in accepted):
                    continue
                fd = FD(ls, rhs)
                if g3_error(rel, fd) <= cfg.theta + 1e-12:
                    accepted.append(ls)
                    found.append(fd)
    return sorted(found, key=fd_sort_key)


def fd_sort_key(fd: FD):
    return (len(fd.lhs), sorted(fd.lhs), fd.rhs)


def afd_report(rel: Relation, fds: Sequence[FD]) -> list[dict]:
    out = []
    for fd in fds:
        mask = correct_mask(rel, fd)
        out.append({"fd": str(fd), "quality": int(mask.sum()) / rel.n, "support": int(mask.sum())})
    return out


def join_all(instances: Sequence[Relation], cap: int = DEFAULT_JOIN_CAP) -> Relation:
    """Left-fold natural join.  Each step must share at least one attribute."""
    if not instances:
        raise ArgumentError("no instances to join")

    def step(acc: Relation, nxt: Relation) -> Relation:
        if not acc.attrs & nxt.attrs:
            raise ArgumentError(f"{acc.name} and {nxt.name} share no attribute")
        out = natural_join(acc, nxt)
        if out.n > cap:
            raise CapacityError(f"join size {out.n} exceeds cap {cap}; use the sampling estimator")
        return out

    return reduce(step, instances[1:], instances[0])


def quality_join(instances: Sequence[Relation], fds: Iterable[FD], cap: int = DEFAULT_JOIN_CAP) -> float:
    """Quality of the materialized join with respect to ``fds`` jointly."""
    joined = join_all(instances, cap)
    if joined.n == 0:
        raise UndefinedQualityError("quality of an empty join")
    return quality_fds(joined, fds)
