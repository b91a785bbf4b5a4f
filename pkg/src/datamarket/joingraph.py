"""Two-layer join graph: instance vertices over per-instance attribute-set lattices."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, CapacityError, CoverageError, DegenerateDistributionError
from .info import PriceModel, join_informativeness, price_projection
from .partition import AFDConfig, discover_afds
from .relation import FD, Relation
from .sampling import HashSampler, estimate_ji

MAX_LATTICE_ATTRS = 20
MAX_JOIN_ATTRS = 12

Pair = tuple[str, str]


def attr_key(attrs: Iterable[str]) -> tuple:
    """Deterministic ordering key for attribute sets: size, then names."""
    s = sorted(attrs)
    return (len(s), s)


def nonempty_subsets(attrs: Iterable[str]) -> list[frozenset[str]]:
    items = sorted(attrs)
    out = []
    for k in range(1, len(items) + 1):
        out.extend(frozenset(c) for c in combinations(items, k))
    return out


@dataclass(frozen=True)
class ASLattice:
    """All attribute subsets of size >= 2 of one instance."""

    instance: str
    attrs: tuple[str, ...]

    def __post_init__(self):
        if len(self.attrs) > MAX_LATTICE_ATTRS:
            raise CapacityError(f"{self.instance}: lattice over {len(self.attrs)} attributes is too large")

    @property
    def vertices(self) -> list[frozenset[str]]:
        out = []
        for k in range(2, len(self.attrs) + 1):
            out.extend(frozenset(c) for c in combinations(self.attrs, k))
        return out

    def __len__(self) -> int:
        m = len(self.attrs)
        return 2**m - m - 1

    def level(self, k: int) -> list[frozenset[str]]:
        return [frozenset(c) for c in combinations(self.attrs, k)] if k >= 2 else []

    def children(self, v: frozenset[str]) -> list[frozenset[str]]:
        return [v | {a} for a in self.attrs if a not in v]

    def parents(self, v: frozenset[str]) -> list[frozenset[str]]:
        if len(v) <= 2:
            return []
        return [v - {a} for a in sorted(v)]


@dataclass
class JoinGraph:
    """Instance layer plus lazily materialized attribute-set layer.

    AS-edges are grouped by (instance pair, join attributes J); every group
    shares one weight, so weights are stored per group.  ``None`` marks a
    group whose JI is undefined (degenerate distribution); such groups have
    no edges.
    """

    relations: dict[str, Relation]
    price_model: PriceModel
    afds: dict[str, list[FD]]
    groups: dict[Pair, dict[frozenset[str], float]]
    sources: frozenset[str] = frozenset()
    _price_cache: dict = field(default_factory=dict, repr=False)

    @property
    def names(self) -> list[str]:
        return sorted(self.relations)

    def schema(self, name: str) -> frozenset[str]:
        return self.relations[name].attrs

    def lattice(self, name: str) -> ASLattice:
        return ASLattice(name, self.relations[name].schema)

    def n_as_vertices(self) -> int:
        return sum(len(self.lattice(n)) for n in self.relations)

    @staticmethod
    def pair(a: str, b: str) -> Pair:
        return (a, b) if a <= b else (b, a)

    @property
    def i_edges(self) -> dict[Pair, float]:
        return {p: min(g.values()) for p, g in sorted(self.groups.items()) if g}

    def i_weight(self, a: str, b: str) -> float:
        g = self.groups.get(self.pair(a, b))
        if not g:
            raise ArgumentError(f"no I-edge between {a} and {b}")
        return min(g.values())

    def neighbors(self, name: str) -> list[str]:
        out = []
        for (a, b), g in self.groups.items():
            if not g:
                continue
            if a == name:
                out.append(b)
            elif b == name:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> dict[str, list[tuple[str, float]]]:
        adj: dict[str, list[tuple[str, float]]] = {n: [] for n in self.names}
        for (a, b), w in self.i_edges.items():
            adj[a].append((b, w))
            adj[b].append((a, w))
        for n in adj:
            adj[n].sort()
        return adj

    def join_choices(self, a: str, b: str) -> list[frozenset[str]]:
        """Join attribute sets with a defined weight, in deterministic order."""
        g = self.groups.get(self.pair(a, b), {})
        return sorted(g, key=attr_key)

    def edge_weight(self, a: str, b: str, j: Iterable[str]) -> float | None:
        return self.groups.get(self.pair(a, b), {}).get(frozenset(j))

    def as_edges(self, a: str, b: str) -> Iterator[tuple[frozenset[str], frozenset[str], frozenset[str], float]]:
        """Every AS-edge between the lattices of ``a`` and ``b`` as (v_a, v_b, J, w)."""
        g = self.groups.get(self.pair(a, b), {})
        la, lb = self.lattice(a).vertices, self.lattice(b).vertices
        for va in la:
            for vb in lb:
                j = va & vb
                if j and j in g:
                    yield va, vb, j, g[j]

    def price(self, name: str, attrs: Iterable[str]) -> float:
        """Price of the projection of ``name`` on ``attrs``; shopper-owned sources are free."""
        attrs = frozenset(attrs)
        if name in self.sources:
            return 0.0
        key = (name, attrs)
        p = self._price_cache.get(key)
        if p is None:
            p = price_projection(self.relations[name], attrs, self.price_model)
            self._price_cache[key] = p
        return p

    def fds_within(self, name: str, attrs: Iterable[str]) -> list[FD]:
        attrs = frozenset(attrs)
        return [fd for fd in self.afds.get(name, []) if fd.attrs <= attrs]

    def export(self) -> str:
        """Adjacency listing with weights and lattice sizes, deterministic order."""
        lines = []
        for n in self.names:
            rel = self.relations[n]
            src = " source" if n in self.sources else ""
            lines.append(f"I {n} m={rel.m} n={rel.n} as_vertices={len(self.lattice(n))}{src}")
        for (a, b), g in sorted(self.groups.items()):
            if not g:
                continue
            lines.append(f"E {a} {b} w={min(g.values()):.12g}")
            for j in sorted(g, key=attr_key):
                lines.append(f"  J {','.join(sorted(j))} w={g[j]:.12g}")
        return "\n".join(lines) + "\n"


def _ji(left: Relation, right: Relation, j: frozenset[str], sampler: HashSampler | None) -> float | None:
    try:
        if sampler is None or sampler.rate >= 1.0:
            return join_informativeness(left, right, j)
        return estimate_ji(left, right, j, sampler)
    except DegenerateDistributionError:
        return None


def build_join_graph(
    relations: Sequence[Relation],
    price_model: PriceModel = PriceModel(),
    sampler: HashSampler | None = None,
    afd: AFDConfig | None = AFDConfig(),
    sources: Iterable[str] = (),
) -> JoinGraph:
    """Build the graph over ``relations``.

    One JI value is computed per (instance pair, J) for every nonempty J
    inside the shared attributes.  A J is realizable as an AS-edge only when
    both instances have at least two attributes (the lattice floor).
    """
    if not relations:
        raise ArgumentError("need at least one relation")
    rels: dict[str, Relation] = {}
    for r in relations:
        if r.name in rels:
            raise ArgumentError(f"duplicate relation name {r.name!r}")
        rels[r.name] = r
    sources = frozenset(sources)
    unknown = sources - set(rels)
    if unknown:
        raise ArgumentError(f"unknown source instances {sorted(unknown)}")
    groups: dict[Pair, dict[frozenset[str], float]] = {}
    names = sorted(rels)
    for a, b in combinations(names, 2):
        ra, rb = rels[a], rels[b]
        shared = ra.attrs & rb.attrs
        if not shared:
            continue
        if len(shared) > MAX_JOIN_ATTRS:
            raise CapacityError(f"{a} and {b} share {len(shared)} attributes")
        g: dict[frozenset[str], float] = {}
        if ra.m >= 2 and rb.m >= 2:
            for j in nonempty_subsets(shared):
                w = _ji(ra, rb, j, sampler)
                if w is not None:
                    g[j] = w
        groups[(a, b)] = g
    afds = {}
    for n in names:
        afds[n] = discover_afds(rels[n], afd) if afd is not None and rels[n].n > 0 else []
    return JoinGraph(rels, price_model, afds, groups, sources)


@dataclass(frozen=True, order=True)
class TargetVertexSet:
    """One way to cover an attribute set.

    ``option`` is the cover of the attributes by groups; ``instances`` are
    the instances carrying those groups.  ``assign`` gives, for each
    instance, the requested attributes it holds.
    """

    option: tuple[tuple[str, ...], ...]
    instances: tuple[str, ...]
    assign: tuple[tuple[str, tuple[str, ...]], ...] = field(compare=False)


def minimal_covers(attrs: frozenset[str], groups: Sequence[frozenset[str]]) -> list[tuple[frozenset[str], ...]]:
    """Sets of groups whose union is ``attrs`` and from which no group can be dropped."""
    groups = sorted(set(groups), key=attr_key)
    out = []

    def rec(i: int, chosen: list[frozenset[str]], covered: frozenset[str]):
        if covered == attrs:
            if all(frozenset().union(*(c for c in chosen if c is not g)) != attrs for g in chosen):
                out.append(tuple(chosen))
            return
        if i == len(groups):
            return
        # a group adding nothing new has no private attribute, so cannot be in a minimal cover
        if not groups[i] <= covered:
            rec(i + 1, chosen + [groups[i]], covered | groups[i])
        rec(i + 1, chosen, covered)

    rec(0, [], frozenset())
    return sorted(out, key=lambda c: [attr_key(g) for g in c])


def enumerate_cover_sets(
    coverage: Mapping[frozenset[str], Sequence[str]], attrs: Iterable[str]
) -> list[TargetVertexSet]:
    """Cover sets from an explicit group -> instances table.

    For every minimal cover option, each group is placed on one of its
    instances; the distinct instance sets so reached are kept per option.
    """
    attrs = frozenset(attrs)
    if not attrs:
        raise ArgumentError("attribute set is empty")
    coverage = {frozenset(g): sorted(set(v)) for g, v in coverage.items() if v and frozenset(g) <= attrs}
    reachable = frozenset().union(*coverage) if coverage else frozenset()
    for a in sorted(attrs - reachable):
        raise CoverageError(a)
    result: set[TargetVertexSet] = set()
    for opt in minimal_covers(attrs, list(coverage)):
        seen: dict[frozenset[str], dict[str, set[str]]] = {}
        for placement in product(*(coverage[g] for g in opt)):
            inst = frozenset(placement)
            if inst in seen:
                continue
            assign: dict[str, set[str]] = {}
            for g, i in zip(opt, placement):
                assign.setdefault(i, set()).update(g)
            seen[inst] = assign
        label = tuple(tuple(sorted(g)) for g in opt)
        for inst, assign in seen.items():
            result.add(
                TargetVertexSet(
                    label,
                    tuple(sorted(inst)),
                    tuple(sorted((i, tuple(sorted(a))) for i, a in assign.items())),
                )
            )
    return sorted(result)


def coverage_table(
    schemas: Mapping[str, frozenset[str]], attrs: Iterable[str]
) -> dict[frozenset[str], list[str]]:
    """Every nonempty group of ``attrs`` held together by some instance, with its holders."""
    attrs = frozenset(attrs)
    table: dict[frozenset[str], list[str]] = {}
    for g in nonempty_subsets(attrs):
        holders = sorted(n for n, s in schemas.items() if g <= s)
        if holders:
            table[g] = holders
    return table


def enumerate_target_vertex_sets(
    graph: JoinGraph, attrs: Iterable[str], restrict: Iterable[str] | None = None
) -> list[TargetVertexSet]:
    """Cover sets of ``attrs`` using the graph's instances (optionally only ``restrict``)."""
    names = set(graph.relations) if restrict is None else set(restrict)
    schemas = {n: graph.schema(n) for n in names}
    return enumerate_cover_sets(coverage_table(schemas, attrs), attrs)


@dataclass(frozen=True)
class LandmarkIndex:
    """Shortest-path trees rooted at each landmark.

    ``dist[l][v]`` is the weighted distance from v to landmark l and
    ``parent[l][v]`` the next hop toward l.  Vertices in another component
    are absent.
    """

    landmarks: tuple[str, ...]
    dist: dict[str, dict[str, float]]
    parent: dict[str, dict[str, str | None]]

    def landmarks_of(self, v: str) -> set[str]:
        return {l for l in self.landmarks if v in self.dist[l]}

    def path(self, v: str, landmark: str) -> list[str]:
        par = self.parent[landmark]
        if v not in par:
            raise ArgumentError(f"{v} cannot reach landmark {landmark}")
        out = [v]
        while par[out[-1]] is not None:
            out.append(par[out[-1]])
        return out


def dijkstra(adj: Mapping[str, Sequence[tuple[str, float]]], root: str) -> tuple[dict[str, float], dict[str, str | None]]:
    """Shortest-path tree from ``root``; ties go to the lexicographically smaller predecessor."""
    dist = {root: 0.0}
    parent: dict[str, str | None] = {root: None}
    heap = [(0.0, root)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u]:
            nd = d + w
            if v not in dist or nd < dist[v] or (nd == dist[v] and v not in done and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, parent


def default_landmark_count(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def precompute_landmarks(graph: JoinGraph, count: int | None = None, seed: int = 0) -> LandmarkIndex:
    names = graph.names
    if count is None:
        count = default_landmark_count(len(names))
    if count < 1 or count > len(names):
        raise ArgumentError(f"landmark count {count} outside [1, {len(names)}]")
    rng = np.random.default_rng(seed)
    picks = sorted(names[i] for i in rng.choice(len(names), size=count, replace=False))
    adj = graph.adjacency()
    dist, parent = {}, {}
    for l in picks:
        dist[l], parent[l] = dijkstra(adj, l)
    return LandmarkIndex(tuple(picks), dist, parent)
