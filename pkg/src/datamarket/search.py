"""Online acquisition search: landmark I-graphs, MCMC over join attributes, oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ArgumentError, CapacityError
from .info import correlation
from .joingraph import (
    JoinGraph,
    LandmarkIndex,
    TargetVertexSet,
    dijkstra,
    enumerate_target_vertex_sets,
    precompute_landmarks,
)
from .partition import quality_fds
from .relation import Relation
from .sampling import HashSampler, JoinStep, ResampleConfig, mix_seed, resampled_join

Pair = tuple[str, str]


@dataclass(frozen=True)
class AcquisitionRequest:
    a_s: frozenset[str]
    a_t: frozenset[str]
    budget: float = math.inf
    alpha: float = math.inf
    beta: float = 0.0
    ell: int = 500
    seed: int = 0
    sources: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "a_s", frozenset(self.a_s))
        object.__setattr__(self, "a_t", frozenset(self.a_t))
        object.__setattr__(self, "sources", frozenset(self.sources))
        if not self.a_s or not self.a_t:
            raise ArgumentError("source and target attribute sets must be nonempty")
        if self.budget < 0 or self.alpha < 0:
            raise ArgumentError("budget and alpha must be nonnegative")
        if not 0.0 <= self.beta <= 1.0:
            raise ArgumentError("beta must lie in [0, 1]")
        if self.ell < 1:
            raise ArgumentError("ell must be positive")


@dataclass(frozen=True)
class IGraph:
    """A tree of instances connecting one source cover set and one target cover set."""

    nodes: tuple[str, ...]
    edges: tuple[Pair, ...]
    weight: float
    source_set: TargetVertexSet
    target_set: TargetVertexSet

    @property
    def root(self) -> str:
        return self.source_set.instances[0]

    @property
    def terminals(self) -> frozenset[str]:
        return frozenset(self.source_set.instances) | frozenset(self.target_set.instances)

    def cover(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}
        for name, attrs in self.source_set.assign + self.target_set.assign:
            out[name] = out.get(name, frozenset()) | frozenset(attrs)
        return out


@dataclass(frozen=True)
class TargetGraph:
    """A concrete purchase: projections joined along a tree, with its measured properties."""

    order: tuple[str, ...]
    projections: tuple[tuple[str, tuple[str, ...]], ...]
    steps: tuple[tuple[int, tuple[str, ...]], ...]
    price: float
    weight: float
    quality: float
    corr: float

    def projection(self, name: str) -> frozenset[str]:
        return frozenset(dict(self.projections)[name])

    @property
    def edges(self) -> list[tuple[str, str, tuple[str, ...]]]:
        return [(self.order[p], self.order[k + 1], j) for k, (p, j) in enumerate(self.steps)]

    def queries(self) -> list[dict]:
        return [{"instance": n, "attributes": list(a)} for n, a in self.projections]

    def to_dict(self) -> dict:
        return {
            "instances": list(self.order),
            "queries": self.queries(),
            "edges": [{"left": a, "right": b, "on": list(j)} for a, b, j in self.edges],
            "price": self.price,
            "weight": self.weight,
            "quality": self.quality,
            "correlation": self.corr,
        }


@dataclass
class SearchReport:
    target: TargetGraph | None
    trace: list[tuple[bool, float]] = field(default_factory=list)
    igraph: IGraph | None = None
    evaluations: int = 0
    reason: str | None = None

    @property
    def corr(self) -> float:
        return self.target.corr if self.target else 0.0

    def to_dict(self) -> dict:
        return {
            "result": self.target.to_dict() if self.target else None,
            "reason": self.reason,
            "igraph": None
            if self.igraph is None
            else {"nodes": list(self.igraph.nodes), "edges": [list(e) for e in self.igraph.edges], "weight": self.igraph.weight},
            "evaluations": self.evaluations,
            "trace": [{"accepted": a, "corr": c} for a, c in self.trace],
        }


def _stable_seed(seed: int, *names: str) -> int:
    return mix_seed(seed, kernels.hash64("\x1f".join(names).encode("utf-8"), 0))


class Evaluator:
    """Measures CORR and Q of candidate target graphs on the graph's relations.

    With ``rate`` < 1 each join edge gets its own correlated sampler and
    intermediates above ``resample.eta`` are re-sampled.  An empty sampled
    join is retried up to ``retries`` times on derived seeds before the
    candidate counts as unmeasurable.  Results are memoized per candidate.
    """

    def __init__(
        self,
        graph: JoinGraph,
        a_s: Iterable[str],
        a_t: Iterable[str],
        rate: float = 1.0,
        resample: ResampleConfig = ResampleConfig(),
        seed: int = 0,
        retries: int = 8,
    ):
        self.graph = graph
        self.a_s = frozenset(a_s)
        self.a_t = frozenset(a_t)
        self.rate = rate
        self.resample = resample
        self.seed = seed
        self.retries = retries
        self.memo: dict = {}
        self.calls = 0
        self.retried = 0

    def measure(self, order: Sequence[str], projections: Mapping[str, frozenset[str]], steps: Sequence[JoinStep]):
        """(corr, quality), or None when the join is empty."""
        key = (tuple(order), tuple((n, projections[n]) for n in order), tuple(steps))
        self.calls += 1
        if key in self.memo:
            return self.memo[key]
        chain = [self.graph.relations[n].project(projections[n], name=n) for n in order]
        if len(chain) == 1:
            joined = chain[0]
        else:
            joined = self._sampled_join(order, chain, steps)
        if joined.n == 0:
            res = None
        else:
            fds = [fd for n in order for fd in self.graph.fds_within(n, projections[n])]
            res = (correlation(joined, self.a_s, self.a_t), quality_fds(joined, fds))
        self.memo[key] = res
        return res


    def _sampled_join(self, order, chain, steps) -> Relation:
        # an empty sample is an estimation failure, not an empty join: retry on derived seeds
        for attempt in range(self.retries + 1):
            seed = self.seed if attempt == 0 else mix_seed(self.seed, attempt)
            samplers = [
                HashSampler(_stable_seed(seed, *sorted((order[s.parent], order[k + 1]))), self.rate)
                for k, s in enumerate(steps)
            ]
            cfg = self.resample if attempt == 0 else replace(self.resample, seed=mix_seed(self.resample.seed, attempt))
            joined = resampled_join(chain, steps, samplers, cfg)
            if joined.n > 0 or self.rate >= 1.0 and math.isinf(self.resample.eta):
                return joined
            self.retried += 1
        return joined


def _tree_order(root: str, nodes: Iterable[str], edges: Iterable[Pair]) -> tuple[list[str], list[tuple[int, str, str]]]:
    """Depth-first order from ``root``; returns nodes and (parent index, parent, child) per step."""
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    order, steps, seen = [root], [], {root}
    stack = [(root, iter(sorted(adj[root])))]
    while stack:
        u, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            continue
        if nxt in seen:
            continue
        seen.add(nxt)
        steps.append((order.index(u), u, nxt))
        order.append(nxt)
        stack.append((nxt, iter(sorted(adj[nxt]))))
    if len(order) != len(adj):
        raise ArgumentError("target graph is not connected")
    return order, steps


def build_candidate(
    graph: JoinGraph,
    ig: IGraph,
    choice: Mapping[Pair, frozenset[str]],
    ev: Evaluator,
) -> tuple[TargetGraph | None, bool]:
    """Materialize the target graph for one join-attribute choice per edge.

    Projection of an instance = its cover attributes plus the chosen join
    attributes of its incident edges.  The effective join attributes of an
    edge are the intersection of its two projections.  Returns the graph
    (None when an edge has no defined weight or the join is empty) and
    whether it is measurable.
    """
    cover = ig.cover()
    proj: dict[str, frozenset[str]] = {n: cover.get(n, frozenset()) for n in ig.nodes}
    for (a, b), j in choice.items():
        proj[a] = proj[a] | j
        proj[b] = proj[b] | j
    order, raw_steps = _tree_order(ig.root, ig.nodes, ig.edges)
    steps, weight = [], 0.0
    for pi, parent, child in raw_steps:
        j = proj[parent] & proj[child]
        w = graph.edge_weight(parent, child, j)
        if w is None:
            return None, False
        weight += w
        steps.append(JoinStep(pi, j))
    price = sum(graph.price(n, proj[n]) for n in order)
    m = ev.measure(order, proj, steps)
    if m is None:
        return None, False
    corr, quality = m
    tg = TargetGraph(
        tuple(order),
        tuple((n, graph.relations[n].ordered(proj[n])) for n in order),
        tuple((s.parent, tuple(sorted(s.on))) for s in steps),
        price,
        weight,
        quality,
        corr,
    )
    return tg, True


def feasible(tg: TargetGraph | None, req: AcquisitionRequest, tol: float = 1e-12) -> bool:
    return (
        tg is not None
        and tg.price <= req.budget + tol
        and tg.weight <= req.alpha + tol
        and tg.quality >= req.beta - tol
    )


def cover_sets(graph: JoinGraph, req: AcquisitionRequest) -> tuple[list[TargetVertexSet], list[TargetVertexSet]]:
    restrict = req.sources if req.sources else None
    sv = enumerate_target_vertex_sets(graph, req.a_s, restrict)
    tv = enumerate_target_vertex_sets(graph, req.a_t)
    return _dedupe_sets(sv), _dedupe_sets(tv)


def _dedupe_sets(sets: Sequence[TargetVertexSet]) -> list[TargetVertexSet]:
    # the same instances with the same per-instance attributes lead to the same purchase
    seen, out = set(), []
    for s in sets:
        k = (s.instances, s.assign)
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


def _prune(nodes: set[str], edges: set[Pair], terminals: frozenset[str]) -> None:
    changed = True
    while changed:
        changed = False
        deg = {n: 0 for n in nodes}
        for a, b in edges:
            deg[a] += 1
            deg[b] += 1
        for n in sorted(nodes):
            if n not in terminals and deg[n] <= 1 and len(nodes) > 1:
                nodes.discard(n)
                for e in [e for e in edges if n in e]:
                    edges.discard(e)
                changed = True


def _tree_from_paths(graph: JoinGraph, paths: Iterable[list[str]], terminals: frozenset[str]):
    nodes: set[str] = set(terminals)
    edges: set[Pair] = set()
    for p in paths:
        nodes.update(p)
        for u, v in zip(p, p[1:]):
            edges.add(JoinGraph.pair(u, v))
    _prune(nodes, edges, terminals)
    weight = sum(graph.i_weight(a, b) for a, b in edges)
    return nodes, edges, weight


def find_min_igraph(graph: JoinGraph, index: LandmarkIndex, req: AcquisitionRequest) -> IGraph | None:
    """Cheapest landmark-routed tree over all (source set, target set) pairs.

    For each common landmark the stored shortest paths from every terminal
    are united; non-terminal leaves are pruned.  Pairs without a common
    landmark fall back to shortest paths from one terminal.  Returns None
    when nothing connects or the best weight exceeds alpha.
    """
    svs, tvs = cover_sets(graph, req)
    adj = None
    best, best_key = None, None
    for sv in svs:
        for tv in tvs:
            terms = frozenset(sv.instances) | frozenset(tv.instances)
            options = []
            if len(terms) == 1:
                options.append((set(terms), set(), 0.0))
            else:
                common = set(index.landmarks)
                for t in terms:
                    common &= index.landmarks_of(t)
                for l in sorted(common):
                    options.append(_tree_from_paths(graph, (index.path(t, l) for t in sorted(terms)), terms))
                if not common:
                    if adj is None:
                        adj = graph.adjacency()
                    root = min(terms)
                    dist, parent = dijkstra(adj, root)
                    if all(t in dist for t in terms):
                        paths = []
                        for t in sorted(terms):
                            p = [t]
                            while parent[p[-1]] is not None:
                                p.append(parent[p[-1]])
                            paths.append(p)
                        options.append(_tree_from_paths(graph, paths, terms))
            for nodes, edges, w in options:
                key = (w, len(nodes), tuple(sorted(nodes)), sv, tv)
                if best_key is None or key < best_key:
                    best_key = key
                    best = IGraph(tuple(sorted(nodes)), tuple(sorted(edges)), w, sv, tv)
    if best is None or best.weight > req.alpha + 1e-12:
        return None
    return best


def _initial_choice(graph: JoinGraph, ig: IGraph) -> dict[Pair, frozenset[str]]:
    out = {}
    for a, b in ig.edges:
        choices = graph.join_choices(a, b)
        out[(a, b)] = min(choices, key=lambda j: graph.edge_weight(a, b, j))
    return out


def acceptance(corr_new: float, corr_cur: float) -> float:
    """Metropolis acceptance min(1, new / current); an incumbent of 0 always yields."""
    if corr_cur <= 0.0:
        return 1.0
    return min(1.0, corr_new / corr_cur)


def find_target_graph(graph: JoinGraph, ig: IGraph, req: AcquisitionRequest, ev: Evaluator) -> SearchReport:
    """Metropolis walk over join-attribute choices of the I-graph edges.

    Each iteration picks an edge with at least two choices, proposes a
    different join-attribute set for it, and, when the proposal meets the
    price, weight and quality constraints, accepts it with probability
    min(1, CORR'/CORR).  The best feasible graph seen is returned.
    """
    rng = np.random.default_rng(req.seed)
    state = _initial_choice(graph, ig)
    cur, _ = build_candidate(graph, ig, state, ev)
    cur_corr = cur.corr if cur is not None else 0.0
    best = cur if feasible(cur, req) else None
    report = SearchReport(None, igraph=ig)
    movable = [e for e in ig.edges if len(graph.join_choices(*e)) >= 2]
    for _ in range(req.ell):
        if not movable:
            report.trace.append((False, cur_corr))
            continue
        e = movable[int(rng.integers(len(movable)))]
        alts = [j for j in graph.join_choices(*e) if j != state[e]]
        j_new = alts[int(rng.integers(len(alts)))]
        u = float(rng.random())
        proposal = dict(state)
        proposal[e] = j_new
        cand, _ = build_candidate(graph, ig, proposal, ev)
        report.evaluations += 1
        accepted = False
        if feasible(cand, req) and u < acceptance(cand.corr, cur_corr):
            state, cur, cur_corr, accepted = proposal, cand, cand.corr, True
            if best is None or cand.corr > best.corr:
                best = cand
        report.trace.append((accepted, cur_corr))
    report.target = best
    if best is None:
        report.reason = "no sampled target graph satisfied the constraints"
    return report


def acquire(
    graph: JoinGraph,
    req: AcquisitionRequest,
    index: LandmarkIndex | None = None,
    ev: Evaluator | None = None,
    landmarks: int | None = None,
) -> SearchReport:
    """Step 1 then Step 2."""
    if index is None:
        index = precompute_landmarks(graph, landmarks, req.seed)
    if ev is None:
        ev = Evaluator(graph, req.a_s, req.a_t, seed=req.seed)
    ig = find_min_igraph(graph, index, req)
    if ig is None:
        return SearchReport(None, reason="no instance graph within the informativeness cap")
    return find_target_graph(graph, ig, req, ev)


def _spanning_trees(nodes: Sequence[str], edges: Sequence[Pair]) -> Iterator[tuple[Pair, ...]]:
    k = len(nodes) - 1
    for combo in combinations(edges, k):
        parent = {n: n for n in nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for a, b in combo:
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            parent[ra] = rb
        if ok:
            yield combo


def steiner_trees(graph: JoinGraph, terminals: frozenset[str], cap: int = 200_000) -> list[tuple[tuple[str, ...], tuple[Pair, ...]]]:
    """All trees in the I-layer containing ``terminals`` whose leaves are terminals."""
    if len(terminals) == 1:
        return [(tuple(terminals), ())]
    others = [n for n in graph.names if n not in terminals]
    all_edges = sorted(graph.i_edges)
    budget = 0
    out = []
    for r in range(len(others) + 1):
        for extra in combinations(others, r):
            nodes = sorted(terminals | set(extra))
            ns = set(nodes)
            edges = [e for e in all_edges if e[0] in ns and e[1] in ns]
            if len(edges) < len(nodes) - 1:
                continue
            budget += math.comb(len(edges), len(nodes) - 1)
            if budget > cap:
                raise CapacityError(f"more than {cap} edge subsets to enumerate")
            for tree in _spanning_trees(nodes, edges):
                deg = {n: 0 for n in nodes}
                for a, b in tree:
                    deg[a] += 1
                    deg[b] += 1
                if all(deg[n] >= 2 or n in terminals for n in nodes):
                    out.append((tuple(nodes), tree))
    return out


def enumerate_candidates(
    graph: JoinGraph,
    req: AcquisitionRequest,
    max_instances: int = 8,
    cap: int = 200_000,
) -> Iterator[tuple[IGraph, dict[Pair, frozenset[str]]]]:
    """Every (tree, join-attribute choice) candidate, deterministic order."""
    if len(graph.relations) > max_instances:
        raise CapacityError(f"{len(graph.relations)} instances exceed the oracle guard of {max_instances}")
    svs, tvs = cover_sets(graph, req)
    total = 0
    for sv in svs:
        for tv in tvs:
            terms = frozenset(sv.instances) | frozenset(tv.instances)
            for nodes, tree in steiner_trees(graph, terms, cap):
                w = sum(graph.i_weight(a, b) for a, b in tree)
                ig = IGraph(nodes, tree, w, sv, tv)
                choices = [graph.join_choices(a, b) for a, b in tree]
                n = math.prod(len(c) for c in choices)
                total += n
                if total > cap:
                    raise CapacityError(f"more than {cap} candidate target graphs")
                for pick in product(*choices):
                    yield ig, dict(zip(tree, pick))


def brute_force(graph: JoinGraph, req: AcquisitionRequest, ev: Evaluator, max_instances: int = 8, cap: int = 200_000):
    """Exact feasible optimum by exhaustive enumeration.  Returns (best, distinct candidates)."""
    best, seen = None, set()
    for ig, choice in enumerate_candidates(graph, req, max_instances, cap):
        tg, _ = build_candidate(graph, ig, choice, ev)
        if tg is None:
            continue
        key = (tg.order, tg.projections, tg.steps)
        if key in seen:
            continue
        seen.add(key)
        if feasible(tg, req) and (best is None or tg.corr > best.corr):
            best = tg
    return best, len(seen)


def budget_bounds(graph: JoinGraph, req: AcquisitionRequest, max_instances: int = 8, cap: int = 200_000) -> tuple[float, float]:
    """Minimum and maximum price over all candidate target graphs (LB, UB)."""
    prices = []
    for ig, choice in enumerate_candidates(graph, req, max_instances, cap):
        cover = ig.cover()
        proj = {n: cover.get(n, frozenset()) for n in ig.nodes}
        for (a, b), j in choice.items():
            proj[a] |= j
            proj[b] |= j
        prices.append(sum(graph.price(n, proj[n]) for n in ig.nodes))
    if not prices:
        raise ArgumentError("no candidate target graph connects the request")
    return min(prices), max(prices)


def budget_from_ratio(lb: float, ub: float, r: float) -> float:
    if not 0.0 < r <= 1.0:
        raise ArgumentError("budget ratio must lie in (0, 1]")
    if r * ub < lb - 1e-12:
        raise ArgumentError(f"budget ratio {r} gives {r * ub:.6g}, below the cheapest candidate {lb:.6g}")
    return r * ub


def materialize(relations: Mapping[str, Relation], tg: TargetGraph) -> Relation:
    """Exact join of the target graph's projections over ``relations``."""
    chain = [relations[n].project(tg.projection(n), name=n) for n in tg.order]
    if len(chain) == 1:
        return chain[0]
    steps = [JoinStep(p, frozenset(j)) for p, j in tg.steps]
    return resampled_join(chain, steps, HashSampler(0, 1.0))


def real_correlation(relations: Mapping[str, Relation], tg: TargetGraph | None, a_s, a_t) -> float:
    """Correlation of the purchase measured on full data (0 for no result or an empty join)."""
    if tg is None:
        return 0.0
    joined = materialize(relations, tg)
    if joined.n == 0:
        return 0.0
    return correlation(joined, a_s, a_t)


def correlation_difference(opt: float, heur: float) -> float:
    """(opt - heur) / opt."""
    if not opt > 0:
        raise ArgumentError("optimal correlation must be positive")
    return (opt - heur) / opt
