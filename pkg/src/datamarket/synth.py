"""Synthetic marketplaces built around latent entities.

Every row of every instance describes one entity.  Instances joined by an
edge share a few key attributes of different resolution: an exact entity
key, a coarse key that lumps entities together and a noisy key.  The source
attribute and the target attribute are both noisy views of a hidden class
of the entity, so how well they correlate after the join depends on which
keys the join uses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .relation import FD, DirtSpec, Relation, inject_inconsistency

SOURCE_ATTR = "S"
TARGET_ATTR = "T"


@dataclass(frozen=True)
class Marketplace:
    relations: tuple[Relation, ...]
    edges: tuple[tuple[str, str], ...]
    source: str
    target: str
    fds: dict

    def by_name(self) -> dict[str, Relation]:
        return {r.name: r for r in self.relations}


def make_marketplace(
    n_instances: int = 5,
    rows: int = 150,
    seed: int = 0,
    extra_edges: int = 0,
    keys_per_edge: int = 3,
    n_classes: int = 4,
    coverage: float = 0.85,
    source_noise: float = 0.1,
    target_noise: float = 0.2,
    dirt: float = 0.0,
) -> Marketplace:
    """Random tree over ``n_instances`` (plus ``extra_edges`` chords).

    Instance D0 holds the source attribute ``S`` and the instance farthest
    from it holds ``T``.  Each instance also carries a descriptor attribute
    determined by its entity class, giving one exact FD to corrupt when
    ``dirt`` > 0.
    """
    if n_instances < 1:
        raise ValueError("need at least one instance")
    rng = np.random.default_rng(seed)
    n_entities = max(rows, 30)
    classes = rng.integers(n_classes, size=n_entities)
    edges: list[tuple[int, int]] = [(int(rng.integers(i)), i) for i in range(1, n_instances)]
    pool = [(a, b) for a in range(n_instances) for b in range(a + 1, n_instances) if (a, b) not in edges]
    for k in rng.permutation(len(pool))[:extra_edges]:
        edges.append(pool[int(k)])
    edges.sort()

    # farthest instance from D0 in hops
    adj: dict[int, list[int]] = {i: [] for i in range(n_instances)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    depth = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    target = max(sorted(depth), key=lambda i: depth[i])

    coarse = max(2, n_entities // 40)
    edge_keys = {}
    for a, b in edges:
        noise = rng.permutation(n_entities)
        flip = rng.random(n_entities) < 0.3
        noisy = np.where(flip, noise, np.arange(n_entities))
        cols = {
            f"k{a}_{b}e": np.arange(n_entities),
            f"k{a}_{b}c": np.arange(n_entities) // coarse,
            f"k{a}_{b}n": noisy,
        }
        edge_keys[(a, b)] = dict(list(cols.items())[:keys_per_edge])

    s_view = np.where(rng.random(n_entities) < source_noise, rng.integers(n_classes, size=n_entities), classes)
    t_view = np.where(rng.random(n_entities) < target_noise, rng.integers(n_classes, size=n_entities), classes)

    relations = []
    fds = {}
    for i in range(n_instances):
        members = np.sort(rng.choice(n_entities, size=min(rows, int(round(coverage * n_entities))), replace=False))
        cols: dict[str, np.ndarray] = {}
        if i == 0:
            cols[SOURCE_ATTR] = np.array([f"s{v}" for v in s_view])
        for (a, b), keys in edge_keys.items():
            if i in (a, b):
                cols.update(keys)
        if i == target:
            cols[TARGET_ATTR] = np.array([f"t{v}" for v in t_view])
        desc = f"x{i}"
        cols[desc] = np.array([f"{desc}_{c}" for c in classes])
        schema = tuple(cols)
        data = [tuple(_cell(cols[a][e]) for a in schema) for e in members]
        rel = Relation(f"D{i}", schema, tuple(data))
        key_attr = next((a for a in schema if a.endswith("e")), None)
        inst_fds = [FD({key_attr}, desc)] if key_attr else []
        if dirt > 0 and inst_fds:
            rel = inject_inconsistency(rel, DirtSpec(dirt, frozenset(), seed * 7919 + i), inst_fds)
        fds[rel.name] = inst_fds
        relations.append(rel)
    return Marketplace(
        tuple(relations),
        tuple((f"D{a}", f"D{b}") for a, b in edges),
        "D0",
        f"D{target}",
        fds,
    )


def _cell(v):
    if isinstance(v, np.integer):
        return int(v)
    return str(v)
