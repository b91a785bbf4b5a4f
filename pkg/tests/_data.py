"""Fixture builders shared by the test modules."""
from __future__ import annotations

import numpy as np

from datamarket.relation import FD, Relation


def five_rows() -> Relation:
    # five rows, A -> B with one majority class of size 2 inside a1
    return Relation("D", ("A", "B"), (("a1", "b1"), ("a1", "b1"), ("a1", "b2"), ("a1", "b3"), ("a2", "b2")))


AB = FD({"A"}, "B")
DE = FD({"D"}, "E")


def join_pair():
    """D1 over (A, B, C) and D2 over (C, D, E); their join has exactly five rows."""
    filler = [("a1", "b1", f"c{i + 4}") for i in range(1, 997)]
    tail = [("a1", "b2", "c1"), ("a1", "b2", "c2"), ("a1", "b3", "c3"), ("a1", "b3", "c3")]
    d1 = Relation("D1", ("A", "B", "C"), tuple(filler + tail))
    d2 = Relation(
        "D2",
        ("C", "D", "E"),
        (("c1", "d1", "e1"), ("c1", "d1", "e1"), ("c2", "d1", "e2"), ("c3", "d1", "e2"), ("c4", "d1", "e2")),
    )
    return d1, d2


# group -> instances table of the three-attribute cover example
COVER_EXAMPLE = {
    frozenset("AB"): ["v1", "v2", "v3"],
    frozenset("A"): ["v1", "v2", "v3", "v4"],
    frozenset("B"): ["v1", "v2", "v3", "v5"],
    frozenset("C"): ["v5", "v6"],
    frozenset("BC"): ["v5", "v7"],
}


def random_relation(rng: np.random.Generator, n: int, m: int, card: int = 4, prefix: str = "A") -> Relation:
    schema = tuple(f"{prefix}{i}" for i in range(m))
    cols = rng.integers(0, card, size=(n, m))
    return Relation("R", schema, tuple(tuple(int(v) for v in row) for row in cols))


def with_planted_fd(rng: np.random.Generator, n: int = 60, m: int = 4, card: int = 4):
    """A random relation plus an exact FD X -> Y planted through a random function of X."""
    base = rng.integers(0, card, size=(n, m))
    k = int(rng.integers(1, min(3, m - 1) + 1))
    lhs = [int(i) for i in rng.choice(m, size=k, replace=False)]
    rhs = int(rng.choice([i for i in range(m) if i not in lhs]))
    table = {}
    for row in base:
        key = tuple(row[lhs])
        if key not in table:
            table[key] = int(rng.integers(0, card))
        row[rhs] = table[key]
    schema = tuple(f"A{i}" for i in range(m))
    rel = Relation("R", schema, tuple(tuple(int(v) for v in r) for r in base))
    return rel, FD({schema[i] for i in lhs}, schema[rhs])


def estimator_chain(n: int = 2000, seed: int = 0):
    """Three instances on a path with one-to-one keys.

    S (in D1) and T (in D3) are noisy copies of one skewed binary variable;
    U (in D2) is a noisy copy of S, and G -> H is an approximate FD across
    D1 and D2 with a clear majority per G value.
    """
    rng = np.random.default_rng(seed)
    s = (rng.random(n) < 0.3).astype(int)
    t = np.where(rng.random(n) < 0.1, 1 - s, s)
    u = np.where(rng.random(n) < 0.05, 1 - s, s)
    g = rng.integers(0, 10, n)
    h = np.where(rng.random(n) < 0.15, rng.integers(0, 3, n), g % 3)
    k23 = rng.permutation(n)
    keep1 = rng.random(n) < 0.9
    keep3 = rng.random(n) < 0.9
    d1 = Relation("D1", ("k12", "S", "G"), tuple((i, f"s{s[i]}", int(g[i])) for i in range(n) if keep1[i]))
    d2 = Relation("D2", ("k12", "k23", "H", "U"), tuple((i, int(k23[i]), int(h[i]), f"u{u[i]}") for i in range(n)))
    d3 = Relation("D3", ("k23", "T"), tuple((int(k23[i]), f"t{t[i]}") for i in range(n) if keep3[i]))
    return d1, d2, d3


def budget_chain(n: int = 400, seed: int = 0):
    """Path D0 - D1 - D2 whose edges each offer an exact, a medium and a binary key.

    Exact keys are expensive and carry the S-T association through; coarse
    keys are cheap and blur it.
    """
    rng = np.random.default_rng(seed)
    cls = rng.integers(0, 2, n)
    s = np.where(rng.random(n) < 0.1, 1 - cls, cls)
    t = np.where(rng.random(n) < 0.1, 1 - cls, cls)
    p1, p2 = rng.permutation(n), rng.permutation(n)

    def keys(tag, p):
        return {f"{tag}e": p, f"{tag}m": p // 20, f"{tag}c": p // (n // 2)}

    def rel(name, cols):
        schema = tuple(cols)
        rows = tuple(
            tuple(int(cols[a][i]) if a[0] in "ab" else f"{a}{cols[a][i]}" for a in schema) for i in range(n)
        )
        return Relation(name, schema, rows)

    k01, k12 = keys("a", p1), keys("b", p2)
    return [rel("D0", {"S": s, **k01}), rel("D1", {**k01, **k12}), rel("D2", {**k12, "T": t})]


def purchase_fixture(n: int = 150, seed: int = 0) -> Relation:
    """Six attributes with two exact FDs (A -> B, E -> F) and a near-FD between C and D."""
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 8, n)
    b = a // 2
    c = rng.integers(0, 5, n)
    d = (c + rng.integers(0, 2, n)) % 5
    e = rng.integers(0, 20, n)
    f = e % 4
    cols = [x.tolist() for x in (a, b, c, d, e, f)]
    return Relation("R", tuple("ABCDEF"), tuple(zip(*cols)))
