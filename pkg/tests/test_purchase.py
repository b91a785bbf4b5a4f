from collections import Counter
from itertools import combinations

import numpy as np
import pytest

from _data import purchase_fixture, five_rows
from datamarket import purchase as pm
from datamarket.errors import ArgumentError, CapacityError, InfeasibleError
from datamarket.info import price_projection
from datamarket.kernels import _pykernels
from datamarket.purchase import (
    PurchaseProblem,
    brute_force_bcqd,
    candidate_set,
    error_of,
    mcmc_purchase,
    objective,
    useful_count,
)
from datamarket.relation import FD, Relation


def test_objective_by_hand_five_rows():
    # theta 0.5 keeps both A->B (error 0.4) and B->A (error 0.2)
    rel = five_rows()
    p = PurchaseProblem(rel, budget=10.0, theta=0.5)
    assert set(p.afds) == {FD({"A"}, "B"), FD({"B"}, "A")}
    br = objective(rel, {"A", "B"}, p)
    assert br.error_term == pytest.approx(0.6)
    assert br.size_term == pytest.approx(1.0)
    # both dependencies use both attributes: (2 + 2) / 2, above 1
    assert br.useful_term == pytest.approx(2.0)
    assert br.total == pytest.approx(3.6)
    assert objective(rel, {"A"}, p).total == pytest.approx(1.0 + 0.5)
    assert useful_count(rel, {"A", "B"}, 0.5) == 4


def test_objective_exact_fd():
    rel = Relation("R", ("A", "B"), ((1, 1), (2, 1), (3, 2), (4, 2)))
    p = PurchaseProblem(rel, budget=10.0, theta=0.1)
    assert p.afds == [FD({"A"}, "B")]
    assert p.f({"A", "B"}) == pytest.approx(1.0 + 0.2 + 1.0)
    assert p.f({"B"}) == pytest.approx(1.1)
    with pytest.raises(ArgumentError):
        objective(rel, set(), p)
    with pytest.raises(ArgumentError):
        objective(rel, {"Z"}, p)


def counter_g3(rel, fd):
    li = [rel.index(a) for a in sorted(fd.lhs)]
    ri = rel.index(fd.rhs)
    groups = {}
    for r in rel.rows:
        groups.setdefault(tuple(r[i] for i in li), Counter())[r[ri]] += 1
    return sum(sum(c.values()) - max(c.values()) for c in groups.values()) / rel.n


def test_error_aggregates():
    rel = purchase_fixture()
    fds = [FD({"C"}, "D"), FD({"A"}, "B")]
    assert error_of(rel, fds) == pytest.approx(max(counter_g3(rel, fd) for fd in fds))
    assert error_of(rel, []) == 0.0
    assert error_of(rel, [FD({"A"}, "B")], "joint") == 0.0
    with pytest.raises(ArgumentError):
        PurchaseProblem(rel, 1.0, error_mode="mean")


def test_candidate_set():
    rel = purchase_fixture()
    prices = lambda s: price_projection(rel, s)
    s = frozenset({"A"})
    budget = prices({"A", "B"}) + 1e-9
    c = candidate_set(rel, s, prices, budget)
    # B is determined by A, so adding it is free; every other addition must also fit
    assert "B" in c and "A" in c
    for a in rel.schema:
        assert (a in c) == (a in s or prices(s | {a}) <= budget)
    with pytest.raises(ArgumentError):
        candidate_set(rel, {"A", "C", "E"}, prices, 0.1)


def oracle_opt(p):
    best = -np.inf
    for k in range(1, p.m + 1):
        for c in combinations(p.attrs, k):
            if price_projection(p.relation, c) <= p.budget:
                best = max(best, p.f(c))
    return best


@pytest.mark.parametrize("frac", [0.3, 0.6, 1.0])
def test_brute_force_matches_oracle(frac):
    rel = purchase_fixture()
    p = PurchaseProblem(rel, budget=frac * price_projection(rel, rel.schema))
    best, f = brute_force_bcqd(p)
    assert f == pytest.approx(oracle_opt(p))
    assert p.price(best) <= p.budget


@pytest.mark.parametrize("seed", range(5))
def test_mcmc_close_to_optimum(seed):
    rel = purchase_fixture(seed=seed)
    p = PurchaseProblem(rel, budget=0.6 * price_projection(rel, rel.schema), ell=3000, seed=seed)
    res = mcmc_purchase(p)
    _, opt = brute_force_bcqd(p)
    assert res.price <= p.budget
    assert res.breakdown.total >= 0.9 * opt
    assert all(p.price(p.to_set(int(s))) <= p.budget for s in res.states)
    d = res.to_dict(p)
    assert d["trace_length"] == 3000 and 0 <= d["acceptance_rate"] <= 1


def test_lazy_path_matches_table_path(monkeypatch):
    rel = purchase_fixture()
    budget = 0.5 * price_projection(rel, rel.schema)
    a = mcmc_purchase(PurchaseProblem(rel, budget, ell=500, seed=3))
    monkeypatch.setattr(pm, "TABLE_LIMIT", 1)
    b = mcmc_purchase(PurchaseProblem(rel, budget, ell=500, seed=3))
    assert np.array_equal(a.states, b.states) and np.array_equal(a.accepted, b.accepted)
    assert a.best == b.best


def test_tight_budget_gives_singleton():
    rel = purchase_fixture()
    p = PurchaseProblem(rel, 1.0)
    p.budget = min(p.price({a}) for a in rel.schema)
    affordable = [c for k in range(1, 7) for c in combinations(rel.schema, k) if p.price(c) <= p.budget]
    assert all(len(c) == 1 for c in affordable)
    res = mcmc_purchase(p)
    assert len(res.best) == 1 and res.price <= p.budget
    assert res.breakdown.total == pytest.approx(brute_force_bcqd(p)[1])


def test_stationary_distribution():
    # [DERIVED] Hastings correction makes the walk sample proportionally to f on affordable sets
    m = 3
    rng = np.random.default_rng(0)
    f = np.concatenate([[0.0], rng.random(7) + 0.5])
    w = np.array([1.0, 2.0, 3.0])
    price = np.array([sum(w[i] for i in range(m) if s >> i & 1) for s in range(8)])
    budget = 4.0
    ok = [s for s in range(1, 8) if price[s] <= budget]
    states, _ = _pykernels.subset_chain(f, price, budget, m, ok[0], rng.random((200_000, 2)))
    freq = np.bincount(states, minlength=8) / len(states)
    want = np.zeros(8)
    want[ok] = f[ok] / f[ok].sum()
    assert np.allclose(freq, want, atol=0.01)


def test_infeasible_and_capacity():
    rel = purchase_fixture()
    p = PurchaseProblem(rel, budget=0.01)
    with pytest.raises(InfeasibleError):
        brute_force_bcqd(p)
    with pytest.raises(InfeasibleError):
        mcmc_purchase(p)
    wide = Relation("W", tuple(f"a{i}" for i in range(17)), ((0,) * 17, (1,) * 17))
    with pytest.raises(CapacityError):
        brute_force_bcqd(PurchaseProblem(wide, 100.0, afds=[]))
    with pytest.raises(ArgumentError):
        PurchaseProblem(rel, -1.0)
    with pytest.raises(ArgumentError):
        PurchaseProblem(rel, 1.0, theta=1.0)
