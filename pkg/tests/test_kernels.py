"""Compiled and pure-Python kernels against each other and against independent oracles."""
import importlib
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datamarket import kernels
from datamarket.kernels import _pykernels as py

try:
    ck = importlib.import_module("datamarket.kernels._ckernels")
except ImportError:  # extension not built
    ck = None

BACKENDS = [pytest.param(py, id="python")]
if ck is not None:
    BACKENDS.append(pytest.param(ck, id="compiled"))

needs_ck = pytest.mark.skipif(ck is None, reason="compiled extension not built")

MASK = (1 << 64) - 1


def fnv1a(data: bytes, basis: int) -> int:
    h = basis
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


@pytest.mark.parametrize("k", BACKENDS)
def test_splitmix_reference_value(k):
    # [DERIVED] first output of the reference SplitMix64 generator seeded with 0
    assert k.splitmix64(0) == 0xE220A8397B1DCDAF


def test_fnv_reference_vector():
    # [DERIVED] published FNV-1a 64 test vector for "a"
    assert fnv1a(b"a", 0xCBF29CE484222325) == 0xAF63DC4C8601EC8C


@pytest.mark.parametrize("k", BACKENDS)
@given(data=st.binary(max_size=40), seed=st.integers(0, MASK))
@settings(max_examples=60, deadline=None)
def test_hash64_matches_construction(k, data, seed):
    basis = 0xCBF29CE484222325 ^ py.splitmix64(seed)
    assert k.hash64(data, seed) == py.splitmix64(fnv1a(data, basis))


@pytest.mark.parametrize("k", BACKENDS)
def test_hash_unit_range_and_spread(k):
    keys = [i.to_bytes(4, "little") for i in range(20000)]
    u = k.hash_unit(keys, 3)
    assert u.min() >= 0.0 and u.max() < 1.0
    # uniform: the mean of 20000 draws sits within 5 standard errors of 1/2
    assert abs(u.mean() - 0.5) < 5 * math.sqrt(1 / 12 / len(u))
    assert abs((u < 0.2).mean() - 0.2) < 0.02


@needs_ck
@given(keys=st.lists(st.binary(max_size=12), max_size=30), seed=st.integers(0, MASK))
@settings(max_examples=60, deadline=None)
def test_hash_unit_backends_agree(keys, seed):
    assert np.array_equal(py.hash_unit(keys, seed), ck.hash_unit(keys, seed))


def first_occurrence(pairs):
    seen = {}
    return [seen.setdefault(p, len(seen)) for p in pairs], len(seen)


label_arrays = st.integers(0, 60).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n), st.lists(st.integers(0, 5), min_size=n, max_size=n))
)


@pytest.mark.parametrize("k", BACKENDS)
@given(arrs=label_arrays)
@settings(max_examples=80, deadline=None)
def test_refine_is_first_occurrence_pairing(k, arrs):
    a, b = (np.array(x, dtype=np.int64) for x in arrs)
    out, n = k.refine(a, b)
    want, wn = first_occurrence(list(zip(a.tolist(), b.tolist())))
    assert n == wn
    assert out.tolist() == want


def naive_correct(x, xy):
    """Rows in the largest XY-class of their X-class, ties to the class holding the smallest row id."""
    mask = []
    for i in range(len(x)):
        rows = [j for j in range(len(x)) if x[j] == x[i]]
        sizes = Counter(xy[j] for j in rows)
        first = {}
        for j in rows:
            first.setdefault(xy[j], j)
        best = max(sizes, key=lambda c: (sizes[c], -first[c]))
        mask.append(xy[i] == best)
    return mask


@pytest.mark.parametrize("k", BACKENDS)
@given(arrs=label_arrays)
@settings(max_examples=80, deadline=None)
def test_correct_mask_against_naive(k, arrs):
    x0, y0 = arrs
    xl, kx = first_occurrence(x0)
    xyl, kxy = first_occurrence(list(zip(x0, y0)))
    got = k.correct_mask(np.array(xl, dtype=np.int64), kx, np.array(xyl, dtype=np.int64), kxy)
    assert got.tolist() == naive_correct(x0, list(zip(x0, y0)))


@pytest.mark.parametrize("k", BACKENDS)
@given(vals=st.lists(st.integers(0, 7), max_size=80))
@settings(max_examples=80, deadline=None)
def test_label_entropy_against_counter(k, vals):
    lab, n = first_occurrence(vals)
    c = Counter(vals)
    want = -sum(v / len(vals) * math.log2(v / len(vals)) for v in c.values()) if vals else 0.0
    assert k.label_entropy(np.array(lab, dtype=np.int64), n) == pytest.approx(want, abs=1e-12)


def chain_inputs(m, seed, ell):
    rng = np.random.default_rng(seed)
    f = np.concatenate([[0.0], rng.random(2**m - 1) + 0.1])
    # price grows with the set, as an entropy would
    w = rng.random(m)
    price = np.array([sum(w[i] for i in range(m) if s >> i & 1) for s in range(2**m)])
    budget = float(np.quantile(price, 0.6))
    affordable = [s for s in range(1, 2**m) if price[s] <= budget]
    start = affordable[int(rng.integers(len(affordable)))]
    return f, price, budget, start, rng.random((ell, 2))


@pytest.mark.parametrize("k", BACKENDS)
@pytest.mark.parametrize("seed", range(5))
def test_subset_chain_stays_affordable(k, seed):
    m = 5
    f, price, budget, start, u = chain_inputs(m, seed, 500)
    states, acc = k.subset_chain(f, price, budget, m, start, u)
    assert len(states) == 501 and len(acc) == 500
    assert states[0] == start
    assert (states > 0).all()
    assert (price[states] <= budget).all()
    # consecutive states differ by at most one attribute, and only when accepted
    diff = states[1:] ^ states[:-1]
    assert all(d == 0 or d & (d - 1) == 0 for d in diff.tolist())
    assert np.array_equal(diff != 0, acc)


@needs_ck
@pytest.mark.parametrize("seed", range(10))
def test_subset_chain_backends_agree(seed):
    m = 6
    f, price, budget, start, u = chain_inputs(m, seed, 2000)
    s1, a1 = py.subset_chain(f, price, budget, m, start, u)
    s2, a2 = ck.subset_chain(f, price, budget, m, start, u)
    assert np.array_equal(s1, s2) and np.array_equal(a1, a2)


@needs_ck
@given(arrs=label_arrays)
@settings(max_examples=40, deadline=None)
def test_refine_backends_agree(arrs):
    a, b = (np.array(x, dtype=np.int64) for x in arrs)
    o1, n1 = py.refine(a, b)
    o2, n2 = ck.refine(a, b)
    assert n1 == n2 and np.array_equal(o1, o2)
