import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datamarket.errors import ArgumentError, EstimationFailedError
from datamarket.info import join_informativeness
from datamarket.relation import FD, Relation, equi_join
from datamarket.sampling import (
    HashSampler,
    JoinStep,
    ResampleConfig,
    correlated_sample,
    encode_key,
    estimate_corr_quality,
    estimate_ji,
    mix_seed,
    path_steps,
    resample_rows,
    resampled_join,
    sample_catalog,
    step_samplers,
)


def test_encode_key_canonical():
    assert encode_key((3,)) == encode_key((3.0,))
    assert encode_key((3,)) != encode_key(("3",))
    assert encode_key((None,)) != encode_key(("",))
    assert encode_key(("ab", "c")) != encode_key(("a", "bc"))
    assert encode_key((1.5,)) != encode_key((1,))
    assert encode_key(()) != encode_key((None,))


def test_mix_seed():
    assert mix_seed(1, 2) == mix_seed(1, 2)
    assert mix_seed(1, 2) != mix_seed(2, 1)
    assert mix_seed(0) != mix_seed(1)


def test_sampler_validation():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ArgumentError):
            HashSampler(0, bad)


def test_keep_mask_rate_and_consistency():
    n = 20000
    rel = Relation("R", ("k", "v"), tuple((i, i % 7) for i in range(n)))
    other = Relation("S", ("x", "k"), tuple((0, i) for i in range(n)))
    s = HashSampler(11, 0.3)
    m1 = s.keep_mask(rel, {"k"})
    m2 = s.keep_mask(other, {"k"})
    assert np.array_equal(m1, m2)
    assert abs(m1.mean() - 0.3) < 5 * math.sqrt(0.3 * 0.7 / n)
    assert HashSampler(11, 1.0).keep_mask(rel, {"k"}).all()


def test_keep_mask_attribute_order_irrelevant():
    a = Relation("A", ("x", "y"), tuple((i, i * 3) for i in range(500)))
    b = Relation("B", ("y", "x"), tuple((i * 3, i) for i in range(500)))
    s = HashSampler(5, 0.5)
    assert np.array_equal(s.keep_mask(a, {"x", "y"}), s.keep_mask(b, {"x", "y"}))


keys = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 3)), max_size=40)


@given(lr=keys, rr=keys, seed=st.integers(0, 2**32), rate=st.sampled_from([0.2, 0.5, 0.9]))
@settings(max_examples=60, deadline=None)
def test_sampling_commutes_with_join(lr, rr, seed, rate):
    # [DERIVED] joining correlated samples equals filtering the full join by the same key hash
    left = Relation("L", ("k", "a"), lr)
    right = Relation("R", ("k", "b"), rr)
    s = HashSampler(seed, rate)
    sampled = equi_join(correlated_sample(left, {"k"}, s), correlated_sample(right, {"k"}, s), {"k"})
    full = equi_join(left, right, {"k"})
    want = full.take(np.flatnonzero(s.keep_mask(full, {"k"})).tolist())
    assert sorted(sampled.rows) == sorted(want.rows)


def test_estimate_ji_at_full_rate_is_exact():
    left = Relation("L", ("k",), tuple((i % 13,) for i in range(50)))
    right = Relation("R", ("k",), tuple((i % 17,) for i in range(40)))
    exact = join_informativeness(left, right, {"k"})
    assert estimate_ji(left, right, {"k"}, HashSampler(0, 1.0)) == exact


@given(n=st.integers(0, 300), rate=st.floats(0.01, 1.0), seed=st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_resample_rows_exact_size(n, rate, seed):
    rel = Relation("R", ("i",), tuple((i,) for i in range(n)))
    out = resample_rows(rel, rate, seed)
    assert out.n == min(n, math.ceil(rate * n - 1e-12))
    ids = [r[0] for r in out.rows]
    assert ids == sorted(set(ids))
    assert resample_rows(rel, rate, seed) == out


def test_resample_rows_uniform():
    # every row is kept about equally often across seeds
    rel = Relation("R", ("i",), tuple((i,) for i in range(20)))
    hits = np.zeros(20)
    for seed in range(2000):
        for r in resample_rows(rel, 0.25, seed).rows:
            hits[r[0]] += 1
    assert np.allclose(hits / 2000, 0.25, atol=0.05)


def chain3(n=300):
    a = Relation("A", ("x", "p"), tuple((i % 50, i % 2) for i in range(n)))
    b = Relation("B", ("x", "y"), tuple((i % 50, i % 40) for i in range(n)))
    c = Relation("C", ("y", "q"), tuple((i % 40, i % 3) for i in range(n)))
    return [a, b, c]


def test_resampled_join_size_bound():
    chain = chain3()
    steps = path_steps(chain)
    sizes = []
    cfg = ResampleConfig(eta=100, resample_rate=0.3, seed=4)
    out = resampled_join(chain, steps, HashSampler(1, 1.0), cfg, sizes)
    raw, kept = sizes[0]
    assert raw > 100 and kept == math.ceil(0.3 * raw)
    # the final result is never re-sampled
    assert sizes[-1][0] == sizes[-1][1] == out.n
    for raw, kept in sizes[:-1]:
        assert kept <= max(cfg.eta, math.ceil(cfg.resample_rate * raw))


def test_resampled_join_without_sampling_is_exact():
    chain = chain3(120)
    full = equi_join(equi_join(chain[0], chain[1], {"x"}), chain[2], {"y"})
    out = resampled_join(chain, path_steps(chain), HashSampler(0, 1.0))
    assert sorted(out.rows) == sorted(full.rows)


def test_resampled_join_star_shape():
    a = Relation("A", ("x", "y"), ((1, 1), (2, 2)))
    b = Relation("B", ("x", "u"), ((1, "p"), (2, "q")))
    c = Relation("C", ("y", "v"), ((1, "r"),))
    steps = [JoinStep(0, {"x"}), JoinStep(0, {"y"})]
    out = resampled_join([a, b, c], steps, HashSampler(0, 1.0))
    assert out.rows == ((1, 1, "p", "r"),)


def test_resampled_join_argument_errors():
    chain = chain3(10)
    with pytest.raises(ArgumentError):
        resampled_join(chain[:1], [], HashSampler())
    with pytest.raises(ArgumentError):
        resampled_join(chain, path_steps(chain)[:1], HashSampler())
    with pytest.raises(ArgumentError):
        resampled_join(chain, [JoinStep(0, {"x"}), JoinStep(2, {"y"})], HashSampler())
    with pytest.raises(ArgumentError):
        resampled_join(chain, path_steps(chain), step_samplers(0.5, 0, 1))
    with pytest.raises(ArgumentError):
        path_steps([chain[0], chain[2]])
    with pytest.raises(ArgumentError):
        ResampleConfig(eta=0)
    with pytest.raises(ArgumentError):
        ResampleConfig(resample_rate=0)


def test_estimation_failure_carries_seed():
    a = Relation("A", ("k", "s"), ((1, "a"),))
    b = Relation("B", ("k", "t"), ((2, "b"),))
    with pytest.raises(EstimationFailedError) as e:
        estimate_corr_quality([a, b], path_steps([a, b]), {"s"}, {"t"}, [], HashSampler(77, 1.0))
    assert e.value.seed == 77


def test_estimate_corr_quality_full_rate():
    a = Relation("A", ("k", "s"), tuple((i, "ab"[i % 2]) for i in range(20)))
    b = Relation("B", ("k", "t"), tuple((i, "xy"[i % 2]) for i in range(20)))
    corr, q = estimate_corr_quality([a, b], path_steps([a, b]), {"s"}, {"t"}, [FD({"s"}, "t")], HashSampler(0, 1.0))
    assert corr == pytest.approx(1.0) and q == 1.0


def test_sample_catalog_keeps_joins_consistent():
    n = 600
    r1 = Relation("R1", ("a", "b", "u"), tuple((i % 60, i % 45, i) for i in range(n)))
    r2 = Relation("R2", ("a", "c"), tuple((i % 60, i % 7) for i in range(n)))
    r3 = Relation("R3", ("b", "c", "w"), tuple((i % 45, i % 7, i % 5) for i in range(n)))
    s1, s2, s3 = sample_catalog([r1, r2, r3], 0.5, seed=3)
    assert s1.n < r1.n and s2.n < r2.n
    # a row survives iff every shared attribute value survives, so joining samples loses
    # exactly the join rows whose values fail some shared-attribute hash
    j_full = equi_join(r1, r2, {"a"})
    j_samp = equi_join(s1, s2, {"a"})
    assert set(j_samp.rows) <= set(j_full.rows)
    a_vals = {r[0] for r in s1.rows}
    assert {r[0] for r in s2.rows} <= {r[0] for r in r2.rows}
    assert {r[0] for r in s2.rows} & a_vals == {r[0] for r in j_samp.rows}
    assert sample_catalog([r1, r2], 1.0) == [r1, r2]
