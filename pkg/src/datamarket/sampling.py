"""Correlated hash sampling, re-sampled join chains and sample estimators."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ArgumentError, EstimationFailedError
from .info import correlation, join_informativeness
from .partition import quality_fds
from .relation import FD, Relation, Value, equi_join


def _encode_value(v: Value) -> bytes:
    if v is None:
        tag, body = b"N", b""
    elif isinstance(v, bool):
        tag, body = b"S", str(v).encode()
    elif isinstance(v, int) or (isinstance(v, float) and v.is_integer()):
        # 3 and 3.0 compare equal, so they must hash equal too
        tag, body = b"I", str(int(v)).encode()
    elif isinstance(v, float):
        tag, body = b"F", repr(v).encode()
    else:
        tag, body = b"S", str(v).encode("utf-8")
    return tag + struct.pack("<I", len(body)) + body


def encode_key(key: Sequence[Value]) -> bytes:
    """Length-prefixed, type-tagged byte encoding of a key tuple."""
    return struct.pack("<I", len(key)) + b"".join(_encode_value(v) for v in key)


def mix_seed(*parts: int) -> int:
    h = 0
    for p in parts:
        h = kernels.splitmix64(h ^ (p & 0xFFFFFFFFFFFFFFFF))
    return h


@dataclass(frozen=True)
class HashSampler:
    """Keeps a row when the hash of its join key falls below ``rate``."""

    seed: int = 0
    rate: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ArgumentError(f"sampling rate must lie in (0, 1], got {self.rate}")

    def unit(self, keys: Sequence[tuple]) -> np.ndarray:
        distinct = list(dict.fromkeys(keys))
        h = kernels.hash_unit([encode_key(k) for k in distinct], self.seed)
        lookup = dict(zip(distinct, h.tolist()))
        return np.fromiter((lookup[k] for k in keys), dtype=np.float64, count=len(keys))

    def keep_mask(self, rel: Relation, attrs: Iterable[str]) -> np.ndarray:
        # sorted names, not schema order, so both sides of a join agree
        cols = tuple(sorted(set(attrs)))
        for a in cols:
            rel.index(a)
        if self.rate >= 1.0:
            return np.ones(rel.n, dtype=np.bool_)
        return self.unit(rel.keys(cols)) < self.rate


def correlated_sample(rel: Relation, join_attr: Iterable[str], s: HashSampler) -> Relation:
    mask = s.keep_mask(rel, join_attr)
    return rel.take(np.flatnonzero(mask).tolist())


def estimate_ji(left: Relation, right: Relation, on: Iterable[str], s: HashSampler) -> float:
    on = frozenset(on)
    return join_informativeness(correlated_sample(left, on, s), correlated_sample(right, on, s), on)


@dataclass(frozen=True)
class ResampleConfig:
    eta: float = math.inf
    resample_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.eta >= 1:
            raise ArgumentError("eta must be at least 1")
        if not 0.0 < self.resample_rate <= 1.0:
            raise ArgumentError("resample_rate must lie in (0, 1]")


@dataclass(frozen=True)
class JoinStep:
    """Bring chain[k + 1] in by joining it to chain[parent] on ``on``."""

    parent: int
    on: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "on", frozenset(self.on))


def path_steps(chain: Sequence[Relation]) -> list[JoinStep]:
    """Steps for a linear chain joining each relation to its predecessor on all shared attributes."""
    steps = []
    for k in range(1, len(chain)):
        on = chain[k - 1].attrs & chain[k].attrs
        if not on:
            raise ArgumentError(f"{chain[k - 1].name} and {chain[k].name} share no attribute")
        steps.append(JoinStep(k - 1, on))
    return steps


def step_samplers(rate: float, seed: int, count: int) -> list[HashSampler]:
    """One independent key-hash sampler per join step."""
    return [HashSampler(mix_seed(seed, k), rate) for k in range(count)]


def resample_rows(rel: Relation, rate: float, seed: int) -> Relation:
    """Uniform sample of exactly ceil(rate * n) rows, chosen by smallest row-index hash."""
    k = math.ceil(rate * rel.n - 1e-12)
    if k >= rel.n:
        return rel
    h = kernels.hash_unit([i.to_bytes(8, "little") for i in range(rel.n)], seed)
    keep = np.sort(np.argsort(h, kind="stable")[:k])
    return rel.take(keep.tolist())


def resampled_join(
    chain: Sequence[Relation],
    steps: Sequence[JoinStep],
    samplers: HashSampler | Sequence[HashSampler],
    cfg: ResampleConfig = ResampleConfig(),
    sizes: list | None = None,
) -> Relation:
    """Join correlated samples of ``chain`` along ``steps``.

    Each relation is filtered by the sampler of every step touching it.
    An intermediate result larger than ``cfg.eta`` is re-sampled before the
    next join.  ``sizes``, if given, receives (raw, kept) sizes of each
    intermediate result.
    """
    if len(chain) < 2:
        raise ArgumentError("a join chain needs at least two relations")
    if len(steps) != len(chain) - 1:
        raise ArgumentError("need exactly one join step per relation after the first")
    if isinstance(samplers, HashSampler):
        samplers = [samplers] * len(steps)
    if len(samplers) != len(steps):
        raise ArgumentError("need one sampler per join step")
    masks = [np.ones(r.n, dtype=np.bool_) for r in chain]
    for k, (st, s) in enumerate(zip(steps, samplers)):
        if not 0 <= st.parent <= k:
            raise ArgumentError(f"step {k} refers to relation {st.parent} not yet joined")
        masks[k + 1] &= s.keep_mask(chain[k + 1], st.on)
        masks[st.parent] &= s.keep_mask(chain[st.parent], st.on)
    samples = [r.take(np.flatnonzero(m).tolist()) for r, m in zip(chain, masks)]
    acc = samples[0]
    last = len(steps) - 1
    for k, st in enumerate(steps):
        acc = equi_join(acc, samples[k + 1], st.on, name=f"J{k + 1}")
        raw = acc.n
        if k < last and acc.n > cfg.eta:
            acc = resample_rows(acc, cfg.resample_rate, mix_seed(cfg.seed, k))
        if sizes is not None:
            sizes.append((raw, acc.n))
    return acc


def estimate_corr_quality(
    chain: Sequence[Relation],
    steps: Sequence[JoinStep],
    a_s: Iterable[str],
    a_t: Iterable[str],
    fds: Iterable[FD],
    samplers: HashSampler | Sequence[HashSampler],
    cfg: ResampleConfig = ResampleConfig(),
) -> tuple[float, float]:
    """(CORR(A_S, A_T), Q) measured on the re-sampled join."""
    joined = resampled_join(chain, steps, samplers, cfg)
    if joined.n == 0:
        seed = samplers.seed if isinstance(samplers, HashSampler) else samplers[0].seed
        raise EstimationFailedError("re-sampled join is empty", seed=seed)
    return correlation(joined, a_s, a_t), quality_fds(joined, fds)


def sample_catalog(relations: Sequence[Relation], rate: float, seed: int = 0) -> list[Relation]:
    """Correlated samples of a whole catalog.

    Each attribute shared by two or more relations gets its own key hash; a
    relation keeps a row only when every shared attribute it holds passes.
    Samples of any two relations therefore stay joinable on any shared
    attribute subset.
    """
    if rate >= 1.0:
        return list(relations)
    counts: dict[str, int] = {}
    for r in relations:
        for a in r.schema:
            counts[a] = counts.get(a, 0) + 1
    out = []
    for r in relations:
        mask = np.ones(r.n, dtype=np.bool_)
        for a in r.schema:
            if counts[a] > 1:
                s = HashSampler(mix_seed(seed, kernels.hash64(a.encode("utf-8"), 0)), rate)
                mask &= s.keep_mask(r, [a])
        out.append(r.take(np.flatnonzero(mask).tolist()))
    return out
