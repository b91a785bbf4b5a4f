"""Pure-Python implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same results bit for bit; the package picks one at import
time (see ``datamarket.kernels``).
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def hash64(data: bytes, seed: int) -> int:
    """FNV-1a over ``data`` starting from a seed-dependent basis, then a
    splitmix64 finalizer for avalanche."""
    h = FNV_OFFSET ^ splitmix64(seed & MASK64)
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return splitmix64(h)


def hash_unit(keys, seed: int) -> np.ndarray:
    """Map each byte string to [0, 1) using the top 53 bits of ``hash64``."""
    out = np.empty(len(keys), dtype=np.float64)
    for i, k in enumerate(keys):
        out[i] = (hash64(k, seed) >> 11) * (1.0 / 9007199254740992.0)
    return out


def refine(labels: np.ndarray, codes: np.ndarray):
    """Intersect two labelings of the same rows.

    Returns dense labels numbered by first occurrence together with the
    number of distinct classes.
    """
    n = len(labels)
    out = np.empty(n, dtype=np.int64)
    seen: dict = {}
    lab = labels.tolist()
    cod = codes.tolist()
    for i in range(n):
        key = (lab[i], cod[i])
        j = seen.get(key)
        if j is None:
            j = len(seen)
            seen[key] = j
        out[i] = j
    return out, len(seen)


def correct_mask(x_labels: np.ndarray, kx: int, xy_labels: np.ndarray, kxy: int) -> np.ndarray:
    """Rows belonging to the largest XY-class inside their X-class.

    Ties go to the XY-class seen first, i.e. the one holding the smallest
    row id, because labels are numbered by first occurrence.
    """
    n = len(x_labels)
    size = [0] * kxy
    owner = [0] * kxy
    xl = x_labels.tolist()
    xyl = xy_labels.tolist()
    for i in range(n):
        size[xyl[i]] += 1
        owner[xyl[i]] = xl[i]
    best = [-1] * kx
    for c in range(kxy):
        o = owner[c]
        b = best[o]
        if b < 0 or size[c] > size[b]:
            best[o] = c
    mask = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if best[xl[i]] == xyl[i]:
            mask[i] = True
    return mask


def label_entropy(labels: np.ndarray, k: int) -> float:
    """Shannon entropy in bits of the empirical distribution of ``labels``."""
    n = len(labels)
    if n == 0:
        return 0.0
    counts = [0] * k
    for v in labels.tolist():
        counts[v] += 1
    h = 0.0
    for c in counts:
        if c:
            p = c / n
            h -= p * math.log2(p)
    return h


def subset_chain(f, price, budget: float, m: int, start: int, uniforms: np.ndarray):
    """Metropolis-Hastings walk over attribute bitmasks.

    ``f`` and ``price`` are indexable by bitmask (arrays or lazy tables).
    Each step draws an attribute uniformly from the candidate set
    C(S) = S plus every affordable single addition, and flips it with
    probability min(1, f(S') |C(S)| / (f(S) |C(S')|)).  The empty set has
    f = 0 and is never entered.

    Returns the visited states (length ell + 1) and per-step acceptance flags.
    """
    ell = len(uniforms)
    states = np.empty(ell + 1, dtype=np.int64)
    accepted = np.zeros(ell, dtype=np.bool_)
    cur = start
    states[0] = cur
    cand = _candidates(price, budget, m, cur)
    fcur = f[cur]
    for t in range(ell):
        u_pick, u_acc = uniforms[t, 0], uniforms[t, 1]
        a = cand[min(int(u_pick * len(cand)), len(cand) - 1)]
        nxt = cur ^ (1 << a)
        if nxt != 0:
            fnxt = f[nxt]
            cand_nxt = _candidates(price, budget, m, nxt)
            ratio = (fnxt * len(cand)) / (fcur * len(cand_nxt))
            if u_acc < min(ratio, 1.0):
                cur, fcur, cand = nxt, fnxt, cand_nxt
                accepted[t] = True
        states[t + 1] = cur
    return states, accepted


def _candidates(price, budget, m, s):
    out = []
    for a in range(m):
        bit = 1 << a
        if s & bit or price[s | bit] <= budget:
            out.append(a)
    return out
