"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N wall time of each backend and
the speedup.  Inputs are seeded, so repeated runs time the same work.
"""
from __future__ import annotations

import argparse
import importlib
import sys
import timeit

import numpy as np

from datamarket.kernels import _pykernels as py


def cases(rng: np.random.Generator) -> dict:
    n = 200_000
    a = rng.integers(0, 500, n)
    b = rng.integers(0, 40, n)
    xy, kxy = py.refine(a, b)
    keys = [int(v).to_bytes(8, "little") for v in rng.integers(0, 2**63, 50_000)]
    m = 10
    f = np.concatenate([[0.0], rng.random(2**m - 1) + 0.1])
    w = rng.random(m)
    price = np.array([sum(w[i] for i in range(m) if s >> i & 1) for s in range(2**m)])
    u = rng.random((100_000, 2))
    return {
        "hash_unit (50k keys)": lambda k: k.hash_unit(keys, 7),
        "refine (200k rows)": lambda k: k.refine(a, b),
        "correct_mask (200k rows)": lambda k: k.correct_mask(a, 500, xy, kxy),
        "label_entropy (200k rows)": lambda k: k.label_entropy(xy, kxy),
        "subset_chain (100k steps)": lambda k: k.subset_chain(f, price, float(np.median(price)), m, 1, u),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    try:
        ck = importlib.import_module("datamarket.kernels._ckernels")
    except ImportError:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1
    work = cases(np.random.default_rng(args.seed))
    print(f"{'kernel':28s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, fn in work.items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        t_ck = min(timeit.repeat(lambda: fn(ck), number=1, repeat=args.repeat))
        print(f"{name:28s} {t_py * 1e3:9.1f}ms {t_ck * 1e3:9.2f}ms {t_py / t_ck:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
