#!/usr/bin/env python3
"""Benchmark the compiled transportation kernel against the pure-Python twin.

Times solve_balanced on dense instances and emd_cost on sparse signature-like
weight vectors at several sizes, then a realistic S-tree build. Run from the
repository root after `python setup.py build_ext --inplace`:

    python benchmarks/bench_transport.py
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from rbir import _backend, _transport_py  # noqa: E402
from rbir.signature import region_signature  # noqa: E402
from rbir.stree import STree, STreeConfig  # noqa: E402


def timeit(fn, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_solve(rng, n, repeats):
    x = rng.random(n) * 50 + 0.1
    y = rng.random(n)
    y *= x.sum() / y.sum()
    y[-1] += x.sum() - y.sum()
    c = rng.random((n, n)) * 2
    f = np.empty((n, n))
    rows = []
    for name, mod in (("compiled", _backend.transport), ("pure", _transport_py)):
        if name == "compiled" and _backend.BACKEND != "compiled":
            continue
        reps = repeats if name == "compiled" else max(repeats // 50, 3)
        dt = timeit(lambda m=mod: m.solve_balanced(x, y, c, f), reps)
        rows.append((name, dt))
    return rows


def bench_emd(rng, n, nonzero, repeats):
    d = rng.random((n, n))
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0.0)
    w1 = np.zeros(n)
    w2 = np.zeros(n)
    w1[rng.choice(n, nonzero, replace=False)] = rng.integers(1, 11, nonzero) * 10.0
    w2[rng.choice(n, nonzero, replace=False)] = rng.integers(1, 11, nonzero) * 10.0
    rows = []
    for name, mod in (("compiled", _backend.transport), ("pure", _transport_py)):
        if name == "compiled" and _backend.BACKEND != "compiled":
            continue
        reps = repeats if name == "compiled" else max(repeats // 50, 3)
        dt = timeit(lambda m=mod: m.emd_cost(w1, w2, d), reps)
        rows.append((name, dt))
    return rows


def random_image_sig(rng, n, m=10):
    sig = None
    for _ in range(int(rng.integers(1, 4))):
        k = int(rng.integers(2, min(6, n + 1)))
        h = np.zeros(n)
        h[rng.choice(n, k, replace=False)] = rng.dirichlet(np.ones(k))
        h /= h.sum()
        r = region_signature(h, m)
        sig = r if sig is None else sig.union(r)
    return sig


def bench_tree_build(rng, count, n=32):
    pts = rng.random((n, 3))
    ground = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    sigs = [random_image_sig(rng, n) for _ in range(count)]
    tree = STree(n, 10, ground, STreeConfig(4, 8))
    t0 = time.perf_counter()
    for i, s in enumerate(sigs):
        tree.insert(s, i + 1)
    return time.perf_counter() - t0, tree.stats()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tree-size", type=int, default=2000)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"active backend: {_backend.BACKEND}")
    print("\nsolve_balanced, dense instances (us/solve):")
    for n in (9, 17, 33):
        rows = bench_solve(rng, n, args.repeats)
        line = "  ".join(f"{name} {dt * 1e6:9.1f}" for name, dt in rows)
        if len(rows) == 2:
            line += f"   speedup {rows[1][1] / rows[0][1]:6.1f}x"
        print(f"  n={n:<3} {line}")

    print("\nemd_cost, sparse signature weights (us/call):")
    for n, nz in ((16, 5), (32, 8), (64, 12)):
        rows = bench_emd(rng, n, nz, args.repeats * 4)
        line = "  ".join(f"{name} {dt * 1e6:9.1f}" for name, dt in rows)
        if len(rows) == 2:
            line += f"   speedup {rows[1][1] / rows[0][1]:6.1f}x"
        print(f"  n={n:<3} nonzero={nz:<3} {line}")

    dt, stats = bench_tree_build(rng, args.tree_size)
    print(f"\nS-tree build, {args.tree_size} signatures (n=32, node 4/8, "
          f"{_backend.BACKEND} backend): {dt:.2f}s, height {stats.height}, "
          f"{stats.node_count} nodes")


if __name__ == "__main__":
    main()
