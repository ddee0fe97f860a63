"""Command-line interface: gen / build / query / eval / stats / bench."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import errors, pipeline, synth
from ._backend import BACKEND

EXIT_CODES = [
    (errors.InvalidParameterError, 2),
    (errors.PaletteMismatchError, 6),
    (errors.DuplicateOidError, 7),
    (errors.UnsupportedFormatError, 5),
    (errors.MalformedFileError, 4),
    (FileNotFoundError, 3),
    (OSError, 3),
    (errors.RbirError, 1),
]


def _exit_code(exc) -> int:
    for klass, code in EXIT_CODES:
        if isinstance(exc, klass):
            return code
    return 1


def _add_build_flags(p):
    p.add_argument("--size", type=int, default=256, help="standardized side length")
    p.add_argument("--palette", default=None, help="palette file (default: built-in 32 colors)")
    p.add_argument("--bits", type=int, default=10, help="bits per signature block")
    p.add_argument("--node-min", type=int, default=4)
    p.add_argument("--node-max", type=int, default=8)
    p.add_argument("--theta", type=float, default=0.01, help="relative response threshold")
    p.add_argument("--alpha", type=float, default=0.06, help="corner response coefficient")
    p.add_argument("--scales", default=None,
                   help="comma-separated integration scales in pixels")
    p.add_argument("--sigma-ratio", type=float, default=0.7)
    p.add_argument("--max-regions", type=int, default=16)
    p.add_argument("--beam", choices=("all", "1"), default="all",
                   help="traversal default stored in the index")


def _config_from_args(args) -> pipeline.BuildConfig:
    scales = (tuple(float(s) for s in args.scales.split(","))
              if args.scales else pipeline.BuildConfig().scales)
    return pipeline.BuildConfig(
        size=args.size, bits=args.bits, node_min=args.node_min,
        node_max=args.node_max, theta=args.theta, alpha=args.alpha,
        scales=scales, sigma_ratio=args.sigma_ratio,
        max_regions=args.max_regions, palette_path=args.palette,
        beam=args.beam,
    )


def cmd_gen(args) -> int:
    rows = synth.make_corpus(args.out, args.classes, args.per_class,
                             args.size, args.seed)
    print(f"wrote {len(rows)} images and labels.tsv to {args.out}")
    return 0


def cmd_build(args) -> int:
    labels = None
    report = pipeline.build_index(args.corpus, args.out, _config_from_args(args), labels)
    print(f"indexed {report.count} images ({report.skipped} skipped) in "
          f"{report.elapsed_ms:.0f} ms; tree height {report.tree_height}, "
          f"{report.node_count} nodes, {report.counters.emd_evals} EMD evals, "
          f"{report.counters.splits} splits")
    return 0


def cmd_query(args) -> int:
    index = pipeline.load_index(args.index, args.palette)
    res = pipeline.query(index, args.image, args.top, args.beam)
    for rank, (oid, path, d) in enumerate(res.ranked, 1):
        print(f"{rank}\t{oid}\t{path}\t{d:.6f}")
    print(f"# visited {res.nodes_visited} nodes, {res.emd_evals} EMD evals, "
          f"{res.candidates} candidates, {res.elapsed_ms:.1f} ms", file=sys.stderr)
    if args.oracle:
        sig = pipeline.signature_for_image(args.image, index.palette, index.config)
        oracle = pipeline.linear_scan(index, sig)[:args.top]
        tree_top = {oid for oid, _, _ in res.ranked}
        overlap = len(tree_top & {oid for _, oid in oracle}) / max(len(oracle), 1)
        print(f"# oracle top-{args.top} overlap: {overlap:.2f}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    index = pipeline.load_index(args.index, args.palette)
    labels = pipeline.read_labels(args.labels, index.paths)
    k_list = [int(k) for k in args.k.split(",")]
    report = pipeline.evaluate(index, labels, k_list, args.beam)
    sys.stdout.write(report.to_csv())
    for k in report.k_list:
        rec = report.mean_recall[k]
        print(f"# K={k}: precision {report.mean_precision[k]:.4f}, "
              f"recall {'n/a' if rec is None else f'{rec:.4f}'}, "
              f"oracle overlap {report.mean_overlap[k]:.4f}", file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    index = pipeline.load_index(args.index, args.palette)
    sys.stdout.write(pipeline.stats_csv(index, args.probes, args.beam))
    return 0


def _bench_inline(args) -> int:
    import numpy as np

    from . import _transport_py
    from ._backend import emd_cost, transport

    rng = np.random.default_rng(args.seed)
    n = args.colors
    d = rng.random((n, n))
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    pairs = []
    for _ in range(args.instances):
        w1 = np.zeros(n)
        w2 = np.zeros(n)
        k = max(2, n // 4)
        w1[rng.choice(n, k, replace=False)] = rng.integers(1, 11, k) * 10.0
        w2[rng.choice(n, k, replace=False)] = rng.integers(1, 11, k) * 10.0
        pairs.append((w1, w2))
    impls = [("active-" + BACKEND, emd_cost)]
    if BACKEND == "compiled":
        impls.append(("pure-python", _transport_py.emd_cost))
    print(f"n={n}, {args.instances} instances, repeats={args.repeats}")
    for name, fn in impls:
        t0 = time.perf_counter()
        acc = 0.0
        for _ in range(args.repeats):
            for w1, w2 in pairs:
                acc += fn(w1, w2, d)
        dt = time.perf_counter() - t0
        per = dt / (args.repeats * len(pairs)) * 1e6
        print(f"{name:>14}: {per:9.2f} us/EMD   (checksum {acc:.3f})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rbir",
        description="Region-based image retrieval with binary signatures, "
                    "an S-tree index and an earth-mover similarity measure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="index a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="index file prefix")
    _add_build_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="rank indexed images against a query image")
    p.add_argument("--index", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--beam", choices=("all", "1"), default=None,
                   help="override the index's stored traversal mode")
    p.add_argument("--palette", default=None)
    p.add_argument("--oracle", action="store_true",
                   help="also run the exhaustive scan and report overlap")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="precision/recall/overlap over a labeled index")
    p.add_argument("--index", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", default="1,5,10,20")
    p.add_argument("--beam", choices=("all", "1"), default=None)
    p.add_argument("--palette", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="operation-count and timing CSV")
    p.add_argument("--index", required=True)
    p.add_argument("--probes", type=int, default=50)
    p.add_argument("--beam", choices=("all", "1"), default=None)
    p.add_argument("--palette", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="compare the compiled and pure EMD kernels")
    p.add_argument("--colors", type=int, default=32)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_bench_inline)

    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(message)s")
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.RbirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
