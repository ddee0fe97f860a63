"""Two-phase retrieval: corpus ingestion into an S-tree index, then queries
answered by cover-test traversal plus exact EMD re-ranking, with an
evaluation harness for precision/recall and operation-cost reporting."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import store
from .emd import emd, ground_distance, weight_vector
from .errors import (
    InvalidParameterError,
    MalformedFileError,
    PaletteMismatchError,
    UnsupportedFormatError,
)
from .imgproc import load_image, resize
from .interest import DEFAULT_SCALES, DetectorParams, extract_regions
from .signature import (
    BinarySignature,
    ColorPalette,
    DEFAULT_BITS,
    default_palette,
    image_signature,
    load_palette,
)
from .stree import OpCounters, STree, STreeConfig

log = logging.getLogger("rbir")

IMAGE_SUFFIXES = (".ppm", ".png")


@dataclass(frozen=True)
class BuildConfig:
    size: int = 256
    bits: int = DEFAULT_BITS
    node_min: int = 4
    node_max: int = 8
    theta: float = 0.01
    alpha: float = 0.06
    scales: tuple = DEFAULT_SCALES
    sigma_ratio: float = 0.7
    max_regions: int = 16
    palette_path: str | None = None
    beam: str = "all"        # stored traversal default; query-time override

    def detector_params(self) -> DetectorParams:
        return DetectorParams(self.theta, self.alpha, tuple(self.scales),
                              self.sigma_ratio, self.max_regions)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scales"] = list(self.scales)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BuildConfig":
        d = dict(d)
        d["scales"] = tuple(d.get("scales", DEFAULT_SCALES))
        return cls(**d)


def resolve_palette(path=None) -> ColorPalette:
    return load_palette(path) if path else default_palette()


def corpus_paths(corpus_dir):
    root = Path(corpus_dir)
    if not root.is_dir():
        raise InvalidParameterError(f"{corpus_dir} is not a directory")
    return sorted(p for p in root.iterdir()
                  if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())


def signature_for_image(path, palette: ColorPalette, config: BuildConfig) -> BinarySignature:
    img = resize(load_image(path), config.size)
    regions = extract_regions(img, config.detector_params())
    return image_signature(img, regions, palette, config.bits)


@dataclass
class BuildReport:
    prefix: str
    count: int
    skipped: int
    elapsed_ms: float
    counters: OpCounters
    tree_height: int
    node_count: int


def index_files(prefix):
    p = str(prefix)
    return {"sig": p + ".sig", "tree": p + ".tree", "cat": p + ".cat",
            "stats": p + ".stats.json"}


def build_index(corpus_dir, prefix, config: BuildConfig | None = None,
                labels: dict | None = None) -> BuildReport:
    """Extract regions, build signatures, insert in sorted-path oid order,
    and persist the signature file, tree file and catalog."""
    config = config or BuildConfig()
    palette = resolve_palette(config.palette_path)
    ground = ground_distance(palette)
    tree = STree(len(palette), config.bits, ground,
                 STreeConfig(config.node_min, config.node_max))
    t0 = time.perf_counter()
    totals = OpCounters()
    records = []
    rows = []
    skipped = 0
    oid = 0
    for path in corpus_paths(corpus_dir):
        try:
            sig = signature_for_image(path, palette, config)
        except (MalformedFileError, UnsupportedFormatError, OSError) as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped += 1
            continue
        oid += 1
        tree.insert(sig, oid)
        totals.add(tree.counters)
        records.append(store.SignatureRecord(oid, sig))
        label = (labels or {}).get(path.name, (labels or {}).get(str(path), "-"))
        rows.append((oid, path.name, label))
    if not records:
        raise InvalidParameterError(f"no decodable images in {corpus_dir}")
    elapsed = (time.perf_counter() - t0) * 1000.0
    files = index_files(prefix)
    header = store.IndexHeader(tree.n, tree.m, len(records))
    store.write_signature_file(records, header, files["sig"])
    store.save_tree(tree, files["tree"], store.palette_hash(palette),
                    config.to_dict())
    store.write_catalog(rows, files["cat"])
    stats = tree.stats()
    _write_stats(files["stats"], len(records), elapsed, totals, stats)
    return BuildReport(str(prefix), len(records), skipped, elapsed, totals,
                       stats.height, stats.node_count)


def _write_stats(path, count, elapsed_ms, totals: OpCounters, stats):
    payload = {
        "images": count,
        "build_ms": round(elapsed_ms, 3),
        "emd_evals": totals.emd_evals,
        "unions": totals.unions,
        "splits": totals.splits,
        "tree_height": stats.height,
        "node_count": stats.node_count,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class LoadedIndex:
    tree: STree
    records: list
    palette: ColorPalette
    ground: np.ndarray
    config: BuildConfig
    paths: dict          # oid -> path
    labels: dict         # oid -> label ("-" when unknown)
    build_stats: dict | None = None
    weights: dict = field(default_factory=dict)  # oid -> cached weight vector

    def weight_of(self, oid: int) -> np.ndarray:
        w = self.weights.get(oid)
        if w is None:
            w = weight_vector(self.sigs[oid])
            self.weights[oid] = w
        return w

    def __post_init__(self):
        self.sigs = {rec.oid: rec.sig for rec in self.records}


def load_index(prefix, palette_path=None) -> LoadedIndex:
    files = index_files(prefix)
    palette = resolve_palette(palette_path)
    # the palette binding is checked before anything is materialized: with a
    # different palette every EMD in the index would silently change
    _, _, _, _, _, digest, params = store.read_tree_header(files["tree"])
    if digest != store.palette_hash(palette):
        raise PaletteMismatchError(
            "index was built with a different palette; EMD ground distances "
            "would silently change"
        )
    ground = ground_distance(palette)
    tree, _, params = store.load_tree(files["tree"], ground)
    header, records = store.read_signature_file(files["sig"])
    if (header.n, header.m) != (tree.n, tree.m):
        raise MalformedFileError(
            f"signature file shape ({header.n},{header.m}) != tree "
            f"({tree.n},{tree.m})"
        )
    config = BuildConfig.from_dict(params) if params else BuildConfig()
    paths = {}
    labels = {}
    for oid, path, label in store.read_catalog(files["cat"]):
        paths[oid] = path
        labels[oid] = label
    build_stats = None
    stats_path = Path(files["stats"])
    if stats_path.exists():
        build_stats = json.loads(stats_path.read_text(encoding="utf-8"))
    return LoadedIndex(tree, records, palette, ground, config, paths, labels,
                       build_stats)


@dataclass
class QueryResult:
    ranked: list          # (oid, path, emd) ascending
    nodes_visited: int
    emd_evals: int        # descent + verification
    candidates: int
    elapsed_ms: float


def _rank_candidates(index: LoadedIndex, query_w: np.ndarray, candidates,
                     exclude_oid=None):
    """Exact-EMD verification of search candidates; (emd, oid) ascending."""
    ranked = []
    for sig, oid in candidates:
        if oid == exclude_oid:
            continue
        ranked.append((emd(query_w, index.weight_of(oid), index.ground), oid))
    ranked.sort()
    return ranked


def query_signature(index: LoadedIndex, sig: BinarySignature, top_k: int,
                    beam: str | None = None, exclude_oid=None) -> QueryResult:
    if top_k < 1:
        raise InvalidParameterError(f"top_k must be >= 1, got {top_k}")
    beam = beam if beam is not None else index.config.beam
    t0 = time.perf_counter()
    candidates = index.tree.search(sig, beam)
    descent_evals = index.tree.counters.emd_evals
    nodes = index.tree.counters.nodes_visited
    qw = weight_vector(sig)
    ranked = _rank_candidates(index, qw, candidates, exclude_oid)
    elapsed = (time.perf_counter() - t0) * 1000.0
    top = [(oid, index.paths.get(oid, "?"), d) for d, oid in ranked[:top_k]]
    return QueryResult(top, nodes, descent_evals + len(ranked),
                       len(candidates), elapsed)


def query(index: LoadedIndex, image_path, top_k: int,
          beam: str | None = None) -> QueryResult:
    sig = signature_for_image(Path(image_path), index.palette, index.config)
    return query_signature(index, sig, top_k, beam)


def linear_scan(index: LoadedIndex, sig: BinarySignature, exclude_oid=None):
    """Exhaustive EMD ranking over every stored signature: the oracle the
    tree search is measured against."""
    qw = weight_vector(sig)
    ranked = [(emd(qw, index.weight_of(rec.oid), index.ground), rec.oid)
              for rec in index.records if rec.oid != exclude_oid]
    ranked.sort()
    return ranked


@dataclass
class EvalRow:
    oid: int
    label: str
    k: int
    precision: float
    recall: float | None
    overlap: float
    nodes_visited: int
    emd_evals: int
    candidates: int


@dataclass
class EvalReport:
    rows: list
    k_list: list
    mean_precision: dict
    mean_recall: dict
    mean_overlap: dict

    def to_csv(self) -> str:
        out = ["oid,label,k,precision,recall,overlap,nodes_visited,emd_evals,candidates"]
        for r in self.rows:
            recall = "" if r.recall is None else f"{r.recall:.6f}"
            out.append(f"{r.oid},{r.label},{r.k},{r.precision:.6f},{recall},"
                       f"{r.overlap:.6f},{r.nodes_visited},{r.emd_evals},{r.candidates}")
        for k in self.k_list:
            rec = self.mean_recall[k]
            out.append(f"mean,,{k},{self.mean_precision[k]:.6f},"
                       f"{'' if rec is None else f'{rec:.6f}'},"
                       f"{self.mean_overlap[k]:.6f},,,")
        return "\n".join(out) + "\n"


def evaluate(index: LoadedIndex, labels: dict, k_list,
             beam: str | None = None) -> EvalReport:
    """Leave-one-in protocol: every indexed image queries the index with its
    stored signature, excluded from its own ranking. A result is relevant
    iff its label matches. Also ranks by exhaustive scan and reports the
    top-K overlap between tree search and the scan."""
    missing = [oid for oid in index.paths if oid not in labels]
    if missing:
        raise InvalidParameterError(
            f"{len(missing)} indexed oids have no label (first: {missing[:5]})"
        )
    k_list = sorted(set(int(k) for k in k_list))
    class_sizes = {}
    for oid in index.paths:
        class_sizes[labels[oid]] = class_sizes.get(labels[oid], 0) + 1
    rows = []
    for rec in index.records:
        oid = rec.oid
        label = labels[oid]
        res = query_signature(index, rec.sig, max(k_list), beam, exclude_oid=oid)
        tree_ranked = [o for o, _, _ in res.ranked]
        oracle = [o for _, o in linear_scan(index, rec.sig, exclude_oid=oid)]
        for k in k_list:
            top = tree_ranked[:k]
            relevant = sum(1 for o in top if labels[o] == label)
            precision = relevant / k
            others = class_sizes[label] - 1
            recall = (relevant / others) if others > 0 else None
            overlap = len(set(top) & set(oracle[:k])) / k
            rows.append(EvalRow(oid, label, k, precision, recall, overlap,
                                res.nodes_visited, res.emd_evals, res.candidates))
    mean_p, mean_r, mean_o = {}, {}, {}
    for k in k_list:
        ks = [r for r in rows if r.k == k]
        mean_p[k] = float(np.mean([r.precision for r in ks]))
        defined = [r.recall for r in ks if r.recall is not None]
        mean_r[k] = float(np.mean(defined)) if defined else None
        mean_o[k] = float(np.mean([r.overlap for r in ks]))
    return EvalReport(rows, k_list, mean_p, mean_r, mean_o)


def read_labels(path, paths_by_oid: dict) -> dict:
    """Accept "oid<TAB>label" or "path<TAB>label" lines; returns oid->label."""
    by_path = {}
    for oid, p in paths_by_oid.items():
        by_path[p] = oid
        by_path[Path(p).name] = oid
    labels = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedFileError(f"{path}:{lineno}: expected key<TAB>label")
        key, label = parts
        if key.isdigit() and int(key) in paths_by_oid:
            labels[int(key)] = label
        elif key in by_path:
            labels[by_path[key]] = label
        elif Path(key).name in by_path:
            labels[by_path[Path(key).name]] = label
        else:
            raise MalformedFileError(f"{path}:{lineno}: unknown image {key!r}")
    return labels


def stats_csv(index: LoadedIndex, probes: int = 50,
              beam: str | None = None) -> str:
    """Build counters plus per-query instrumentation over a deterministic
    sample of stored signatures, as CSV."""
    out = ["scope,oid,metric,value"]
    bs = index.build_stats or {}
    for key in sorted(bs):
        out.append(f"build,,{key},{bs[key]}")
    stats = index.tree.stats()
    out.append(f"tree,,height,{stats.height}")
    out.append(f"tree,,node_count,{stats.node_count}")
    out.append(f"tree,,signatures,{stats.signature_count}")
    records = index.records
    step = max(1, len(records) // max(probes, 1))
    sample = records[::step][:probes]
    for rec in sample:
        res = query_signature(index, rec.sig, 10, beam)
        out.append(f"query,{rec.oid},nodes_visited,{res.nodes_visited}")
        out.append(f"query,{rec.oid},emd_evals,{res.emd_evals}")
        out.append(f"query,{rec.oid},candidates,{res.candidates}")
        out.append(f"query,{rec.oid},elapsed_ms,{res.elapsed_ms:.3f}")
    return "\n".join(out) + "\n"
