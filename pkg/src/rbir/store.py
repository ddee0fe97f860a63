"""Bit-exact persistence: signature files, serialized S-trees and the
catalog sidecar.

Signature file layout (big-endian):
    magic "RBIR" | version u16 | n u16 | m u16 | count u64
    per record: oid u64 | ceil(n*m/8) signature bytes
Bit (k, i) (1-based block k, position i) sits at global bit index
(k-1)*m + (i-1), MSB-first within bytes.

Tree file layout (big-endian):
    magic "RBIT" | version u16 | n u16 | m u16 | node_min u16 | node_max u16
    | count u64 | palette_hash u64 | params_len u32 | params JSON bytes
    | pre-order nodes: kind u8 (0 leaf / 1 internal) | entry_count u16
      | per entry: signature bytes, then oid u64 (leaf) or child node
        (internal, recursively)
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptHeaderError,
    DuplicateOidError,
    MalformedFileError,
    ShapeMismatchError,
    TruncatedFileError,
    VersionMismatchError,
)
from .signature import BinarySignature, ColorPalette
from .stree import STree, STreeConfig, STreeNode, Entry

SIG_MAGIC = b"RBIR"
TREE_MAGIC = b"RBIT"
VERSION = 1


@dataclass(frozen=True)
class SignatureRecord:
    oid: int
    sig: BinarySignature


@dataclass(frozen=True)
class IndexHeader:
    n: int
    m: int
    count: int
    palette_hash: int = 0
    params: dict | None = None
    version: int = VERSION


def palette_hash(palette: ColorPalette) -> int:
    """64-bit digest of the palette's canonical text form; binds an index to
    the exact palette its ground distances were computed from."""
    canon = "rbir-palette-v1\n" + "".join(
        "%.9g %.9g %.9g\n" % tuple(row) for row in palette.colors
    )
    return int.from_bytes(hashlib.sha256(canon.encode("ascii")).digest()[:8], "big")


def _atomic_write(path, data: bytes):
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


# -- signature file ---------------------------------------------------------

def write_signature_file(records, header: IndexHeader, path) -> None:
    sig_bytes = (header.n * header.m + 7) // 8
    chunks = [SIG_MAGIC, struct.pack(">HHHQ", header.version, header.n,
                                     header.m, len(records))]
    seen = set()
    for rec in records:
        if (rec.sig.n, rec.sig.m) != (header.n, header.m):
            raise ShapeMismatchError(
                f"record oid={rec.oid} shape ({rec.sig.n},{rec.sig.m}) != "
                f"header ({header.n},{header.m})"
            )
        if rec.oid in seen:
            raise DuplicateOidError(f"oid {rec.oid} repeated in signature file")
        seen.add(rec.oid)
        assert len(rec.sig.packed) == sig_bytes
        chunks.append(struct.pack(">Q", rec.oid))
        chunks.append(rec.sig.packed)
    _atomic_write(path, b"".join(chunks))


def read_signature_file(path):
    data = Path(path).read_bytes()
    if len(data) < 18:
        raise TruncatedFileError(f"{path}: shorter than the fixed header")
    if data[:4] != SIG_MAGIC:
        raise CorruptHeaderError(f"{path}: bad magic {data[:4]!r}")
    version, n, m, count = struct.unpack(">HHHQ", data[4:18])
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    if n < 1 or m < 1:
        raise CorruptHeaderError(f"{path}: bad shape n={n}, m={m}")
    sig_bytes = (n * m + 7) // 8
    rec_size = 8 + sig_bytes
    if len(data) - 18 != count * rec_size:
        raise TruncatedFileError(
            f"{path}: payload {len(data) - 18} bytes, expected {count * rec_size}"
        )
    records = []
    off = 18
    for _ in range(count):
        (oid,) = struct.unpack(">Q", data[off:off + 8])
        sig = BinarySignature(n, m, data[off + 8:off + rec_size])
        records.append(SignatureRecord(oid, sig))
        off += rec_size
    return IndexHeader(n, m, count, version=version), records


# -- tree file ---------------------------------------------------------------

def _write_node(chunks, node: STreeNode):
    chunks.append(struct.pack(">BH", 0 if node.is_leaf else 1, len(node.entries)))
    for e in node.entries:
        chunks.append(e.sig.packed)
        if node.is_leaf:
            chunks.append(struct.pack(">Q", e.oid))
        else:
            _write_node(chunks, e.child)


def save_tree(tree: STree, path, palette_digest: int = 0, params: dict | None = None) -> None:
    payload = json.dumps(params or {}, sort_keys=True).encode("utf-8")
    chunks = [TREE_MAGIC,
              struct.pack(">HHHHHQQI", VERSION, tree.n, tree.m,
                          tree.config.node_min, tree.config.node_max,
                          tree.size, palette_digest, len(payload)),
              payload]
    _write_node(chunks, tree.root)
    _atomic_write(path, b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.off + size > len(self.data):
            raise TruncatedFileError(f"{self.path}: truncated at byte {self.off}")
        out = self.data[self.off:self.off + size]
        self.off += size
        return out


def _read_node(r: _Reader, tree: STree, depth: int, leaf_depths: list,
               seen_oids: set) -> STreeNode:
    kind, count = struct.unpack(">BH", r.take(3))
    if kind not in (0, 1):
        raise MalformedFileError(f"{r.path}: bad node kind {kind}")
    node = STreeNode(is_leaf=(kind == 0))
    sig_bytes = (tree.n * tree.m + 7) // 8
    for _ in range(count):
        sig = BinarySignature(tree.n, tree.m, r.take(sig_bytes))
        if node.is_leaf:
            (oid,) = struct.unpack(">Q", r.take(8))
            if oid in seen_oids:
                raise MalformedFileError(f"{r.path}: duplicate oid {oid}")
            seen_oids.add(oid)
            node.entries.append(Entry(sig, oid=oid))
        else:
            child = _read_node(r, tree, depth + 1, leaf_depths, seen_oids)
            child.parent = node
            entry = Entry(sig, child=child)
            node.entries.append(entry)
            if child.union_sig().packed != sig.packed:
                raise MalformedFileError(
                    f"{r.path}: entry signature is not the OR of its child"
                )
    if node.is_leaf:
        leaf_depths.append(depth)
    return node


def read_tree_header(path):
    """(n, m, node_min, node_max, size, palette digest, params) without
    materializing the nodes."""
    data = Path(path).read_bytes()
    header_size = 4 + struct.calcsize(">HHHHHQQI")
    if len(data) < header_size:
        raise TruncatedFileError(f"{path}: shorter than the fixed header")
    if data[:4] != TREE_MAGIC:
        raise CorruptHeaderError(f"{path}: bad magic {data[:4]!r}")
    version, n, m, node_min, node_max, size, digest, params_len = struct.unpack(
        ">HHHHHQQI", data[4:header_size]
    )
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    r = _Reader(data, str(path))
    r.off = header_size
    try:
        params = json.loads(r.take(params_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"{path}: bad params block: {exc}") from None
    return n, m, node_min, node_max, size, digest, params


def load_tree(path, ground: np.ndarray):
    """Rebuild the tree and validate its structural invariants (occupancy,
    union/cover equality, uniform leaf depth)."""
    data = Path(path).read_bytes()
    header_size = 4 + struct.calcsize(">HHHHHQQI")
    if len(data) < header_size:
        raise TruncatedFileError(f"{path}: shorter than the fixed header")
    if data[:4] != TREE_MAGIC:
        raise CorruptHeaderError(f"{path}: bad magic {data[:4]!r}")
    version, n, m, node_min, node_max, size, digest, params_len = struct.unpack(
        ">HHHHHQQI", data[4:header_size]
    )
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    r = _Reader(data, str(path))
    r.off = header_size
    try:
        params = json.loads(r.take(params_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"{path}: bad params block: {exc}") from None
    try:
        config = STreeConfig(node_min, node_max)
    except Exception:
        raise CorruptHeaderError(f"{path}: bad node bounds {node_min}/{node_max}") from None
    tree = STree(n, m, ground, config)
    leaf_depths: list = []
    seen: set = set()
    tree.root = _read_node(r, tree, 0, leaf_depths, seen)
    if r.off != len(data):
        raise MalformedFileError(f"{path}: {len(data) - r.off} trailing bytes")
    if len(seen) != size:
        raise MalformedFileError(f"{path}: header count {size} != stored {len(seen)}")
    tree.size = size
    tree._oids = seen
    if len(set(leaf_depths)) > 1:
        raise MalformedFileError(f"{path}: leaves at unequal depths {sorted(set(leaf_depths))}")
    _validate_occupancy(tree, path)
    return tree, digest, params


def _validate_occupancy(tree: STree, path):
    stack = [(tree.root, True)]
    while stack:
        node, is_root = stack.pop()
        count = len(node.entries)
        if is_root:
            if not node.is_leaf and count < 2:
                raise MalformedFileError(f"{path}: internal root with {count} entries")
            if count > tree.config.node_max:
                raise MalformedFileError(f"{path}: root overflows node_max")
        elif not tree.config.node_min <= count <= tree.config.node_max:
            raise MalformedFileError(
                f"{path}: node with {count} entries violates "
                f"[{tree.config.node_min}, {tree.config.node_max}]"
            )
        if not node.is_leaf:
            for e in node.entries:
                stack.append((e.child, False))


# -- catalog sidecar ---------------------------------------------------------

def write_catalog(rows, path) -> None:
    """rows: iterable of (oid, path, label)."""
    text = "".join(f"{oid}\t{p}\t{label}\n" for oid, p, label in rows)
    _atomic_write(path, text.encode("utf-8"))


def read_catalog(path):
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedFileError(f"{path}:{lineno}: expected oid<TAB>path<TAB>label")
        try:
            oid = int(parts[0])
        except ValueError:
            raise MalformedFileError(f"{path}:{lineno}: bad oid {parts[0]!r}") from None
        rows.append((oid, parts[1], parts[2]))
    return rows
