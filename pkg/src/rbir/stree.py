"""S-tree: a height-balanced index of OR-union binary signatures.

Internal entries pair a union signature with a child node; leaf entries pair
a stored signature with its oid. Inserts descend along minimum earth-mover
distance, propagate OR-unions upward and split overflowing nodes around the
entry pair with maximum pairwise distance. Search prunes with the cover test
and visits covering children in ascending-distance order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import emd_cost
from .emd import weight_vector
from .errors import DuplicateOidError, InvalidParameterError, ShapeMismatchError
from .signature import BinarySignature, cover_test


@dataclass(frozen=True)
class STreeConfig:
    node_min: int = 4
    node_max: int = 8

    def __post_init__(self):
        if not 1 <= self.node_min <= self.node_max // 2:
            raise InvalidParameterError(
                f"need 1 <= node_min <= node_max/2, got {self.node_min}/{self.node_max}"
            )


@dataclass
class OpCounters:
    nodes_visited: int = 0
    emd_evals: int = 0
    cover_tests: int = 0
    unions: int = 0
    splits: int = 0

    def add(self, other: "OpCounters"):
        self.nodes_visited += other.nodes_visited
        self.emd_evals += other.emd_evals
        self.cover_tests += other.cover_tests
        self.unions += other.unions
        self.splits += other.splits


@dataclass
class TreeStats:
    height: int
    node_count: int
    leaf_count: int
    signature_count: int
    entry_counts: list


class Entry:
    """One <signature, payload> pair; payload is a child node or an oid."""

    __slots__ = ("sig", "weights", "child", "oid")

    def __init__(self, sig: BinarySignature, child=None, oid=None):
        self.child = child
        self.oid = oid
        self.set_sig(sig)

    def set_sig(self, sig: BinarySignature):
        # the decoded weight vector is cached with the signature and must be
        # refreshed together with it (union updates go through here)
        self.sig = sig
        self.weights = weight_vector(sig)


class STreeNode:
    __slots__ = ("is_leaf", "entries", "parent")

    def __init__(self, is_leaf: bool, parent=None):
        self.is_leaf = is_leaf
        self.entries: list[Entry] = []
        self.parent = parent

    def union_sig(self) -> BinarySignature:
        sig = self.entries[0].sig
        for e in self.entries[1:]:
            sig = sig.union(e.sig)
        return sig


class STree:
    """Single-writer while building; treat as frozen once queries start.
    Each insert/search fills a fresh OpCounters; `tree.counters` references
    the most recent operation's counters, so callers snapshot it right after
    the call they care about."""

    def __init__(self, n: int, m: int, ground: np.ndarray,
                 config: STreeConfig | None = None):
        self.n = n
        self.m = m
        self.ground = np.ascontiguousarray(ground, dtype=np.float64)
        if self.ground.shape != (n, n):
            raise ShapeMismatchError(
                f"ground matrix {self.ground.shape} does not match n={n}"
            )
        self.config = config or STreeConfig()
        self.root = STreeNode(is_leaf=True)
        self.size = 0
        self.counters = OpCounters()
        self._oids = set()

    # -- helpers -----------------------------------------------------------

    def _check_sig(self, sig: BinarySignature):
        if (sig.n, sig.m) != (self.n, self.m):
            raise ShapeMismatchError(
                f"signature shape ({sig.n},{sig.m}) does not match tree "
                f"({self.n},{self.m})"
            )

    def _emd(self, counters: OpCounters, weights_a: np.ndarray,
             weights_b: np.ndarray) -> float:
        counters.emd_evals += 1
        return emd_cost(weights_a, weights_b, self.ground)

    def _parent_entry(self, node: STreeNode) -> Entry:
        for e in node.parent.entries:
            if e.child is node:
                return e
        raise AssertionError("node missing from its parent")

    # -- insert ------------------------------------------------------------

    def insert(self, sig: BinarySignature, oid: int):
        """Descend along minimum EMD, append at the leaf, re-union ancestors,
        split on overflow."""
        self._check_sig(sig)
        if oid in self._oids:
            raise DuplicateOidError(f"oid {oid} already stored")
        counters = OpCounters()
        self.counters = counters
        qw = weight_vector(sig)
        node = self.root
        while not node.is_leaf:
            best = None
            best_d = 0.0
            for e in node.entries:
                d = self._emd(counters, e.weights, qw)
                if best is None or d < best_d:
                    best, best_d = e, d
            node = best.child
        node.entries.append(Entry(sig, oid=oid))
        self._oids.add(oid)
        self.size += 1
        self.union_signature(node, counters)
        if len(node.entries) > self.config.node_max:
            self.split_node(node, counters)

    def union_signature(self, node: STreeNode, counters: OpCounters | None = None):
        """Refresh the parent entry's signature with the OR of the node's
        entries, recursing to the root; stops early when unchanged."""
        counters = counters if counters is not None else self.counters
        while node.parent is not None:
            entry = self._parent_entry(node)
            s = node.union_sig()
            counters.unions += 1
            if s.packed == entry.sig.packed:
                break
            entry.set_sig(s)
            node = node.parent

    def split_node(self, node: STreeNode, counters: OpCounters | None = None):
        """Split an overflowing node around the entry pair with maximum
        pairwise EMD; remaining entries join the nearer seed (ties to the
        first), then minimal-margin moves restore the occupancy minimum."""
        counters = counters if counters is not None else self.counters
        counters.splits += 1
        entries = node.entries
        # seeds: the entry pair with maximum pairwise EMD (first pair on ties)
        k = len(entries)
        best_pair = (0, 1)
        best_d = -1.0
        for i in range(k):
            for j in range(i + 1, k):
                d = self._emd(counters, entries[i].weights, entries[j].weights)
                if d > best_d:
                    best_d = d
                    best_pair = (i, j)
        ia, ib = best_pair
        seed_a, seed_b = entries[ia], entries[ib]
        group_a, group_b = [seed_a], [seed_b]
        dists = {}  # entry index -> (EMD to seed a, EMD to seed b)
        for idx, e in enumerate(entries):
            if idx in (ia, ib):
                continue
            da = self._emd(counters, e.weights, seed_a.weights)
            db = self._emd(counters, e.weights, seed_b.weights)
            dists[idx] = (da, db)
            # nearer seed wins; ties go to the alpha node
            (group_a if da <= db else group_b).append(e)

        # rebalance: move entries with the smallest EMD margin until both
        # sides satisfy node_min (seeds never move)
        node_min = self.config.node_min
        index_of = {id(e): idx for idx, e in enumerate(entries)}
        while len(group_a) < node_min or len(group_b) < node_min:
            donor, taker = (group_a, group_b) if len(group_b) < node_min else (group_b, group_a)
            best_e = None
            best_margin = 0.0
            for e in donor:
                if e is seed_a or e is seed_b:
                    continue
                da, db = dists[index_of[id(e)]]
                margin = (db - da) if donor is group_a else (da - db)
                if best_e is None or margin < best_margin:
                    best_e, best_margin = e, margin
            donor.remove(best_e)
            taker.append(best_e)

        node_b = STreeNode(is_leaf=node.is_leaf, parent=node.parent)
        node.entries = group_a
        node_b.entries = group_b
        if not node.is_leaf:
            for e in group_b:
                e.child.parent = node_b
        sig_a = node.union_sig()
        sig_b = node_b.union_sig()
        counters.unions += 2

        parent = node.parent
        if parent is None:
            new_root = STreeNode(is_leaf=False)
            node.parent = new_root
            node_b.parent = new_root
            new_root.entries = [Entry(sig_a, child=node), Entry(sig_b, child=node_b)]
            self.root = new_root
            return
        entry = self._parent_entry(node)
        entry.set_sig(sig_a)
        pos = parent.entries.index(entry)
        parent.entries.insert(pos + 1, Entry(sig_b, child=node_b))
        if len(parent.entries) > self.config.node_max:
            self.split_node(parent, counters)

    # -- search ------------------------------------------------------------

    def search(self, query: BinarySignature, beam: str = "all"):
        """Cover-test-pruned traversal; returns candidate (sig, oid) pairs.
        beam="all" pushes every covering child best-first, beam="1" follows a
        single path; when nothing covers the query the minimum-EMD child is
        followed so results are never empty."""
        self._check_sig(query)
        if beam not in ("all", "1"):
            raise InvalidParameterError(f"beam must be 'all' or '1', got {beam!r}")
        counters = OpCounters()
        self.counters = counters
        out = []
        if self.size == 0:
            return out
        qw = weight_vector(query)
        stack = [self.root]
        while stack:
            node = stack.pop()
            counters.nodes_visited += 1
            if node.is_leaf:
                out.extend((e.sig, e.oid) for e in node.entries)
                continue
            covering = []
            for idx, e in enumerate(node.entries):
                counters.cover_tests += 1
                if cover_test(query, e.sig):
                    covering.append((idx, e))
            if covering:
                if len(covering) == 1:
                    stack.append(covering[0][1].child)
                else:
                    ranked = sorted(
                        ((self._emd(counters, e.weights, qw), idx, e)
                         for idx, e in covering),
                        key=lambda t: (t[0], t[1]),
                    )
                    if beam == "1":
                        stack.append(ranked[0][2].child)
                    else:
                        for _, _, e in reversed(ranked):
                            stack.append(e.child)
            else:
                best = None
                best_key = None
                for idx, e in enumerate(node.entries):
                    d = self._emd(counters, e.weights, qw)
                    if best is None or d < best_key:
                        best, best_key = e, d
                stack.append(best.child)
        return out

    # -- stats -------------------------------------------------------------

    def stats(self) -> TreeStats:
        height = 0
        node_count = 0
        leaf_count = 0
        entry_counts = []
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            node_count += 1
            entry_counts.append(len(node.entries))
            if node.is_leaf:
                leaf_count += 1
                height = max(height, depth)
            else:
                for e in node.entries:
                    stack.append((e.child, depth + 1))
        return TreeStats(height, node_count, leaf_count, self.size, entry_counts)


def tree_stats(tree: STree) -> TreeStats:
    return tree.stats()
