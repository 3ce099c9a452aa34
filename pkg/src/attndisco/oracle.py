"""Brute-force reference implementations for certifying the decoders.

Everything here enumerates whole structures and scores them directly,
without sharing code paths with the chart or contraction algorithms.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .core import ConstituencyTree, DependencyTree, Leaf, Node, dependency_violations, iter_nodes

MAX_BINARY = 10
MAX_DEPENDENCY = 7


def _check_range(n: int, limit: int) -> None:
    if not 1 <= n <= limit:
        raise ValueError(f"oracle supports 1 <= n <= {limit}, got {n}")


@lru_cache(maxsize=None)
def _binary(i: int, j: int) -> tuple:
    if i == j:
        return (Leaf(i),)
    out = []
    for k in range(i, j):
        for left in _binary(i, k):
            for right in _binary(k + 1, j):
                out.append(Node(left, right))
    return tuple(out)


def enum_binary_trees(n: int) -> list[ConstituencyTree]:
    """All Catalan(n-1) binary trees over leaves 1..n."""
    _check_range(n, MAX_BINARY)
    return list(_binary(1, n))


def score_const_tree(tree: ConstituencyTree, A, variant: str = "literal") -> float:
    """Recursive span score of ``tree``, with block means taken straight from A."""
    A = np.asarray(A, dtype=np.float64)

    def score(t):
        if isinstance(t, Leaf):
            return float(A[:, t.pos - 1].sum())
        i, k, j = t.start - 1, t.left.end - 1, t.end - 1
        link = A[i:k + 1, k + 1:j + 1].mean() + A[k + 1:j + 1, i:k + 1].mean()
        children = score(t.left) + score(t.right)
        if variant == "literal":
            return (children + link) / 2
        return children + link / 2

    return score(tree)


def admissible_trees(trees, table: np.ndarray) -> list[ConstituencyTree]:
    """Trees whose every node span is allowed by a 0-based admissibility table."""
    return [t for t in trees
            if all(table[x.start - 1, x.end - 1] for x in iter_nodes(t))]


@lru_cache(maxsize=None)
def _arborescences(n: int, root: int) -> tuple:
    others = [d for d in range(1, n + 1) if d != root]
    out = []
    for choice in itertools.product(range(1, n + 1), repeat=n - 1):
        heads = [0] * n
        for d, h in zip(others, choice):
            heads[d - 1] = h
        if not dependency_violations(heads):
            out.append(tuple(heads))
    return tuple(out)


def enum_arborescences(n: int, root: int) -> list[DependencyTree]:
    """Every spanning arborescence of the complete digraph on 1..n rooted at ``root``."""
    _check_range(n, MAX_DEPENDENCY)
    if not 1 <= root <= n:
        raise ValueError(f"root {root} outside 1..{n}")
    return [DependencyTree(h) for h in _arborescences(n, root)]


@lru_cache(maxsize=None)
def _projective(i: int, j: int) -> tuple:
    """(head, arcs) for every projective tree spanning i..j."""
    if i > j:
        return ()
    out = []
    for h in range(i, j + 1):
        for left in _sequences(i, h - 1):
            for right in _sequences(h + 1, j):
                arcs = [(h, sh) for sh, _ in left + right]
                for _, sub in left + right:
                    arcs.extend(sub)
                out.append((h, tuple(arcs)))
    return tuple(out)


@lru_cache(maxsize=None)
def _sequences(i: int, j: int) -> tuple:
    """Ways to split i..j into consecutive blocks, each a projective tree."""
    if i > j:
        return ((),)
    out = []
    for k in range(i, j + 1):
        for first in _projective(i, k):
            for rest in _sequences(k + 1, j):
                out.append((first,) + rest)
    return tuple(out)


def enum_projective_trees(n: int) -> list[DependencyTree]:
    """Every single-root projective dependency tree over 1..n."""
    _check_range(n, MAX_DEPENDENCY)
    trees = []
    for root, arcs in _projective(1, n):
        heads = [0] * n
        for h, d in arcs:
            heads[d - 1] = h
        trees.append(DependencyTree(heads))
    return trees


def eisner_items(tree: DependencyTree) -> set[tuple[int, int]]:
    """1-based spans of every chart item in the tree's Eisner derivation.

    For head h with right dependents q1 < ... < qm, the derivation builds
    [h, qk] (arc item) and [h, right edge of qk's subtree] (completed item)
    for each k; left dependents mirror this.
    """
    kids = tree.children()
    lo = {}
    hi = {}

    def edges(h):
        a = b = h
        for d in kids[h]:
            da, db = edges(d)
            a, b = min(a, da), max(b, db)
        lo[h], hi[h] = a, b
        return a, b

    edges(tree.root)
    items = set()
    for h in range(1, tree.n + 1):
        items.add((h, h))
        for d in kids[h]:
            if d > h:
                items.add((h, d))
                items.add((h, hi[d]))
            else:
                items.add((d, h))
                items.add((lo[d], h))
    return items


def best_score(trees, scorer) -> tuple[float, object]:
    """Maximum of ``scorer`` over ``trees`` and the first tree attaining it."""
    best = None
    best_tree = None
    for t in trees:
        s = scorer(t)
        if best is None or s > best:
            best, best_tree = s, t
    return best, best_tree


def head_matrix(trees) -> np.ndarray:
    """Stack head vectors into a (num_trees, n) int array."""
    return np.array([t.heads for t in trees], dtype=np.int64)


def dependency_scores(heads: np.ndarray, A, root_weights=None) -> np.ndarray:
    """Score many trees at once: sum of A[d, h] over arcs h -> d.

    ``root_weights[r]`` (0-based) is added for each tree's root when given.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    padded = np.zeros((n, n + 1))
    padded[:, 1:] = A
    if root_weights is not None:
        padded[:, 0] = root_weights
    return padded[np.arange(n)[None, :], heads].sum(axis=1)
