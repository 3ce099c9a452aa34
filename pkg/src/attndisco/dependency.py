"""Dependency-tree induction over the EDU influence graph.

The influence of EDU i on EDU j is the attention j pays to i, so arc
weights are the transposed attention matrix.  Two decoders are provided:
Eisner's chart algorithm (projective, virtual root with importance-based
root arcs) and Chu-Liu-Edmonds (non-projective, root fixed to the most
attended EDU), plus a two-level sentence-constrained CLE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attention import importance
from .cky import SpanConstraint
from .core import DependencyTree, sentence_ranges

NEG = -np.inf


@dataclass(frozen=True)
class InfluenceGraph:
    """Dense arc weights; ``weights[i, j]`` (0-based) is the arc i -> j.

    The diagonal holds ``-inf`` so self-loops never win a max.
    """

    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def weight(self, i: int, j: int) -> float:
        """1-based arc weight e[i][j]."""
        if i == j:
            raise ValueError("self-loops have no weight")
        return float(self.weights[i - 1, j - 1])


def build_graph(A) -> InfluenceGraph:
    W = np.array(A, dtype=np.float64).T.copy()
    np.fill_diagonal(W, NEG)
    W.setflags(write=False)
    return InfluenceGraph(W)


def root_weights(A) -> np.ndarray:
    """Virtual-root arc weights for Eisner: importance scaled by 1/n."""
    A = np.asarray(A, dtype=np.float64)
    return importance(A) / A.shape[0]


def dependency_score(tree: DependencyTree, A, with_root: bool = True) -> float:
    """Sum of arc weights, optionally including the virtual-root arc."""
    A = np.asarray(A, dtype=np.float64)
    total = sum(A[d - 1, h - 1] for h, d in tree.arcs())
    if with_root:
        total += root_weights(A)[tree.root - 1]
    return float(total)


# --------------------------------------------------------------------------
# Eisner
# --------------------------------------------------------------------------


def eisner_decode(A, constraint: SpanConstraint | None = None) -> tuple[DependencyTree, float]:
    """Best projective tree with exactly one root child, and its chart score.

    Chart items are indexed [start, end, side] with side 0 = head at the end
    and side 1 = head at the start.  Under a sentence constraint every item
    whose span is inadmissible is removed from the chart.  Equal candidates
    resolve to the leftmost split point, then the leftmost root.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if n < 1:
        raise ValueError("cannot parse an empty matrix")
    W = build_graph(A).weights
    adm = (constraint or SpanConstraint()).table(n)

    C = np.full((n, n, 2), NEG)
    I = np.full((n, n, 2), NEG)
    Cb = np.full((n, n, 2), -1, dtype=np.int64)
    Ib = np.full((n, n), -1, dtype=np.int64)
    C[np.arange(n), np.arange(n), :] = 0.0

    for length in range(1, n):
        s = np.arange(n - length)
        t = s + length
        S = s[:, None]
        T = t[:, None]
        Q = S + np.arange(length)[None, :]
        rows = np.arange(len(s))
        blocked = ~adm[s, t]

        base = C[S, Q, 1] + C[Q + 1, T, 0]
        q = np.argmax(base, axis=1)
        val = base[rows, q]
        val[blocked] = NEG
        I[s, t, 1] = val + W[s, t]
        I[s, t, 0] = val + W[t, s]
        Ib[s, t] = s + q

        left = C[S, Q, 0] + I[Q, T, 0]
        q = np.argmax(left, axis=1)
        val = left[rows, q]
        val[blocked] = NEG
        C[s, t, 0] = val
        Cb[s, t, 0] = s + q

        right = I[S, Q + 1, 1] + C[Q + 1, T, 1]
        q = np.argmax(right, axis=1)
        val = right[rows, q]
        val[blocked] = NEG
        C[s, t, 1] = val
        Cb[s, t, 1] = s + q + 1

    final = C[0, :, 0] + C[:, n - 1, 1] + root_weights(A)
    r = int(np.argmax(final))
    score = float(final[r])
    if not np.isfinite(score):
        raise RuntimeError("no admissible projective tree")

    heads = [0] * n
    stack = [("C", 0, r, 0), ("C", r, n - 1, 1)]
    while stack:
        kind, a, b, side = stack.pop()
        if a == b:
            continue
        if kind == "C":
            m = int(Cb[a, b, side])
            if side == 0:
                stack += [("C", a, m, 0), ("I", m, b, 0)]
            else:
                stack += [("I", a, m, 1), ("C", m, b, 1)]
        else:
            if side == 1:
                heads[b] = a + 1
            else:
                heads[a] = b + 1
            m = int(Ib[a, b])
            stack += [("C", a, m, 1), ("C", m + 1, b, 0)]
    return DependencyTree(heads), score


def eisner_parse(A, constraint: SpanConstraint | None = None) -> DependencyTree:
    return eisner_decode(A, constraint)[0]


# --------------------------------------------------------------------------
# Chu-Liu-Edmonds
# --------------------------------------------------------------------------


def _find_cycle(heads: np.ndarray, root: int) -> list[int] | None:
    n = len(heads)
    color = np.zeros(n, dtype=np.int8)  # 0 new, 1 on current path, 2 done
    color[root] = 2
    for v in range(n):
        path = []
        x = v
        while color[x] == 0:
            color[x] = 1
            path.append(x)
            x = int(heads[x])
        if color[x] == 1:
            return sorted(path[path.index(x):])
        for y in path:
            color[y] = 2
    return None


def max_arborescence(W: np.ndarray, root: int) -> np.ndarray:
    """Maximum spanning arborescence of a dense digraph by recursive contraction.

    ``W[h, d]`` is the weight of arc h -> d (0-based).  Returns a head array
    with ``-1`` at the root.  Each node takes its best in-arc (lowest head
    index on ties); a cycle is contracted into one node whose in-arcs are
    re-weighted by the cycle arc they would displace, the smaller graph is
    solved, and the cycle is reopened at the chosen entry point.
    """
    W = np.array(W, dtype=np.float64)
    m = W.shape[0]
    np.fill_diagonal(W, NEG)
    W[:, root] = NEG
    heads = np.argmax(W, axis=0)
    heads[root] = -1
    if m == 1:
        return heads
    cycle = _find_cycle(heads, root)
    if cycle is None:
        return heads

    cyc = np.array(cycle)
    in_cycle = np.zeros(m, dtype=bool)
    in_cycle[cyc] = True
    rest = np.flatnonzero(~in_cycle)
    k = len(rest)

    W2 = np.full((k + 1, k + 1), NEG)
    W2[:k, :k] = W[np.ix_(rest, rest)]
    kept = W[heads[cyc], cyc]
    gain = W[np.ix_(rest, cyc)] - kept[None, :]
    enter = np.argmax(gain, axis=1)
    W2[:k, k] = gain[np.arange(k), enter]
    out = W[np.ix_(cyc, rest)]
    leave = np.argmax(out, axis=0)
    W2[k, :k] = out[leave, np.arange(k)]

    root2 = int(np.searchsorted(rest, root))
    sub = max_arborescence(W2, root2)

    result = heads.copy()
    for j, d in enumerate(rest):
        h = sub[j]
        if h == -1:
            result[d] = -1
        elif h == k:
            result[d] = cyc[leave[j]]
        else:
            result[d] = rest[h]
    u = int(sub[k])
    result[cyc[enter[u]]] = rest[u]
    return result


def _to_tree(heads0: np.ndarray) -> DependencyTree:
    return DependencyTree([int(h) + 1 for h in heads0])


def cle_root(A) -> int:
    """0-based index of the most attended EDU (first on ties)."""
    return int(np.argmax(importance(A)))


def cle_parse(A) -> DependencyTree:
    A = np.asarray(A, dtype=np.float64)
    return _to_tree(max_arborescence(build_graph(A).weights, cle_root(A)))


@dataclass(frozen=True)
class SentenceGraph:
    """Sentence-level graph: mean EDU arc weight between sentence pairs and
    the EDU pair ``witness[S][D]`` (0-based) carrying the strongest arc."""

    weights: np.ndarray
    witness: dict

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def build_sentence_graph(A, sent_ids: Sequence[int]) -> SentenceGraph:
    W = build_graph(A).weights
    ranges = sentence_ranges(sent_ids)
    m = len(ranges)
    Ws = np.full((m, m), NEG)
    witness = {}
    for a, (s0, s1) in enumerate(ranges):
        for b, (d0, d1) in enumerate(ranges):
            if a == b:
                continue
            block = W[s0:s1 + 1, d0:d1 + 1]
            Ws[a, b] = block.mean()
            si, di = np.unravel_index(np.argmax(block), block.shape)
            witness[a, b] = (s0 + int(si), d0 + int(di))
    return SentenceGraph(Ws, witness)


def cle_parse_sentence_constrained(A, sent_ids: Sequence[int]) -> DependencyTree:
    """CLE over sentences first, then within each sentence.

    The root sentence holds the most attended EDU.  Every sentence-level arc
    S -> D becomes its strongest EDU arc, whose dependent is then the local
    root of D for the within-sentence CLE.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if len(sent_ids) != n:
        raise ValueError(f"{len(sent_ids)} sentence ids for {n} EDUs")
    ranges = sentence_ranges(sent_ids)
    if len(ranges) == 1:
        return cle_parse(A)
    W = build_graph(A).weights
    r = cle_root(A)
    root_sent = next(i for i, (a, b) in enumerate(ranges) if a <= r <= b)

    graph = build_sentence_graph(A, sent_ids)
    sent_heads = max_arborescence(graph.weights, root_sent)

    heads = np.full(n, -1, dtype=np.int64)
    local_root = {root_sent: r}
    for dsent, hsent in enumerate(sent_heads):
        if hsent < 0:
            continue
        s, d = graph.witness[int(hsent), dsent]
        heads[d] = s
        local_root[dsent] = d

    for i, (a, b) in enumerate(ranges):
        sub = max_arborescence(W[a:b + 1, a:b + 1], local_root[i] - a)
        for j, h in enumerate(sub):
            if h >= 0:
                heads[a + j] = a + h
    return _to_tree(heads)


# --------------------------------------------------------------------------


ALGORITHMS = ("cky", "eisner", "cle")


def induce_dependency(A, algo: str, sent_ids: Sequence[int] | None = None,
                      level: str = "none") -> DependencyTree:
    """Dispatch to a dependency decoder; ``level`` is 'none' or 'sentence'."""
    if level not in ("none", "sentence"):
        raise ValueError(f"{level} constraint is not defined for dependency parsing")
    if algo == "eisner":
        constraint = SpanConstraint("sentence", tuple(sent_ids)) if level == "sentence" else None
        return eisner_parse(A, constraint)
    if algo == "cle":
        if level == "sentence":
            return cle_parse_sentence_constrained(A, sent_ids)
        return cle_parse(A)
    raise ValueError(f"unknown dependency algorithm {algo!r}")
