"""CKY induction of unlabeled binary constituency trees from attention.

Each span's score combines its two best sub-spans with the mean attention
flowing between them in both directions.  Rectangle means come from a 2-D
prefix-sum table, so a parse costs O(n^3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import importance
from .core import AnnotatedDocument, ConstituencyTree, Leaf, Node

LEVELS = ("none", "sentence", "paragraph")
VARIANTS = ("literal", "halved-averages")


@dataclass(frozen=True)
class SpanConstraint:
    """Which spans a tree may contain, derived from sentence/paragraph ids."""

    level: str = "none"
    sent_ids: tuple = ()
    para_ids: tuple = ()

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"unknown constraint level {self.level!r}")
        if self.level != "none" and not self.sent_ids:
            raise ValueError(f"{self.level} constraint needs sentence ids")
        if self.level == "paragraph" and len(self.para_ids) != len(self.sent_ids):
            raise ValueError("paragraph constraint needs one paragraph id per EDU")

    @classmethod
    def from_document(cls, doc: AnnotatedDocument, level: str = "sentence") -> "SpanConstraint":
        if level == "none":
            return cls()
        return cls(level, doc.sent_ids, doc.para_ids)

    def table(self, n: int) -> np.ndarray:
        """Boolean n x n matrix; entry [i, j] (0-based) says span i..j is admissible."""
        if self.level == "none":
            return np.ones((n, n), dtype=bool)
        if len(self.sent_ids) != n:
            raise ValueError(f"constraint covers {len(self.sent_ids)} EDUs, matrix has {n}")
        sent = np.asarray(self.sent_ids)
        same = sent[:, None] == sent[None, :]
        starts, ends = _boundaries(sent)
        ok = same | (starts[:, None] & ends[None, :])
        if self.level == "paragraph":
            para = np.asarray(self.para_ids)
            pstarts, pends = _boundaries(para)
            ok &= same | (para[:, None] == para[None, :]) | (pstarts[:, None] & pends[None, :])
        return ok

    def admits(self, i: int, j: int) -> bool:
        """1-based span check, for callers that hold a single span."""
        n = len(self.sent_ids) if self.sent_ids else max(i, j)
        return bool(self.table(n)[i - 1, j - 1])


def _boundaries(ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    change = ids[1:] != ids[:-1]
    starts = np.concatenate(([True], change))
    ends = np.concatenate((change, [True]))
    return starts, ends


@dataclass(frozen=True)
class CkyChart:
    """``scores[i, j]`` is the best sub-tree score over 0-based span i..j
    (``-inf`` when inadmissible); ``back[i, j]`` is its split point k."""

    scores: np.ndarray
    back: np.ndarray

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def prefix_sums(A: np.ndarray) -> np.ndarray:
    S = np.zeros((A.shape[0] + 1, A.shape[1] + 1))
    S[1:, 1:] = A.cumsum(axis=0).cumsum(axis=1)
    return S


def cky_chart(A, constraint: SpanConstraint | None = None, variant: str = "literal") -> CkyChart:
    if variant not in VARIANTS:
        raise ValueError(f"unknown score variant {variant!r}")
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if n < 1:
        raise ValueError("cannot parse an empty matrix")
    adm = (constraint or SpanConstraint()).table(n)
    S = prefix_sums(A)

    P = np.full((n, n), -np.inf)
    back = np.full((n, n), -1, dtype=np.int64)
    P[np.arange(n), np.arange(n)] = importance(A)

    for length in range(2, n + 1):
        I = np.arange(n - length + 1)[:, None]
        J = I + length - 1
        K = I + np.arange(length - 1)[None, :]
        # block rows i..k x cols k+1..j, and its mirror rows k+1..j x cols i..k
        fwd = S[K + 1, J + 1] - S[I, J + 1] - S[K + 1, K + 1] + S[I, K + 1]
        bwd = S[J + 1, K + 1] - S[K + 1, K + 1] - S[J + 1, I] + S[K + 1, I]
        area = (K - I + 1) * (J - K)
        link = fwd / area + bwd / area
        children = P[I, K] + P[K + 1, J]
        if variant == "literal":
            cand = (children + link) / 2
        else:
            cand = children + link / 2
        cand[~(adm[I, K] & adm[K + 1, J])] = -np.inf
        best = np.argmax(cand, axis=1)
        rows = np.arange(len(best))
        vals = cand[rows, best]
        i_idx = I[:, 0]
        j_idx = J[:, 0]
        vals[~adm[i_idx, j_idx]] = -np.inf
        P[i_idx, j_idx] = vals
        back[i_idx, j_idx] = np.where(np.isfinite(vals), i_idx + best, -1)
    return CkyChart(P, back)


def _build_tree(back: np.ndarray, i: int, j: int) -> ConstituencyTree:
    # iterative post-order so deep trees never hit the recursion limit
    stack = [(i, j, False)]
    built: list[ConstituencyTree] = []
    while stack:
        a, b, ready = stack.pop()
        if a == b:
            built.append(Leaf(a + 1))
        elif ready:
            right = built.pop()
            left = built.pop()
            built.append(Node(left, right))
        else:
            k = int(back[a, b])
            if k < 0:
                raise RuntimeError(f"no admissible split for span [{a + 1},{b + 1}]")
            stack.append((a, b, True))
            stack.append((k + 1, b, False))
            stack.append((a, k, False))
    return built[0]


def cky_parse(
    A, constraint: SpanConstraint | None = None, variant: str = "literal"
) -> tuple[ConstituencyTree, float]:
    """Return the highest-scoring binary tree over all EDUs and its score.

    Ties between split points go to the smallest split index.
    """
    chart = cky_chart(A, constraint, variant)
    n = chart.n
    score = float(chart.scores[0, n - 1])
    if not np.isfinite(score):
        raise RuntimeError("no admissible tree over the full document")
    return _build_tree(chart.back, 0, n - 1), score
