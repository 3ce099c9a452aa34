"""Tree evaluation: RST-Parseval, UAS, structural statistics and locality."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ConstituencyTree, DependencyTree, spans
from .treeops import is_vacuous


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    if len(values) == 0:
        raise ValueError("cannot aggregate an empty list")
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def rst_parseval(pred: ConstituencyTree, gold: ConstituencyTree) -> tuple[int, int]:
    """Matched and total spans, counting leaves and the full span."""
    if pred.span != gold.span:
        raise ValueError(f"trees cover {pred.span} and {gold.span}")
    n = gold.end - gold.start + 1
    return len(spans(pred) & spans(gold)), 2 * n - 1


def uas(pred: DependencyTree, gold: DependencyTree) -> tuple[int, int]:
    """Matched head attachments (root attachment included) and n."""
    if pred.n != gold.n:
        raise ValueError(f"trees have {pred.n} and {gold.n} EDUs")
    return sum(p == g for p, g in zip(pred.heads, gold.heads)), gold.n


@dataclass(frozen=True)
class ScoreReport:
    metric: str
    per_doc: dict = field(default_factory=dict)
    micro: float = 0.0
    macro: float = 0.0
    mean: float = 0.0
    std: float = 0.0


def score_report(metric: str, counts: dict) -> ScoreReport:
    """Build a report from ``{doc_id: (matched, total)}``."""
    if not counts:
        raise ValueError("no documents to score")
    per_doc = {k: m / t for k, (m, t) in counts.items()}
    matched = sum(m for m, _ in counts.values())
    total = sum(t for _, t in counts.values())
    mean, std = aggregate(list(per_doc.values()))
    return ScoreReport(metric, per_doc, matched / total, mean, mean, std)


# --------------------------------------------------------------------------
# Structure
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeStats:
    branch_width: float
    height: int
    leaf_ratio: float
    norm_arc_length: float
    vacuous: bool
    leaves: int = 0
    nodes: int = 0


def tree_stats(tree: DependencyTree) -> TreeStats:
    kids = tree.children()
    widths = [len(c) for c in kids.values() if c]
    leaves = sum(1 for c in kids.values() if not c)

    depth = {tree.root: 0}
    order = [tree.root]
    for h in order:
        for d in kids[h]:
            depth[d] = depth[h] + 1
            order.append(d)

    arcs = tree.arcs()
    return TreeStats(
        branch_width=float(np.mean(widths)) if widths else 0.0,
        height=max(depth.values()),
        leaf_ratio=leaves / tree.n,
        norm_arc_length=float(np.mean([abs(h - d) for h, d in arcs])) / tree.n if arcs else 0.0,
        vacuous=is_vacuous(tree),
        leaves=leaves,
        nodes=tree.n,
    )


@dataclass(frozen=True)
class CorpusStats:
    branch_width: float
    height: float
    leaf_ratio: float
    norm_arc_length: float
    vacuous_pct: float


def corpus_stats(trees: Sequence[DependencyTree]) -> CorpusStats:
    """Per-document averages, except leaf ratio which is pooled over the corpus."""
    if not trees:
        raise ValueError("empty corpus")
    stats = [tree_stats(t) for t in trees]
    return CorpusStats(
        branch_width=float(np.mean([s.branch_width for s in stats])),
        height=float(np.mean([s.height for s in stats])),
        leaf_ratio=sum(s.leaves for s in stats) / sum(s.nodes for s in stats),
        norm_arc_length=float(np.mean([s.norm_arc_length for s in stats])),
        vacuous_pct=100.0 * sum(s.vacuous for s in stats) / len(stats),
    )


def _is_local(arc: tuple[int, int]) -> bool:
    return abs(arc[0] - arc[1]) == 1


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def locality_report(preds: Sequence[DependencyTree],
                    golds: Sequence[DependencyTree]) -> tuple[float, float, float]:
    """Share of adjacent-EDU arcs among correct, predicted, and gold arcs.

    Counts are pooled over the corpus; root attachments are ignored.
    """
    if not preds:
        raise ValueError("empty corpus")
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predicted trees for {len(golds)} gold trees")
    correct = local_correct = pred_all = pred_local = gold_all = gold_local = 0
    for p, g in zip(preds, golds):
        if p.n != g.n:
            raise ValueError(f"trees have {p.n} and {g.n} EDUs")
        parcs, garcs = set(p.arcs()), set(g.arcs())
        hit = parcs & garcs
        correct += len(hit)
        local_correct += sum(map(_is_local, hit))
        pred_all += len(parcs)
        pred_local += sum(map(_is_local, parcs))
        gold_all += len(garcs)
        gold_local += sum(map(_is_local, garcs))
    return (_ratio(local_correct, correct), _ratio(pred_local, pred_all),
            _ratio(gold_local, gold_all))
