"""Glue between documents, decoders and metrics, shared by the CLI commands."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .attention import importance
from .cky import SpanConstraint, cky_parse
from .dependency import dependency_score, induce_dependency
from .metrics import rst_parseval, uas
from .oracle import (
    MAX_BINARY,
    MAX_DEPENDENCY,
    admissible_trees,
    best_score,
    eisner_items,
    enum_arborescences,
    enum_binary_trees,
    enum_projective_trees,
    score_const_tree,
)
from .treeops import binarize_right

METRIC_FOR_ALGO = {"cky": "parseval", "eisner": "uas", "cle": "uas"}


def check_combination(algo: str, level: str) -> None:
    if algo not in METRIC_FOR_ALGO:
        raise ValueError(f"unknown algorithm {algo!r}")
    if level == "paragraph" and algo != "cky":
        raise ValueError("paragraph constraint is only defined for --algo cky")


def induce_tree(A, algo: str, level: str = "none", sent_ids: Sequence[int] | None = None,
                para_ids: Sequence[int] | None = None, variant: str = "literal"):
    """Run one decoder; returns a ConstituencyTree for cky, else a DependencyTree."""
    check_combination(algo, level)
    if algo == "cky":
        constraint = SpanConstraint(level, tuple(sent_ids or ()), tuple(para_ids or ()))
        return cky_parse(A, constraint, variant)[0]
    return induce_dependency(A, algo, sent_ids, level)


def score_pair(pred, gold, metric: str) -> tuple[int, int]:
    if metric == "parseval":
        return rst_parseval(binarize_right(pred), binarize_right(gold))
    if metric == "uas":
        return uas(pred, gold)
    raise ValueError(f"unknown metric {metric!r}")


def oracle_optimum(A, algo: str, level: str = "none", sent_ids=None, para_ids=None,
                   variant: str = "literal") -> float | None:
    """Brute-force optimum for the decoder's objective, or None if out of range.

    Sentence-constrained CLE has no single global objective and is skipped.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    table = None
    if level != "none":
        table = SpanConstraint(level, tuple(sent_ids or ()), tuple(para_ids or ())).table(n)
    if algo == "cky":
        if n > MAX_BINARY:
            return None
        trees = enum_binary_trees(n)
        if table is not None:
            trees = admissible_trees(trees, table)
        return best_score(trees, lambda t: score_const_tree(t, A, variant))[0]
    if n > MAX_DEPENDENCY:
        return None
    if algo == "eisner":
        trees = enum_projective_trees(n)
        if table is not None:
            trees = [t for t in trees
                     if all(table[a - 1, b - 1] for a, b in eisner_items(t))]
        return best_score(trees, lambda t: dependency_score(t, A))[0]
    if algo == "cle" and level == "none":
        root = int(np.argmax(importance(A))) + 1
        return best_score(enum_arborescences(n, root),
                          lambda t: dependency_score(t, A, with_root=False))[0]
    return None
