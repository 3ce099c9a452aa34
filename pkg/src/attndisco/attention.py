"""Attention-tensor selection, EDU importance, and seeded random matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AnnotatedDocument, as_matrix

_SEED_MASK = (1 << 64) - 1


class SelectorError(IndexError):
    pass


@dataclass(frozen=True)
class HeadSelector:
    """Pick one layer and either a single head or the head average."""

    layer: int
    head: int | None = None

    @classmethod
    def average(cls, layer: int) -> "HeadSelector":
        return cls(layer, None)

    @property
    def averaged(self) -> bool:
        return self.head is None

    def label(self) -> str:
        return "avg" if self.head is None else str(self.head)


def select_matrix(doc: AnnotatedDocument, sel: HeadSelector) -> np.ndarray:
    if not 0 <= sel.layer < len(doc.layers):
        raise SelectorError(f"layer {sel.layer} out of range 0..{len(doc.layers) - 1}")
    layer = doc.layers[sel.layer]
    if sel.head is None:
        return as_matrix(np.mean(np.stack(layer.heads), axis=0))
    if not 0 <= sel.head < layer.num_heads:
        raise SelectorError(f"head {sel.head} out of range 0..{layer.num_heads - 1}")
    return layer.heads[sel.head]


def importance(A) -> np.ndarray:
    """Attention each EDU receives from all EDUs (column sums, diagonal included)."""
    return np.asarray(A, dtype=np.float64).sum(axis=0)


def random_matrix(n: int, seed: int) -> np.ndarray:
    """Row-normalised i.i.d. uniform matrix; identical for identical (n, seed)."""
    if n < 1:
        raise ValueError(f"random matrix dimension must be >= 1, got {n}")
    rng = np.random.default_rng(int(seed) & _SEED_MASK)
    M = rng.random((n, n))
    return as_matrix(M / M.sum(axis=1, keepdims=True))
