"""Shared domain types: documents, attention tensors, and the two tree families.

Positions are 1-based everywhere outside of the parsers' inner loops.
All types are immutable once built; attention arrays are stored read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

NUCLEARITY = ("NN", "NS", "SN")
ROW_SUM_TOLERANCE = 1e-3


class TreeError(ValueError):
    """Raised when a tree violates its structural invariants."""


class DocumentError(ValueError):
    """Raised when a document fails validation on load."""

    def __init__(self, doc_id: str, violations: Sequence[str]):
        self.doc_id = doc_id
        self.violations = list(violations)
        super().__init__(f"{doc_id}: " + "; ".join(self.violations))


# --------------------------------------------------------------------------
# Attention
# --------------------------------------------------------------------------


def as_matrix(values) -> np.ndarray:
    """Return a read-only float64 copy of ``values``."""
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def matrix_violations(A: np.ndarray, n: int | None = None) -> list[str]:
    """Return the invariant violations of one attention matrix."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return [f"matrix dimension mismatch: shape {A.shape} is not square"]
    if n is not None and A.shape[0] != n:
        return [f"matrix dimension mismatch: {A.shape[0]}x{A.shape[1]} for n={n}"]
    out = []
    if not np.all(np.isfinite(A)):
        out.append("non-finite attention entry")
    elif np.any(A < 0):
        out.append("negative attention entry")
    return out


def row_sums_deviate(A: np.ndarray, tol: float = ROW_SUM_TOLERANCE) -> bool:
    """True if some row sum falls outside 1 +/- tol (a warning, never an error)."""
    return bool(np.any(np.abs(np.asarray(A).sum(axis=1) - 1.0) > tol))


@dataclass(frozen=True)
class AttentionLayer:
    layer_index: int
    heads: tuple

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(as_matrix(h) for h in self.heads))

    @property
    def num_heads(self) -> int:
        return len(self.heads)


# --------------------------------------------------------------------------
# Documents
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EduInfo:
    position: int
    sent_id: int
    para_id: int
    text: str | None = None


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    edus: tuple
    layers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "edus", tuple(self.edus))
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def n(self) -> int:
        return len(self.edus)

    @property
    def sent_ids(self) -> tuple[int, ...]:
        return tuple(e.sent_id for e in self.edus)

    @property
    def para_ids(self) -> tuple[int, ...]:
        return tuple(e.para_id for e in self.edus)


def _contiguity_violations(ids: Sequence, what: str) -> list[str]:
    out = []
    seen = set()
    prev = object()
    for pos, x in enumerate(ids, start=1):
        if x != prev:
            if x in seen:
                out.append(f"{what} {x} not contiguous (resumes at EDU {pos})")
            seen.add(x)
            if isinstance(prev, int) and x < prev:
                out.append(f"{what} ids decrease at EDU {pos}")
        prev = x
    return out


def validate_document(doc: AnnotatedDocument) -> list[str]:
    """Return every violated document invariant; an empty list means valid."""
    out = []
    n = doc.n
    if n < 1:
        out.append("document has no EDUs")
    for expected, edu in enumerate(doc.edus, start=1):
        if edu.position != expected:
            out.append(f"EDU position {edu.position} found where {expected} expected")
            break
    out += _contiguity_violations(doc.sent_ids, "sentence")
    out += _contiguity_violations(doc.para_ids, "paragraph")

    para_of_sent: dict = {}
    for edu in doc.edus:
        p = para_of_sent.setdefault(edu.sent_id, edu.para_id)
        if p != edu.para_id:
            out.append(f"sentence {edu.sent_id} spans paragraphs {p} and {edu.para_id}")
            break

    for expected, layer in enumerate(doc.layers):
        if layer.layer_index != expected:
            out.append(f"layer index {layer.layer_index} found where {expected} expected")
        if not layer.heads:
            out.append(f"layer {layer.layer_index} has no heads")
        for h, A in enumerate(layer.heads):
            for v in matrix_violations(A, n):
                out.append(f"layer {layer.layer_index} head {h}: {v}")
    return out


def sentence_ranges(sent_ids: Sequence[int]) -> list[tuple[int, int]]:
    """0-based inclusive (start, end) ranges of consecutive equal ids."""
    ranges = []
    start = 0
    for i in range(1, len(sent_ids) + 1):
        if i == len(sent_ids) or sent_ids[i] != sent_ids[start]:
            ranges.append((start, i - 1))
            start = i
    return ranges


# --------------------------------------------------------------------------
# Constituency trees
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    pos: int

    @property
    def start(self) -> int:
        return self.pos

    @property
    def end(self) -> int:
        return self.pos

    @property
    def span(self) -> tuple[int, int]:
        return (self.pos, self.pos)


@dataclass(frozen=True)
class Node:
    """Binary internal node; ``nuc`` is None for induced trees."""

    left: "ConstituencyTree"
    right: "ConstituencyTree"
    nuc: str | None = None
    start: int = field(init=False, compare=False, repr=False)
    end: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.left.end + 1 != self.right.start:
            raise TreeError(
                f"children spans [{self.left.start},{self.left.end}] and "
                f"[{self.right.start},{self.right.end}] are not adjacent"
            )
        if self.nuc is not None and self.nuc not in NUCLEARITY:
            raise TreeError(f"bad nuclearity label {self.nuc!r}")
        object.__setattr__(self, "start", self.left.start)
        object.__setattr__(self, "end", self.right.end)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


ConstituencyTree = Union[Leaf, Node]


def iter_nodes(tree: ConstituencyTree) -> Iterator[ConstituencyTree]:
    """Pre-order traversal without recursion."""
    stack = [tree]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, Node):
            stack.append(t.right)
            stack.append(t.left)


def spans(tree: ConstituencyTree) -> set[tuple[int, int]]:
    return {t.span for t in iter_nodes(tree)}


def leaf_positions(tree: ConstituencyTree) -> list[int]:
    return [t.pos for t in iter_nodes(tree) if isinstance(t, Leaf)]


def check_constituency(tree: ConstituencyTree, n: int) -> None:
    """Raise TreeError unless ``tree`` covers exactly EDUs 1..n."""
    if tree.start != 1 or tree.end != n:
        raise TreeError(f"tree covers [{tree.start},{tree.end}], expected [1,{n}]")


def strip_nuclearity(tree: ConstituencyTree) -> ConstituencyTree:
    if isinstance(tree, Leaf):
        return tree
    return Node(strip_nuclearity(tree.left), strip_nuclearity(tree.right))


# --------------------------------------------------------------------------
# Dependency trees
# --------------------------------------------------------------------------


def dependency_violations(heads: Sequence[int]) -> list[str]:
    """Violations of the single-rooted arborescence invariants.

    ``heads[d-1]`` is the head of EDU d; 0 marks the root.
    """
    n = len(heads)
    if n < 1:
        return ["empty tree"]
    out = []
    roots = [d for d, h in enumerate(heads, start=1) if h == 0]
    if len(roots) != 1:
        out.append(f"expected exactly one root, found {len(roots)}")
    for d, h in enumerate(heads, start=1):
        if not 0 <= h <= n:
            out.append(f"EDU {d} has head {h} outside 0..{n}")
        elif h == d:
            out.append(f"EDU {d} is its own head")
    if out:
        return out
    # every node must reach the root without revisiting
    state = [0] * (n + 1)  # 0 unseen, 1 on path, 2 reaches root
    state[0] = 2
    for d in range(1, n + 1):
        path = []
        x = d
        while state[x] == 0:
            state[x] = 1
            path.append(x)
            x = heads[x - 1]
        if state[x] == 1:
            return [f"cycle through EDU {x}"]
        for y in path:
            state[y] = 2
    return out


@dataclass(frozen=True)
class DependencyTree:
    heads: tuple

    def __post_init__(self):
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "heads", heads)
        bad = dependency_violations(heads)
        if bad:
            raise TreeError("; ".join(bad))

    @property
    def n(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return self.heads.index(0) + 1

    def head(self, d: int) -> int:
        return self.heads[d - 1]

    def arcs(self) -> list[tuple[int, int]]:
        """Non-root arcs as (head, dependent)."""
        return [(h, d) for d, h in enumerate(self.heads, start=1) if h != 0]

    def children(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {d: [] for d in range(1, self.n + 1)}
        for h, d in self.arcs():
            kids[h].append(d)
        return kids


def is_projective(tree: DependencyTree) -> bool:
    """No crossing arcs, counting the virtual-root arc (0, root)."""
    arcs = [(min(h, d), max(h, d)) for h, d in tree.arcs()]
    arcs.append((0, tree.root))
    for a, b in arcs:
        for c, d in arcs:
            if a < c < b < d:
                return False
    return True
