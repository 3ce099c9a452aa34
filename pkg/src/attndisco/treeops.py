"""Gold-tree preprocessing: right-branching binarization, nuclearity-driven
constituency-to-dependency conversion, and vacuous-tree detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .core import ConstituencyTree, DependencyTree, Leaf, Node, TreeError


@dataclass(frozen=True)
class NaryNode:
    """Internal node of a gold tree before binarization.

    ``marks`` holds one 'N'/'S' per child, or is None for unlabeled trees.
    """

    children: tuple
    marks: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise TreeError("internal node needs at least two children")
        if self.marks is not None:
            marks = tuple(self.marks)
            object.__setattr__(self, "marks", marks)
            if len(marks) != len(self.children) or set(marks) - {"N", "S"}:
                raise TreeError(f"bad nuclearity marks {''.join(marks)!r}")
            if "N" not in marks:
                raise TreeError("internal node has no nucleus child")
        for a, b in zip(self.children, self.children[1:]):
            if a.end + 1 != b.start:
                raise TreeError(f"children [{a.start},{a.end}] and [{b.start},{b.end}] are not adjacent")

    @property
    def start(self) -> int:
        return self.children[0].start

    @property
    def end(self) -> int:
        return self.children[-1].end


NaryTree = Union[Leaf, NaryNode, Node]


def _label(left_mark: str, right_mark: str) -> str:
    label = left_mark + right_mark
    # a spine node covering only satellites is treated as multi-nuclear
    return "NN" if label == "SS" else label


def _cascade(items: Sequence[ConstituencyTree], marks: Sequence[str] | None) -> ConstituencyTree:
    """Right-branching cascade (c1, (c2, (..., ck)))."""
    tree = items[-1]
    mark = marks[-1] if marks else None
    for j in range(len(items) - 2, -1, -1):
        if marks is None:
            tree = Node(items[j], tree)
        else:
            tree = Node(items[j], tree, _label(marks[j], mark))
            mark = "N" if "N" in marks[j:] else "S"
    return tree


def binarize_right(tree) -> ConstituencyTree:
    """Binarize an n-ary tree, or a forest given as a list of roots.

    Forest roots are joined under synthetic multi-nuclear nodes.
    """
    if isinstance(tree, (list, tuple)):
        if not tree:
            raise TreeError("cannot binarize an empty forest")
        roots = [binarize_right(t) for t in tree]
        if len(roots) == 1:
            return roots[0]
        labeled = all(_is_labeled(r) for r in roots)
        return _cascade(roots, ["N"] * len(roots) if labeled else None)
    if isinstance(tree, (Leaf, Node)):
        return tree
    kids = [binarize_right(c) for c in tree.children]
    return _cascade(kids, tree.marks)


def _is_labeled(t: ConstituencyTree) -> bool:
    return isinstance(t, Leaf) or t.nuc is not None


def const_to_dep(tree: ConstituencyTree) -> DependencyTree:
    """Convert a nuclearity-labeled binary tree to a dependency tree.

    Each internal node's head is the head of its leftmost nucleus child; the
    other child's head depends on it.
    """
    heads = {}
    head_of = {}
    stack = [(tree, False)]
    while stack:
        t, ready = stack.pop()
        if isinstance(t, Leaf):
            head_of[id(t)] = t.pos
            continue
        if not ready:
            if t.nuc not in ("NN", "NS", "SN"):
                raise TreeError(f"span [{t.start},{t.end}] has no nuclearity label")
            stack += [(t, True), (t.right, False), (t.left, False)]
            continue
        lh, rh = head_of[id(t.left)], head_of[id(t.right)]
        if t.nuc == "SN":
            heads[lh] = rh
            head_of[id(t)] = rh
        else:
            heads[rh] = lh
            head_of[id(t)] = lh
    root = head_of[id(tree)]
    heads[root] = 0
    return DependencyTree([heads[d] for d in range(tree.start, tree.end + 1)])


def is_vacuous(tree: DependencyTree) -> bool:
    """Root is EDU 1 or 2 and every other EDU hangs directly off it."""
    if tree.n < 2:
        return False
    r = tree.root
    return r in (1, 2) and all(h == r for h in tree.heads if h != 0)
