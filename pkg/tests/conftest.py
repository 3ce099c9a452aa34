import numpy as np
import pytest

from attndisco.core import AnnotatedDocument, AttentionLayer, EduInfo, Leaf
from attndisco.treeops import NaryNode

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rand_attention(rng, n):
    M = rng.random((n, n))
    return M / M.sum(axis=1, keepdims=True)


def rand_segmentation(rng, n, k):
    """Sentence ids for n EDUs split into k non-empty contiguous sentences."""
    cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else []
    ids = np.zeros(n, dtype=int)
    for c in cuts:
        ids[c:] += 1
    return tuple(int(x) for x in ids)


def rand_nary(rng, lo, hi, max_width=4, labeled=True):
    """Random n-ary tree over leaves lo..hi with N/S marks per child."""
    if lo == hi:
        return Leaf(lo)
    width = int(rng.integers(2, min(max_width, hi - lo + 1) + 1))
    cuts = np.sort(rng.choice(np.arange(lo + 1, hi + 1), size=width - 1, replace=False))
    bounds = [lo, *cuts.tolist(), hi + 1]
    kids = [rand_nary(rng, a, b - 1, max_width, labeled) for a, b in zip(bounds, bounds[1:])]
    marks = None
    if labeled:
        marks = ["N" if rng.random() < 0.4 else "S" for _ in kids]
        if "N" not in marks:
            marks[int(rng.integers(width))] = "N"
    return NaryNode(kids, marks)


def make_doc(heads, sent_ids=None, para_ids=None, doc_id="d1"):
    """Single-layer document from a list of head matrices."""
    n = np.asarray(heads[0]).shape[0]
    sent_ids = sent_ids or [0] * n
    para_ids = para_ids or [0] * n
    edus = [EduInfo(i + 1, s, p) for i, (s, p) in enumerate(zip(sent_ids, para_ids))]
    return AnnotatedDocument(doc_id, edus, [AttentionLayer(0, heads)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def running_example():
    return np.array([[0.1, 0.9], [0.8, 0.2]])
