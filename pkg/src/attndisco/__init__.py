"""Induce discourse trees from transformer self-attention and score them
against gold RST trees."""

from .attention import HeadSelector, importance, random_matrix, select_matrix
from .cky import SpanConstraint, cky_parse
from .core import (
    AnnotatedDocument,
    AttentionLayer,
    DependencyTree,
    EduInfo,
    Leaf,
    Node,
    validate_document,
)
from .dependency import (
    build_graph,
    cle_parse,
    cle_parse_sentence_constrained,
    eisner_parse,
)
from .metrics import aggregate, locality_report, rst_parseval, tree_stats, uas
from .treeops import NaryNode, binarize_right, const_to_dep, is_vacuous

__version__ = "0.1.0"
