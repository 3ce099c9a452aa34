import json

import numpy as np
import pytest

from attndisco.core import DependencyTree, DocumentError, Leaf, Node
from attndisco.formats import (
    FormatError,
    TreeRecord,
    format_tree,
    load_document,
    meta_ids,
    parse_tree,
    read_adm,
    read_const_file,
    read_dep_file,
    save_document,
    segmentation_meta,
    tree_file_kind,
    write_adm,
    write_const_file,
    write_dep_file,
)
from attndisco.oracle import enum_binary_trees
from attndisco.treeops import NaryNode

from conftest import make_doc, rand_attention


def test_bracket_round_trip_all_small_trees():
    for n in range(1, 7):
        for t in enum_binary_trees(n):
            assert parse_tree(format_tree(t)) == t


def test_labeled_and_nary_parsing():
    t = parse_tree("(NS (SN (leaf 1) (leaf 2)) (leaf 3))")
    assert t == Node(Node(Leaf(1), Leaf(2), "SN"), Leaf(3), "NS")
    nary = parse_tree("(NSS (leaf 1) (leaf 2) (leaf 3))")
    assert nary == NaryNode([Leaf(1), Leaf(2), Leaf(3)], "NSS")
    assert format_tree(nary) == "(NSS (leaf 1) (leaf 2) (leaf 3))"
    forest = parse_tree("(leaf 1) (NN (leaf 2) (leaf 3))")
    assert isinstance(forest, list) and len(forest) == 2


@pytest.mark.parametrize("bad", [
    "(NS (leaf 1)", "(leaf x)", "(XY (leaf 1) (leaf 2))", "(NS (leaf 1) (leaf 3))", "",
    "(NN (leaf 1) (leaf 2) (leaf 3))",
])
def test_bad_brackets(bad):
    with pytest.raises(FormatError):
        parse_tree(bad)


def test_const_file_round_trip(tmp_path):
    recs = [TreeRecord("a", Node(Leaf(1), Leaf(2), "NS"), {"sent": "0,1"}),
            TreeRecord("b", Leaf(1))]
    path = tmp_path / "t.txt"
    write_const_file(path, recs)
    back = read_const_file(path)
    assert [(r.doc_id, r.tree, r.meta) for r in back] == [(r.doc_id, r.tree, r.meta) for r in recs]
    assert tree_file_kind(path) == "const"
    assert meta_ids(back[0].meta, "sent") == (0, 1)


def test_dep_file_round_trip(tmp_path):
    recs = [TreeRecord("x", DependencyTree([2, 0, 2])), TreeRecord("y", DependencyTree([0]))]
    path = tmp_path / "d.tsv"
    write_dep_file(path, recs)
    assert path.read_text() == "# x\n1\t2\n2\t0\n3\t2\n\n# y\n1\t0\n"
    back = read_dep_file(path)
    assert [(r.doc_id, r.tree) for r in back] == [(r.doc_id, r.tree) for r in recs]
    assert tree_file_kind(path) == "dep"


def test_dep_file_rejects_gaps_and_cycles(tmp_path):
    p = tmp_path / "d.tsv"
    p.write_text("# x\n1\t0\n3\t1\n")
    with pytest.raises(FormatError):
        read_dep_file(p)
    p.write_text("# x\n1\t2\n2\t1\n")
    with pytest.raises(FormatError):
        read_dep_file(p)


def test_adm_round_trip(tmp_path):
    heads = np.random.default_rng(0).random((3, 4, 4)).astype(np.float32)
    write_adm(tmp_path / "a.adm", heads)
    raw = (tmp_path / "a.adm").read_bytes()
    assert raw[:4] == b"ADM1"
    assert len(raw) == 12 + 3 * 16 * 4
    np.testing.assert_array_equal(read_adm(tmp_path / "a.adm"), heads.astype(np.float64))


def test_adm_bad_magic(tmp_path):
    (tmp_path / "a.adm").write_bytes(b"XXXX" + bytes(8))
    with pytest.raises(FormatError):
        read_adm(tmp_path / "a.adm")


@pytest.mark.parametrize("binary", [False, True])
def test_document_round_trip(tmp_path, binary):
    rng = np.random.default_rng(3)
    heads = [rand_attention(rng, 4) for _ in range(2)]
    doc = make_doc(heads, sent_ids=[0, 0, 1, 1], para_ids=[0, 0, 0, 0], doc_id="doc7")
    path = tmp_path / "doc7.json"
    save_document(doc, path, binary=binary)
    back = load_document(path)
    assert back.doc_id == "doc7" and back.sent_ids == (0, 0, 1, 1)
    tol = 1e-7 if binary else 0
    for a, b in zip(back.layers[0].heads, heads):
        np.testing.assert_allclose(a, b, atol=tol)
    assert segmentation_meta(back) == {"sent": "0,0,1,1", "para": "0,0,0,0"}


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(DocumentError, match="malformed JSON"):
        load_document(p)


def test_negative_entries_are_load_errors(tmp_path):
    obj = {"doc_id": "neg", "edus": [{"id": 1, "sent": 0, "para": 0}, {"id": 2, "sent": 0, "para": 0}],
           "layers": [{"layer": 0, "heads": [[[0.5, 0.5], [-0.1, 1.1]]]}]}
    p = tmp_path / "neg.json"
    p.write_text(json.dumps(obj))
    with pytest.raises(DocumentError, match="negative"):
        load_document(p)


def test_row_sum_warning(tmp_path, caplog):
    doc = make_doc([np.array([[0.2, 0.2], [0.5, 0.5]])])
    save_document(doc, tmp_path / "w.json")
    with caplog.at_level("WARNING"):
        load_document(tmp_path / "w.json")
    assert "do not sum to 1" in caplog.text
