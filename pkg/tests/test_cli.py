import csv

import numpy as np
import pytest

from attndisco.cli import doc_seed, main
from attndisco.core import AnnotatedDocument, AttentionLayer, DependencyTree, EduInfo, Leaf, Node
from attndisco.formats import TreeRecord, save_document, write_const_file, write_dep_file
from attndisco.treeops import binarize_right, const_to_dep

from conftest import make_doc, rand_attention, rand_nary


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def corpus(tmp_path):
    """Three documents, 2 layers x 2 heads, with sentence segmentation."""
    rng = np.random.default_rng(7)
    docs = tmp_path / "docs"
    docs.mkdir()
    gold_c, gold_d = [], []
    for i, n in enumerate([5, 6, 4]):
        sent = [0] * 2 + [1] * (n - 2)
        edus = [EduInfo(k + 1, s, 0) for k, s in enumerate(sent)]
        layers = [AttentionLayer(l, [rand_attention(rng, n) for _ in range(2)]) for l in range(2)]
        save_document(AnnotatedDocument(f"doc{i}", edus, layers), docs / f"doc{i}.json")
        tree = binarize_right(rand_nary(rng, 1, n))
        gold_c.append(TreeRecord(f"doc{i}", tree))
        gold_d.append(TreeRecord(f"doc{i}", const_to_dep(tree)))
    write_const_file(tmp_path / "gold.const", gold_c)
    write_dep_file(tmp_path / "gold.dep", gold_d)
    return tmp_path


def test_parse_cle_running_example(tmp_path, capsys, running_example):
    save_document(make_doc([running_example]), tmp_path / "d.json")
    code, out, _ = run(capsys, "parse", "--input", tmp_path / "d.json", "--algo", "cle",
                       "--avg-heads", "--layer", "0")
    assert code == 0
    assert out == "# d1\n1\t2\n2\t0\n"


def test_parse_cky_sentence_constraint(tmp_path, capsys, rng):
    save_document(make_doc([rand_attention(rng, 3)], sent_ids=[0, 0, 1]), tmp_path / "d.json")
    code, out, _ = run(capsys, "parse", "--input", tmp_path / "d.json", "--algo", "cky",
                       "--constraint", "sentence")
    assert code == 0
    assert out.splitlines()[1] == "(?? (?? (leaf 1) (leaf 2)) (leaf 3))"


def test_parse_head_out_of_range(tmp_path, capsys, rng):
    save_document(make_doc([rand_attention(rng, 3)] * 8), tmp_path / "d.json")
    code, _, err = run(capsys, "parse", "--input", tmp_path / "d.json", "--algo", "cle",
                       "--head", 99)
    assert code == 2
    assert "head 99 out of range 0..7" in err


def test_parse_rejects_paragraph_for_dependencies(tmp_path, capsys, running_example):
    save_document(make_doc([running_example]), tmp_path / "d.json")
    code, _, err = run(capsys, "parse", "--input", tmp_path / "d.json", "--algo", "eisner",
                       "--constraint", "paragraph")
    assert code == 2 and "paragraph" in err


def test_parse_reports_bad_documents(tmp_path, capsys, running_example):
    save_document(make_doc([running_example], doc_id="good"), tmp_path / "a.json")
    (tmp_path / "b.json").write_text("{oops")
    out_file = tmp_path / "out.tsv"
    code, _, err = run(capsys, "parse", "--input", tmp_path, "--algo", "cle", "--out", out_file)
    assert code == 2
    assert "b: malformed JSON" in err
    assert out_file.read_text().startswith("# good")


def test_parse_oracle_flag(corpus, capsys):
    for algo in ("cky", "eisner", "cle"):
        code, _, err = run(capsys, "parse", "--input", corpus / "docs", "--algo", algo,
                           "--constraint", "sentence", "--oracle", "--workers", 1)
        assert code == 0
        expected = "oracle skipped" if algo == "cle" else "oracle ok"
        assert err.count(expected) == 3


def test_parse_workers_do_not_change_output(corpus, capsys):
    outs = []
    for w in (1, 2):
        code, out, _ = run(capsys, "parse", "--input", corpus / "docs", "--algo", "eisner",
                           "--workers", w)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    assert [l for l in outs[0].splitlines() if l.startswith("#")] == ["# doc0", "# doc1", "# doc2"]


def test_eval_identical(corpus, capsys):
    for metric, f in (("parseval", "gold.const"), ("uas", "gold.dep")):
        code, out, _ = run(capsys, "eval", "--pred", corpus / f, "--gold", corpus / f,
                           "--metric", metric)
        assert code == 0
        assert "micro: 1.0000" in out and "macro: 1.0000" in out


def test_eval_parseval_pair(tmp_path, capsys):
    L1, L2, L3 = Leaf(1), Leaf(2), Leaf(3)
    write_const_file(tmp_path / "p", [TreeRecord("a", Node(L1, Node(L2, L3)))])
    write_const_file(tmp_path / "g", [TreeRecord("a", Node(Node(L1, L2, "NS"), L3, "NS"))])
    code, out, _ = run(capsys, "eval", "--pred", tmp_path / "p", "--gold", tmp_path / "g",
                       "--metric", "parseval", "--report", "micro", "--csv", tmp_path / "r.csv")
    assert code == 0 and "micro: 0.8000" in out and "macro" not in out
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["doc_id", "score"] and rows[1] == ["a", "0.8000"]


def test_eval_missing_doc(tmp_path, capsys):
    write_dep_file(tmp_path / "p", [TreeRecord("a", DependencyTree([0]))])
    write_dep_file(tmp_path / "g", [TreeRecord("a", DependencyTree([0])),
                                    TreeRecord("zz9", DependencyTree([0, 1]))])
    code, _, err = run(capsys, "eval", "--pred", tmp_path / "p", "--gold", tmp_path / "g",
                       "--metric", "uas")
    assert code == 2 and "zz9" in err


def test_eval_wrong_file_kind(corpus, capsys):
    code, _, err = run(capsys, "eval", "--pred", corpus / "gold.dep", "--gold", corpus / "gold.dep",
                       "--metric", "parseval")
    assert code == 2 and "constituency" in err


def _sweep_rows(path):
    return list(csv.reader(open(path)))


def test_sweep_single_head(tmp_path, capsys, rng):
    docs = tmp_path / "docs"
    docs.mkdir()
    save_document(make_doc([rand_attention(rng, 4)], doc_id="x"), docs / "x.json")
    write_dep_file(tmp_path / "g", [TreeRecord("x", DependencyTree([0, 1, 2, 3]))])
    code, _, _ = run(capsys, "sweep", "--input", docs, "--algo", "cle", "--gold", tmp_path / "g",
                     "--out", tmp_path / "s.csv", "--workers", 1)
    rows = _sweep_rows(tmp_path / "s.csv")
    assert code == 0
    assert rows[0] == ["layer", "head", "score"]
    assert [r[:2] for r in rows[1:]] == [["0", "0"], ["0", "avg"]]
    assert rows[1][2] == rows[2][2]


def test_sweep_grid_size(tmp_path, capsys):
    rng = np.random.default_rng(0)
    docs = tmp_path / "docs"
    docs.mkdir()
    n = 5
    edus = [EduInfo(k + 1, 0, 0) for k in range(n)]
    layers = [AttentionLayer(l, [rand_attention(rng, n) for _ in range(8)]) for l in range(6)]
    save_document(AnnotatedDocument("x", edus, layers), docs / "x.json", binary=True)
    write_const_file(tmp_path / "g", [TreeRecord("x", binarize_right(rand_nary(rng, 1, n)))])
    code, _, _ = run(capsys, "sweep", "--input", docs, "--algo", "cky", "--gold", tmp_path / "g",
                     "--out", tmp_path / "s.csv", "--workers", 1)
    assert code == 0
    assert len(_sweep_rows(tmp_path / "s.csv")) == 1 + 54


def test_sweep_matches_manual_eval(corpus, capsys):
    code, _, _ = run(capsys, "sweep", "--input", corpus / "docs", "--algo", "eisner",
                     "--gold", corpus / "gold.dep", "--out", corpus / "s.csv", "--workers", 1)
    assert code == 0
    for layer, head, score in _sweep_rows(corpus / "s.csv")[1:]:
        sel = ["--avg-heads"] if head == "avg" else ["--head", head]
        run(capsys, "parse", "--input", corpus / "docs", "--algo", "eisner", "--layer", layer,
            *sel, "--out", corpus / "p.tsv", "--workers", 1)
        _, out, _ = run(capsys, "eval", "--pred", corpus / "p.tsv", "--gold", corpus / "gold.dep",
                        "--metric", "uas")
        assert f"micro: {score}" in out


def test_sweep_inconsistent_shapes(corpus, capsys, rng):
    save_document(make_doc([rand_attention(rng, 5)], doc_id="doc9"), corpus / "docs" / "doc9.json")
    gold = (corpus / "gold.dep").read_text() + "\n# doc9\n1\t0\n2\t1\n3\t1\n4\t1\n5\t1\n"
    (corpus / "gold.dep").write_text(gold)
    code, _, err = run(capsys, "sweep", "--input", corpus / "docs", "--algo", "cle",
                       "--gold", corpus / "gold.dep", "--workers", 1)
    assert code == 2 and "inconsistent" in err


def test_baseline_deterministic(corpus, capsys):
    outs = [run(capsys, "baseline", "--gold", corpus / "gold.dep", "--algo", "cle", "--runs", 1,
                "--seed", 5, "--workers", 1)[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_baseline_env_seed(corpus, capsys, monkeypatch):
    monkeypatch.setenv("ATTNDISCO_SEED", "5")
    _, env_out, _ = run(capsys, "baseline", "--gold", corpus / "gold.dep", "--algo", "cle",
                        "--runs", 2, "--workers", 1)
    _, flag_out, _ = run(capsys, "baseline", "--gold", corpus / "gold.dep", "--algo", "cle",
                         "--runs", 2, "--seed", 5, "--workers", 1)
    assert env_out == flag_out


def test_baseline_two_edu_corpus(tmp_path, capsys):
    recs = [TreeRecord(f"d{i}", Node(Leaf(1), Leaf(2), "NS")) for i in range(4)]
    write_const_file(tmp_path / "g", recs)
    code, out, _ = run(capsys, "baseline", "--gold", tmp_path / "g", "--algo", "cky", "--workers", 1)
    assert code == 0
    assert out.splitlines()[-1] == "parseval: 1.0000 ± 0.0000 over 10 runs"


def test_baseline_zero_runs(corpus, capsys):
    code, _, _ = run(capsys, "baseline", "--gold", corpus / "gold.dep", "--algo", "cle", "--runs", 0)
    assert code == 2


def test_baseline_constraint_needs_segmentation(corpus, capsys):
    code, _, err = run(capsys, "baseline", "--gold", corpus / "gold.dep", "--algo", "cle",
                       "--constraint", "sentence", "--runs", 1)
    assert code == 2 and "segmentation" in err


def test_baseline_constrained_with_header_segmentation(tmp_path, capsys):
    rec = TreeRecord("a", DependencyTree([0, 1, 2, 3]), {"sent": "0,0,1,1"})
    write_dep_file(tmp_path / "g", [rec])
    code, out, _ = run(capsys, "baseline", "--gold", tmp_path / "g", "--algo", "eisner",
                       "--constraint", "sentence", "--runs", 3, "--workers", 1)
    assert code == 0 and "over 3 runs" in out


def test_doc_seed_varies_by_document_and_run():
    assert doc_seed(0, 0, 0) == doc_seed(0, 0, 0)
    assert len({doc_seed(0, r, i) for r in range(3) for i in range(3)}) == 9


def test_convert_to_dep(tmp_path, capsys):
    (tmp_path / "g").write_text("# a\n(NS (leaf 1) (leaf 2))\n")
    code, out, _ = run(capsys, "convert", "--to-dep", "--input", tmp_path / "g")
    assert code == 0 and out == "# a\n1\t0\n2\t1\n"


def test_convert_binarize_ternary(tmp_path, capsys):
    (tmp_path / "g").write_text("# a\n(NSS (leaf 1) (leaf 2) (leaf 3))\n")
    code, out, _ = run(capsys, "convert", "--binarize", "--input", tmp_path / "g")
    assert code == 0
    assert out.splitlines()[1] == "(NS (leaf 1) (NN (leaf 2) (leaf 3)))"
    code, out, _ = run(capsys, "convert", "--binarize", "--to-dep", "--input", tmp_path / "g")
    assert out == "# a\n1\t0\n2\t1\n3\t2\n"


def test_convert_rejects_unlabeled(tmp_path, capsys):
    (tmp_path / "g").write_text("# a\n(?? (leaf 1) (leaf 2))\n")
    code, _, err = run(capsys, "convert", "--to-dep", "--input", tmp_path / "g")
    assert code == 2 and "[1,2]" in err


def test_convert_nary_without_binarize(tmp_path, capsys):
    (tmp_path / "g").write_text("# a\n(NSS (leaf 1) (leaf 2) (leaf 3))\n")
    assert run(capsys, "convert", "--to-dep", "--input", tmp_path / "g")[0] == 2


def test_stats_star(tmp_path, capsys):
    write_dep_file(tmp_path / "t", [TreeRecord("s", DependencyTree([0, 1, 1, 1]))])
    code, out, _ = run(capsys, "stats", "--trees", tmp_path / "t")
    assert code == 0
    for line in ["branch width: 3.0000", "height: 1.0000", "leaf ratio (micro): 0.7500",
                 "normalized arc length: 0.5000", "vacuous: 100.00%"]:
        assert line in out


def test_stats_chain_heights(tmp_path, capsys):
    write_dep_file(tmp_path / "t", [TreeRecord("a", DependencyTree([0, 1, 2])),
                                    TreeRecord("b", DependencyTree([0, 1, 2, 3, 4]))])
    _, out, _ = run(capsys, "stats", "--trees", tmp_path / "t")
    assert "height: 3.0000" in out


def test_stats_locality(tmp_path, capsys):
    write_dep_file(tmp_path / "p", [TreeRecord("a", DependencyTree([0, 1, 1, 1]))])
    write_dep_file(tmp_path / "g", [TreeRecord("a", DependencyTree([0, 1, 2, 3]))])
    _, out, _ = run(capsys, "stats", "--trees", tmp_path / "p", "--gold", tmp_path / "g")
    assert "local ratio (correct): 1.0000" in out
    assert "local ratio (ours): 0.3333" in out
    assert "local ratio (gold): 1.0000" in out


def test_stats_rejects_constituency(corpus, capsys):
    assert run(capsys, "stats", "--trees", corpus / "gold.const")[0] == 2
