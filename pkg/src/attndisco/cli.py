"""Command-line interface: parse, eval, sweep, baseline, convert, stats.

Exit codes: 0 success, 2 usage or data error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .attention import HeadSelector, SelectorError, random_matrix, select_matrix
from .cky import VARIANTS
from .core import DocumentError, TreeError
from .dependency import dependency_score
from .formats import (
    FormatError,
    TreeRecord,
    document_paths,
    load_document,
    meta_ids,
    read_const_file,
    read_dep_file,
    tree_file_kind,
    write_const_file,
    write_dep_file,
)
from .metrics import aggregate, corpus_stats, locality_report, score_report
from .oracle import score_const_tree
from .pipeline import METRIC_FOR_ALGO, check_combination, induce_tree, oracle_optimum, score_pair
from .treeops import NaryNode, binarize_right, const_to_dep

SEED_ENV = "ATTNDISCO_SEED"
log = logging.getLogger("attndisco")


class UsageError(Exception):
    pass


DATA_ERRORS = (UsageError, DocumentError, FormatError, TreeError, SelectorError,
               FileNotFoundError, IsADirectoryError)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _map(fn, items, workers: int):
    """Ordered map, fanned out over processes when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _read_trees(path, want: str | None = None) -> list[TreeRecord]:
    kind = tree_file_kind(path)
    if want is not None and kind != want:
        names = {"const": "constituency", "dep": "dependency"}
        raise UsageError(f"{path}: expected a {names[want]} tree file, got {names[kind]}")
    return read_const_file(path) if kind == "const" else read_dep_file(path)


def _write_trees(out, records, algo_or_kind: str) -> None:
    target = out if out is not None else sys.stdout
    if algo_or_kind in ("cky", "const"):
        write_const_file(target, records)
    else:
        write_dep_file(target, records)


def _check_level(args) -> None:
    try:
        check_combination(args.algo, args.constraint)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# parse
# --------------------------------------------------------------------------


def _parse_job(job):
    path, algo, level, sel, variant, use_oracle = job
    try:
        doc = load_document(path)
        A = select_matrix(doc, sel)
        tree = induce_tree(A, algo, level, doc.sent_ids, doc.para_ids, variant)
        note = None
        if use_oracle:
            note = _certify(A, tree, algo, level, doc, variant)
        return doc.doc_id, tree, None, note
    except DATA_ERRORS + (ValueError,) as exc:
        doc_id = getattr(exc, "doc_id", Path(path).stem)
        msg = str(exc).removeprefix(f"{doc_id}: ")
        return doc_id, None, msg, None


def _certify(A, tree, algo, level, doc, variant):
    best = oracle_optimum(A, algo, level, doc.sent_ids, doc.para_ids, variant)
    if best is None:
        return "oracle skipped"
    if algo == "cky":
        got = score_const_tree(tree, A, variant)
    else:
        got = dependency_score(tree, A, with_root=(algo == "eisner"))
    if abs(got - best) > 1e-9:
        raise RuntimeError(f"{doc.doc_id}: decoder score {got!r} != oracle optimum {best!r}")
    return "oracle ok"


def cmd_parse(args) -> int:
    _check_level(args)
    sel = HeadSelector(args.layer, None if args.avg_heads or args.head is None else args.head)
    jobs = [(p, args.algo, args.constraint, sel, args.cky_score_variant, args.oracle)
            for p in document_paths(args.input)]
    if not jobs:
        raise UsageError(f"no documents found in {args.input}")
    results = _map(_parse_job, jobs, args.workers)

    records, failed = [], 0
    for doc_id, tree, err, note in results:
        if err is not None:
            print(f"{doc_id}: {err}", file=sys.stderr)
            failed += 1
            continue
        if note:
            print(f"{doc_id}: {note}", file=sys.stderr)
        records.append(TreeRecord(doc_id, tree))
    if records:
        _write_trees(args.out, records, args.algo)
    return 2 if failed else 0


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def _paired(pred, gold):
    p = {r.doc_id: r.tree for r in pred}
    g = {r.doc_id: r.tree for r in gold}
    missing = [d for d in g if d not in p]
    extra = [d for d in p if d not in g]
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing from predictions: " + ", ".join(missing))
        if extra:
            parts.append("not in gold: " + ", ".join(extra))
        raise UsageError("; ".join(parts))
    return [(d, p[d], g[d]) for d in g]


def _score_corpus(pairs, metric):
    counts = {}
    for doc_id, pred, gold in pairs:
        try:
            counts[doc_id] = score_pair(pred, gold, metric)
        except ValueError as exc:
            raise UsageError(f"{doc_id}: {exc}") from None
    return score_report(metric, counts)


def cmd_eval(args) -> int:
    want = "const" if args.metric == "parseval" else "dep"
    pairs = _paired(_read_trees(args.pred, want), _read_trees(args.gold, want))
    report = _score_corpus(pairs, args.metric)
    print(f"metric: {report.metric}")
    print(f"documents: {len(report.per_doc)}")
    if args.report in ("micro", "both"):
        print(f"micro: {_fmt(report.micro)}")
    if args.report in ("macro", "both"):
        print(f"macro: {_fmt(report.macro)}")
    print(f"mean ± std: {_fmt(report.mean)} ± {_fmt(report.std)}")
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["doc_id", "score"])
            for doc_id, v in report.per_doc.items():
                w.writerow([doc_id, _fmt(v)])
            w.writerow(["micro", _fmt(report.micro)])
            w.writerow(["macro", _fmt(report.macro)])
    return 0


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def _sweep_job(job):
    path, gold, algo, level, metric, variant = job
    doc = load_document(path)
    counts = {}
    for layer in doc.layers:
        selectors = [HeadSelector(layer.layer_index, h) for h in range(layer.num_heads)]
        selectors.append(HeadSelector.average(layer.layer_index))
        for sel in selectors:
            A = select_matrix(doc, sel)
            tree = induce_tree(A, algo, level, doc.sent_ids, doc.para_ids, variant)
            counts[layer.layer_index, sel.label()] = score_pair(tree, gold, metric)
    shape = tuple(layer.num_heads for layer in doc.layers)
    return doc.doc_id, shape, counts


def cmd_sweep(args) -> int:
    _check_level(args)
    metric = args.metric or METRIC_FOR_ALGO[args.algo]
    want = "const" if metric == "parseval" else "dep"
    gold = {r.doc_id: r.tree for r in _read_trees(args.gold, want)}
    paths = document_paths(args.input)
    if not paths:
        raise UsageError(f"no documents found in {args.input}")

    # the gold tree is matched by doc_id, which is only known after loading
    docs = []
    for p in paths:
        doc_id = load_document(p).doc_id
        if doc_id not in gold:
            raise UsageError(f"no gold tree for document {doc_id}")
        docs.append((p, gold[doc_id]))
    jobs = [(p, g, args.algo, args.constraint, metric, args.cky_score_variant) for p, g in docs]
    results = _map(_sweep_job, jobs, args.workers)

    shapes = {shape for _, shape, _ in results}
    if len(shapes) != 1:
        raise UsageError(f"inconsistent attention shapes across documents: {sorted(shapes)}")
    shape = shapes.pop()

    rows = []
    for layer, num_heads in enumerate(shape):
        for head in [str(h) for h in range(num_heads)] + ["avg"]:
            matched = sum(c[layer, head][0] for _, _, c in results)
            total = sum(c[layer, head][1] for _, _, c in results)
            rows.append((layer, head, matched / total))

    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(target, lineterminator="\n")
        w.writerow(["layer", "head", "score"])
        for layer, head, score in rows:
            w.writerow([layer, head, _fmt(score)])
    finally:
        if args.out:
            target.close()
    return 0


# --------------------------------------------------------------------------
# baseline
# --------------------------------------------------------------------------


def doc_seed(seed: int, run: int, index: int) -> int:
    """Seed for one document in one run: the run seed mixed with the doc index."""
    ss = np.random.SeedSequence([(seed + run) & ((1 << 64) - 1), index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _baseline_run(job):
    records, algo, level, metric, seed, run, variant = job
    counts = {}
    for i, r in enumerate(records):
        n = _tree_size(r.tree)
        sent, para = meta_ids(r.meta, "sent"), meta_ids(r.meta, "para")
        A = random_matrix(n, doc_seed(seed, run, i))
        pred = induce_tree(A, algo, level, sent, para, variant)
        counts[r.doc_id] = score_pair(pred, r.tree, metric)
    return score_report(metric, counts).micro


def _tree_size(tree) -> int:
    if isinstance(tree, (list, tuple)):
        return tree[-1].end - tree[0].start + 1
    if hasattr(tree, "heads"):
        return tree.n
    return tree.end - tree.start + 1


def cmd_baseline(args) -> int:
    _check_level(args)
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    metric = METRIC_FOR_ALGO[args.algo]
    want = "const" if metric == "parseval" else "dep"
    records = _read_trees(args.gold, want)
    if args.constraint != "none":
        key = "para" if args.constraint == "paragraph" else "sent"
        lacking = [r.doc_id for r in records
                   if meta_ids(r.meta, "sent") is None or meta_ids(r.meta, key) is None]
        if lacking:
            raise UsageError("gold headers lack segmentation for: " + ", ".join(lacking))
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, "0"))
    jobs = [(records, args.algo, args.constraint, metric, seed, r, args.cky_score_variant)
            for r in range(args.runs)]
    scores = _map(_baseline_run, jobs, args.workers)
    for r, s in enumerate(scores):
        print(f"run {r} (seed {seed + r}): {_fmt(s)}")
    mean, std = aggregate(scores)
    print(f"{metric}: {_fmt(mean)} ± {_fmt(std)} over {args.runs} runs")
    return 0


# --------------------------------------------------------------------------
# convert
# --------------------------------------------------------------------------


def _has_nary(tree) -> bool:
    if isinstance(tree, (list, tuple)):
        return True
    if isinstance(tree, NaryNode):
        return True
    if hasattr(tree, "left"):
        return _has_nary(tree.left) or _has_nary(tree.right)
    return False


def cmd_convert(args) -> int:
    if not (args.binarize or args.to_dep):
        raise UsageError("choose --binarize and/or --to-dep")
    records = _read_trees(args.input, "const")
    out = []
    for r in records:
        tree = r.tree
        if args.binarize:
            tree = binarize_right(tree)
        elif _has_nary(tree):
            raise UsageError(f"{r.doc_id}: tree is not binary; add --binarize")
        if args.to_dep:
            try:
                tree = const_to_dep(tree)
            except TreeError as exc:
                raise UsageError(f"{r.doc_id}: {exc}") from None
        out.append(TreeRecord(r.doc_id, tree, r.meta))
    _write_trees(args.out, out, "dep" if args.to_dep else "const")
    return 0


# --------------------------------------------------------------------------
# stats
# --------------------------------------------------------------------------


def cmd_stats(args) -> int:
    trees = _read_trees(args.trees, "dep")
    cs = corpus_stats([r.tree for r in trees])
    print(f"documents: {len(trees)}")
    print(f"branch width: {_fmt(cs.branch_width)}")
    print(f"height: {_fmt(cs.height)}")
    print(f"leaf ratio (micro): {_fmt(cs.leaf_ratio)}")
    print(f"normalized arc length: {_fmt(cs.norm_arc_length)}")
    print(f"vacuous: {cs.vacuous_pct:.2f}%")
    if args.gold:
        pairs = _paired(trees, _read_trees(args.gold, "dep"))
        try:
            correct, ours, gt = locality_report([p for _, p, _ in pairs], [g for _, _, g in pairs])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print(f"local ratio (correct): {_fmt(correct)}")
        print(f"local ratio (ours): {_fmt(ours)}")
        print(f"local ratio (gold): {_fmt(gt)}")
    return 0


# --------------------------------------------------------------------------


def _add_algo(p, with_constraint=True):
    p.add_argument("--algo", choices=["cky", "eisner", "cle"], required=True)
    if with_constraint:
        p.add_argument("--constraint", choices=["none", "sentence", "paragraph"], default="none")
    p.add_argument("--cky-score-variant", choices=VARIANTS, default="literal",
                   help="'literal' halves the whole split score; 'halved-averages' halves only the link terms")


def _add_workers(p):
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attndisco",
                                     description="Discourse trees from attention matrices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="induce trees from attention")
    p.add_argument("--input", required=True, help="document JSON file or directory")
    _add_algo(p)
    p.add_argument("--layer", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--head", type=int)
    g.add_argument("--avg-heads", action="store_true")
    p.add_argument("--out")
    p.add_argument("--oracle", action="store_true",
                   help="certify each result against brute-force enumeration (small n)")
    _add_workers(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against gold trees")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--metric", choices=["parseval", "uas"], required=True)
    p.add_argument("--report", choices=["micro", "macro", "both"], default="both")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="score every (layer, head) over a corpus")
    p.add_argument("--input", required=True)
    _add_algo(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--metric", choices=["parseval", "uas"])
    p.add_argument("--out")
    _add_workers(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="score parses of random matrices")
    p.add_argument("--gold", required=True)
    _add_algo(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=None,
                   help=f"base seed (default: ${SEED_ENV} or 0)")
    _add_workers(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("convert", help="binarize gold trees and/or convert to dependencies")
    p.add_argument("--binarize", action="store_true")
    p.add_argument("--to-dep", action="store_true")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("stats", help="structural statistics of dependency trees")
    p.add_argument("--trees", required=True)
    p.add_argument("--gold")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
