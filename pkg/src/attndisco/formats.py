"""Readers and writers for document, attention and tree files.

Document files are JSON; attention heads may live inline or in ``ADM1``
binary sidecars (magic, u32 n, u32 H, then H*n*n little-endian float32).
Constituency trees are bracketed, one per line after a ``# doc_id`` comment;
dependency trees are TSV blocks of ``edu<TAB>head``.
"""

from __future__ import annotations

import json
import logging
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    AnnotatedDocument,
    AttentionLayer,
    ConstituencyTree,
    DependencyTree,
    DocumentError,
    EduInfo,
    Leaf,
    Node,
    TreeError,
    row_sums_deviate,
    validate_document,
)
from .treeops import NaryNode

log = logging.getLogger(__name__)

ADM_MAGIC = b"ADM1"


class FormatError(ValueError):
    pass


# --------------------------------------------------------------------------
# ADM1 sidecars
# --------------------------------------------------------------------------


def write_adm(path, heads) -> None:
    heads = np.asarray(heads, dtype="<f4")
    H, n, _ = heads.shape
    with open(path, "wb") as f:
        f.write(ADM_MAGIC + struct.pack("<II", n, H))
        f.write(heads.tobytes())


def read_adm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != ADM_MAGIC:
        raise FormatError(f"{path}: not an ADM1 file")
    n, H = struct.unpack("<II", data[4:12])
    body = data[12:]
    if len(body) != 4 * H * n * n:
        raise FormatError(f"{path}: expected {H}x{n}x{n} floats, got {len(body) // 4}")
    return np.frombuffer(body, dtype="<f4").reshape(H, n, n).astype(np.float64)


# --------------------------------------------------------------------------
# Documents
# --------------------------------------------------------------------------


def document_from_json(obj: dict, base: Path | None = None) -> AnnotatedDocument:
    doc_id = str(obj.get("doc_id", "?"))
    try:
        edus = [EduInfo(int(e["id"]), int(e["sent"]), int(e["para"]), e.get("text"))
                for e in obj["edus"]]
        layers = []
        for entry in obj.get("layers", []):
            if "file" in entry:
                heads = read_adm((base or Path(".")) / entry["file"])
            else:
                heads = entry["heads"]
            mats = [np.array(h, dtype=np.float64) for h in heads]
            layers.append(AttentionLayer(int(entry["layer"]), mats))
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(doc_id, [f"malformed document: {exc}"]) from exc
    doc = AnnotatedDocument(doc_id, edus, layers)
    bad = validate_document(doc)
    if bad:
        raise DocumentError(doc_id, bad)
    for layer in doc.layers:
        for h, A in enumerate(layer.heads):
            if row_sums_deviate(A):
                log.warning("%s: layer %d head %d rows do not sum to 1",
                            doc_id, layer.layer_index, h)
    return doc


def document_to_json(doc: AnnotatedDocument, sidecar_dir: Path | None = None) -> dict:
    """JSON object for ``doc``; with ``sidecar_dir`` the heads go to ADM1 files."""
    edus = []
    for e in doc.edus:
        item = {"id": e.position, "sent": e.sent_id, "para": e.para_id}
        if e.text is not None:
            item["text"] = e.text
        edus.append(item)
    layers = []
    for layer in doc.layers:
        if sidecar_dir is None:
            layers.append({"layer": layer.layer_index,
                           "heads": [np.asarray(h).tolist() for h in layer.heads]})
        else:
            name = f"{doc.doc_id}.l{layer.layer_index}.adm"
            write_adm(Path(sidecar_dir) / name, np.stack(layer.heads))
            layers.append({"layer": layer.layer_index, "file": name})
    return {"doc_id": doc.doc_id, "edus": edus, "layers": layers}


def load_document(path) -> AnnotatedDocument:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DocumentError(path.stem, [f"malformed JSON: {exc}"]) from exc
    return document_from_json(obj, path.parent)


def save_document(doc: AnnotatedDocument, path, binary: bool = False) -> None:
    path = Path(path)
    obj = document_to_json(doc, path.parent if binary else None)
    path.write_text(json.dumps(obj))


def document_paths(path) -> list[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted(path.glob("*.json"))
    return [path]


# --------------------------------------------------------------------------
# Tree files
# --------------------------------------------------------------------------


@dataclass
class TreeRecord:
    doc_id: str
    tree: object
    meta: dict = field(default_factory=dict)


def _format_header(doc_id: str, meta: dict) -> str:
    extra = "".join(f" {k}={v}" for k, v in meta.items())
    return f"# {doc_id}{extra}"


def _parse_header(line: str) -> tuple[str, dict]:
    parts = line[1:].split()
    if not parts:
        raise FormatError("empty '#' header")
    meta = {}
    for p in parts[1:]:
        k, _, v = p.partition("=")
        meta[k] = v
    return parts[0], meta


def segmentation_meta(doc: AnnotatedDocument) -> dict:
    return {"sent": ",".join(map(str, doc.sent_ids)),
            "para": ",".join(map(str, doc.para_ids))}


def meta_ids(meta: dict, key: str) -> tuple[int, ...] | None:
    if key not in meta:
        return None
    return tuple(int(x) for x in meta[key].split(","))


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def format_tree(tree) -> str:
    """Bracketed form; unlabeled internal nodes print as ``??``."""
    if isinstance(tree, (list, tuple)):
        return " ".join(format_tree(t) for t in tree)
    if isinstance(tree, Leaf):
        return f"(leaf {tree.pos})"
    if isinstance(tree, Node):
        return f"({tree.nuc or '??'} {format_tree(tree.left)} {format_tree(tree.right)})"
    label = "".join(tree.marks) if tree.marks else "??"
    return "(" + label + " " + " ".join(format_tree(c) for c in tree.children) + ")"


def parse_tree(text: str):
    """Parse one bracketed line.

    Binary nodes become ``Node``; wider nodes become ``NaryNode`` with one
    N/S mark per child.  Several top-level trees form a forest (a list).
    """
    tokens = _TOKEN.findall(text)
    pos = 0

    def node():
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != "(":
            raise FormatError(f"expected '(' at token {pos} in {text!r}")
        label = tokens[pos + 1] if pos + 1 < len(tokens) else None
        pos += 2
        if label == "leaf":
            try:
                leaf = Leaf(int(tokens[pos]))
            except (IndexError, ValueError):
                raise FormatError(f"bad leaf in {text!r}") from None
            pos += 1
            expect(")")
            return leaf
        if label is None or label in "()":
            raise FormatError(f"missing label in {text!r}")
        kids = []
        while pos < len(tokens) and tokens[pos] == "(":
            kids.append(node())
        expect(")")
        try:
            if len(kids) == 2 and label in ("NN", "NS", "SN", "??"):
                return Node(kids[0], kids[1], None if label == "??" else label)
            marks = None if label == "??" else tuple(label)
            return NaryNode(kids, marks)
        except TreeError as exc:
            raise FormatError(f"{exc} in {text!r}") from None

    def expect(tok):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != tok:
            raise FormatError(f"expected {tok!r} at token {pos} in {text!r}")
        pos += 1

    roots = []
    while pos < len(tokens):
        roots.append(node())
    if not roots:
        raise FormatError("empty tree line")
    return roots[0] if len(roots) == 1 else roots


def write_const_file(path_or_stream, records) -> None:
    lines = []
    for r in records:
        lines.append(_format_header(r.doc_id, r.meta))
        lines.append(format_tree(r.tree))
    _emit(path_or_stream, "\n".join(lines) + "\n")


def read_const_file(path) -> list[TreeRecord]:
    records = []
    pending = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            pending = _parse_header(line)
            continue
        if not line.startswith("("):
            raise FormatError(f"{path}:{lineno}: not a bracketed tree")
        doc_id, meta = pending if pending else (f"doc{len(records) + 1}", {})
        records.append(TreeRecord(doc_id, parse_tree(line), meta))
        pending = None
    return records


def write_dep_file(path_or_stream, records) -> None:
    blocks = []
    for r in records:
        rows = [_format_header(r.doc_id, r.meta)]
        rows += [f"{d}\t{h}" for d, h in enumerate(r.tree.heads, start=1)]
        blocks.append("\n".join(rows))
    _emit(path_or_stream, "\n\n".join(blocks) + "\n")


def read_dep_file(path) -> list[TreeRecord]:
    records = []
    text = Path(path).read_text()
    for block in re.split(r"\n\s*\n", text.strip()):
        if not block.strip():
            continue
        doc_id, meta = f"doc{len(records) + 1}", {}
        heads = []
        for line in block.splitlines():
            line = line.strip()
            if line.startswith("#"):
                doc_id, meta = _parse_header(line)
                continue
            parts = line.split()
            if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
                raise FormatError(f"{path}: {doc_id}: bad dependency line {line!r}")
            d, h = map(int, parts)
            if d != len(heads) + 1:
                raise FormatError(f"{path}: {doc_id}: EDU ids not 1..n in order")
            heads.append(h)
        try:
            records.append(TreeRecord(doc_id, DependencyTree(heads), meta))
        except TreeError as exc:
            raise FormatError(f"{path}: {doc_id}: {exc}") from None
    return records


def tree_file_kind(path) -> str:
    """'const' or 'dep', judged from the first non-comment line."""
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            return "const" if line.startswith("(") else "dep"
    raise FormatError(f"{path}: no trees found")


def _emit(path_or_stream, text: str) -> None:
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        Path(path_or_stream).write_text(text)
