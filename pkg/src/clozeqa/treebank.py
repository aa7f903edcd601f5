"""Penn-Treebank-style bracketed constituency trees.

Trees are immutable: every node is a frozen dataclass and structural edits
are done by building new nodes (see :func:`replace_children`).  Token-index
spans are half-open ``[start, end)`` intervals assigned left to right over
the leaf sequence.

Tokens are opaque strings split on ASCII whitespace; escaped-bracket tokens
such as ``-LRB-``/``-RRB-`` pass through verbatim and are never interpreted
as structure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .errors import DataValidationError, PtbParseError

__all__ = [
    "ConstituencyNode",
    "ConstituencyTree",
    "parse_ptb",
    "serialize",
    "yield_tokens",
    "find_first",
    "leaf",
    "internal",
    "replace_children",
    "load_parse_file",
]


@dataclass(frozen=True)
class ConstituencyNode:
    """One tree node: a leaf carries ``token``, an internal node carries children."""

    label: str
    token: Optional[str] = None
    children: tuple["ConstituencyNode", ...] = ()
    span: tuple[int, int] = (0, 0)

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def leaves(self) -> Iterator["ConstituencyNode"]:
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def preorder(self) -> Iterator["ConstituencyNode"]:
        yield self
        for child in self.children:
            yield from child.preorder()


@dataclass(frozen=True)
class ConstituencyTree:
    root: ConstituencyNode


def leaf(label: str, token: str) -> ConstituencyNode:
    return ConstituencyNode(label=label, token=token)


def internal(label: str, children) -> ConstituencyNode:
    return ConstituencyNode(label=label, children=tuple(children))


def _with_spans(node: ConstituencyNode, start: int) -> tuple[ConstituencyNode, int]:
    if node.is_leaf:
        return replace(node, span=(start, start + 1)), start + 1
    out = []
    pos = start
    for child in node.children:
        new_child, pos = _with_spans(child, pos)
        out.append(new_child)
    return replace(node, children=tuple(out), span=(start, pos)), pos


def assign_spans(node: ConstituencyNode) -> ConstituencyNode:
    """Return a copy of ``node`` with spans recomputed left to right from 0."""
    new_node, _ = _with_spans(node, 0)
    return new_node


def replace_children(node: ConstituencyNode, children) -> ConstituencyNode:
    """Functional child replacement; spans of the result are stale until
    :func:`assign_spans` runs on the enclosing root."""
    return replace(node, children=tuple(children))


# ---------------------------------------------------------------------------
# Bracketed-string parsing
# ---------------------------------------------------------------------------


class _Scanner:
    """Tokenizer over the UTF-8 bytes of a bracketed string, tracking offsets."""

    def __init__(self, text: str):
        self.data = text.encode("utf-8")
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.data) and self.data[self.pos] in b" \t\r\n":
            self.pos += 1

    def peek(self) -> Optional[int]:
        if self.pos >= len(self.data):
            return None
        return self.data[self.pos]

    def read_token(self) -> str:
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos] not in b"() \t\r\n":
            self.pos += 1
        return self.data[start : self.pos].decode("utf-8")


def _parse_node(scanner: _Scanner) -> ConstituencyNode:
    scanner.skip_ws()
    if scanner.peek() != ord("("):
        raise PtbParseError("expected '('", scanner.pos)
    open_offset = scanner.pos
    scanner.pos += 1
    scanner.skip_ws()
    if scanner.peek() in (None, ord(")")):
        raise PtbParseError("empty node", scanner.pos if scanner.peek() else open_offset)
    if scanner.peek() == ord("("):
        raise PtbParseError("label-less internal node", scanner.pos)
    label = scanner.read_token()

    children: list[ConstituencyNode] = []
    token: Optional[str] = None
    while True:
        scanner.skip_ws()
        ch = scanner.peek()
        if ch is None:
            raise PtbParseError("unbalanced brackets", scanner.pos)
        if ch == ord(")"):
            scanner.pos += 1
            break
        if ch == ord("("):
            if token is not None:
                raise PtbParseError("mixed token and subtree content", scanner.pos)
            children.append(_parse_node(scanner))
        else:
            if children or token is not None:
                raise PtbParseError("mixed token and subtree content", scanner.pos)
            token = scanner.read_token()

    if token is None and not children:
        raise PtbParseError("empty node", open_offset)
    if token is not None:
        return ConstituencyNode(label=label, token=token)
    return ConstituencyNode(label=label, children=tuple(children))


def parse_ptb(text: str) -> ConstituencyTree:
    """Parse a bracketed constituency string into a tree with assigned spans.

    Raises :class:`PtbParseError` (naming the byte offset) on unbalanced
    brackets, empty nodes, or label-less internal nodes.
    """
    scanner = _Scanner(text)
    scanner.skip_ws()
    if scanner.peek() is None:
        raise PtbParseError("empty input", 0)
    root = _parse_node(scanner)
    scanner.skip_ws()
    if scanner.peek() is not None:
        raise PtbParseError("trailing content after tree", scanner.pos)
    return ConstituencyTree(root=assign_spans(root))


def _serialize_node(node: ConstituencyNode, out: list[str]) -> None:
    if node.is_leaf:
        out.append(f"({node.label} {node.token})")
        return
    out.append(f"({node.label}")
    for child in node.children:
        out.append(" ")
        _serialize_node(child, out)
    out.append(")")


def serialize(tree: ConstituencyTree) -> str:
    """Canonical single-spaced bracketed form; inverse of :func:`parse_ptb`."""
    out: list[str] = []
    _serialize_node(tree.root, out)
    return "".join(out)


def yield_tokens(tree_or_node) -> list[str]:
    """Left-to-right terminal tokens."""
    node = tree_or_node.root if isinstance(tree_or_node, ConstituencyTree) else tree_or_node
    return [lf.token for lf in node.leaves()]


def find_first(tree_or_node, label: str) -> Optional[ConstituencyNode]:
    """First node in pre-order whose label equals ``label``, or None."""
    node = tree_or_node.root if isinstance(tree_or_node, ConstituencyTree) else tree_or_node
    for candidate in node.preorder():
        if candidate.label == label:
            return candidate
    return None


def structurally_equal(a: ConstituencyNode, b: ConstituencyNode) -> bool:
    """Label/token/shape equality, ignoring spans."""
    if a.label != b.label or a.token != b.token or len(a.children) != len(b.children):
        return False
    return all(structurally_equal(x, y) for x, y in zip(a.children, b.children))


def load_parse_file(path) -> list[ConstituencyTree]:
    """Read one bracketed parse per line (UTF-8, LF); blank lines are ignored."""
    trees = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            trees.append(parse_ptb(line))
    return trees


def load_parse_table(path) -> list[tuple[str, ConstituencyTree]]:
    """Read "id TAB bracketed-parse" lines, preserving file order."""
    rows: list[tuple[str, ConstituencyTree]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            key, sep, body = line.partition("\t")
            if not sep or not body.strip():
                raise DataValidationError(
                    "expected 'id<TAB>parse'", line=lineno
                )
            if key in seen:
                raise DataValidationError(
                    f"duplicate parse id {key!r}", line=lineno
                )
            seen.add(key)
            try:
                rows.append((key, parse_ptb(body.strip())))
            except DataValidationError as exc:
                raise DataValidationError(str(exc), line=lineno) from exc
    return rows
