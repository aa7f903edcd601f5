"""Turn parsed natural questions into cloze statements.

The transformation walks the constituency tree.  A constituent whose right
sibling is labeled ``SQ`` is treated as the fronted question phrase: it is
removed, its leading question word is rewritten through the replacement
table, and the rewritten phrase is re-attached at the end of that ``SQ``
(before any trailing punctuation).  An ``SQ`` child itself has its first two
children swapped, undoing subject-auxiliary inversion.  Everything else is
descended into recursively.  Questions without any ``SQ`` node fall back to
replacing their first question word with the mask token.

All functions are pure; they build new trees rather than mutating inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataValidationError, UntranslatableError
from .treebank import (
    ConstituencyNode,
    ConstituencyTree,
    assign_spans,
    internal,
    leaf,
    replace_children,
)

__all__ = [
    "MASK",
    "TRANSLATORS",
    "WhReplacementTable",
    "ClozeQuestion",
    "transform",
    "replace_wh",
    "swap_first_two_children",
    "fallback_replace",
    "detokenize",
]

MASK = "[MASK]"

TRANSLATORS = ("syntactic", "tagger", "seq2seq_remote", "unsup_remote", "manual")

GLUE_PUNCTUATION = frozenset({".", ",", "?", "!", ";", ":"})
_AUXILIARIES = {"do", "does", "did"}


def detokenize(tokens) -> str:
    """Join tokens with spaces, attaching bare punctuation to the left."""
    parts: list[str] = []
    for tok in tokens:
        if parts and tok in GLUE_PUNCTUATION:
            parts[-1] += tok
        else:
            parts.append(tok)
    return " ".join(parts)


@dataclass(frozen=True)
class WhReplacementTable:
    """Ordered mapping from lowercased question word to replacement tokens.

    Keys may span two tokens (``"how many"``); longer keys match first.
    Every replacement sequence contains exactly one mask token.
    """

    entries: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        for key, repl in self.entries:
            if sum(tok.count(MASK) for tok in repl) != 1:
                raise DataValidationError(
                    f"replacement for {key!r} must contain exactly one {MASK}"
                )

    @classmethod
    def default(cls) -> "WhReplacementTable":
        return cls(
            entries=(
                ("how many", (MASK,)),
                ("how much", (MASK,)),
                ("what", (MASK,)),
                ("who", (MASK,)),
                ("which", (MASK,)),
                ("why", ("because", MASK)),
                ("how", ("by", MASK)),
                ("where", ("at", MASK)),
                ("when", ("when", MASK)),
            )
        )

    def lookup(self, key: str):
        for entry_key, repl in self.entries:
            if entry_key == key:
                return repl
        return None

    def match_at(self, tokens, i: int):
        """Longest table match starting at ``tokens[i]``: (span_len, replacement)."""
        if i + 1 < len(tokens):
            two = f"{tokens[i].lower()} {tokens[i + 1].lower()}"
            repl = self.lookup(two)
            if repl is not None:
                return 2, repl
        repl = self.lookup(tokens[i].lower())
        if repl is not None:
            return 1, repl
        return None

    def find_first(self, tokens):
        """(position, span_len, replacement) of the first match, or None."""
        for i in range(len(tokens)):
            hit = self.match_at(tokens, i)
            if hit is not None:
                return (i, *hit)
        return None


@dataclass(frozen=True)
class ClozeQuestion:
    """A token sequence with a single mask slot.

    ``tokens[mask_index]`` is the token carrying the mask; punctuation may be
    glued onto it when the cloze came from whitespace-tokenized text.
    """

    tokens: tuple[str, ...]
    mask_index: int
    source_id: str = ""
    translator: str = "syntactic"

    def __post_init__(self):
        if not self.tokens:
            raise DataValidationError("cloze has no tokens")
        if self.translator not in TRANSLATORS:
            raise DataValidationError(f"unknown translator {self.translator!r}")
        mask_count = sum(tok.count(MASK) for tok in self.tokens)
        if mask_count != 1:
            raise DataValidationError(
                f"cloze must contain exactly one {MASK}, found {mask_count}"
            )
        if not (0 <= self.mask_index < len(self.tokens)) or MASK not in self.tokens[
            self.mask_index
        ]:
            raise DataValidationError("mask_index does not point at the mask token")
        if not self.tokens[-1].endswith("."):
            raise DataValidationError("cloze must end with '.'")

    @property
    def text(self) -> str:
        return detokenize(self.tokens)

    @classmethod
    def from_text(cls, text: str, source_id: str = "", translator: str = "manual"):
        tokens = tuple(text.split())
        mask_index = next(
            (i for i, tok in enumerate(tokens) if MASK in tok), len(tokens)
        )
        return cls(
            tokens=tokens,
            mask_index=mask_index,
            source_id=source_id,
            translator=translator,
        )


# ---------------------------------------------------------------------------
# Token-level operations
# ---------------------------------------------------------------------------


def replace_wh(phrase_tokens, table: WhReplacementTable) -> list[str]:
    """Replace the first question word in the phrase with its table entry,
    keeping all other tokens (modifiers) in order."""
    hit = table.find_first(list(phrase_tokens))
    if hit is None:
        raise UntranslatableError(f"no question word in phrase {list(phrase_tokens)!r}")
    pos, span, repl = hit
    out = list(phrase_tokens)
    out[pos : pos + span] = list(repl)
    return out


def swap_first_two_children(node: ConstituencyNode) -> ConstituencyNode:
    """Exchange children 0 and 1; a node with fewer than two children is
    returned unchanged.  Spans are recomputed relative to the node's start."""
    if len(node.children) < 2:
        return node
    children = (node.children[1], node.children[0]) + node.children[2:]
    from .treebank import _with_spans

    swapped, _ = _with_spans(replace_children(node, children), node.span[0])
    return swapped


def _normalize_terminal(tokens: list[str]) -> list[str]:
    if not tokens:
        return ["."]
    last = tokens[-1]
    if last in ("?", "!"):
        tokens[-1] = "."
    elif len(last) > 1 and last[-1] in ("?", "!"):
        tokens[-1] = last[:-1] + "."
    elif not last.endswith("."):
        tokens.append(".")
    return tokens


def _capitalize_first(tokens: list[str]) -> list[str]:
    if tokens and tokens[0][:1].isalpha():
        tokens[0] = tokens[0][0].upper() + tokens[0][1:]
    return tokens


def fallback_replace(
    tokens,
    table: WhReplacementTable,
    source_id: str = "",
    translator: str = "syntactic",
) -> ClozeQuestion:
    """Replace the first question word with the bare mask token.

    Without structure the table's prefix tokens have no attachment site, so
    the fallback always inserts the plain mask.
    """
    toks = list(tokens)
    hit = table.find_first(toks)
    if hit is None:
        raise UntranslatableError(f"no question word in {detokenize(toks)!r}")
    pos, span, _ = hit
    toks[pos : pos + span] = [MASK]
    toks = _capitalize_first(_normalize_terminal(toks))
    mask_index = next(i for i, tok in enumerate(toks) if MASK in tok)
    return ClozeQuestion(
        tokens=tuple(toks),
        mask_index=mask_index,
        source_id=source_id,
        translator=translator,
    )


# ---------------------------------------------------------------------------
# Tree-level transformation
# ---------------------------------------------------------------------------


@dataclass
class _WalkState:
    table: WhReplacementTable
    mask_placed: bool = False


def _is_punct_leaf(node: ConstituencyNode) -> bool:
    return node.is_leaf and (node.token in GLUE_PUNCTUATION or node.label in GLUE_PUNCTUATION)


def _rewrite_phrase(node: ConstituencyNode, state: _WalkState) -> ConstituencyNode:
    """Rewrite the first question word inside ``node`` via the table.

    Only the first rewrite in a sentence produces the mask; later fronted
    phrases are moved verbatim so the output keeps a single mask slot.
    """
    if state.mask_placed:
        return node
    leaves = list(node.leaves())
    tokens = [lf.token for lf in leaves]
    hit = state.table.find_first(tokens)
    if hit is None:
        return node
    pos, span, repl = hit
    state.mask_placed = True
    wh_label = leaves[pos].label
    replacement_leaves = [leaf(wh_label, tok) for tok in repl]

    counter = {"i": 0}

    def rebuild(n: ConstituencyNode):
        if n.is_leaf:
            idx = counter["i"]
            counter["i"] += 1
            if idx == pos:
                return list(replacement_leaves)
            if pos < idx < pos + span:
                return []
            return [n]
        out = []
        for child in n.children:
            out.extend(rebuild(child))
        if not out:
            return []
        return [replace_children(n, out)]

    if node.is_leaf:
        if len(replacement_leaves) == 1:
            return replacement_leaves[0]
        return internal(node.label, replacement_leaves)
    rebuilt = rebuild(node)
    return rebuilt[0]


def _insert_clause_final(sq: ConstituencyNode, moved: ConstituencyNode) -> ConstituencyNode:
    children = list(sq.children)
    insert_at = len(children)
    while insert_at > 0 and _is_punct_leaf(children[insert_at - 1]):
        insert_at -= 1
    children.insert(insert_at, moved)
    return replace_children(sq, children)


def _phrase_has_wh(node: ConstituencyNode, table: WhReplacementTable) -> bool:
    return table.find_first([lf.token for lf in node.leaves()]) is not None


def _walk(node: ConstituencyNode, state: _WalkState) -> ConstituencyNode:
    if node.is_leaf:
        return node
    work = list(node.children)
    out: list[ConstituencyNode] = []
    i = 0
    while i < len(work):
        child = work[i]
        nxt = work[i + 1] if i + 1 < len(work) else None
        if (
            nxt is not None
            and not nxt.is_leaf
            and nxt.label == "SQ"
            and _phrase_has_wh(child, state.table)
        ):
            moved = _rewrite_phrase(child, state)
            work[i + 1] = _insert_clause_final(nxt, moved)
            i += 1
            continue
        if not child.is_leaf and child.label == "SQ":
            out.append(swap_first_two_children(child))
            i += 1
            continue
        out.append(_walk(child, state))
        i += 1
    return replace_children(node, out)


def _drop_auxiliary(leaves: list[ConstituencyNode]) -> list[ConstituencyNode]:
    for i in range(len(leaves) - 1):
        if (
            leaves[i].token.lower() in _AUXILIARIES
            and leaves[i + 1].label.startswith("VB")
        ):
            return leaves[:i] + leaves[i + 1 :]
    return leaves


def transform(
    tree: ConstituencyTree,
    table: WhReplacementTable | None = None,
    drop_aux: bool = False,
    source_id: str = "",
) -> ClozeQuestion:
    """Rewrite one parsed question into a cloze statement.

    Raises :class:`UntranslatableError` when the sentence contains no
    question word the table knows about.
    """
    from .treebank import find_first

    if table is None:
        table = WhReplacementTable.default()

    if find_first(tree, "SQ") is None:
        return fallback_replace(
            [lf.token for lf in tree.root.leaves()], table, source_id
        )

    original_first = next(tree.root.leaves(), None)
    state = _WalkState(table=table)
    new_root = assign_spans(_walk(tree.root, state))
    leaves = list(new_root.leaves())

    if drop_aux:
        leaves = _drop_auxiliary(leaves)

    tokens = [lf.token for lf in leaves]

    if not state.mask_placed:
        hit = table.find_first(tokens)
        if hit is None:
            raise UntranslatableError(
                f"no question word in {detokenize(tokens)!r}"
            )
        pos, span, _ = hit
        tokens[pos : pos + span] = [MASK]
        leaves[pos : pos + span] = [leaf("WP", MASK)]

    # A token that opened the original sentence and was moved inward loses
    # its capitalization, unless it is tagged as a proper noun.  The walk
    # rebuilds nodes, so the survivor is found by its token/label pair.
    if original_first is not None and (
        not leaves or leaves[0].token != original_first.token
    ):
        for p, lf in enumerate(leaves):
            if (
                p > 0
                and lf.token == original_first.token
                and lf.label == original_first.label
                and lf.label not in ("NNP", "NNPS")
                and tokens[p][:1].isalpha()
            ):
                tokens[p] = tokens[p][0].lower() + tokens[p][1:]
                break

    tokens = _capitalize_first(_normalize_terminal(tokens))
    mask_index = next(i for i, tok in enumerate(tokens) if MASK in tok)
    return ClozeQuestion(
        tokens=tuple(tokens),
        mask_index=mask_index,
        source_id=source_id,
        translator="syntactic",
    )
