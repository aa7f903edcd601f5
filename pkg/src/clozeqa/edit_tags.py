"""Token-level edit transduction between natural and cloze sentences.

A sentence pair is converted to one edit tag per source token (plus a
sentinel slot ahead of the first token), the tags are applied, and the
process repeats until the target is reproduced.  Because each position
carries exactly one tag per pass, edits that stack on a single token
(for example a hyphen merge whose pieces also need reshaping) resolve
over successive passes.

All functions are pure; no shared state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

from .errors import ConvergenceError, DataValidationError, TagApplicationError
from .rewrite import GLUE_PUNCTUATION


class TagKind(enum.Enum):
    KEEP = "KEEP"
    DELETE = "DELETE"
    APPEND = "APPEND"
    REPLACE = "REPLACE"
    MERGE_HYPHEN = "MERGE_HYPHEN"
    NOUN_NUMBER_SINGULAR = "NOUN_NUMBER_SINGULAR"
    VERB_FORM_VB_VBZ = "VERB_FORM_VB_VBZ"


_PAYLOAD_KINDS = frozenset({TagKind.APPEND, TagKind.REPLACE})
_SENTINEL_KINDS = frozenset({TagKind.KEEP, TagKind.APPEND})


@dataclass(frozen=True)
class EditTag:
    kind: TagKind
    payload: str | None = None

    def __post_init__(self) -> None:
        if self.kind in _PAYLOAD_KINDS:
            if not self.payload:
                raise DataValidationError(f"{self.kind.value} requires a payload")
        elif self.payload is not None:
            raise DataValidationError(f"{self.kind.value} takes no payload")

    def to_text(self) -> str:
        if self.kind in _PAYLOAD_KINDS:
            if ";" in self.payload:
                raise DataValidationError("payload must not contain ';'")
            return f"{self.kind.value}_{self.payload}"
        return self.kind.value

    @classmethod
    def from_text(cls, text: str) -> "EditTag":
        for kind in _PAYLOAD_KINDS:
            prefix = kind.value + "_"
            if text.startswith(prefix):
                return cls(kind=kind, payload=text[len(prefix) :])
        try:
            return cls(kind=TagKind(text))
        except ValueError:
            raise DataValidationError(f"unknown edit tag {text!r}") from None


KEEP = EditTag(kind=TagKind.KEEP)


@dataclass(frozen=True)
class EditTagSequence:
    """One tag per position over [sentinel] + source tokens."""

    tags: tuple[EditTag, ...]

    def __post_init__(self) -> None:
        if not self.tags:
            raise DataValidationError("tag sequence must cover the sentinel")
        if self.tags[0].kind not in _SENTINEL_KINDS:
            raise DataValidationError(
                f"sentinel admits KEEP or APPEND, got {self.tags[0].kind.value}"
            )

    def __len__(self) -> int:
        return len(self.tags)

    def is_identity(self) -> bool:
        return all(tag.kind is TagKind.KEEP for tag in self.tags)

    def to_text(self) -> str:
        return ";".join(tag.to_text() for tag in self.tags)

    @classmethod
    def from_text(cls, text: str) -> "EditTagSequence":
        return cls(tags=tuple(EditTag.from_text(part) for part in text.split(";")))


def all_keep(source_len: int) -> EditTagSequence:
    return EditTagSequence(tags=(KEEP,) * (source_len + 1))


def singularize(token: str) -> str:
    """Heuristic plural-to-singular used by the NOUN_NUMBER_SINGULAR tag."""
    if token.endswith("ies") and len(token) > 3:
        return token[:-3] + "y"
    if token.endswith(("ses", "xes", "zes", "ches", "shes")):
        return token[:-2]
    if token.endswith("s") and not token.endswith("ss") and len(token) > 1:
        return token[:-1]
    return token


def to_third_person(token: str) -> str:
    """Base verb to third-person singular, used by VERB_FORM_VB_VBZ."""
    if token.endswith(("s", "x", "z", "ch", "sh", "o")):
        return token + "es"
    if token.endswith("y") and len(token) > 1 and token[-2] not in "aeiou":
        return token[:-1] + "ies"
    return token + "s"


@dataclass(frozen=True)
class Alignment:
    """Per-source-token target pieces, in source order.

    A hyphen-merged target token is spread over the source run that
    produced it: every run member except the last holds its component
    followed by a "-" joiner piece, e.g. (ten, -), (year, -), (old).
    Insertions attach to the preceding source token; insertions before
    the first token attach to the sentinel.
    """

    source: tuple[str, ...]
    target: tuple[str, ...]
    sentinel_pieces: tuple[str, ...]
    pieces: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if len(self.pieces) != len(self.source):
            raise DataValidationError("one piece list per source token required")

    def rejoined(self) -> list[str]:
        """Reconstruct the target tokens, fusing "-" joiner pieces."""
        out: list[str] = []
        glue = False
        for piece in self.sentinel_pieces + tuple(
            p for group in self.pieces for p in group
        ):
            if piece == "-":
                glue = True
                continue
            if glue and out:
                out[-1] = out[-1] + "-" + piece
            else:
                out.append(piece)
            glue = False
        return out


# Alignment op costs: exact match 0, case-only 0.25, morphological or
# punctuation-glue rewrite 0.5, replace/delete/insert 1 each.  A hyphen
# merge costs the sum of its component costs plus 0.25 so it undercuts
# the replace-plus-deletes alternative.
_COST_CASE = 0.25
_COST_MORPH = 0.5
_COST_EDIT = 1.0
_COST_MERGE = 0.25


def _substitution_cost(src: str, tgt: str) -> float:
    if src == tgt:
        return 0.0
    if src.lower() == tgt.lower():
        return _COST_CASE
    if singularize(src) == tgt or to_third_person(src) == tgt:
        return _COST_MORPH
    if len(tgt) > 1 and tgt[-1] in GLUE_PUNCTUATION and tgt[:-1] == src:
        return _COST_MORPH
    return _COST_EDIT


def _component_cost(src: str, comp: str) -> float | None:
    if src == comp:
        return 0.0
    if singularize(src) == comp:
        return _COST_MORPH
    if to_third_person(src) == comp:
        return _COST_MORPH
    return None


def _merge_runs(source: list[str], start: int, tgt: str):
    """Yield (token_count, cost, per-token components) for runs of source
    tokens, beginning at start, that reassemble the hyphenated target.

    A single source token may cover several consecutive components when
    it already contains their joined form (a partially merged run from
    an earlier pass).
    """
    comps = tgt.split("-")
    if len(comps) < 2 or "" in comps:
        return
    i, c = start, 0
    cost = 0.0
    covered: list[str] = []
    while c < len(comps):
        if i >= len(source):
            return
        src = source[i]
        matched = False
        for k in range(len(comps) - c, 0, -1):
            joined = "-".join(comps[c : c + k])
            unit = _component_cost(src, joined) if k == 1 else (
                0.0 if src == joined else None
            )
            if unit is not None:
                cost += unit
                covered.append(joined)
                c += k
                i += 1
                matched = True
                break
        if not matched:
            return
    if i - start >= 2:
        yield i - start, cost + _COST_MERGE, covered


def align(source: list[str], target: list[str]) -> Alignment:
    """Minimum-cost monotone alignment of source tokens to target pieces."""
    if not source or not target:
        raise DataValidationError("align requires non-empty token lists")
    n, m = len(source), len(target)
    inf = float("inf")
    cost = [[inf] * (m + 1) for _ in range(n + 1)]
    # back[i][j] = (op, di, dj, components-or-None)
    back: list[list[tuple | None]] = [[None] * (m + 1) for _ in range(n + 1)]
    cost[0][0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            here = cost[i][j]
            if here == inf:
                continue

            def relax(ni, nj, total, op, data=None):
                if total < cost[ni][nj]:
                    cost[ni][nj] = total
                    back[ni][nj] = (op, ni - i, nj - j, data)

            if i < n and j < m:
                relax(i + 1, j + 1, here + _substitution_cost(source[i], target[j]), "sub")
            if i < n and j < m:
                for span, c, comps in _merge_runs(source, i, target[j]):
                    relax(i + span, j + 1, here + c, "merge", comps)
            if i < n:
                relax(i + 1, j, here + _COST_EDIT, "delete")
            if j < m:
                relax(i, j + 1, here + _COST_EDIT, "insert")

    pieces: list[list[str]] = [[] for _ in range(n)]
    sentinel: list[str] = []
    i, j = n, m
    ops: list[tuple] = []
    while i > 0 or j > 0:
        op, di, dj, data = back[i][j]
        i, j = i - di, j - dj
        ops.append((op, i, j, di, dj, data))
    for op, si, tj, di, dj, data in reversed(ops):
        if op == "sub":
            pieces[si].append(target[tj])
        elif op == "merge":
            for offset, comp in enumerate(data):
                pieces[si + offset].append(comp)
                if offset < len(data) - 1:
                    pieces[si + offset].append("-")
        elif op == "insert":
            if si == 0:
                sentinel.append(target[tj])
            else:
                pieces[si - 1].append(target[tj])
        # delete leaves the source token with no pieces
    return Alignment(
        source=tuple(source),
        target=tuple(target),
        sentinel_pieces=tuple(sentinel),
        pieces=tuple(tuple(p) for p in pieces),
    )


def _single_piece_tag(src: str, tgt: str) -> EditTag:
    if src == tgt:
        return KEEP
    if singularize(src) == tgt:
        return EditTag(kind=TagKind.NOUN_NUMBER_SINGULAR)
    if to_third_person(src) == tgt:
        return EditTag(kind=TagKind.VERB_FORM_VB_VBZ)
    if len(tgt) > 1 and tgt[-1] in GLUE_PUNCTUATION and tgt[:-1] == src:
        return EditTag(kind=TagKind.APPEND, payload=tgt[-1])
    return EditTag(kind=TagKind.REPLACE, payload=tgt)


def encode_tags(alignment: Alignment) -> EditTagSequence:
    """One tag per position for this pass; overflow pieces wait for the next."""
    tags: list[EditTag] = []
    if alignment.sentinel_pieces:
        tags.append(EditTag(kind=TagKind.APPEND, payload=alignment.sentinel_pieces[0]))
    else:
        tags.append(KEEP)

    joins_forward = [
        group[-1:] == ("-",) for group in alignment.pieces
    ]
    for idx, group in enumerate(alignment.pieces):
        src = alignment.source[idx]
        if not group:
            tags.append(EditTag(kind=TagKind.DELETE))
            continue
        if joins_forward[idx]:
            run_start = idx == 0 or not joins_forward[idx - 1]
            component = group[0]
            if run_start and component == src:
                tags.append(EditTag(kind=TagKind.MERGE_HYPHEN))
            else:
                tags.append(_single_piece_tag(src, component))
            continue
        first = group[0]
        tag = _single_piece_tag(src, first)
        if tag.kind is TagKind.KEEP and len(group) > 1:
            tag = EditTag(kind=TagKind.APPEND, payload=group[1])
        tags.append(tag)
    return EditTagSequence(tags=tuple(tags))


def apply_tags(source: list[str], tags: EditTagSequence) -> list[str]:
    """Apply one pass of edits left to right."""
    if len(tags) != len(source) + 1:
        raise TagApplicationError(
            f"expected {len(source) + 1} tags, got {len(tags)}"
        )
    n = len(source)
    resolved: list[list[str] | None] = [None] * n
    consumed = [False] * n

    def resolve(i: int) -> list[str]:
        if resolved[i] is not None:
            return resolved[i]
        tag = tags.tags[i + 1]
        token = source[i]
        if tag.kind is TagKind.KEEP:
            out = [token]
        elif tag.kind is TagKind.DELETE:
            out = []
        elif tag.kind is TagKind.REPLACE:
            out = [tag.payload]
        elif tag.kind is TagKind.APPEND:
            if tag.payload in GLUE_PUNCTUATION:
                out = [token + tag.payload]
            else:
                out = [token, tag.payload]
        elif tag.kind is TagKind.NOUN_NUMBER_SINGULAR:
            out = [singularize(token)]
        elif tag.kind is TagKind.VERB_FORM_VB_VBZ:
            out = [to_third_person(token)]
        elif tag.kind is TagKind.MERGE_HYPHEN:
            if i + 1 >= n:
                raise TagApplicationError("MERGE_HYPHEN on the last token")
            neighbor = resolve(i + 1)
            if not neighbor:
                raise TagApplicationError("MERGE_HYPHEN into a deleted token")
            consumed[i + 1] = True
            out = [token + "-" + neighbor[0]] + neighbor[1:]
        else:  # pragma: no cover - exhaustive enum
            raise TagApplicationError(f"unsupported tag {tag.kind.value}")
        resolved[i] = out
        return out

    for i in range(n):
        resolve(i)

    out: list[str] = []
    sentinel = tags.tags[0]
    if sentinel.kind is TagKind.APPEND:
        out.append(sentinel.payload)
    for i in range(n):
        if not consumed[i]:
            out.extend(resolved[i])
    return out


def encode_iterative(
    source: list[str], target: list[str], max_passes: int = 5
) -> list[EditTagSequence]:
    """Tag sequences whose successive application rewrites source into target."""
    if max_passes < 1:
        raise DataValidationError("max_passes must be at least 1")
    current = list(source)
    goal = list(target)
    if current == goal:
        return [all_keep(len(current))]
    passes: list[EditTagSequence] = []
    for _ in range(max_passes):
        tags = encode_tags(align(current, goal))
        step = apply_tags(current, tags)
        passes.append(tags)
        if step == goal:
            return passes
        if step == current:
            break
        current = step
    raise ConvergenceError(
        f"not converged after {len(passes)} passes",
        residual=f"{' '.join(current)} != {' '.join(goal)}",
    )


def load_tag_file(path: str | Path) -> dict[str, EditTagSequence]:
    """Read "id TAB tag;tag;…" lines into per-sentence tag sequences."""
    table: dict[str, EditTagSequence] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            try:
                key, body = line.split("\t", 1)
            except ValueError:
                raise DataValidationError(
                    f"expected 'id<TAB>tags' on line {lineno}", line=lineno
                ) from None
            table[key] = EditTagSequence.from_text(body)
    return table


def dump_tag_file(path: str | Path, rows: dict[str, EditTagSequence]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key, tags in rows.items():
            handle.write(f"{key}\t{tags.to_text()}\n")


def replay(
    sentences: dict[str, list[str]], tag_table: dict[str, EditTagSequence]
) -> dict[str, list[str]]:
    """Apply one externally supplied tagging pass to each sentence by id."""
    out: dict[str, list[str]] = {}
    for key, tokens in sentences.items():
        if key not in tag_table:
            raise DataValidationError(f"no tags for sentence {key!r}")
        out[key] = apply_tags(tokens, tag_table[key])
    return out
