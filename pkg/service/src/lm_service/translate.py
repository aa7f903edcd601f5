"""Deterministic sequence-to-sequence stand-ins for cloze translation.

Two methods with the rewriting behavior of trained translators at desk
scale: "sup_seq2seq" produces a fluent declarative (wh-phrase and dummy
auxiliary removed, answer slot moved to the end), "unsup_seq2seq" edits in
place (wh-phrase replaced where it stands).  Every response carries exactly
one mask; outputs that would carry more are rewritten to keep the first
mask only, and such responses are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import MASK_TOKEN

METHODS = ("sup_seq2seq", "unsup_seq2seq")

# Answer-slot phrasing per wh-word.  Multi-word entries match first.
_WH_PHRASES: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = (
    (("how", "many"), (MASK_TOKEN,)),
    (("how", "much"), (MASK_TOKEN,)),
    (("what",), (MASK_TOKEN,)),
    (("who",), (MASK_TOKEN,)),
    (("which",), (MASK_TOKEN,)),
    (("why",), ("because", MASK_TOKEN)),
    (("how",), ("by", MASK_TOKEN)),
    (("where",), ("at", MASK_TOKEN)),
    (("when",), ("when", MASK_TOKEN)),
)
_DUMMY_AUXILIARIES = {"do", "does", "did"}


class TranslationError(ValueError):
    """Raised when the text cannot be turned into a cloze."""


@dataclass(frozen=True)
class Translation:
    """A cloze sentence plus whether the one-mask rule forced a rewrite."""

    cloze: str
    rewritten: bool


def _strip_question_mark(tokens: list[str]) -> list[str]:
    if tokens and tokens[-1] in {"?", ".", "!"}:
        return tokens[:-1]
    if tokens and tokens[-1][-1] in {"?", ".", "!"}:
        return tokens[:-1] + [tokens[-1][:-1]]
    return tokens


def _find_wh(tokens: list[str]) -> tuple[int, int, tuple[str, ...]] | None:
    """Locate the first wh-phrase; returns (start, end, replacement)."""
    lowered = [token.lower() for token in tokens]
    for start in range(len(lowered)):
        for phrase, replacement in _WH_PHRASES:
            if tuple(lowered[start : start + len(phrase)]) == phrase:
                return start, start + len(phrase), replacement
    return None


def _finish(tokens: list[str]) -> str:
    """Capitalize, join, and glue the final period onto the last token."""
    tokens = [token for token in tokens if token]
    if not tokens:
        raise TranslationError("translation produced no tokens")
    tokens[0] = tokens[0][:1].upper() + tokens[0][1:]
    return " ".join(tokens) + "."


def _single_mask(tokens: list[str]) -> tuple[list[str], bool]:
    """Keep the first mask, drop the rest, and report whether any dropped."""
    kept: list[str] = []
    seen = False
    changed = False
    for token in tokens:
        if MASK_TOKEN not in token:
            kept.append(token)
            continue
        if not seen:
            seen = True
            kept.append(token)
            continue
        changed = True
        stripped = token.replace(MASK_TOKEN, "")
        if stripped:
            kept.append(stripped)
    if not seen:
        raise TranslationError("translation lost its mask")
    return kept, changed


def translate(natural: str, method: str) -> Translation:
    """Rewrite a natural-language question into a one-mask cloze."""
    if method not in METHODS:
        raise TranslationError(f"unknown method {method!r}")
    tokens = _strip_question_mark(natural.split())
    if not tokens:
        raise TranslationError("text has no words")
    found = _find_wh(tokens)
    if found is None:
        # Yes/no and free-form questions: the answer slot goes at the end.
        rewritten = tokens + [MASK_TOKEN]
    elif method == "sup_seq2seq":
        start, end, replacement = found
        rest = tokens[:start] + tokens[end:]
        if rest and rest[0].lower() in _DUMMY_AUXILIARIES:
            rest = rest[1:]
        rewritten = rest + list(replacement)
    else:
        start, end, replacement = found
        rewritten = tokens[:start] + list(replacement) + tokens[end:]
    kept, changed = _single_mask(rewritten)
    return Translation(cloze=_finish(kept), rewritten=changed)
