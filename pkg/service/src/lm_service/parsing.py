"""Heuristic constituency parsing for question-shaped English.

A pattern parser, not a statistical one: it recognizes the wh-question and
yes/no-question shapes the toolkit cares about and emits a Penn Treebank
bracketing for them.  Output must stay consumable by the toolkit's treebank
reader, so labels and token escaping follow PTB conventions.
"""

from __future__ import annotations

WH_ADVERBS = {"why", "how", "where", "when"}
WH_NOMINALS = {"what", "who", "whom", "which", "whose"}

_AUX_TAGS = {
    "do": "VBP",
    "does": "VBZ",
    "did": "VBD",
    "is": "VBZ",
    "are": "VBP",
    "was": "VBD",
    "were": "VBD",
    "has": "VBZ",
    "have": "VBP",
    "had": "VBD",
    "can": "MD",
    "could": "MD",
    "will": "MD",
    "would": "MD",
    "shall": "MD",
    "should": "MD",
    "may": "MD",
    "might": "MD",
    "must": "MD",
}
_DETERMINERS = {"the", "a", "an", "this", "that", "these", "those"}
_PRONOUN_TAGS = {
    "i": "PRP",
    "you": "PRP",
    "he": "PRP",
    "she": "PRP",
    "it": "PRP",
    "we": "PRP",
    "they": "PRP",
}

# PTB escapes for tokens that would collide with bracket syntax.
_TOKEN_ESCAPES = {"(": "-LRB-", ")": "-RRB-", "{": "-LCB-", "}": "-RCB-"}


class UnparseableError(ValueError):
    """Raised when the text has no recognizable question shape."""


def _escape(token: str) -> str:
    return _TOKEN_ESCAPES.get(token, token)


def _word_tag(word: str) -> str:
    lowered = word.lower()
    if lowered in _AUX_TAGS:
        return _AUX_TAGS[lowered]
    if lowered in _DETERMINERS:
        return "DT"
    if lowered in _PRONOUN_TAGS:
        return _PRONOUN_TAGS[lowered]
    if lowered.endswith("ly"):
        return "RB"
    if lowered.endswith("ing"):
        return "VBG"
    if lowered.endswith("s") and len(lowered) > 3:
        return "NNS"
    return "NN"


def _leaf(tag: str, word: str) -> str:
    return f"({tag} {_escape(word)})"


def _noun_phrase(words: list[str]) -> str:
    leaves = " ".join(_leaf(_word_tag(word), word) for word in words)
    return f"(NP {leaves})"


def _verb_phrase(words: list[str]) -> str:
    # The first word after the subject is read as the main verb.
    leaves = [_leaf("VB", words[0])]
    leaves.extend(_leaf(_word_tag(word), word) for word in words[1:])
    return f"(VP {' '.join(leaves)})"


def _split_subject(words: list[str]) -> tuple[list[str], list[str]]:
    """Take the longest determiner/modifier/noun run as the subject."""
    boundary = 0
    for word in words:
        if _word_tag(word) in {"DT", "NN", "NNS", "PRP", "VBG"}:
            boundary += 1
        else:
            break
    return words[:boundary], words[boundary:]


def _clause(words: list[str]) -> str:
    """Build an SQ over [aux] [subject NP] [VP] from the remaining words."""
    children: list[str] = []
    if words and words[0].lower() in _AUX_TAGS:
        children.append(_leaf(_AUX_TAGS[words[0].lower()], words[0]))
        words = words[1:]
    subject, rest = _split_subject(words)
    if not rest and len(subject) > 1:
        # An all-noun clause ends in its verb ("do teachers work").
        subject, rest = subject[:-1], subject[-1:]
    if subject:
        children.append(_noun_phrase(subject))
    if rest:
        children.append(_verb_phrase(rest))
    elif not subject:
        raise UnparseableError("question has no clause after the wh-phrase")
    return f"(SQ {' '.join(children)})"


def parse_question(text: str) -> str:
    """Return one PTB bracketing for a question-shaped sentence."""
    tokens = text.split()
    if not tokens:
        raise UnparseableError("text is empty")
    # Detach sentence-final punctuation, glued or standalone.
    final = "?"
    if tokens[-1] in {"?", ".", "!"}:
        final = tokens[-1]
        tokens = tokens[:-1]
    elif tokens[-1][-1] in {"?", ".", "!"}:
        final = tokens[-1][-1]
        tokens = tokens[:-1] + [tokens[-1][:-1]]
    if not tokens:
        raise UnparseableError("text has no words")

    first = tokens[0].lower()
    if first in WH_ADVERBS:
        wh = f"(WHADVP (WRB {_escape(tokens[0])}))"
        body = tokens[1:]
        # "how many" and "how much" count as one wh-phrase.
        if first == "how" and body and body[0].lower() in {"many", "much"}:
            wh = f"(WHADJP (WRB {_escape(tokens[0])}) (JJ {_escape(body[0])}))"
            body = body[1:]
    elif first in WH_NOMINALS:
        tag = "WDT" if first in {"which", "whose"} else "WP"
        wh = f"(WHNP ({tag} {_escape(tokens[0])}))"
        body = tokens[1:]
    else:
        # Yes/no question: no wh-phrase to bind, still a valid parse.
        return f"(TOP {_clause(tokens)} (. {final}))"
    return f"(SBARQ {wh} {_clause(body)} (. {final}))"
