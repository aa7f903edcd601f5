"""Embedded training corpus for the desk-scale masked language model.

The service ships with a small closed world of occupation facts so a fresh
checkout can train its scorer at startup and answer questions about that
world without downloading anything.
"""

from __future__ import annotations

# One home location per occupation.  Tests build five-way multiple-choice
# questions whose distractors are locations of other occupations, so every
# fact must use a location no other occupation shares.
OCCUPATION_PLACES: tuple[tuple[str, str], ...] = (
    ("teachers", "school"),
    ("doctors", "hospital"),
    ("sailors", "sea"),
    ("cooks", "kitchen"),
    ("farmers", "farm"),
    ("bakers", "bakery"),
    ("pilots", "airport"),
    ("miners", "mine"),
    ("judges", "court"),
    ("nurses", "clinic"),
    ("actors", "theater"),
    ("singers", "stage"),
    ("painters", "studio"),
    ("drivers", "garage"),
    ("guards", "tower"),
    ("clerks", "office"),
    ("monks", "temple"),
    ("hunters", "forest"),
    ("surfers", "beach"),
    ("campers", "camp"),
)


def training_sentences() -> list[str]:
    """Statements the scorer memorizes, phrased to match translator output.

    Each fact appears with and without the dummy auxiliary kept by the
    conservative question rewriter, plus one determiner variant for lexical
    variety.
    """
    sentences: list[str] = []
    for occupation, place in OCCUPATION_PLACES:
        sentences.append(f"{occupation} work at {place} .")
        sentences.append(f"{occupation} do work at {place} .")
        sentences.append(f"the {occupation} stay at the {place} .")
    return sentences
