"""Cloze translation toolkit for multiple-choice question answering.

Pipeline: parse natural questions, rewrite them into cloze statements with a
single mask slot, substitute candidate answers into the slot, score the
resulting sentences with a language model, and combine the per-translation
probabilities into ensemble predictions and pseudo-labels.
"""

__version__ = "0.1.0"
