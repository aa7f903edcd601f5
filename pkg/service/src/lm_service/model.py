"""Tiny bidirectional masked language model trained in-process.

The scorer is a two-layer transformer encoder trained at startup on the
embedded corpus.  Sentence scoring uses pseudo-log-likelihood: every piece
position is masked in turn and scored from the full bidirectional context.
Callers send whitespace tokens; glued punctuation is split into pieces
internally and piece scores are summed back so the response stays aligned
one score per whitespace token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import torch
from torch import nn

from .corpus import training_sentences

MASK_TOKEN = "[MASK]"

PAD_ID = 0
UNK_ID = 1
MASK_ID = 2
_SPECIALS = ("[PAD]", "[UNK]", MASK_TOKEN)

_MAX_PIECES = 64
_WIDTH = 32
_DEPTH = 2
_HEADS = 4
_TRAIN_STEPS = 160
_TRAIN_LR = 5e-3

_GLUE = re.compile(r"^(\W*)(.*?)(\W*)$", re.UNICODE)


class EngineError(ValueError):
    """A score or fine-tune request the engine cannot satisfy."""


def token_pieces(token: str) -> list[str]:
    """Split one whitespace token into scorable pieces.

    Leading and trailing punctuation become one piece per character and the
    core is lowercased; a literal mask survives as its own piece so glue
    like "[MASK]." still splits cleanly.
    """
    if MASK_TOKEN in token:
        before, _, after = token.partition(MASK_TOKEN)
        pieces: list[str] = []
        if before:
            pieces.extend(token_pieces(before))
        pieces.append(MASK_TOKEN)
        if after:
            pieces.extend(token_pieces(after))
        return pieces
    match = _GLUE.match(token)
    assert match is not None
    leading, core, trailing = match.groups()
    pieces = list(leading)
    if core:
        pieces.append(core.lower())
    pieces.extend(trailing)
    return pieces


class _MaskedEncoder(nn.Module):
    """Transformer encoder with a per-position vocabulary readout."""

    def __init__(self, vocab_size: int) -> None:
        super().__init__()
        self.tokens = nn.Embedding(vocab_size, _WIDTH, padding_idx=PAD_ID)
        self.positions = nn.Embedding(_MAX_PIECES, _WIDTH)
        layer = nn.TransformerEncoderLayer(
            d_model=_WIDTH,
            nhead=_HEADS,
            dim_feedforward=_WIDTH * 4,
            dropout=0.0,
            batch_first=True,
        )
        # enable_nested_tensor switches eval-mode inference onto a fused
        # path with different numerics from training; keep one code path.
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=_DEPTH, enable_nested_tensor=False
        )
        self.readout = nn.Linear(_WIDTH, vocab_size)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        length = ids.shape[1]
        index = torch.arange(length, device=ids.device)
        hidden = self.tokens(ids) + self.positions(index)[None, :, :]
        hidden = self.encoder(hidden, src_key_padding_mask=ids == PAD_ID)
        return self.readout(hidden)


@dataclass(frozen=True)
class TrainingExample:
    """One pseudo-labeled cloze used by fine-tuning."""

    cloze_tokens: tuple[str, ...]
    answer: str


class ScoringEngine:
    """Vocabulary, trained weights, and the scoring entry points."""

    def __init__(self, vocab: dict[str, int], model: _MaskedEncoder, model_id: str) -> None:
        self.vocab = vocab
        self.model = model
        self.model_id = model_id

    @classmethod
    def train_from_corpus(cls, sentences: Sequence[str], seed: int = 13) -> "ScoringEngine":
        """Build the vocabulary and memorize the corpus from scratch."""
        pieces_per_sentence = [
            [piece for token in sentence.split() for piece in token_pieces(token)]
            for sentence in sentences
        ]
        vocab = {special: index for index, special in enumerate(_SPECIALS)}
        for piece in sorted({p for row in pieces_per_sentence for p in row}):
            vocab.setdefault(piece, len(vocab))

        torch.manual_seed(seed)
        model = _MaskedEncoder(len(vocab))

        # One training row per (sentence, position): the position is masked
        # and the model predicts the piece there from bidirectional context.
        width = max(len(row) for row in pieces_per_sentence)
        inputs: list[list[int]] = []
        positions: list[int] = []
        targets: list[int] = []
        for row in pieces_per_sentence:
            ids = [vocab[piece] for piece in row]
            for position, piece_id in enumerate(ids):
                masked = ids.copy()
                masked[position] = MASK_ID
                inputs.append(masked + [PAD_ID] * (width - len(ids)))
                positions.append(position)
                targets.append(piece_id)
        input_tensor = torch.tensor(inputs, dtype=torch.long)
        position_tensor = torch.tensor(positions, dtype=torch.long)
        target_tensor = torch.tensor(targets, dtype=torch.long)
        row_index = torch.arange(len(inputs), dtype=torch.long)

        optimizer = torch.optim.Adam(model.parameters(), lr=_TRAIN_LR)
        loss_fn = nn.CrossEntropyLoss()
        model.train()
        for _ in range(_TRAIN_STEPS):
            optimizer.zero_grad()
            logits = model(input_tensor)[row_index, position_tensor]
            loss = loss_fn(logits, target_tensor)
            loss.backward()
            optimizer.step()
        model.eval()
        return cls(vocab, model, model_id=f"tiny-masked-lm-seed{seed}")

    def _encode(self, pieces: Sequence[str]) -> list[int]:
        return [self.vocab.get(piece, UNK_ID) for piece in pieces]

    def score_pieces(self, pieces: Sequence[str], mode: str) -> list[float]:
        """Pseudo-log-likelihood (or raw logit) of each piece in context."""
        if not pieces:
            raise EngineError("cannot score an empty sequence")
        if len(pieces) > _MAX_PIECES:
            raise EngineError(
                f"sequence has {len(pieces)} pieces; the limit is {_MAX_PIECES}"
            )
        ids = self._encode(pieces)
        length = len(ids)
        batch = torch.tensor(ids, dtype=torch.long).repeat(length, 1)
        index = torch.arange(length, dtype=torch.long)
        batch[index, index] = MASK_ID
        with torch.no_grad():
            logits = self.model(batch)[index, index]
            if mode == "logit":
                values = logits[index, torch.tensor(ids, dtype=torch.long)]
            else:
                values = logits.log_softmax(dim=-1)[
                    index, torch.tensor(ids, dtype=torch.long)
                ]
        return [float(v) for v in values]

    def score_tokens(self, tokens: Sequence[str], mode: str) -> list[float]:
        """Score whitespace tokens, summing piece scores per token."""
        owners: list[int] = []
        pieces: list[str] = []
        for position, token in enumerate(tokens):
            token_split = token_pieces(token)
            if not token_split:
                raise EngineError(f"token {position} is empty")
            owners.extend([position] * len(token_split))
            pieces.extend(token_split)
        piece_scores = self.score_pieces(pieces, mode)
        summed = [0.0] * len(tokens)
        for owner, score in zip(owners, piece_scores):
            summed[owner] += score
        return summed

    def fine_tune(self, examples: Sequence[TrainingExample], learning_rate: float) -> None:
        """One gradient step raising the probability of each pseudo answer.

        The caller holds the writer lock; this method only mutates weights.
        """
        if not examples:
            raise EngineError("cannot fine-tune on an empty batch")
        width = 0
        rows: list[list[int]] = []
        positions: list[int] = []
        targets: list[int] = []
        for example in examples:
            pieces = [
                piece
                for token in example.cloze_tokens
                for piece in token_pieces(token)
            ]
            if len(pieces) > _MAX_PIECES:
                raise EngineError(
                    f"cloze has {len(pieces)} pieces; the limit is {_MAX_PIECES}"
                )
            try:
                mask_position = pieces.index(MASK_TOKEN)
            except ValueError:
                raise EngineError("cloze has no mask piece") from None
            answer_pieces = token_pieces(example.answer.split()[0])
            rows.append(self._encode(pieces))
            positions.append(mask_position)
            targets.append(self.vocab.get(answer_pieces[0], UNK_ID))
            width = max(width, len(pieces))
        padded = [row + [PAD_ID] * (width - len(row)) for row in rows]
        input_tensor = torch.tensor(padded, dtype=torch.long)
        position_tensor = torch.tensor(positions, dtype=torch.long)
        target_tensor = torch.tensor(targets, dtype=torch.long)
        row_index = torch.arange(len(rows), dtype=torch.long)

        optimizer = torch.optim.SGD(self.model.parameters(), lr=learning_rate)
        loss_fn = nn.CrossEntropyLoss()
        self.model.train()
        optimizer.zero_grad()
        logits = self.model(input_tensor)[row_index, position_tensor]
        loss = loss_fn(logits, target_tensor)
        loss.backward()
        optimizer.step()
        self.model.eval()


@lru_cache(maxsize=1)
def default_engine() -> ScoringEngine:
    """The process-wide engine; training runs once on first use."""
    return ScoringEngine.train_from_corpus(training_sentences(), seed=13)
