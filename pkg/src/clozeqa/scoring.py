"""Candidate-answer scoring over cloze sentences.

Each candidate is substituted into the mask, the sentence is handed to a
per-token scorer backend, and the per-token scores are averaged into one
sentence score.  Softmax over the per-candidate scores gives prediction
probabilities.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .errors import DataValidationError, StructuralError, TransportError
from .rewrite import MASK, ClozeQuestion

AGGREGATION_MODES = ("mean_log_prob", "mean_logit")

# Wire-format score modes for the remote backend, keyed by aggregation.
_REMOTE_MODES = {"mean_log_prob": "logprob", "mean_logit": "logit"}


@dataclass(frozen=True)
class QAInstance:
    """One multiple-choice question with its ordered candidate answers."""

    id: str
    question: str
    candidates: tuple[str, ...]
    context: str | None = None
    gold: int | None = None

    def __post_init__(self) -> None:
        if len(self.candidates) < 2:
            raise DataValidationError(f"instance {self.id!r} needs >=2 candidates")
        if any(not c.strip() for c in self.candidates):
            raise DataValidationError(f"instance {self.id!r} has an empty candidate")
        if self.gold is not None and not 0 <= self.gold < len(self.candidates):
            raise DataValidationError(
                f"instance {self.id!r} gold index {self.gold} out of range"
            )


@dataclass(frozen=True)
class ScoreConfig:
    aggregation: str = "mean_log_prob"

    def __post_init__(self) -> None:
        if self.aggregation not in AGGREGATION_MODES:
            raise DataValidationError(
                f"aggregation must be one of {AGGREGATION_MODES}"
            )


class ScorerContract(Protocol):
    def score_tokens(self, tokens: Sequence[str]) -> list[float]:
        """One real-valued score per input token, deterministically."""


def _fnv1a64(data: bytes) -> int:
    value = 0xCBF29CE484222325
    for byte in data:
        value ^= byte
        value = (value * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return value


class MockScorer:
    """Deterministic hash-based backend for offline runs and tests.

    Scores land in [-1.5, -0.5), resembling per-token log-probabilities
    while depending only on the token text.
    """

    def score_tokens(self, tokens: Sequence[str]) -> list[float]:
        return [
            -(0.5 + (_fnv1a64(tok.encode("utf-8")) % 97) / 97) for tok in tokens
        ]


class RemoteScorer:
    """HTTP client for the scoring sidecar; bounded concurrent requests."""

    def __init__(
        self,
        base_url: str,
        mode: str = "logprob",
        max_in_flight: int = 8,
        timeout: float = 60.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.mode = mode
        self.timeout = timeout
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._session = requests.Session()

    def score_tokens(self, tokens: Sequence[str]) -> list[float]:
        payload = {"tokens": list(tokens), "mode": self.mode}
        with self._gate:
            try:
                response = self._session.post(
                    f"{self.base_url}/v1/score", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise TransportError(f"score request failed: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(
                f"score backend returned HTTP {response.status_code}"
            )
        scores = response.json().get("per_token_scores")
        if not isinstance(scores, list) or len(scores) != len(tokens):
            raise TransportError(
                "score backend broke the one-score-per-token contract"
            )
        return [float(s) for s in scores]


def scorer_for_backend(backend: str, config: ScoreConfig) -> ScorerContract:
    """Build a scorer from a backend name: "mock" or a service base URL."""
    if backend == "mock":
        return MockScorer()
    if backend.startswith(("http://", "https://")):
        return RemoteScorer(backend, mode=_REMOTE_MODES[config.aggregation])
    raise DataValidationError(f"backend must be 'mock' or an http(s) URL: {backend!r}")


def substitute(
    cloze: ClozeQuestion, answer: str, context: str | None = None
) -> list[str]:
    """Replace the mask with the whitespace-tokenized answer text.

    Punctuation glued to the mask token stays glued to the answer's edge
    tokens.  Context tokens, when given, precede the sentence.
    """
    answer_tokens = answer.split()
    if not answer_tokens:
        raise DataValidationError("answer text is empty")
    out: list[str] = []
    if context:
        out.extend(context.split())
    for position, token in enumerate(cloze.tokens):
        if position != cloze.mask_index:
            out.append(token)
            continue
        prefix, _, suffix = token.partition(MASK)
        filled = list(answer_tokens)
        filled[0] = prefix + filled[0]
        filled[-1] = filled[-1] + suffix
        out.extend(filled)
    return out


def score_sentence(
    tokens: Sequence[str], scorer: ScorerContract, config: ScoreConfig
) -> float:
    """Arithmetic mean of the per-token scores."""
    if not tokens:
        raise DataValidationError("cannot score an empty sentence")
    scores = scorer.score_tokens(list(tokens))
    if len(scores) != len(tokens):
        raise StructuralError(
            f"scorer returned {len(scores)} scores for {len(tokens)} tokens"
        )
    return math.fsum(scores) / len(scores)


def softmax(scores: Sequence[float]) -> list[float]:
    if not scores:
        raise DataValidationError("softmax over an empty score list")
    peak = max(scores)
    exps = [math.exp(s - peak) for s in scores]
    total = math.fsum(exps)
    return [e / total for e in exps]


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the maximum; ties resolve to the lowest index."""
    best = max(values)
    return next(i for i, v in enumerate(values) if v == best)


@dataclass(frozen=True)
class Prediction:
    id: str
    translator: str
    scores: tuple[float, ...]
    probs: tuple[float, ...]
    argmax: int

    def __post_init__(self) -> None:
        if len(self.scores) != len(self.probs):
            raise DataValidationError("scores and probs must be parallel")
        if abs(math.fsum(self.probs) - 1.0) > 1e-9:
            raise DataValidationError("probabilities must sum to 1")
        if self.argmax != argmax_lowest(self.probs):
            raise DataValidationError("argmax inconsistent with probabilities")

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "translator": self.translator,
                "scores": list(self.scores),
                "probs": list(self.probs),
                "argmax": self.argmax,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "Prediction":
        try:
            raw = json.loads(line)
            return cls(
                id=raw["id"],
                translator=raw["translator"],
                scores=tuple(float(s) for s in raw["scores"]),
                probs=tuple(float(p) for p in raw["probs"]),
                argmax=int(raw["argmax"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataValidationError(f"bad prediction record: {exc}") from exc


def score_candidates(
    instance: QAInstance,
    cloze: ClozeQuestion,
    scorer: ScorerContract,
    config: ScoreConfig,
) -> Prediction:
    if cloze.source_id and cloze.source_id != instance.id:
        raise StructuralError(
            f"cloze for {cloze.source_id!r} scored against {instance.id!r}"
        )
    scores: list[float] = []
    for candidate in instance.candidates:
        tokens = substitute(cloze, candidate, instance.context)
        try:
            scores.append(score_sentence(tokens, scorer, config))
        except TransportError as exc:
            raise TransportError(str(exc), instance_id=instance.id) from exc
    probs = softmax(scores)
    return Prediction(
        id=instance.id,
        translator=cloze.translator,
        scores=tuple(scores),
        probs=tuple(probs),
        argmax=argmax_lowest(probs),
    )


def write_predictions(path: str | Path, predictions: Sequence[Prediction]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for prediction in predictions:
            handle.write(prediction.to_json() + "\n")


def read_predictions(path: str | Path) -> list[Prediction]:
    out: list[Prediction] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                out.append(Prediction.from_json(line))
    return out
