"""Combine predictions across translations, extract pseudo-labels, and
export training records for the fine-tuning service.

Probabilities are summed elementwise over the translations of one
instance; the argmax of the sums is the pseudo-label.  The same
arithmetic serves for combining predictions of different models.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import requests

from .errors import DataValidationError, StructuralError, TransportError
from .rewrite import MASK, ClozeQuestion
from .scoring import Prediction, QAInstance, argmax_lowest


@dataclass(frozen=True)
class EnsembleResult:
    id: str
    summed_probs: tuple[float, ...]
    pseudo_label: int
    translation_count: int

    def __post_init__(self) -> None:
        total = math.fsum(self.summed_probs)
        if abs(total - self.translation_count) > 1e-9:
            raise DataValidationError(
                f"summed probabilities total {total}, expected {self.translation_count}"
            )
        if self.pseudo_label != argmax_lowest(self.summed_probs):
            raise DataValidationError("pseudo-label inconsistent with summed probs")


def _combine(predictions: Sequence[Prediction], axis: str) -> EnsembleResult:
    if not predictions:
        raise StructuralError(f"cannot ensemble zero predictions over {axis}")
    first = predictions[0]
    width = len(first.probs)
    for prediction in predictions[1:]:
        if prediction.id != first.id:
            raise StructuralError(
                f"mixed instances in one ensemble: {first.id!r} vs {prediction.id!r}"
            )
        if len(prediction.probs) != width:
            raise StructuralError(
                f"candidate count mismatch for {first.id!r}: "
                f"{width} vs {len(prediction.probs)}"
            )
    sums = tuple(
        math.fsum(prediction.probs[i] for prediction in predictions)
        for i in range(width)
    )
    return EnsembleResult(
        id=first.id,
        summed_probs=sums,
        pseudo_label=argmax_lowest(sums),
        translation_count=len(predictions),
    )


def ensemble(predictions: Sequence[Prediction]) -> EnsembleResult:
    """Sum probabilities over the translations of one instance."""
    return _combine(predictions, axis="translations")


def ensemble_models(predictions: Sequence[Prediction]) -> EnsembleResult:
    """Sum probabilities over different models of one instance."""
    return _combine(predictions, axis="models")


@dataclass(frozen=True)
class PseudoLabelRecord:
    """Training record pairing one cloze translation with the ensembled
    pseudo-label.  Deliberately has no field for a gold label."""

    id: str
    cloze_tokens: tuple[str, ...]
    mask_index: int
    candidates: tuple[str, ...]
    pseudo_label: int
    translator: str

    def __post_init__(self) -> None:
        if not 0 <= self.pseudo_label < len(self.candidates):
            raise DataValidationError(
                f"pseudo-label {self.pseudo_label} out of range for {self.id!r}"
            )
        masked = [tok for tok in self.cloze_tokens if MASK in tok]
        if len(masked) != 1:
            raise DataValidationError(
                f"record {self.id!r} must contain exactly one mask token"
            )
        if MASK not in self.cloze_tokens[self.mask_index]:
            raise DataValidationError(
                f"record {self.id!r} mask_index does not point at the mask"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "cloze_tokens": list(self.cloze_tokens),
                "mask_index": self.mask_index,
                "candidates": list(self.candidates),
                "pseudo_label": self.pseudo_label,
                "translator": self.translator,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "PseudoLabelRecord":
        try:
            raw = json.loads(line)
            return cls(
                id=raw["id"],
                cloze_tokens=tuple(raw["cloze_tokens"]),
                mask_index=int(raw["mask_index"]),
                candidates=tuple(raw["candidates"]),
                pseudo_label=int(raw["pseudo_label"]),
                translator=raw["translator"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataValidationError(f"bad pseudo-label record: {exc}") from exc


def make_pseudo_records(
    instance: QAInstance,
    clozes: Sequence[ClozeQuestion],
    result: EnsembleResult,
) -> list[PseudoLabelRecord]:
    """One record per translation, all carrying the shared pseudo-label."""
    if instance.id != result.id:
        raise StructuralError(
            f"ensemble for {result.id!r} paired with instance {instance.id!r}"
        )
    if len(clozes) != result.translation_count:
        raise StructuralError(
            f"{len(clozes)} clozes for an ensemble of {result.translation_count}"
        )
    return [
        PseudoLabelRecord(
            id=instance.id,
            cloze_tokens=cloze.tokens,
            mask_index=cloze.mask_index,
            candidates=instance.candidates,
            pseudo_label=result.pseudo_label,
            translator=cloze.translator,
        )
        for cloze in clozes
    ]


def write_records(path: str | Path, records: Sequence[PseudoLabelRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record.to_json() + "\n")


def read_records(path: str | Path) -> list[PseudoLabelRecord]:
    out: list[PseudoLabelRecord] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                out.append(PseudoLabelRecord.from_json(line))
    return out


@dataclass(frozen=True)
class TrainAck:
    accepted: int
    step: int


def batch_id_for(records: Sequence[PseudoLabelRecord], index: int) -> str:
    """Deterministic batch identity so re-submissions are deduplicated."""
    digest = hashlib.sha256()
    digest.update(str(index).encode("utf-8"))
    for record in records:
        digest.update(record.to_json().encode("utf-8"))
    return digest.hexdigest()[:16]


def submit_training(
    records: Sequence[PseudoLabelRecord],
    endpoint: str,
    learning_rate: float = 1e-5,
    steps: int = 2000,
    batch_size: int = 32,
    timeout: float = 300.0,
) -> TrainAck:
    """Post records to the training endpoint in atomic batches."""
    if batch_size < 1:
        raise DataValidationError("batch_size must be positive")
    base = endpoint.rstrip("/")
    session = requests.Session()
    accepted = 0
    step = 0
    for index in range(0, len(records), batch_size):
        batch = records[index : index + batch_size]
        payload = {
            "batch_id": batch_id_for(batch, index // batch_size),
            "records": [json.loads(r.to_json()) for r in batch],
            "hyperparameters": {"learning_rate": learning_rate, "steps": steps},
        }
        try:
            response = session.post(
                f"{base}/v1/train", json=payload, timeout=timeout
            )
        except requests.RequestException as exc:
            raise TransportError(
                f"train submission failed: {exc}", batch_index=index // batch_size
            ) from exc
        if response.status_code != 200:
            raise TransportError(
                f"train endpoint returned HTTP {response.status_code}",
                batch_index=index // batch_size,
            )
        body = response.json()
        accepted += int(body.get("accepted", 0))
        step = int(body.get("step", step))
    return TrainAck(accepted=accepted, step=step)
