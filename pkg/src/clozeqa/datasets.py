"""Dataset ingestion, splits, few-shot sampling, and accuracy.

Question files are line-delimited JSON in the published multiple-choice
layout (question.stem, question.choices with letter labels, answerKey).
Pair corpora are two-column TSV.  Split membership is reproducible from a
seed and exportable to a manifest file.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DataValidationError
from .rewrite import MASK
from .scoring import Prediction, QAInstance

PUBLISHED_TRAIN_SIZE = 9741
PUBLISHED_DEV_SIZE = 1221
TRAIN_SPLIT_SIZE = 8500
TEST_SPLIT_SIZE = 1241
DEFAULT_SPLIT_SEED = 13

_LABELS = "ABCDE"


@dataclass(frozen=True)
class Split:
    train: tuple[QAInstance, ...]
    dev: tuple[QAInstance, ...]
    test: tuple[QAInstance, ...]
    seed: int

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for part in (self.train, self.dev, self.test):
            for instance in part:
                if instance.id in seen:
                    raise DataValidationError(
                        f"instance {instance.id!r} appears in two partitions"
                    )
                seen.add(instance.id)


@dataclass(frozen=True)
class ClozePair:
    natural: str
    cloze: str

    def __post_init__(self) -> None:
        if not self.natural.strip():
            raise DataValidationError("natural sentence is empty")
        count = self.cloze.count(MASK)
        if count != 1:
            raise DataValidationError(
                f"cloze must contain exactly one {MASK}, found {count}"
            )


def _instance_from_line(raw: dict, lineno: int) -> QAInstance:
    try:
        question = raw["question"]
        stem = question["stem"]
        choices = question["choices"]
    except (KeyError, TypeError) as exc:
        raise DataValidationError(
            f"missing question field: {exc}", line=lineno
        ) from exc
    if not isinstance(choices, list) or not choices:
        raise DataValidationError("choices must be a non-empty list", line=lineno)
    by_label: dict[str, str] = {}
    for choice in choices:
        try:
            label = choice["label"]
            text = choice["text"]
        except (KeyError, TypeError) as exc:
            raise DataValidationError(
                f"malformed choice: {exc}", line=lineno
            ) from exc
        if label in by_label:
            raise DataValidationError(
                f"duplicate choice label {label!r}", line=lineno
            )
        if label not in _LABELS:
            raise DataValidationError(
                f"unknown choice label {label!r}", line=lineno
            )
        by_label[label] = text
    labels = _LABELS[: len(by_label)]
    if set(by_label) != set(labels):
        raise DataValidationError(
            f"choice labels {sorted(by_label)} must run A..{labels[-1]}",
            line=lineno,
        )
    gold = None
    if "answerKey" in raw and raw["answerKey"] is not None:
        key = raw["answerKey"]
        if key not in by_label:
            raise DataValidationError(
                f"answerKey {key!r} not among choice labels", line=lineno
            )
        gold = labels.index(key)
    try:
        return QAInstance(
            id=str(raw["id"]),
            question=stem,
            candidates=tuple(by_label[label] for label in labels),
            context=raw.get("context"),
            gold=gold,
        )
    except KeyError as exc:
        raise DataValidationError(f"missing field: {exc}", line=lineno) from exc
    except DataValidationError as exc:
        raise DataValidationError(str(exc), line=lineno) from exc


def load_commonsenseqa(path: str | Path) -> list[QAInstance]:
    """Load a JSONL question file; candidate order follows choice labels."""
    instances: list[QAInstance] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataValidationError(
                    f"malformed JSON: {exc}", line=lineno
                ) from exc
            instances.append(_instance_from_line(raw, lineno))
    return instances


def split_csqa(
    train_instances: Sequence[QAInstance],
    dev_instances: Sequence[QAInstance],
    seed: int = DEFAULT_SPLIT_SEED,
) -> Split:
    """Carve the published train set into train/test; dev passes through.

    The published split membership is not distributed, so a seeded shuffle
    stands in for it; the manifest writer makes a run reproducible.
    """
    if len(train_instances) != PUBLISHED_TRAIN_SIZE:
        raise DataValidationError(
            f"expected the {PUBLISHED_TRAIN_SIZE}-instance published train "
            f"set, got {len(train_instances)}"
        )
    if len(dev_instances) != PUBLISHED_DEV_SIZE:
        raise DataValidationError(
            f"expected the {PUBLISHED_DEV_SIZE}-instance published dev set, "
            f"got {len(dev_instances)}"
        )
    shuffled = list(train_instances)
    random.Random(seed).shuffle(shuffled)
    return Split(
        train=tuple(shuffled[:TRAIN_SPLIT_SIZE]),
        dev=tuple(dev_instances),
        test=tuple(shuffled[TRAIN_SPLIT_SIZE:]),
        seed=seed,
    )


def sample_fewshot(
    train: Sequence[QAInstance], k: int, seed: int
) -> list[QAInstance]:
    """Uniform sample of k instances without replacement."""
    if k < 0:
        raise DataValidationError("sample size must be non-negative")
    if k > len(train):
        raise DataValidationError(
            f"cannot sample {k} from {len(train)} instances"
        )
    return random.Random(seed).sample(list(train), k)


def accuracy(
    predictions: Sequence[Prediction],
    gold_instances: Sequence[QAInstance] | Mapping[str, QAInstance],
) -> float:
    """Fraction of predictions whose argmax matches the gold index."""
    if not predictions:
        raise DataValidationError("no predictions to evaluate")
    if isinstance(gold_instances, Mapping):
        by_id = dict(gold_instances)
    else:
        by_id = {instance.id: instance for instance in gold_instances}
    correct = 0
    for prediction in predictions:
        instance = by_id.get(prediction.id)
        if instance is None:
            raise DataValidationError(
                f"prediction {prediction.id!r} has no gold instance"
            )
        if instance.gold is None:
            raise DataValidationError(
                f"instance {prediction.id!r} has no gold label"
            )
        if prediction.argmax == instance.gold:
            correct += 1
    return correct / len(predictions)


def load_cloze_pairs(path: str | Path) -> list[ClozePair]:
    """Load a natural-TAB-cloze pair corpus."""
    pairs: list[ClozePair] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            columns = line.split("\t")
            if len(columns) != 2:
                raise DataValidationError(
                    f"expected 2 tab-separated columns, got {len(columns)}",
                    line=lineno,
                )
            try:
                pairs.append(ClozePair(natural=columns[0], cloze=columns[1]))
            except DataValidationError as exc:
                raise DataValidationError(str(exc), line=lineno) from exc
    return pairs


def write_manifest(path: str | Path, split: Split) -> None:
    """Persist split membership as ids under [train]/[dev]/[test] headers."""
    with open(path, "w", encoding="utf-8") as handle:
        for name, part in (
            ("train", split.train),
            ("dev", split.dev),
            ("test", split.test),
        ):
            handle.write(f"[{name}]\n")
            for instance in part:
                handle.write(instance.id + "\n")


def read_manifest(path: str | Path) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {"train": [], "dev": [], "test": []}
    current: list[str] | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1]
                if name not in sections:
                    raise DataValidationError(
                        f"unknown manifest section {name!r}", line=lineno
                    )
                current = sections[name]
                continue
            if current is None:
                raise DataValidationError(
                    "id before any section header", line=lineno
                )
            current.append(line)
    return sections
