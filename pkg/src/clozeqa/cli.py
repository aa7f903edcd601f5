"""Command-line pipeline driver.

Subcommands chain the pipeline stages over plain files: ``translate``
writes per-translator cloze files, ``score`` turns clozes into candidate
predictions, ``pseudolabel`` ensembles predictions into training records,
``evaluate`` reports accuracy, and ``sample-fewshot`` draws seeded
training subsets.  A key=value config file with [run] and [paths]
sections supplies defaults; command-line flags override it.

Exit codes: 0 success, 2 usage or config error, 3 transport error,
4 data-validation error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .datasets import DEFAULT_SPLIT_SEED, accuracy, load_commonsenseqa, sample_fewshot
from .edit_tags import apply_tags, load_tag_file
from .ensembling import ensemble, make_pseudo_records, submit_training, write_records
from .errors import (
    ClozeError,
    ConfigError,
    DataValidationError,
    TagApplicationError,
    TransportError,
    UntranslatableError,
)
from .rewrite import ClozeQuestion, WhReplacementTable, transform
from .scoring import (
    AGGREGATION_MODES,
    Prediction,
    ScoreConfig,
    read_predictions,
    score_candidates,
    scorer_for_backend,
    write_predictions,
)
from .treebank import load_parse_table

CLI_TRANSLATORS = ("syntactic", "tagger", "seq2seq_remote", "unsup_remote")
_REMOTE_METHODS = {"seq2seq_remote": "sup_seq2seq", "unsup_remote": "unsup_seq2seq"}
_BOOL_WORDS = {
    "1": True, "true": True, "yes": True, "on": True,
    "0": False, "false": False, "no": False, "off": False,
}


@dataclass(frozen=True)
class RunConfig:
    translators: tuple[str, ...] = ("syntactic",)
    backend: str = "mock"
    aggregation: str = "mean_log_prob"
    seed: int = DEFAULT_SPLIT_SEED
    out: str = "out"
    drop_aux: bool = False
    learning_rate: float = 1e-5
    steps: int = 2000
    train_endpoint: str | None = None
    paths: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.translators:
            raise ConfigError("translator set is empty")
        for name in self.translators:
            if name not in CLI_TRANSLATORS:
                raise ConfigError(
                    f"unknown translator {name!r}; choose from "
                    f"{', '.join(CLI_TRANSLATORS)}"
                )
        if self.backend != "mock" and not self.backend.startswith(
            ("http://", "https://")
        ):
            raise ConfigError(
                f"backend must be 'mock' or an http(s) URL: {self.backend!r}"
            )
        if self.aggregation not in AGGREGATION_MODES:
            raise ConfigError(
                f"aggregation must be one of {', '.join(AGGREGATION_MODES)}"
            )
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.steps <= 0:
            raise ConfigError("steps must be positive")
        if self.train_endpoint is not None and not self.train_endpoint.startswith(
            ("http://", "https://")
        ):
            raise ConfigError(
                f"train endpoint must be an http(s) URL: {self.train_endpoint!r}"
            )


def load_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    return {section: dict(parser.items(section)) for section in parser.sections()}


def _parse_bool(raw: str, key: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key} must be a boolean, got {raw!r}") from None


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    file_run: dict[str, str] = {}
    file_paths: dict[str, str] = {}
    if args.config:
        sections = load_config_file(args.config)
        file_run = sections.get("run", {})
        file_paths = sections.get("paths", {})
        known = {"run", "paths"}
        unknown = set(sections) - known
        if unknown:
            raise ConfigError(
                f"unknown config sections: {', '.join(sorted(unknown))}"
            )

    def pick(flag_value, key):
        if flag_value is not None:
            return flag_value
        return file_run.get(key)

    translators = pick(args.translators, "translators")
    if translators is None:
        translators = "syntactic"
    if isinstance(translators, str):
        translators = tuple(t.strip() for t in translators.split(",") if t.strip())

    seed = pick(args.seed, "seed")
    if isinstance(seed, str):
        seed = _parse_int(seed, "seed")
    drop_aux = pick(getattr(args, "drop_aux", None), "drop_aux")
    if isinstance(drop_aux, str):
        drop_aux = _parse_bool(drop_aux, "drop_aux")
    learning_rate = pick(getattr(args, "learning_rate", None), "learning_rate")
    if isinstance(learning_rate, str):
        learning_rate = _parse_float(learning_rate, "learning_rate")
    steps = pick(getattr(args, "steps", None), "steps")
    if isinstance(steps, str):
        steps = _parse_int(steps, "steps")

    kwargs = dict(
        translators=tuple(translators),
        backend=pick(args.backend, "backend") or "mock",
        aggregation=pick(args.aggregation, "aggregation") or "mean_log_prob",
        out=pick(args.out, "out") or "out",
        paths=dict(file_paths),
        train_endpoint=pick(getattr(args, "train_endpoint", None), "train_endpoint"),
    )
    if seed is not None:
        kwargs["seed"] = seed
    if drop_aux is not None:
        kwargs["drop_aux"] = drop_aux
    if learning_rate is not None:
        kwargs["learning_rate"] = learning_rate
    if steps is not None:
        kwargs["steps"] = steps
    return RunConfig(**kwargs)


def _require_path(config: RunConfig, args: argparse.Namespace, key: str) -> Path:
    value = getattr(args, key, None) or config.paths.get(key)
    if not value:
        flag = key.replace("_", "-")
        raise ConfigError(
            f"no {key} file given: pass --{flag} or set [paths] {key}"
        )
    return Path(value)


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rows(path: Path, rows: Sequence[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in rows:
            handle.write(f"{key}\t{value}\n")


def _read_rows(path: Path) -> list[tuple[str, str]]:
    rows: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            key, sep, value = line.partition("\t")
            if not sep:
                raise DataValidationError(
                    "expected 'id<TAB>text'", line=lineno
                )
            rows.append((key, value))
    return rows


def _post_translate(
    session: requests.Session, backend: str, natural: str, method: str
) -> str:
    try:
        response = session.post(
            f"{backend.rstrip('/')}/v1/translate",
            json={"natural": natural, "method": method},
            timeout=120.0,
        )
    except requests.RequestException as exc:
        raise TransportError(f"translate request failed: {exc}") from exc
    if response.status_code != 200:
        raise TransportError(
            f"translate endpoint returned HTTP {response.status_code}"
        )
    body = response.json()
    if "cloze" not in body:
        raise TransportError("translate response lacks a cloze")
    return str(body["cloze"])


def cmd_translate(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config)
    table = WhReplacementTable.default()
    for translator in config.translators:
        rows: list[tuple[str, str]] = []
        skipped: list[tuple[str, str]] = []
        if translator == "syntactic":
            parses = load_parse_table(_require_path(config, args, "parses"))
            for key, tree in parses:
                try:
                    cloze = transform(
                        tree, table, drop_aux=config.drop_aux, source_id=key
                    )
                    rows.append((key, cloze.text))
                except UntranslatableError as exc:
                    skipped.append((key, str(exc)))
        elif translator == "tagger":
            questions = load_commonsenseqa(_require_path(config, args, "questions"))
            tags = load_tag_file(_require_path(config, args, "tags"))
            for instance in questions:
                if instance.id not in tags:
                    skipped.append((instance.id, "no tag sequence"))
                    continue
                try:
                    tokens = apply_tags(
                        instance.question.split(), tags[instance.id]
                    )
                    cloze = ClozeQuestion.from_text(
                        " ".join(tokens),
                        source_id=instance.id,
                        translator="tagger",
                    )
                    rows.append((instance.id, cloze.text))
                except (TagApplicationError, DataValidationError) as exc:
                    skipped.append((instance.id, str(exc)))
        else:
            if config.backend == "mock":
                raise ConfigError(
                    f"translator {translator!r} needs a service backend, "
                    "not 'mock'"
                )
            questions = load_commonsenseqa(_require_path(config, args, "questions"))
            session = requests.Session()
            for instance in questions:
                text = _post_translate(
                    session,
                    config.backend,
                    instance.question,
                    _REMOTE_METHODS[translator],
                )
                try:
                    cloze = ClozeQuestion.from_text(
                        text, source_id=instance.id, translator=translator
                    )
                    rows.append((instance.id, cloze.text))
                except DataValidationError as exc:
                    skipped.append((instance.id, str(exc)))
        cloze_path = out / f"{translator}.cloze.tsv"
        _write_rows(cloze_path, rows)
        _write_rows(out / f"{translator}.skipped", skipped)
        print(f"{translator}: {len(rows)} clozes, {len(skipped)} skipped -> {cloze_path}")
    return 0


def cmd_score(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config)
    instances = {
        i.id: i for i in load_commonsenseqa(_require_path(config, args, "questions"))
    }
    score_config = ScoreConfig(aggregation=config.aggregation)
    scorer = scorer_for_backend(config.backend, score_config)
    for translator in config.translators:
        cloze_path = out / f"{translator}.cloze.tsv"
        if not cloze_path.exists():
            raise ConfigError(
                f"{cloze_path} does not exist; run translate first"
            )
        predictions = []
        for key, text in _read_rows(cloze_path):
            instance = instances.get(key)
            if instance is None:
                raise DataValidationError(
                    f"cloze {key!r} has no matching question"
                )
            cloze = ClozeQuestion.from_text(
                text, source_id=key, translator=translator
            )
            predictions.append(
                score_candidates(instance, cloze, scorer, score_config)
            )
        prediction_path = out / f"{translator}.predictions.jsonl"
        write_predictions(prediction_path, predictions)
        print(f"{translator}: {len(predictions)} predictions -> {prediction_path}")
    return 0


def _load_stage_outputs(
    config: RunConfig, out: Path
) -> tuple[dict[str, dict[str, ClozeQuestion]], dict[str, dict[str, Prediction]]]:
    clozes: dict[str, dict[str, ClozeQuestion]] = {}
    predictions: dict[str, dict[str, Prediction]] = {}
    for translator in config.translators:
        cloze_path = out / f"{translator}.cloze.tsv"
        prediction_path = out / f"{translator}.predictions.jsonl"
        for path in (cloze_path, prediction_path):
            if not path.exists():
                raise ConfigError(
                    f"{path} does not exist; run translate and score first"
                )
        clozes[translator] = {
            key: ClozeQuestion.from_text(
                text, source_id=key, translator=translator
            )
            for key, text in _read_rows(cloze_path)
        }
        predictions[translator] = {
            p.id: p for p in read_predictions(prediction_path)
        }
    return clozes, predictions


def cmd_pseudolabel(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config)
    instances = load_commonsenseqa(_require_path(config, args, "questions"))
    clozes, predictions = _load_stage_outputs(config, out)
    records = []
    labeled = 0
    for instance in instances:
        instance_preds = []
        instance_clozes = []
        for translator in config.translators:
            prediction = predictions[translator].get(instance.id)
            cloze = clozes[translator].get(instance.id)
            if prediction is not None and cloze is not None:
                instance_preds.append(prediction)
                instance_clozes.append(cloze)
        if not instance_preds:
            continue
        result = ensemble(instance_preds)
        records.extend(make_pseudo_records(instance, instance_clozes, result))
        labeled += 1
    record_path = out / "pseudo_labels.jsonl"
    write_records(record_path, records)
    print(
        f"pseudo-labeled {labeled} questions "
        f"({len(records)} records) -> {record_path}"
    )
    if config.train_endpoint:
        ack = submit_training(
            records,
            config.train_endpoint,
            learning_rate=config.learning_rate,
            steps=config.steps,
        )
        print(f"training: accepted {ack.accepted} records, step {ack.step}")
    return 0


def cmd_evaluate(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config)
    instances = load_commonsenseqa(_require_path(config, args, "questions"))
    by_id = {i.id: i for i in instances}
    _, predictions = _load_stage_outputs(config, out)
    report: dict = {"per_translator": {}}
    for translator in config.translators:
        preds = list(predictions[translator].values())
        report["per_translator"][translator] = accuracy(preds, by_id)
    correct = 0
    covered = 0
    for instance in instances:
        instance_preds = [
            predictions[t][instance.id]
            for t in config.translators
            if instance.id in predictions[t]
        ]
        if not instance_preds:
            continue
        if instance.gold is None:
            raise DataValidationError(
                f"instance {instance.id!r} has no gold label"
            )
        covered += 1
        if ensemble(instance_preds).pseudo_label == instance.gold:
            correct += 1
    if covered == 0:
        raise DataValidationError("no questions have predictions")
    report["ensemble"] = correct / covered
    report["questions"] = covered
    rendered = json.dumps(report, indent=2, sort_keys=True)
    (out / "accuracy.json").write_text(rendered + "\n", encoding="utf-8")
    print(rendered)
    return 0


def cmd_sample_fewshot(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config)
    instances = load_commonsenseqa(_require_path(config, args, "questions"))
    sampled = sample_fewshot(instances, args.k, seed=config.seed)
    path = out / "fewshot_ids.txt"
    with open(path, "w", encoding="utf-8") as handle:
        for instance in sampled:
            handle.write(instance.id + "\n")
    print(f"sampled {len(sampled)} ids (seed {config.seed}) -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file with [run]/[paths] sections")
    common.add_argument("--translators", help="comma-separated translator names")
    common.add_argument("--backend", help="'mock' or a scoring service base URL")
    common.add_argument("--aggregation", help="mean_log_prob or mean_logit")
    common.add_argument("--seed", type=int, help="seed for sampling")
    common.add_argument("--out", help="output directory")
    common.add_argument(
        "--drop-aux",
        dest="drop_aux",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="drop a stranded auxiliary after question-word movement",
    )
    common.add_argument("--questions", help="question JSONL file")

    parser = argparse.ArgumentParser(
        prog="clozeqa",
        description="Translate questions to cloze statements, score "
        "candidates, and ensemble predictions into pseudo-labels.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    translate = commands.add_parser(
        "translate", parents=[common], help="write per-translator cloze files"
    )
    translate.add_argument("--parses", help="id TAB bracketed-parse file")
    translate.add_argument("--tags", help="id TAB edit-tag file")
    translate.set_defaults(handler=cmd_translate)

    score = commands.add_parser(
        "score", parents=[common], help="score candidates for each cloze"
    )
    score.set_defaults(handler=cmd_score)

    pseudolabel = commands.add_parser(
        "pseudolabel", parents=[common],
        help="ensemble predictions into pseudo-label records",
    )
    pseudolabel.add_argument(
        "--train-endpoint", dest="train_endpoint",
        help="service base URL to submit training records to",
    )
    pseudolabel.add_argument(
        "--learning-rate", dest="learning_rate", type=float,
        help="fine-tuning learning rate passed to the service",
    )
    pseudolabel.add_argument(
        "--steps", type=int, help="fine-tuning step count passed to the service"
    )
    pseudolabel.set_defaults(handler=cmd_pseudolabel)

    evaluate = commands.add_parser(
        "evaluate", parents=[common],
        help="report per-translator and ensemble accuracy",
    )
    evaluate.set_defaults(handler=cmd_evaluate)

    fewshot = commands.add_parser(
        "sample-fewshot", parents=[common],
        help="draw a seeded sample of question ids",
    )
    fewshot.add_argument("--k", type=int, required=True, help="sample size")
    fewshot.set_defaults(handler=cmd_sample_fewshot)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        return args.handler(config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except ClozeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
