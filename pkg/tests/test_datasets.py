"""Tests for dataset loading, splitting, sampling, accuracy, and the
split manifest."""

from __future__ import annotations

import json

import pytest

from clozeqa.datasets import (
    DEFAULT_SPLIT_SEED,
    PUBLISHED_DEV_SIZE,
    PUBLISHED_TRAIN_SIZE,
    ClozePair,
    Split,
    accuracy,
    load_cloze_pairs,
    load_commonsenseqa,
    read_manifest,
    sample_fewshot,
    split_csqa,
    write_manifest,
)
from clozeqa.errors import DataValidationError
from clozeqa.scoring import Prediction, QAInstance

FIVE_CHOICES = [
    {"label": "A", "text": "park"},
    {"label": "B", "text": "school"},
    {"label": "C", "text": "office"},
    {"label": "D", "text": "moon"},
    {"label": "E", "text": "sea"},
]


def write_jsonl(path, objects):
    with open(path, "w", encoding="utf-8") as handle:
        for obj in objects:
            handle.write(json.dumps(obj) + "\n")


def question_line(qid="q1", stem="Where do people go?", choices=None, **extra):
    line = {"id": qid, "question": {"stem": stem, "choices": choices or FIVE_CHOICES}}
    line.update(extra)
    return line


def synth_instances(count, prefix="tr"):
    return [
        QAInstance(
            id=f"{prefix}{i}",
            question=f"Question {i}?",
            candidates=("a", "b", "c", "d", "e"),
            gold=i % 5,
        )
        for i in range(count)
    ]


def onehot_prediction(pid, argmax, width=5):
    probs = [0.0] * width
    probs[argmax] = 1.0
    return Prediction(
        id=pid,
        translator="syntactic",
        scores=tuple([-1.0] * width),
        probs=tuple(probs),
        argmax=argmax,
    )


class TestLoadQuestions:
    def test_answer_key_maps_to_gold_index(self, tmp_path):
        path = tmp_path / "q.jsonl"
        write_jsonl(path, [question_line(answerKey="C")])
        [instance] = load_commonsenseqa(path)
        assert instance.id == "q1"
        assert instance.question == "Where do people go?"
        assert instance.candidates == ("park", "school", "office", "moon", "sea")
        assert instance.gold == 2

    def test_missing_answer_key_means_no_gold(self, tmp_path):
        path = tmp_path / "q.jsonl"
        write_jsonl(path, [question_line()])
        [instance] = load_commonsenseqa(path)
        assert instance.gold is None

    def test_candidates_follow_label_order_not_file_order(self, tmp_path):
        path = tmp_path / "q.jsonl"
        choices = [
            {"label": "B", "text": "bread"},
            {"label": "A", "text": "sun"},
        ]
        write_jsonl(path, [question_line(choices=choices, answerKey="B")])
        [instance] = load_commonsenseqa(path)
        assert instance.candidates == ("sun", "bread")
        assert instance.gold == 1

    def test_context_field_is_kept(self, tmp_path):
        path = tmp_path / "q.jsonl"
        write_jsonl(path, [question_line(context="It was raining .")])
        [instance] = load_commonsenseqa(path)
        assert instance.context == "It was raining ."

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "q.jsonl"
        path.write_text(
            json.dumps(question_line()) + "\n\n"
            + json.dumps(question_line(qid="q2")) + "\n",
            encoding="utf-8",
        )
        assert [i.id for i in load_commonsenseqa(path)] == ["q1", "q2"]

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "q.jsonl"
        path.write_text(
            json.dumps(question_line()) + "\n{not json\n", encoding="utf-8"
        )
        with pytest.raises(DataValidationError) as err:
            load_commonsenseqa(path)
        assert err.value.line == 2

    def test_missing_stem_reports_line(self, tmp_path):
        path = tmp_path / "q.jsonl"
        write_jsonl(path, [{"id": "q1", "question": {"choices": FIVE_CHOICES}}])
        with pytest.raises(DataValidationError) as err:
            load_commonsenseqa(path)
        assert err.value.line == 1

    def test_unknown_choice_label_rejected(self, tmp_path):
        path = tmp_path / "q.jsonl"
        choices = [{"label": "A", "text": "x"}, {"label": "F", "text": "y"}]
        write_jsonl(path, [question_line(choices=choices)])
        with pytest.raises(DataValidationError):
            load_commonsenseqa(path)

    def test_gapped_labels_rejected(self, tmp_path):
        path = tmp_path / "q.jsonl"
        choices = [{"label": "A", "text": "x"}, {"label": "C", "text": "y"}]
        write_jsonl(path, [question_line(choices=choices)])
        with pytest.raises(DataValidationError):
            load_commonsenseqa(path)

    def test_duplicate_labels_rejected(self, tmp_path):
        path = tmp_path / "q.jsonl"
        choices = [{"label": "A", "text": "x"}, {"label": "A", "text": "y"}]
        write_jsonl(path, [question_line(choices=choices)])
        with pytest.raises(DataValidationError):
            load_commonsenseqa(path)

    def test_answer_key_outside_labels_rejected(self, tmp_path):
        path = tmp_path / "q.jsonl"
        write_jsonl(path, [question_line(answerKey="Z")])
        with pytest.raises(DataValidationError) as err:
            load_commonsenseqa(path)
        assert err.value.line == 1


@pytest.fixture(scope="module")
def published():
    return (
        synth_instances(PUBLISHED_TRAIN_SIZE, "tr"),
        synth_instances(PUBLISHED_DEV_SIZE, "dv"),
    )


class TestSplit:
    def test_sizes(self, published):
        train, dev = published
        split = split_csqa(train, dev, seed=DEFAULT_SPLIT_SEED)
        assert len(split.train) == 8500
        assert len(split.dev) == 1221
        assert len(split.test) == 1241

    def test_dev_passes_through_verbatim(self, published):
        train, dev = published
        split = split_csqa(train, dev)
        assert split.dev == tuple(dev)

    def test_partitions_disjoint_and_complete(self, published):
        train, dev = published
        split = split_csqa(train, dev)
        train_ids = {i.id for i in split.train}
        test_ids = {i.id for i in split.test}
        assert not train_ids & test_ids
        assert train_ids | test_ids == {i.id for i in train}

    def test_same_seed_same_membership(self, published):
        train, dev = published
        a = split_csqa(train, dev, seed=13)
        b = split_csqa(train, dev, seed=13)
        assert [i.id for i in a.train] == [i.id for i in b.train]
        assert [i.id for i in a.test] == [i.id for i in b.test]

    def test_seed_13_membership_frozen(self, published):
        # Guards the shuffle contract: same seed must keep producing the
        # same membership across releases.
        train, dev = published
        split = split_csqa(train, dev, seed=13)
        assert [i.id for i in split.train[:5]] == [
            "tr3448", "tr435", "tr7260", "tr4780", "tr4153",
        ]
        assert [i.id for i in split.test[:5]] == [
            "tr4577", "tr2021", "tr1882", "tr8284", "tr3425",
        ]

    def test_different_seed_different_membership_same_sizes(self, published):
        train, dev = published
        a = split_csqa(train, dev, seed=13)
        b = split_csqa(train, dev, seed=14)
        assert [i.id for i in a.train] != [i.id for i in b.train]
        assert len(b.train) == 8500 and len(b.test) == 1241

    def test_wrong_train_size_names_expected_count(self, published):
        train, dev = published
        with pytest.raises(DataValidationError, match="9741"):
            split_csqa(train[:100], dev)

    def test_wrong_dev_size_names_expected_count(self, published):
        train, dev = published
        with pytest.raises(DataValidationError, match="1221"):
            split_csqa(train, dev[:5])

    def test_overlapping_partitions_rejected(self):
        instance = synth_instances(1)[0]
        with pytest.raises(DataValidationError):
            Split(train=(instance,), dev=(instance,), test=(), seed=1)


class TestFewshot:
    TRAIN = synth_instances(200)

    @pytest.mark.parametrize("k", [16, 32, 64, 128])
    def test_sample_sizes(self, k):
        sample = sample_fewshot(self.TRAIN, k, seed=1)
        assert len(sample) == k
        assert len({i.id for i in sample}) == k

    def test_zero_gives_empty(self):
        assert sample_fewshot(self.TRAIN, 0, seed=1) == []

    def test_deterministic_per_seed(self):
        assert sample_fewshot(self.TRAIN, 16, seed=1) == sample_fewshot(
            self.TRAIN, 16, seed=1
        )

    def test_seed_changes_sample(self):
        a = sample_fewshot(self.TRAIN, 16, seed=1)
        b = sample_fewshot(self.TRAIN, 16, seed=2)
        assert [i.id for i in a] != [i.id for i in b]

    def test_members_come_from_train(self):
        sample = sample_fewshot(self.TRAIN, 32, seed=3)
        pool = {i.id for i in self.TRAIN}
        assert all(i.id in pool for i in sample)

    def test_oversample_rejected(self):
        with pytest.raises(DataValidationError):
            sample_fewshot(self.TRAIN[:5], 10, seed=0)

    def test_negative_rejected(self):
        with pytest.raises(DataValidationError):
            sample_fewshot(self.TRAIN, -1, seed=0)


class TestAccuracy:
    GOLD = synth_instances(4, "g")

    def predictions(self, wrong_indices=()):
        out = []
        for i, instance in enumerate(self.GOLD):
            argmax = instance.gold
            if i in wrong_indices:
                argmax = (argmax + 1) % 5
            out.append(onehot_prediction(instance.id, argmax))
        return out

    def test_all_correct(self):
        assert accuracy(self.predictions(), self.GOLD) == 1.0

    def test_none_correct(self):
        assert accuracy(self.predictions({0, 1, 2, 3}), self.GOLD) == 0.0

    def test_three_of_four(self):
        assert accuracy(self.predictions({3}), self.GOLD) == 0.75

    def test_mapping_form_accepted(self):
        by_id = {i.id: i for i in self.GOLD}
        assert accuracy(self.predictions({3}), by_id) == 0.75

    def test_unknown_prediction_id_rejected(self):
        with pytest.raises(DataValidationError):
            accuracy([onehot_prediction("nope", 0)], self.GOLD)

    def test_missing_gold_rejected(self):
        no_gold = [QAInstance(id="g0", question="?", candidates=("a", "b"))]
        with pytest.raises(DataValidationError):
            accuracy([onehot_prediction("g0", 0, width=2)], no_gold)

    def test_empty_predictions_rejected(self):
        with pytest.raises(DataValidationError):
            accuracy([], self.GOLD)


class TestClozePairs:
    def test_load_and_validate(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text(
            "What do people aim to do at work?\tPeople aim to [MASK] at work.\n"
            "\n"
            "Why do you watch TV?\tYou watch TV because [MASK].\n",
            encoding="utf-8",
        )
        pairs = load_cloze_pairs(path)
        assert len(pairs) == 2
        assert pairs[0] == ClozePair(
            natural="What do people aim to do at work?",
            cloze="People aim to [MASK] at work.",
        )

    def test_every_pair_has_one_mask(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("q?\tno mask here.\n", encoding="utf-8")
        with pytest.raises(DataValidationError) as err:
            load_cloze_pairs(path)
        assert err.value.line == 1

    def test_two_masks_report_line(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text(
            "ok?\tok [MASK].\ntwo?\t[MASK] and [MASK].\n", encoding="utf-8"
        )
        with pytest.raises(DataValidationError) as err:
            load_cloze_pairs(path)
        assert err.value.line == 2

    def test_wrong_column_count_reports_line(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("only one column\n", encoding="utf-8")
        with pytest.raises(DataValidationError) as err:
            load_cloze_pairs(path)
        assert err.value.line == 1


class TestManifest:
    def test_round_trip(self, tmp_path):
        train = synth_instances(PUBLISHED_TRAIN_SIZE, "tr")
        dev = synth_instances(PUBLISHED_DEV_SIZE, "dv")
        split = split_csqa(train, dev)
        path = tmp_path / "split.manifest"
        write_manifest(path, split)
        sections = read_manifest(path)
        assert sections["train"] == [i.id for i in split.train]
        assert sections["dev"] == [i.id for i in split.dev]
        assert sections["test"] == [i.id for i in split.test]

    def test_section_headers_written(self, tmp_path):
        split = Split(
            train=tuple(synth_instances(2, "a")),
            dev=tuple(synth_instances(1, "b")),
            test=tuple(synth_instances(1, "c")),
            seed=7,
        )
        path = tmp_path / "split.manifest"
        write_manifest(path, split)
        assert path.read_text(encoding="utf-8") == (
            "[train]\na0\na1\n[dev]\nb0\n[test]\nc0\n"
        )

    def test_id_before_header_rejected(self, tmp_path):
        path = tmp_path / "split.manifest"
        path.write_text("q1\n[train]\n", encoding="utf-8")
        with pytest.raises(DataValidationError) as err:
            read_manifest(path)
        assert err.value.line == 1

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "split.manifest"
        path.write_text("[validation]\nq1\n", encoding="utf-8")
        with pytest.raises(DataValidationError):
            read_manifest(path)
