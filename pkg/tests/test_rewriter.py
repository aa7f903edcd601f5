"""Question-to-cloze rewriting: wh-replacement, clause restructuring, fallback."""

import pytest

from clozeqa.errors import DataValidationError, UntranslatableError
from clozeqa.rewrite import (
    MASK,
    ClozeQuestion,
    WhReplacementTable,
    detokenize,
    fallback_replace,
    replace_wh,
    swap_first_two_children,
    transform,
)
from clozeqa.treebank import parse_ptb

TABLE = WhReplacementTable.default()


class TestWhReplacementTable:
    # One case per table entry; multi-word keys must win over their prefixes.
    ENTRY_CASES = [
        (["what"], [MASK]),
        (["who"], [MASK]),
        (["which"], [MASK]),
        (["why"], ["because", MASK]),
        (["how"], ["by", MASK]),
        (["where"], ["at", MASK]),
        (["when"], ["when", MASK]),
        (["how", "many"], [MASK]),
        (["how", "much"], [MASK]),
    ]

    @pytest.mark.parametrize("phrase,expected", ENTRY_CASES)
    def test_each_entry(self, phrase, expected):
        assert replace_wh(phrase, TABLE) == expected

    def test_case_insensitive(self):
        assert replace_wh(["Why"], TABLE) == ["because", MASK]
        assert replace_wh(["WHERE"], TABLE) == ["at", MASK]

    def test_trailing_context_preserved(self):
        assert replace_wh(["what", "island", "country"], TABLE) == [
            MASK, "island", "country",
        ]

    def test_leading_context_preserved(self):
        assert replace_wh(["in", "which", "city"], TABLE) == ["in", MASK, "city"]

    def test_multi_word_beats_prefix(self):
        # "how many" maps to a bare mask, not to "by [MASK] many".
        assert replace_wh(["how", "many", "legs"], TABLE) == [MASK, "legs"]
        assert replace_wh(["how", "much", "water"], TABLE) == [MASK, "water"]

    def test_no_wh_raises(self):
        with pytest.raises(UntranslatableError):
            replace_wh(["is", "it", "raining"], TABLE)

    def test_every_entry_produces_one_mask(self):
        for key, replacement in TABLE.entries:
            assert sum(MASK in tok for tok in replacement) == 1, key

    def test_bad_entry_rejected(self):
        with pytest.raises(DataValidationError):
            WhReplacementTable(entries=((("why",), ("because",)),))


class TestSwap:
    def test_exchanges_first_two(self):
        node = parse_ptb("(SQ (VBP do) (NP (NNS people)) (VP (VB jump)))").root
        swapped = swap_first_two_children(node)
        assert [c.label for c in swapped.children] == ["NP", "VBP", "VP"]

    def test_involution(self):
        node = parse_ptb("(SQ (VBP do) (NP (NNS people)) (VP (VB jump)))").root
        assert swap_first_two_children(swap_first_two_children(node)) == node

    def test_short_node_unchanged(self):
        node = parse_ptb("(SQ (VP (VBD wrote)))").root
        assert swap_first_two_children(node) is node

    def test_spans_recomputed(self):
        node = parse_ptb("(SQ (VBP do) (NP (NNS happy) (NNS people)))").root
        swapped = swap_first_two_children(node)
        np, vbp = swapped.children
        assert np.span == (0, 2)
        assert vbp.span == (2, 3)


class TestFallback:
    def test_initial_wh(self):
        cloze = fallback_replace(["What", "happened", "?"], TABLE, source_id="q")
        assert cloze.tokens == (MASK, "happened", ".")

    def test_embedded_wh(self):
        cloze = fallback_replace(["He", "asked", "what", "it", "was", "?"], TABLE)
        assert cloze.text == "He asked [MASK] it was."

    def test_uses_plain_mask_even_for_mapped_words(self):
        # The fallback ignores the replacement column: "why" becomes a bare mask.
        cloze = fallback_replace(["Why", "did", "it", "stop", "?"], TABLE)
        assert cloze.tokens[0] == MASK

    def test_no_wh_raises(self):
        with pytest.raises(UntranslatableError):
            fallback_replace(["Is", "it", "raining", "?"], TABLE)


# Verified end-to-end rewrites: (parse, expected sentence).
TRANSFORM_CASES = [
    (
        "(SBARQ (WHADVP (WRB Where)) (SQ (VP (VBZ is) (NP (DT a) (JJ good)"
        " (NN idea))) (CC but) (ADJP (RB not) (VBN required) (S (VP (TO to)"
        " (VP (VB have) (NP (DT a) (NN fire) (NN extinguisher))))))) (. ?))",
        "But is a good idea not required to have a fire extinguisher at [MASK].",
    ),
    (
        "(SBARQ (WHNP (WP What)) (SQ (VBP do) (NP (NNS people)) (VP (VBP aim)"
        " (S (VP (TO to) (VP (VB do) (PP (IN at) (NP (NN work)))))))) (. ?))",
        "People do aim to do at work [MASK].",
    ),
    (
        "(SBARQ (WHADVP (WRB Why)) (SQ (MD would) (NP (PRP you)) (VP (VB be)"
        " (VP (VBG watching) (NP (NN TV))))) (. ?))",
        "You would be watching TV because [MASK].",
    ),
    (
        "(SBARQ (WHADVP (WRB When)) (SQ (VBZ does) (NP (DT the) (NN store))"
        " (VP (VB open))) (. ?))",
        "The store does open when [MASK].",
    ),
    (
        "(SBARQ (WHADVP (WRB How)) (SQ (VBZ is) (NP (VBG riding) (NP (DT a)"
        " (NN bike))) (VP (VBG getting) (S (NP (PRP it)) (VP (TO to) (VB move)))))"
        " (. ?))",
        "Riding a bike is getting it to move by [MASK].",
    ),
    (
        "(SBARQ (WHNP (WDT What) (NN island) (NN country)) (SQ (VBZ is)"
        " (NP (NN ferret)) (ADJP (JJ popular))) (. ?))",
        "Ferret is popular [MASK] island country.",
    ),
    (
        "(SBARQ (WHNP (WHADJP (WRB How) (JJ many)) (NNS legs)) (SQ (VBP do)"
        " (NP (NNS spiders)) (VP (VB have))) (. ?))",
        "Spiders do have [MASK] legs.",
    ),
    (
        "(SBARQ (WHNP (WHADJP (WRB How) (JJ much)) (NN water)) (SQ (VBP do)"
        " (NP (NNS plants)) (VP (VB need))) (. ?))",
        "Plants do need [MASK] water.",
    ),
    (
        "(SBARQ (WHNP (WDT Which) (NN animal)) (SQ (VBZ does) (NP (DT the)"
        " (NN zoo)) (VP (VB feature))) (. ?))",
        "The zoo does feature [MASK] animal.",
    ),
    # Single-child clause: the moved phrase lands first, then the swap
    # returns it to subject position.
    (
        "(SBARQ (WHNP (WP Who)) (SQ (VP (VBD wrote) (NP (DT this) (NN book))))"
        " (. ?))",
        "[MASK] wrote this book.",
    ),
    # No inverted clause anywhere: plain mask substitution.
    (
        "(S (NP (WP What)) (VP (VBD happened) (ADVP (RB next))) (. ?))",
        "[MASK] happened next.",
    ),
]


class TestTransform:
    @pytest.mark.parametrize("parse,expected", TRANSFORM_CASES)
    def test_verified_rewrites(self, parse, expected):
        cloze = transform(parse_ptb(parse))
        assert cloze.text == expected

    def test_mask_index_points_at_mask(self):
        parse, _ = TRANSFORM_CASES[1]
        cloze = transform(parse_ptb(parse))
        assert cloze.mask_index == 7
        assert cloze.tokens[cloze.mask_index] == MASK

    def test_auxiliary_deletion(self):
        parse, _ = TRANSFORM_CASES[1]
        cloze = transform(parse_ptb(parse), drop_aux=True)
        assert cloze.text == "People aim to do at work [MASK]."

    def test_auxiliary_kept_by_default(self):
        parse, _ = TRANSFORM_CASES[3]
        assert "does" in transform(parse_ptb(parse)).tokens

    def test_determinism(self):
        parse, _ = TRANSFORM_CASES[0]
        tree = parse_ptb(parse)
        assert transform(tree) == transform(tree)

    def test_input_tree_not_mutated(self):
        parse, _ = TRANSFORM_CASES[0]
        tree = parse_ptb(parse)
        before = tree.root
        transform(tree)
        assert tree.root == before

    def test_translator_field(self):
        parse, _ = TRANSFORM_CASES[0]
        assert transform(parse_ptb(parse)).translator == "syntactic"

    def test_source_id_carried(self):
        parse, _ = TRANSFORM_CASES[0]
        assert transform(parse_ptb(parse), source_id="q42").source_id == "q42"

    def test_yes_no_question_untranslatable(self):
        with pytest.raises(UntranslatableError):
            transform(parse_ptb("(SQ (VBZ Is) (NP (PRP it)) (VP (VBG raining)) (. ?))"))

    def test_wrapped_yes_no_untranslatable(self):
        with pytest.raises(UntranslatableError):
            transform(
                parse_ptb("(TOP (SQ (VBZ Is) (NP (PRP it)) (VP (VBG raining)) (. ?)))")
            )

    def test_inverted_clause_without_movement_falls_back(self):
        # The wh-word sits inside an embedded clause, so nothing moves; the
        # first wh-word in the restructured sentence gets a bare mask.
        cloze = transform(
            parse_ptb(
                "(TOP (SQ (VBZ Is) (NP (DT that)) (SBAR (WHADVP (WRB where))"
                " (S (NP (PRP we)) (VP (VBP go))))) (. ?))"
            )
        )
        assert cloze.text == "That is [MASK] we go."

    def test_demoted_first_token_lowercased(self):
        # "Is" starts the question but lands mid-sentence after the swap.
        cloze = transform(
            parse_ptb(
                "(TOP (SQ (VBZ Is) (NP (DT that)) (SBAR (WHADVP (WRB where))"
                " (S (NP (PRP we)) (VP (VBP go))))) (. ?))"
            )
        )
        assert "is" in cloze.tokens
        assert "Is" not in cloze.tokens

    def test_demoted_proper_noun_keeps_case(self):
        cloze = transform(
            parse_ptb(
                "(TOP (SQ (NNP Paris) (VBZ is) (SBAR (WHADVP (WRB where))"
                " (S (NP (PRP we)) (VP (VBP go))))) (. ?))"
            )
        )
        assert cloze.text == "Is Paris [MASK] we go."

    def test_one_mask_with_two_inverted_clauses(self):
        cloze = transform(
            parse_ptb(
                "(X (WHNP (WP What)) (SQ (VBP do) (NP (PRP you)) (VP (VB see)))"
                " (WHADVP (WRB where)) (SQ (VBZ does) (NP (PRP he)) (VP (VB go))))"
            )
        )
        assert sum(MASK in tok for tok in cloze.tokens) == 1
        assert "where" in cloze.tokens

    def test_terminal_question_mark_rewritten(self):
        parse, _ = TRANSFORM_CASES[0]
        cloze = transform(parse_ptb(parse))
        assert cloze.tokens[-1] == "."
        assert "?" not in cloze.tokens


class TestClozeQuestion:
    def test_text_glues_punctuation(self):
        assert detokenize(["People", "work", "."]) == "People work."

    def test_from_text(self):
        cloze = ClozeQuestion.from_text("People work at [MASK].", source_id="q1")
        assert cloze.tokens == ("People", "work", "at", "[MASK].")
        assert cloze.mask_index == 3

    def test_rejects_zero_masks(self):
        with pytest.raises(DataValidationError):
            ClozeQuestion(tokens=("People", "work", "."), mask_index=0)

    def test_rejects_two_masks(self):
        with pytest.raises(DataValidationError):
            ClozeQuestion(tokens=(MASK, MASK, "."), mask_index=0)

    def test_rejects_missing_terminal(self):
        with pytest.raises(DataValidationError):
            ClozeQuestion(tokens=(MASK, "happened"), mask_index=0)

    def test_rejects_wrong_mask_index(self):
        with pytest.raises(DataValidationError):
            ClozeQuestion(tokens=(MASK, "happened", "."), mask_index=1)

    def test_rejects_unknown_translator(self):
        with pytest.raises(DataValidationError):
            ClozeQuestion(
                tokens=(MASK, "happened", "."), mask_index=0, translator="psychic"
            )
