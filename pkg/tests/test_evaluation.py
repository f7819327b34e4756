import numpy as np
import pytest

from radsigns.corpus import Entity, Relation, Sentence
from radsigns.evaluation import (
    CONFUSION_AXES,
    ErrorRecord,
    PrfScores,
    agreement_f1,
    classify_errors,
    entity_prf,
    relation_prf,
)

from _synth import random_entity_set


def ent(kind, start, end):
    return Entity(kind, start, end, "字" * (end - start))


class TestPrfScores:
    def test_f1_is_harmonic_mean(self):
        scores = PrfScores(correct=1, predicted=2, gold=4)
        assert scores.precision == pytest.approx(50.0)
        assert scores.recall == pytest.approx(25.0)
        assert scores.f1 == pytest.approx(100 / 3)

    def test_zero_correct_gives_zero_f1(self):
        assert PrfScores(0, 5, 5).f1 == 0.0
        assert PrfScores(0, 0, 0).f1 == 0.0

    def test_symmetry_in_precision_recall(self):
        assert PrfScores(2, 4, 8).f1 == pytest.approx(PrfScores(2, 8, 4).f1)


class TestEntityPrf:
    def test_identity_scores_hundred(self):
        gold = {"s1": [ent("P", 0, 2), ent("Abn", 4, 6)], "s2": [ent("D", 1, 2)]}
        result = entity_prf(gold, gold)
        assert result.overall.precision == 100.0
        assert result.overall.recall == 100.0
        assert result.overall.f1 == 100.0

    def test_two_predicted_one_correct_four_gold(self):
        gold = {"s1": [ent("P", 0, 2), ent("P", 3, 5), ent("Abn", 6, 8), ent("D", 9, 10)]}
        pred = {"s1": [ent("P", 0, 2), ent("Abn", 11, 13)]}
        result = entity_prf(pred, gold)
        assert round(result.overall.precision, 2) == 50.00
        assert round(result.overall.recall, 2) == 25.00
        assert round(result.overall.f1, 2) == 33.33

    def test_shifted_span_is_incorrect(self):
        gold = {"s1": [ent("P", 0, 3)]}
        pred = {"s1": [ent("P", 1, 4)]}
        assert entity_prf(pred, gold).overall.correct == 0

    def test_same_span_wrong_kind_is_incorrect(self):
        gold = {"s1": [ent("P", 0, 3)]}
        pred = {"s1": [ent("D", 0, 3)]}
        assert entity_prf(pred, gold).overall.correct == 0

    def test_match_requires_same_sentence(self):
        gold = {"s1": [ent("P", 0, 3)]}
        pred = {"s2": [ent("P", 0, 3)]}
        assert entity_prf(pred, gold).overall.correct == 0

    def test_per_kind_breakdown(self):
        gold = {"s1": [ent("P", 0, 2), ent("Abn", 4, 6)]}
        pred = {"s1": [ent("P", 0, 2), ent("Abn", 7, 9)]}
        result = entity_prf(pred, gold)
        assert result.by_kind["P"].f1 == 100.0
        assert result.by_kind["Abn"].f1 == 0.0
        assert result.by_kind["D"].gold == 0


class TestRelationPrf:
    def pair(self, kind, a, b):
        return Relation(kind, a, b)

    def test_identity(self):
        rel = self.pair("P2Abn", ent("P", 0, 2), ent("Abn", 4, 6))
        gold = {"s1": [rel]}
        assert relation_prf(gold, gold).overall.f1 == 100.0

    def test_wrong_kind_same_entities_is_incorrect(self):
        p, d, abn = ent("P", 0, 2), ent("D", 0, 2), ent("Abn", 4, 6)
        gold = {"s1": [Relation("P2Abn", p, abn)]}
        pred = {"s1": [Relation("D2Abn", d, abn)]}
        assert relation_prf(pred, gold).overall.correct == 0

    def test_three_predicted_two_correct_four_gold(self):
        abn1, abn2 = ent("Abn", 10, 12), ent("Abn", 20, 22)
        gold = {
            "s1": [
                Relation("P2Abn", ent("P", 0, 2), abn1),
                Relation("D2Abn", ent("D", 5, 6), abn1),
                Relation("P2Abn", ent("P", 14, 16), abn2),
                Relation("D2Abn", ent("D", 17, 18), abn2),
            ]
        }
        pred = {
            "s1": [
                Relation("P2Abn", ent("P", 0, 2), abn1),
                Relation("D2Abn", ent("D", 5, 6), abn1),
                Relation("P2Abn", ent("P", 13, 16), abn2),
            ]
        }
        result = relation_prf(pred, gold)
        assert round(result.overall.precision, 2) == 66.67
        assert round(result.overall.recall, 2) == 50.00
        assert round(result.overall.f1, 2) == 57.14


class TestAgreement:
    def test_identical_annotations(self):
        items = {"s1": [ent("P", 0, 2)]}
        assert agreement_f1(items, items).f1 == 100.0

    def test_four_vs_two_with_two_identical(self):
        annot_a = {
            "s1": [ent("P", 0, 2), ent("D", 3, 4), ent("Abn", 5, 7), ent("P", 8, 9)]
        }
        annot_b = {"s1": [ent("P", 0, 2), ent("D", 3, 4)]}
        scores = agreement_f1(annot_a, annot_b)
        assert round(scores.precision, 2) == 50.00
        assert round(scores.recall, 2) == 100.00
        assert round(scores.f1, 2) == 66.67

    def test_disjoint_annotations(self):
        annot_a = {"s1": [ent("P", 0, 2)]}
        annot_b = {"s1": [ent("P", 5, 7)]}
        assert agreement_f1(annot_a, annot_b).f1 == 0.0

    def test_works_for_relations(self):
        rel = Relation("P2Abn", ent("P", 0, 2), ent("Abn", 4, 6))
        other = Relation("D2Abn", ent("D", 1, 2), ent("Abn", 4, 6))
        a = {"s1": [rel, other]}
        b = {"s1": [rel]}
        scores = agreement_f1(a, b)
        assert scores.precision == pytest.approx(50.0)
        assert scores.recall == pytest.approx(100.0)


def span(sentence, kind, start, end):
    return Entity(kind, start, end, sentence.text[start:end])


class TestClassifyErrors:
    def test_type_error_same_span_wrong_kind(self):
        # the degree span is output with a body-part label
        s = Sentence.from_text("s1", "食管全程扩张，局部较前增著")
        gold = {"s1": [span(s, "D", 2, 4)]}
        pred = {"s1": [span(s, "P", 2, 4)]}
        records, confusion, summary = classify_errors(pred, gold)
        assert [r.category for r in records] == ["TYPE"]
        assert records[0].predicted.kind == "P"
        assert records[0].gold.kind == "D"
        assert confusion.cell("D", "P") == 1
        assert summary.category_counts["TYPE"] == 1

    def test_long_extent_error(self):
        # output span swallows the following punctuation character
        s = Sentence.from_text("s1", "肝、胆无异常")
        gold = {"s1": [span(s, "P", 0, 1)]}
        pred = {"s1": [span(s, "P", 0, 2)]}
        records, _, summary = classify_errors(pred, gold)
        assert [(r.category, r.extent_subtype) for r in records] == [("EXTENT", "LONG")]
        assert summary.extent_counts["LONG"]["P"] == 1
        assert summary.category_counts["MISSING"] == 0

    def test_short_extent_error(self):
        s = Sentence.from_text("s1", "食管下端区域")
        gold = {"s1": [span(s, "P", 0, 4)]}
        pred = {"s1": [span(s, "P", 0, 2)]}
        records, _, _ = classify_errors(pred, gold)
        assert [(r.category, r.extent_subtype) for r in records] == [("EXTENT", "SHORT")]

    def test_straddling_extent_error(self):
        s = Sentence.from_text("s1", "左肺下叶背段")
        gold = {"s1": [span(s, "P", 0, 4)]}
        pred = {"s1": [span(s, "P", 2, 6)]}
        records, _, _ = classify_errors(pred, gold)
        assert [(r.category, r.extent_subtype) for r in records] == [("EXTENT", "S&L")]

    def test_spurious_and_missing(self):
        s = Sentence.from_text("s1", "两肺膨胀良好食糜及液体潴留")
        gold = {"s1": [span(s, "Abn", 6, 13)]}
        pred = {"s1": [span(s, "P", 0, 2)]}
        records, confusion, summary = classify_errors(pred, gold)
        categories = sorted(r.category for r in records)
        assert categories == ["MISSING", "SPURIOUS"]
        assert confusion.cell("O", "P") == 1
        assert confusion.cell("Abn", "O") == 1
        assert summary.missing_by_kind["Abn"] == 1
        assert summary.spurious_by_kind["P"] == 1

    def test_one_prediction_covering_two_golds(self):
        # one output span covering two gold parts: extent error against the
        # larger-overlap gold, the other gold goes missing
        s = Sentence.from_text("s1", "食管下端贲门区未见异常")
        gold = {"s1": [span(s, "P", 0, 4), span(s, "P", 4, 7)]}
        pred = {"s1": [span(s, "P", 0, 7)]}
        records, confusion, _ = classify_errors(pred, gold)
        by_category = {r.category: r for r in records}
        assert set(by_category) == {"EXTENT", "MISSING"}
        assert by_category["EXTENT"].extent_subtype == "LONG"
        assert by_category["EXTENT"].gold.start == 0      # maximal overlap
        assert by_category["MISSING"].gold.start == 4
        assert confusion.cell("P", "O") == 2

    def test_overlap_with_kind_and_span_mismatch_is_spurious_plus_missing(self):
        s = Sentence.from_text("s1", "左肺纹理增多")
        gold = {"s1": [span(s, "Abn", 2, 6)]}
        pred = {"s1": [span(s, "P", 0, 4)]}
        records, _, _ = classify_errors(pred, gold)
        assert sorted(r.category for r in records) == ["MISSING", "SPURIOUS"]

    def test_identity_yields_no_records_and_diagonal_matrix(self):
        s = Sentence.from_text("s1", "右上肺见多发斑片状密影。")
        gold = {
            "s1": [span(s, "P", 0, 3), span(s, "D", 4, 6), span(s, "Abn", 6, 11)]
        }
        records, confusion, summary = classify_errors(gold, gold)
        assert records == []
        assert summary.total_errors == 0
        counts = confusion.counts
        assert counts[0, 0] == 1 and counts[1, 1] == 1 and counts[2, 2] == 1
        off_diagonal = counts.sum() - np.trace(counts)
        assert off_diagonal == 0

    def test_row_sums_equal_gold_totals(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            n = int(rng.integers(4, 30))
            s = Sentence("s1", tuple("字" for _ in range(n)))
            gold = {"s1": [span(s, k, a, b) for k, a, b in random_entity_set(rng, n)]}
            pred = {"s1": [span(s, k, a, b) for k, a, b in random_entity_set(rng, n)]}
            _, confusion, _ = classify_errors(pred, gold)
            for kind in ("P", "D", "Abn"):
                total = sum(1 for e in gold["s1"] if e.kind == kind)
                assert confusion.row_total(kind) == total

    def test_partition_of_predictions_and_golds(self):
        rng = np.random.default_rng(78)
        for _ in range(200):
            n = int(rng.integers(4, 30))
            s = Sentence("s1", tuple("字" for _ in range(n)))
            gold_entities = [span(s, k, a, b) for k, a, b in random_entity_set(rng, n)]
            pred_entities = [span(s, k, a, b) for k, a, b in random_entity_set(rng, n)]
            records, _, _ = classify_errors({"s1": pred_entities}, {"s1": gold_entities})

            exact = sum(
                1
                for p in pred_entities
                if any(
                    (g.kind, g.start, g.end) == (p.kind, p.start, p.end)
                    for g in gold_entities
                )
            )
            predicted_records = sum(
                1 for r in records if r.category in ("TYPE", "EXTENT", "SPURIOUS")
            )
            assert exact + predicted_records == len(pred_entities)

            involved = {r.gold for r in records if r.gold is not None}
            for g in gold_entities:
                exact_hit = any(
                    (g.kind, g.start, g.end) == (p.kind, p.start, p.end)
                    for p in pred_entities
                )
                assert exact_hit or g in involved

    def test_missing_share_uses_gold_totals(self):
        s = Sentence("s1", tuple("字" for _ in range(20)))
        gold = {"s1": [span(s, "Abn", 0, 2), span(s, "Abn", 5, 7), span(s, "Abn", 10, 12)]}
        pred = {"s1": [span(s, "Abn", 0, 2), span(s, "Abn", 5, 7)]}
        _, _, summary = classify_errors(pred, gold)
        assert summary.missing_by_kind["Abn"] == 1
        assert summary.missing_share("Abn") == pytest.approx(100 / 3)

    def test_category_shares_sum_to_hundred(self):
        s = Sentence("s1", tuple("字" for _ in range(20)))
        gold = {"s1": [span(s, "P", 0, 2), span(s, "D", 4, 6)]}
        pred = {"s1": [span(s, "P", 0, 3), span(s, "Abn", 10, 12)]}
        _, _, summary = classify_errors(pred, gold)
        assert summary.total_errors > 0
        total = sum(summary.category_share(c) for c in ("TYPE", "EXTENT", "SPURIOUS", "MISSING"))
        assert total == pytest.approx(100.0)

    def test_summary_text_layout(self):
        s = Sentence("s1", tuple("字" for _ in range(8)))
        gold = {"s1": [span(s, "P", 0, 2)]}
        pred = {"s1": [span(s, "P", 0, 3)]}
        _, confusion, summary = classify_errors(pred, gold)
        text = summary.format_text()
        assert "EXTENT" in text and "LONG" in text
        csv = confusion.to_csv()
        assert csv.splitlines()[0] == "gold\\pred," + ",".join(CONFUSION_AXES) + ",total"


class TestErrorRecordInvariants:
    def test_slots_must_match_category(self):
        e = ent("P", 0, 2)
        with pytest.raises(ValueError):
            ErrorRecord("s1", "SPURIOUS", None, None, e)
        with pytest.raises(ValueError):
            ErrorRecord("s1", "MISSING", None, e, None)
        with pytest.raises(ValueError):
            ErrorRecord("s1", "TYPE", "LONG", e, e)
        with pytest.raises(ValueError):
            ErrorRecord("s1", "EXTENT", None, e, e)
