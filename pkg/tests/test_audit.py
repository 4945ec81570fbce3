from __future__ import annotations

import pytest

from hintlab.audit import (
    NATIVE_DIGITS,
    SHORT_TEXT_CHARS,
    backtranslation_quality,
    backtranslation_report,
    consistency_report,
    detect_leakage,
    helpful_leakage_ratio,
    leakage_report,
    lid_accuracy,
    transliterate_digits,
)
from hintlab.backends import ScriptedIdentifier, TranslatorUnavailable
from hintlab.config import build_identifier, build_translator, parse_backends_file


@pytest.fixture(scope="session")
def demo_setup(demo_paths):
    return parse_backends_file(demo_paths["backends"])


@pytest.mark.parametrize(
    ("hint", "gold", "leaked"),
    [
        ("The answer is 42, so check again", "42", True),
        ("answer: 42", "42", True),
        ("start from 42", "42", True),
        ("Compute 36.", "36", False),  # trailing period counts as decimal-adjacent
        ("value 3.42 here", "42", False),
        ("there are 420 things", "42", False),
        ("the 42nd item", "42", False),
        ("multiply by -42", "42", True),
        ("no digits at all", "42", False),
    ],
)
def test_detect_leakage_standalone_matching(hint, gold, leaked):
    assert detect_leakage(hint, gold) is leaked


def test_transliterate_digits_and_native_leakage():
    assert transliterate_digits("মান ৪২", NATIVE_DIGITS) == "মান 42"
    assert transliterate_digits("๑๕๐", NATIVE_DIGITS) == "150"
    assert detect_leakage("মান ৪২ হবে", "42", NATIVE_DIGITS)
    assert not detect_leakage("মান ৪২ হবে", "42")


def test_leakage_report_demo_groups(demo_records, demo_corpora):
    report = leakage_report(demo_records, demo_corpora)
    rows = {
        (r.strategy, r.category): (
            r.total_sessions,
            r.leaked_sessions,
            r.proportion,
            r.total_hints,
            r.leaked_hints,
            r.leaked_pre_translation,
        )
        for r in report.groups
    }
    assert rows == {
        ("en_en", "HRL"): (5, 1, 20.0, 9, 1, 0),
        ("en_en", "LRL"): (5, 0, 0.0, 14, 0, 0),
        ("en_en_l", "HRL"): (5, 0, 0.0, 13, 0, 2),
        ("en_en_l", "LRL"): (5, 1, 20.0, 17, 1, 0),
        ("en_l", "HRL"): (5, 0, 0.0, 13, 0, 0),
        ("en_l", "LRL"): (5, 1, 20.0, 12, 1, 0),
        ("l_l", "HRL"): (5, 1, 20.0, 9, 1, 0),
        ("l_l", "LRL"): (5, 0, 0.0, 9, 0, 0),
    }


def test_leakage_report_demo_languages(demo_records, demo_corpora):
    ratios = helpful_leakage_ratio(demo_records, demo_corpora)
    fr, sw = ratios["fr"], ratios["sw"]
    assert (fr.helpful_hint_total, fr.helpful_leaked, fr.leakage_ratio) == (10, 1, 10.0)
    assert (sw.helpful_hint_total, sw.helpful_leaked, sw.leakage_ratio) == (9, 0, 0.0)


def test_leakage_ratio_none_without_helpful_hints(demo_records, demo_corpora):
    never_rescued = [r for r in demo_records if r.terminal_state != "correct_after_hints"]
    ratios = helpful_leakage_ratio(never_rescued, demo_corpora)
    assert all(row.helpful_hint_total == 0 and row.leakage_ratio is None for row in ratios.values())


def test_lid_accuracy_counts_and_skips():
    identifier = ScriptedIdentifier(
        rules=[{"contains": "bonjour", "language": "fr", "confidence": 0.99}],
        default_language="en",
        default_confidence=0.6,
    )
    texts = [
        "bonjour tout le monde, comment allez-vous",
        "plain english text that is long enough",
        "",
        "   ",
        "short fr bonjour",  # under the short-text threshold, still scored
    ]
    score = lid_accuracy(texts, "fr", identifier)
    assert (score.scored, score.skipped_empty, score.short_texts) == (3, 2, 1)
    assert score.accuracy == pytest.approx(100.0 * 2 / 3)
    assert len(texts[4]) < SHORT_TEXT_CHARS

    empty = lid_accuracy(["", "  "], "fr", identifier)
    assert empty.accuracy is None and empty.scored == 0


def test_consistency_report_demo_goldens(demo_records, demo_setup):
    identifier = build_identifier(demo_setup)
    report = consistency_report(demo_records, identifier)
    rows = {(r.text_kind, r.strategy, r.category): r for r in report.rows}
    assert len(rows) == 24  # 3 text kinds x 4 strategies x 2 categories

    for (kind, _strategy, _category), row in rows.items():
        if kind in ("hint", "initial_solution"):
            assert row.accuracy == 100.0
        assert row.skipped_empty == 0

    revised = {
        ("en_en", "HRL"): (8 / 9, 9),
        ("en_en", "LRL"): (1.0, 14),
        ("en_en_l", "HRL"): (1.0, 13),
        ("en_en_l", "LRL"): (16 / 17, 17),
        ("en_l", "HRL"): (1.0, 13),
        ("en_l", "LRL"): (11 / 12, 12),
        ("l_l", "HRL"): (8 / 9, 9),
        ("l_l", "LRL"): (8 / 9, 9),
    }
    for (strategy, category), (fraction, scored) in revised.items():
        row = rows[("revised_solution", strategy, category)]
        assert row.scored == scored
        assert row.accuracy == pytest.approx(100.0 * fraction)


def test_consistency_expected_breakdown_tracks_delivery_language(demo_records, demo_setup):
    identifier = build_identifier(demo_setup)
    rows = {(r.text_kind, r.strategy, r.category): r for r in consistency_report(demo_records, identifier).rows}
    # English-prompt strategies deliver English hints; L_L delivers exercise-language hints
    assert rows[("hint", "en_en", "HRL")].expected_breakdown == (("en", 9),)
    assert rows[("hint", "l_l", "HRL")].expected_breakdown == (("fr", 9),)
    assert rows[("hint", "en_en_l", "LRL")].expected_breakdown == (("sw", 17),)
    # students always answer in the exercise language under the multilingual mode
    assert rows[("initial_solution", "en_l", "LRL")].expected_breakdown == (("sw", 5),)


def test_backtranslation_report_demo_goldens(demo_records, demo_setup):
    translator = build_translator(demo_setup, cache=None)
    report = backtranslation_report(demo_records, translator)
    rows = {r.language: r for r in report.rows}
    assert set(rows) == {"fr", "sw"}
    assert rows["fr"].n_pairs == 13
    assert rows["fr"].bleu == pytest.approx(86.53874449329608, abs=1e-9)
    assert rows["sw"].n_pairs == 17
    assert rows["sw"].bleu == pytest.approx(85.88510825398774, abs=1e-9)


def test_backtranslation_needs_translator():
    with pytest.raises(TranslatorUnavailable):
        backtranslation_quality(["a hint"], ["un indice"], "fr", None)


def test_backtranslation_report_empty_without_translated_hints(demo_records):
    untranslated = [r for r in demo_records if r.config["strategy"] != "en_en_l"]
    report = backtranslation_report(untranslated, translator=None)
    assert report.rows == ()
