from __future__ import annotations

from decimal import Decimal

import pytest

from hintlab.backends.base import BackendConfig, HttpError
from hintlab.corpus import ExerciseItem, LANGUAGES
from hintlab.engine import (
    EmptyAxis,
    Iteration,
    MatrixSpec,
    SessionConfig,
    SessionRecord,
    SessionRunner,
    Verdict,
    enumerate_configs,
    finalize_journal,
    journal_key,
    needs_translator,
    read_journal,
    run_matrix,
    validate_config,
)
from hintlab.prompts import HintStrategy, StudentPromptMode

from conftest import make_client


def _backend(name: str, role: str = "student", **kwargs) -> BackendConfig:
    return BackendConfig(name=name, endpoint="scripted", model_id=f"{name}-model", **kwargs).with_role_defaults(role)


def _item(language: str = "en", gold: str = "42", question: str = "What is 6 times 7? [[Q]]") -> ExerciseItem:
    return ExerciseItem(
        id=0,
        language=language,
        question=question,
        gold_answer=Decimal(gold),
        gold_answer_str=gold,
        normalization_applied=False,
    )


def _config(max_hints: int = 2, strategy: HintStrategy = HintStrategy.EN_EN) -> SessionConfig:
    return SessionConfig(
        language="en",
        mode=StudentPromptMode.ENGLISH_ONLY,
        strategy=strategy,
        student=_backend("stu"),
        teacher=_backend("tea", role="teacher"),
        max_hints=max_hints,
    )


def _runner(catalog, student_rules, teacher_rules) -> SessionRunner:
    return SessionRunner(
        catalog=catalog,
        clients={"stu": make_client("stu", student_rules), "tea": make_client("tea", teacher_rules)},
    )


def test_session_correct_initially(en_catalog):
    runner = _runner(en_catalog, [{"contains": "[[Q]]", "reply": "Easy. ANSWER: 42"}], [])
    record = runner.run_session(_item(), _config())
    assert record.terminal_state == "correct_initially"
    assert record.hints_used == 0
    assert record.iterations == ()
    assert record.solved and record.completed


def test_session_rescued_by_second_hint(en_catalog):
    student_rules = [
        {"contains": "[[H2]]", "reply": "Now I see. ANSWER: 42"},
        {"contains": "[[H1]]", "reply": "Hmm. WRONG-1 ANSWER: 40"},
        {"contains": "[[Q]]", "reply": "WRONG-0 ANSWER: 41"},
    ]
    teacher_rules = [
        {"contains": "WRONG-1", "reply": "Try again. [[H2]]"},
        {"contains": "WRONG-0", "reply": "Check the product. [[H1]]"},
    ]
    record = _runner(en_catalog, student_rules, teacher_rules).run_session(_item(), _config(max_hints=3))
    assert record.terminal_state == "correct_after_hints"
    assert record.hints_used == 2
    assert [it.hint_label for it in record.iterations] == ["bad", "good"]
    assert record.iterations[0].hint == "Check the product. [[H1]]"
    assert record.iterations[1].verdict.correct
    assert all(it.hint_pre_translation is None for it in record.iterations)
    assert all(it.hint_language_requested == "en" for it in record.iterations)


def test_session_exhausts_hints(en_catalog):
    student_rules = [{"contains": "[[Q]]", "reply": "WRONG ANSWER: 1"}]
    teacher_rules = [{"fallback": True, "reply": "A hint. [[H]]"}]
    record = _runner(en_catalog, student_rules, teacher_rules).run_session(_item(), _config(max_hints=2))
    # the fallback student rule still answers wrongly for revision prompts
    assert record.terminal_state == "exhausted_hints"
    assert record.hints_used == 2
    assert not record.solved and record.completed


def test_session_aborts_on_backend_failure_and_keeps_partial_transcript(en_catalog):
    class Failing:
        def __call__(self, config, prompt):
            raise HttpError("teacher broke", status=400)

    from hintlab.backends.base import ChatClient

    student = make_client("stu", [{"contains": "[[Q]]", "reply": "WRONG ANSWER: 1"}])
    teacher = ChatClient(_backend("tea", role="teacher"), Failing())
    runner = SessionRunner(catalog=en_catalog, clients={"stu": student, "tea": teacher})
    record = runner.run_session(_item(), _config())
    assert record.terminal_state == "aborted"
    assert not record.completed
    assert record.abort_reason is not None and "HttpError" in record.abort_reason
    assert record.initial_solution == "WRONG ANSWER: 1"
    assert record.hints_used == 0


def test_session_aborts_when_translation_needed_but_absent(demo_catalog, demo_corpora):
    item = demo_corpora["fr"][1]
    config = SessionConfig(
        language="fr",
        mode=StudentPromptMode.MULTILINGUAL,
        strategy=HintStrategy.EN_EN_L,
        student=_backend("stu"),
        teacher=_backend("tea", role="teacher"),
        max_hints=1,
    )
    runner = SessionRunner(
        catalog=demo_catalog,
        clients={
            "stu": make_client("stu", [{"fallback": True, "reply": "WRONG ANSWER: 1"}]),
            "tea": make_client("tea", [{"fallback": True, "reply": "hint text"}]),
        },
        translator=None,
    )
    record = runner.run_session(item, config)
    assert record.terminal_state == "aborted"
    assert "TranslatorUnavailable" in record.abort_reason


def test_fingerprint_tracks_identity_not_incidentals():
    config = _config()
    same = _config()
    assert config.fingerprint() == same.fingerprint()

    other_model = SessionConfig(
        language="en",
        mode=StudentPromptMode.ENGLISH_ONLY,
        strategy=HintStrategy.EN_EN,
        student=BackendConfig(name="stu", endpoint="scripted", model_id="different", temperature=0.0),
        teacher=_backend("tea", role="teacher"),
        max_hints=2,
    )
    assert other_model.fingerprint() != config.fingerprint()

    # timeout changes do not change the scientific identity
    lazy = SessionConfig(
        language="en",
        mode=StudentPromptMode.ENGLISH_ONLY,
        strategy=HintStrategy.EN_EN,
        student=BackendConfig(name="stu", endpoint="scripted", model_id="stu-model", temperature=0.0, timeout=5.0),
        teacher=_backend("tea", role="teacher"),
        max_hints=2,
    )
    assert lazy.fingerprint() == config.fingerprint()


def test_journal_key_is_stable_hex():
    key = journal_key("abc123", 7)
    assert key == journal_key("abc123", 7)
    assert len(key) == 16
    assert key != journal_key("abc123", 8)


def test_config_validation_reports_missing_templates(en_catalog):
    config = SessionConfig(
        language="fr",
        mode=StudentPromptMode.MULTILINGUAL,
        strategy=HintStrategy.L_L,
        student=_backend("stu"),
        teacher=_backend("tea", role="teacher"),
    )
    problems = validate_config(config, en_catalog)  # packaged catalog is English-only
    assert any("initial_solution/fr" in p for p in problems)
    assert any("hint_generation/fr" in p for p in problems)

    fine = validate_config(_config(), en_catalog)
    assert fine == []


def test_needs_translator_only_for_translated_hints():
    assert needs_translator(
        SessionConfig(
            language="fr",
            mode=StudentPromptMode.MULTILINGUAL,
            strategy=HintStrategy.EN_EN_L,
            student=_backend("s"),
            teacher=_backend("t", role="teacher"),
        )
    )
    assert not needs_translator(_config(strategy=HintStrategy.EN_EN))
    # English exercises degenerate: nothing to translate
    assert not needs_translator(
        SessionConfig(
            language="en",
            mode=StudentPromptMode.MULTILINGUAL,
            strategy=HintStrategy.EN_EN_L,
            student=_backend("s"),
            teacher=_backend("t", role="teacher"),
        )
    )


def test_record_invariants_reject_inconsistent_states():
    config = _config().summary()
    good_it = Iteration(
        hint="h",
        hint_language_requested="en",
        revised_solution="ANSWER: 42",
        verdict=Verdict(True, "numeric", "extracted=42"),
        hint_label="good",
    )
    bad_it = Iteration(
        hint="h",
        hint_language_requested="en",
        revised_solution="ANSWER: 1",
        verdict=Verdict(False, "numeric", "extracted=1"),
        hint_label="bad",
    )

    def build(**kwargs):
        base = dict(
            key="k" * 16,
            exercise_id=0,
            config=config,
            initial_solution="ANSWER: 1",
            initial_verdict=Verdict(False, "numeric", "extracted=1"),
            iterations=(good_it,),
            hints_used=1,
            terminal_state="correct_after_hints",
        )
        base.update(kwargs)
        return SessionRecord(**base)

    build()  # the consistent baseline passes
    with pytest.raises(ValueError):
        build(hints_used=2)
    with pytest.raises(ValueError):
        build(terminal_state="correct_initially")
    with pytest.raises(ValueError):
        build(terminal_state="exhausted_hints")
    with pytest.raises(ValueError):
        build(iterations=(bad_it,), hints_used=1)  # final iteration wrong, state says rescued
    with pytest.raises(ValueError):
        build(iterations=(good_it, bad_it), hints_used=2)  # iteration after a correct verdict
    with pytest.raises(ValueError):
        build(iterations=(bad_it, good_it, bad_it), hints_used=3)  # exceeds max_hints=2
    with pytest.raises(ValueError):
        build(terminal_state="galaxy_brain")
    mislabeled = Iteration(
        hint="h",
        hint_language_requested="en",
        revised_solution="ANSWER: 42",
        verdict=Verdict(True, "numeric", "extracted=42"),
        hint_label="bad",
    )
    with pytest.raises(ValueError):
        build(iterations=(mislabeled,))


def test_record_round_trips_through_dict():
    config = _config().summary()
    record = SessionRecord(
        key="k" * 16,
        exercise_id=3,
        config=config,
        initial_solution="ANSWER: 1",
        initial_verdict=Verdict(False, "numeric", "extracted=1"),
        iterations=(
            Iteration(
                hint="translated hint",
                hint_language_requested="fr",
                revised_solution="ANSWER: 42",
                verdict=Verdict(True, "numeric", "extracted=42"),
                hint_label="good",
                hint_pre_translation="english hint",
            ),
        ),
        hints_used=1,
        terminal_state="correct_after_hints",
    )
    assert SessionRecord.from_dict(record.to_dict()) == record


def _tiny_matrix(max_hints: int = 1) -> MatrixSpec:
    return MatrixSpec(
        languages=("en",),
        modes=(StudentPromptMode.ENGLISH_ONLY,),
        students=(_backend("stu"),),
        strategies=(HintStrategy.EN_EN,),
        teachers=(_backend("tea", role="teacher"),),
        max_hints=max_hints,
    )


def test_enumerate_configs_full_grid_and_order():
    students = tuple(_backend(name) for name in ("sA", "sB"))
    teachers = tuple(_backend(name, role="teacher") for name in ("tA", "tB"))
    matrix = MatrixSpec(
        languages=LANGUAGES,
        modes=tuple(StudentPromptMode),
        students=students,
        strategies=tuple(HintStrategy),
        teachers=teachers,
    )
    configs = enumerate_configs(matrix)
    assert len(configs) == 11 * 2 * 2 * 4 * 2 == 352
    assert len({c.fingerprint() for c in configs}) == 352

    first = configs[0]
    assert (first.language, first.mode, first.student.name, first.strategy, first.teacher.name) == (
        "en", StudentPromptMode.MULTILINGUAL, "sA", HintStrategy.EN_EN, "tA",
    )
    # teacher is the innermost axis, then strategy
    assert configs[1].teacher.name == "tB"
    assert configs[2].strategy == HintStrategy.EN_EN_L
    last = configs[-1]
    assert (last.language, last.mode, last.student.name, last.strategy, last.teacher.name) == (
        "zh", StudentPromptMode.ENGLISH_ONLY, "sB", HintStrategy.EN_L, "tB",
    )


def test_enumerate_configs_rejects_empty_axes():
    matrix = MatrixSpec(
        languages=(),
        modes=(StudentPromptMode.MULTILINGUAL,),
        students=(_backend("s"),),
        strategies=(HintStrategy.EN_EN,),
        teachers=(_backend("t", role="teacher"),),
    )
    with pytest.raises(EmptyAxis):
        enumerate_configs(matrix)


def _corpus_for_matrix() -> dict[str, list[ExerciseItem]]:
    items = [
        ExerciseItem(
            id=i,
            language="en",
            question=f"Question {i}? [[Q{i}]]",
            gold_answer=Decimal(str(10 + i)),
            gold_answer_str=str(10 + i),
            normalization_applied=False,
        )
        for i in range(3)
    ]
    return {"en": items}


def _matrix_runner(en_catalog) -> SessionRunner:
    student_rules = [
        {"contains": "[[Q0]]", "reply": "ANSWER: 10"},
        {"contains": "[[H1]]", "reply": "ANSWER: 11"},
        {"fallback": True, "reply": "WRONG ANSWER: 0"},
    ]
    teacher_rules = [
        {"contains": "[[Q1]]", "reply": "hint [[H1]]"},
        {"fallback": True, "reply": "hint [[H-none]]"},
    ]
    return _runner(en_catalog, student_rules, teacher_rules)


def test_run_matrix_journals_resumes_and_finalizes(tmp_path, en_catalog):
    matrix = _tiny_matrix()
    configs = enumerate_configs(matrix)
    corpora = _corpus_for_matrix()
    out = tmp_path / "out"

    manifest = run_matrix(configs, corpora, _matrix_runner(en_catalog), out, parallelism=1, resume=False)
    assert manifest["sessions"] == 3
    assert manifest["executed_this_run"] == 3
    assert manifest["resumed"] == 0
    assert manifest["aborted"] == []
    assert manifest["judge_sees_hint"] is False

    first_bytes = (out / "journal.jsonl").read_bytes()
    records = read_journal(out / "journal.jsonl")
    assert [r.terminal_state for r in records] == ["correct_initially", "correct_after_hints", "exhausted_hints"]

    # resume executes nothing and rewrites the journal to identical bytes
    fresh_runner = _matrix_runner(en_catalog)
    manifest2 = run_matrix(configs, corpora, fresh_runner, out, parallelism=1, resume=True)
    assert manifest2["executed_this_run"] == 0
    assert manifest2["resumed"] == 3
    assert sum(fresh_runner.clients[name].calls for name in fresh_runner.clients) == 0
    assert (out / "journal.jsonl").read_bytes() == first_bytes

    # finalize is idempotent
    finalize_journal(out / "journal.jsonl")
    assert (out / "journal.jsonl").read_bytes() == first_bytes


def test_run_matrix_parallel_equals_serial(tmp_path, en_catalog):
    matrix = _tiny_matrix()
    configs = enumerate_configs(matrix)
    corpora = _corpus_for_matrix()
    run_matrix(configs, corpora, _matrix_runner(en_catalog), tmp_path / "serial", resume=False)
    run_matrix(configs, corpora, _matrix_runner(en_catalog), tmp_path / "parallel", parallelism=8, resume=False)
    assert (tmp_path / "serial" / "journal.jsonl").read_bytes() == (tmp_path / "parallel" / "journal.jsonl").read_bytes()


def test_read_journal_keeps_newest_record_per_key(tmp_path, en_catalog):
    matrix = _tiny_matrix()
    configs = enumerate_configs(matrix)
    corpora = _corpus_for_matrix()
    out = tmp_path / "out"
    run_matrix(configs, corpora, _matrix_runner(en_catalog), out, resume=False)

    records = read_journal(out / "journal.jsonl")
    stale = records[0].to_dict() | {"terminal_state": "aborted", "abort_reason": "Stale: retry me"}
    with open(out / "journal.jsonl", "a", encoding="utf-8") as fh:
        import json

        fh.write(json.dumps(records[0].to_dict()) + "\n")  # duplicate newest wins either way
        fh.write(json.dumps(stale) + "\n")

    reread = read_journal(out / "journal.jsonl")
    assert len(reread) == 3
    assert reread[0].terminal_state == "aborted"  # newest line for that key

    # rerunning with resume retries the aborted session and heals the journal
    manifest = run_matrix(configs, corpora, _matrix_runner(en_catalog), out, resume=True)
    assert manifest["executed_this_run"] == 1
    healed = read_journal(out / "journal.jsonl")
    assert [r.terminal_state for r in healed] == ["correct_initially", "correct_after_hints", "exhausted_hints"]


def test_run_matrix_unwritable_dir(tmp_path, en_catalog):
    from hintlab.engine import OutputDirUnwritable

    # a file where a directory is needed fails even when running as root
    blocked = tmp_path / "blocked"
    blocked.write_text("", encoding="utf-8")
    with pytest.raises(OutputDirUnwritable):
        run_matrix(
            enumerate_configs(_tiny_matrix()),
            _corpus_for_matrix(),
            _matrix_runner(en_catalog),
            blocked / "out",
        )


def test_demo_translated_hints_record_pre_translation(demo_records):
    translated_seen = 0
    for record in demo_records:
        for it in record.iterations:
            if record.config["strategy"] == "en_en_l":
                translated_seen += 1
                assert it.hint_pre_translation is not None
                # the recorded request language is what the student received
                assert it.hint_language_requested == record.config["language"]
            else:
                assert it.hint_pre_translation is None
    assert translated_seen == 30  # 13 fr + 17 sw deliveries
