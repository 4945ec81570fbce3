"""Tutoring-loop execution: judging, per-exercise sessions, and the experiment matrix.

A session follows one exercise through the loop: the student answers, and
while the answer is wrong the teacher supplies up to N hints, each followed by
a student revision, stopping early on a correct verdict. Completed sessions
are journaled as JSONL so interrupted runs resume without repeating work.
"""

from __future__ import annotations

import itertools
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from decimal import Decimal
from hashlib import sha256
from pathlib import Path
from typing import Optional, Protocol, Sequence

from ._io import append_jsonl, canonical_json, dump_json, read_jsonl, write_jsonl
from .backends import BackendConfig, BackendError, ChatClient, TranslatorUnavailable
from .corpus import ExerciseItem, check_language
from .prompts import (
    HintStrategy,
    PromptError,
    StudentPromptMode,
    TemplateCatalog,
    plan_hint_pipeline,
    render_hint_prompt,
    render_judge_prompt,
    render_revision_prompt,
    render_solution_prompt,
    student_prompt_language,
)

JOURNAL_SCHEMA = 1

TERMINAL_CORRECT_INITIALLY = "correct_initially"
TERMINAL_CORRECT_AFTER_HINTS = "correct_after_hints"
TERMINAL_EXHAUSTED_HINTS = "exhausted_hints"
TERMINAL_ABORTED = "aborted"


class EngineError(Exception):
    pass


class EmptyAxis(EngineError):
    pass


class JudgeUnparseable(EngineError):
    pass


class OutputDirUnwritable(EngineError):
    pass


@dataclass(frozen=True)
class Verdict:
    correct: bool
    judge_kind: str  # "numeric" | "llm"
    raw_judgment: str

    def to_dict(self) -> dict:
        return {"correct": self.correct, "judge_kind": self.judge_kind, "raw_judgment": self.raw_judgment}

    @staticmethod
    def from_dict(raw: dict) -> "Verdict":
        return Verdict(bool(raw["correct"]), raw["judge_kind"], raw["raw_judgment"])


_ANSWER_LINE_RE = re.compile(r"answer\s*:\s*(.+)", re.IGNORECASE)
_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


def extract_final_answer(text: str) -> Optional[str]:
    """Pull the final numeric answer out of a solution text.

    Prefers the last ``ANSWER:`` line; falls back to the last standalone
    number anywhere in the text. ASCII commas are stripped first so grouped
    digits parse as one number.
    """
    answer_lines = _ANSWER_LINE_RE.findall(text)
    if answer_lines:
        numbers = _NUMBER_RE.findall(answer_lines[-1].replace(",", ""))
        if numbers:
            return numbers[-1]
    numbers = _NUMBER_RE.findall(text.replace(",", ""))
    return numbers[-1] if numbers else None


class NumericJudge:
    """Offline verdicts from the transcript alone; reproducible by construction."""

    kind = "numeric"

    def judge(self, candidate: str, item: ExerciseItem, revised: bool = False) -> Verdict:
        extracted = extract_final_answer(candidate)
        if extracted is None:
            return Verdict(correct=False, judge_kind=self.kind, raw_judgment="no_answer_found")
        correct = Decimal(extracted) == item.gold_answer
        return Verdict(correct=correct, judge_kind=self.kind, raw_judgment=f"extracted={extracted}")


_VERDICT_TOKEN_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


class LlmJudge:
    """Judge backed by a chat model; sees question, gold answer, and the solution only."""

    kind = "llm"

    def __init__(self, client: ChatClient, catalog: TemplateCatalog) -> None:
        self._client = client
        self._catalog = catalog

    def judge(self, candidate: str, item: ExerciseItem, revised: bool = False) -> Verdict:
        prompt = render_judge_prompt(self._catalog, item, candidate, revised=revised)
        reply = self._client.complete(prompt).response
        match = _VERDICT_TOKEN_RE.search(reply)
        if match is None:
            raise JudgeUnparseable(f"judge reply holds no yes/no token: {reply[:120]!r}")
        return Verdict(correct=match.group(1).lower() == "yes", judge_kind=self.kind, raw_judgment=reply)


class Judge(Protocol):
    kind: str

    def judge(self, candidate: str, item: ExerciseItem, revised: bool = False) -> Verdict: ...


def judge_solution(candidate: str, item: ExerciseItem, judge: Judge, revised: bool = False) -> Verdict:
    if not candidate.strip():
        return Verdict(correct=False, judge_kind=judge.kind, raw_judgment="empty_candidate")
    return judge.judge(candidate, item, revised=revised)


@dataclass(frozen=True)
class SessionConfig:
    language: str
    mode: StudentPromptMode
    strategy: HintStrategy
    student: BackendConfig
    teacher: BackendConfig
    max_hints: int = 1
    judge_kind: str = "numeric"
    judge_backend: Optional[BackendConfig] = None

    def __post_init__(self) -> None:
        check_language(self.language)
        if self.max_hints < 1:
            raise ValueError("max_hints must be >= 1")
        if self.judge_kind not in ("numeric", "llm"):
            raise ValueError(f"unknown judge kind {self.judge_kind!r}")
        if self.judge_kind == "llm" and self.judge_backend is None:
            raise ValueError("llm judge needs a judge backend")

    def summary(self) -> dict:
        return {
            "fingerprint": self.fingerprint(),
            "language": self.language,
            "mode": self.mode.value,
            "strategy": self.strategy.value,
            "student": self.student.name,
            "teacher": self.teacher.name,
            "judge": self.judge_kind,
            "max_hints": self.max_hints,
        }

    def fingerprint(self) -> str:
        identity = {
            "language": self.language,
            "mode": self.mode.value,
            "strategy": self.strategy.value,
            "student": [self.student.name, self.student.model_id, self.student.resolved_temperature()],
            "teacher": [self.teacher.name, self.teacher.model_id, self.teacher.resolved_temperature()],
            "judge": self.judge_kind,
            "max_hints": self.max_hints,
        }
        return sha256(canonical_json(identity).encode("utf-8")).hexdigest()[:12]


def required_templates(config: SessionConfig) -> set[tuple[str, str]]:
    """Template (role, language) pairs a config can touch at run time."""
    student_lang = student_prompt_language(config.mode, config.language)
    plan = plan_hint_pipeline(config.strategy, config.language)
    needed = {
        ("initial_solution", student_lang),
        ("revision", student_lang),
        ("hint_generation", plan.teacher_prompt_language),
    }
    if config.judge_kind == "llm":
        needed.add(("judge_initial", "en"))
        needed.add(("judge_revised", "en"))
    return needed


def validate_config(config: SessionConfig, catalog: TemplateCatalog) -> list[str]:
    """Return human-readable problems; empty list means the config can run."""
    problems = []
    for role, language in sorted(required_templates(config)):
        if not catalog.has(role, language):
            problems.append(f"missing template {role}/{language}.txt for {config.strategy.value} {config.mode.value} {config.language}")
    return problems


def needs_translator(config: SessionConfig) -> bool:
    return plan_hint_pipeline(config.strategy, config.language).post_translation is not None


@dataclass(frozen=True)
class Iteration:
    hint: str
    hint_language_requested: str
    revised_solution: str
    verdict: Verdict
    hint_label: str  # "good" iff the revised verdict is correct
    hint_pre_translation: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "hint": self.hint,
            "hint_language_requested": self.hint_language_requested,
            "hint_pre_translation": self.hint_pre_translation,
            "revised_solution": self.revised_solution,
            "verdict": self.verdict.to_dict(),
            "hint_label": self.hint_label,
        }

    @staticmethod
    def from_dict(raw: dict) -> "Iteration":
        return Iteration(
            hint=raw["hint"],
            hint_language_requested=raw["hint_language_requested"],
            hint_pre_translation=raw.get("hint_pre_translation"),
            revised_solution=raw["revised_solution"],
            verdict=Verdict.from_dict(raw["verdict"]),
            hint_label=raw["hint_label"],
        )


def journal_key(fingerprint: str, exercise_id: int) -> str:
    return sha256(f"{fingerprint}:{exercise_id}".encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SessionRecord:
    key: str
    exercise_id: int
    config: dict  # SessionConfig.summary()
    initial_solution: str
    initial_verdict: Verdict
    iterations: tuple[Iteration, ...]
    hints_used: int
    terminal_state: str
    abort_reason: Optional[str] = None
    schema: int = JOURNAL_SCHEMA

    def __post_init__(self) -> None:
        if self.hints_used != len(self.iterations):
            raise ValueError("hints_used must equal the iteration count")
        if self.terminal_state == TERMINAL_ABORTED:
            return
        if self.hints_used > self.config["max_hints"]:
            raise ValueError("hints_used exceeds max_hints")
        if (self.terminal_state == TERMINAL_CORRECT_INITIALLY) != (len(self.iterations) == 0):
            raise ValueError("iterations must be empty exactly for initially-correct sessions")
        for i, iteration in enumerate(self.iterations):
            expect_good = iteration.verdict.correct
            if (iteration.hint_label == "good") != expect_good:
                raise ValueError("hint_label must be good exactly when the revision is correct")
            if iteration.verdict.correct and i != len(self.iterations) - 1:
                raise ValueError("no iteration may follow a correct verdict")
        if self.terminal_state == TERMINAL_CORRECT_AFTER_HINTS:
            if not self.iterations or not self.iterations[-1].verdict.correct:
                raise ValueError("correct_after_hints needs a final correct iteration")
        elif self.terminal_state == TERMINAL_EXHAUSTED_HINTS:
            if any(it.verdict.correct for it in self.iterations):
                raise ValueError("exhausted_hints must have no correct iteration")
            if self.hints_used != self.config["max_hints"]:
                raise ValueError("exhausted_hints must use all hints")
        elif self.terminal_state != TERMINAL_CORRECT_INITIALLY:
            raise ValueError(f"unknown terminal state {self.terminal_state!r}")

    @property
    def completed(self) -> bool:
        return self.terminal_state != TERMINAL_ABORTED

    @property
    def solved(self) -> bool:
        return self.terminal_state in (TERMINAL_CORRECT_INITIALLY, TERMINAL_CORRECT_AFTER_HINTS)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "key": self.key,
            "exercise_id": self.exercise_id,
            "config": self.config,
            "initial_solution": self.initial_solution,
            "initial_verdict": self.initial_verdict.to_dict(),
            "iterations": [it.to_dict() for it in self.iterations],
            "hints_used": self.hints_used,
            "terminal_state": self.terminal_state,
            "abort_reason": self.abort_reason,
        }

    @staticmethod
    def from_dict(raw: dict) -> "SessionRecord":
        return SessionRecord(
            key=raw["key"],
            exercise_id=int(raw["exercise_id"]),
            config=raw["config"],
            initial_solution=raw["initial_solution"],
            initial_verdict=Verdict.from_dict(raw["initial_verdict"]),
            iterations=tuple(Iteration.from_dict(it) for it in raw["iterations"]),
            hints_used=int(raw["hints_used"]),
            terminal_state=raw["terminal_state"],
            abort_reason=raw.get("abort_reason"),
            schema=int(raw.get("schema", JOURNAL_SCHEMA)),
        )


class SessionRunner:
    """Executes single sessions against a fixed set of constructed clients."""

    def __init__(
        self,
        catalog: TemplateCatalog,
        clients: dict[str, ChatClient],
        translator=None,
        judge_clients: Optional[dict[str, ChatClient]] = None,
    ) -> None:
        self.catalog = catalog
        self.clients = clients
        self.translator = translator
        self.judge_clients = judge_clients or {}

    def _client(self, config: BackendConfig) -> ChatClient:
        try:
            return self.clients[config.name]
        except KeyError:
            raise EngineError(f"no constructed client for backend {config.name!r}") from None

    def _judge(self, config: SessionConfig) -> Judge:
        if config.judge_kind == "numeric":
            return NumericJudge()
        assert config.judge_backend is not None
        name = config.judge_backend.name
        try:
            client = self.judge_clients[name]
        except KeyError:
            raise EngineError(f"no constructed judge client named {name!r}") from None
        return LlmJudge(client, self.catalog)

    def run_session(self, item: ExerciseItem, config: SessionConfig) -> SessionRecord:
        key = journal_key(config.fingerprint(), item.id)
        summary = config.summary()
        student = self._client(config.student)
        teacher = self._client(config.teacher)
        judge = self._judge(config)

        initial_solution = ""
        initial_verdict = Verdict(False, config.judge_kind, "not_judged")
        iterations: list[Iteration] = []
        try:
            initial_solution = student.complete(render_solution_prompt(self.catalog, item, config.mode)).response
            initial_verdict = judge_solution(initial_solution, item, judge, revised=False)
            if initial_verdict.correct:
                return SessionRecord(
                    key=key,
                    exercise_id=item.id,
                    config=summary,
                    initial_solution=initial_solution,
                    initial_verdict=initial_verdict,
                    iterations=(),
                    hints_used=0,
                    terminal_state=TERMINAL_CORRECT_INITIALLY,
                )

            candidate = initial_solution
            plan = plan_hint_pipeline(config.strategy, item.language)
            verdict = initial_verdict
            for _ in range(config.max_hints):
                hint_raw = teacher.complete(render_hint_prompt(self.catalog, item, candidate, plan)).response
                hint = hint_raw
                pre_translation = None
                if plan.post_translation is not None:
                    if self.translator is None:
                        raise TranslatorUnavailable(
                            f"strategy {config.strategy.value} for {item.language} needs a translator backend"
                        )
                    source, target = plan.post_translation
                    pre_translation = hint_raw
                    hint = self.translator.translate(hint_raw, source, target)
                revised = student.complete(
                    render_revision_prompt(self.catalog, item, candidate, hint, config.mode)
                ).response
                verdict = judge_solution(revised, item, judge, revised=True)
                iterations.append(
                    Iteration(
                        hint=hint,
                        hint_language_requested=plan.delivered_hint_language,
                        hint_pre_translation=pre_translation,
                        revised_solution=revised,
                        verdict=verdict,
                        hint_label="good" if verdict.correct else "bad",
                    )
                )
                candidate = revised
                if verdict.correct:
                    break
            state = TERMINAL_CORRECT_AFTER_HINTS if verdict.correct else TERMINAL_EXHAUSTED_HINTS
            return SessionRecord(
                key=key,
                exercise_id=item.id,
                config=summary,
                initial_solution=initial_solution,
                initial_verdict=initial_verdict,
                iterations=tuple(iterations),
                hints_used=len(iterations),
                terminal_state=state,
            )
        except (BackendError, PromptError, JudgeUnparseable) as err:
            return SessionRecord(
                key=key,
                exercise_id=item.id,
                config=summary,
                initial_solution=initial_solution,
                initial_verdict=initial_verdict,
                iterations=tuple(iterations),
                hints_used=len(iterations),
                terminal_state=TERMINAL_ABORTED,
                abort_reason=f"{type(err).__name__}: {err}",
            )


@dataclass(frozen=True)
class MatrixSpec:
    languages: tuple[str, ...]
    modes: tuple[StudentPromptMode, ...]
    students: tuple[BackendConfig, ...]
    strategies: tuple[HintStrategy, ...]
    teachers: tuple[BackendConfig, ...]
    max_hints: int = 1
    judge_kind: str = "numeric"
    judge_backend: Optional[BackendConfig] = None


def enumerate_configs(matrix: MatrixSpec) -> list[SessionConfig]:
    """Cartesian product over (language, mode, student, strategy, teacher), in that axis order."""
    axes = {
        "languages": matrix.languages,
        "modes": matrix.modes,
        "students": matrix.students,
        "strategies": matrix.strategies,
        "teachers": matrix.teachers,
    }
    for axis, values in axes.items():
        if not values:
            raise EmptyAxis(f"matrix axis {axis!r} is empty")
    students = tuple(cfg.with_role_defaults("student") for cfg in matrix.students)
    teachers = tuple(cfg.with_role_defaults("teacher") for cfg in matrix.teachers)
    judge_backend = matrix.judge_backend.with_role_defaults("judge") if matrix.judge_backend else None
    configs = []
    for language, mode, student, strategy, teacher in itertools.product(
        matrix.languages, matrix.modes, students, matrix.strategies, teachers
    ):
        configs.append(
            SessionConfig(
                language=language,
                mode=mode,
                strategy=strategy,
                student=student,
                teacher=teacher,
                max_hints=matrix.max_hints,
                judge_kind=matrix.judge_kind,
                judge_backend=judge_backend,
            )
        )
    return configs


def record_sort_key(record: SessionRecord) -> tuple:
    cfg = record.config
    return (
        cfg["language"],
        cfg["mode"],
        cfg["strategy"],
        cfg["student"],
        cfg["teacher"],
        record.exercise_id,
    )


def read_journal(path: Path | str) -> list[SessionRecord]:
    """Read a journal keeping only the newest record per session key."""
    by_key: dict[str, SessionRecord] = {}
    for raw in read_jsonl(path):
        record = SessionRecord.from_dict(raw)
        by_key[record.key] = record
    return sorted(by_key.values(), key=record_sort_key)


def finalize_journal(path: Path | str) -> list[SessionRecord]:
    """Rewrite the journal deduplicated and canonically sorted (idempotent)."""
    records = read_journal(path)
    write_jsonl(path, [r.to_dict() for r in records])
    return records


def run_matrix(
    configs: Sequence[SessionConfig],
    corpora: dict[str, list[ExerciseItem]],
    runner: SessionRunner,
    out_dir: Path | str,
    parallelism: int = 1,
    resume: bool = True,
) -> dict:
    """Run every (config, exercise) session, journal results, return the manifest.

    The journal is append-only while sessions run (crash-safe) and is
    rewritten in canonical order on completion, so finished runs are
    byte-identical no matter the parallelism or completion order.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as err:
        raise OutputDirUnwritable(f"cannot write to {out_dir}: {err}") from err

    journal_path = out_dir / "journal.jsonl"
    done: set[str] = set()
    if resume and journal_path.is_file():
        done = {r.key for r in read_journal(journal_path) if r.completed}
    elif journal_path.is_file():
        journal_path.unlink()

    work: list[tuple[SessionConfig, ExerciseItem]] = []
    for config in configs:
        try:
            items = corpora[config.language]
        except KeyError:
            raise EngineError(f"no corpus loaded for language {config.language!r}") from None
        for item in items:
            if journal_key(config.fingerprint(), item.id) not in done:
                work.append((config, item))

    started = time.monotonic()
    journal_lock = threading.Lock()
    executed = 0

    def _run_one(pair: tuple[SessionConfig, ExerciseItem]) -> SessionRecord:
        config, item = pair
        return runner.run_session(item, config)

    if work:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_one, pair) for pair in work]
            for future in as_completed(futures):
                record = future.result()
                with journal_lock:
                    append_jsonl(journal_path, record.to_dict())
                    executed += 1

    records = finalize_journal(journal_path)
    aborted = [r for r in records if not r.completed]
    manifest = {
        "schema": JOURNAL_SCHEMA,
        "configs": len(configs),
        "exercises": {lang: len(items) for lang, items in sorted(corpora.items())},
        "sessions": len(records),
        "executed_this_run": executed,
        "resumed": len(done),
        "aborted": [{"key": r.key, "reason": r.abort_reason, "config": r.config, "exercise_id": r.exercise_id} for r in aborted],
        "backend_calls": {name: client.calls for name, client in sorted(runner.clients.items())},
        "wall_time_s": round(time.monotonic() - started, 3),
        "judge_sees_hint": False,
        "revision_context": "latest_candidate_and_hint_only",
    }
    dump_json(out_dir / "manifest.json", manifest)
    return manifest
