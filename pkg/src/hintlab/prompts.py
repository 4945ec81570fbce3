"""Prompt catalog, rendering, and the hint-strategy pipelines.

Templates live in a directory tree ``<prompts_dir>/<role>/<lang>.txt`` and use
``{name}`` placeholders (``{{``/``}}`` escape literal braces). Leading lines
starting with ``#`` are header metadata and are stripped at load time, along
with blank lines separating the header from the body.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .corpus import ENGLISH_NAMES, ExerciseItem, check_language


class StudentPromptMode(Enum):
    MULTILINGUAL = "multilingual"
    ENGLISH_ONLY = "english_only"


class HintStrategy(Enum):
    EN_EN = "en_en"
    EN_EN_L = "en_en_l"
    L_L = "l_l"
    EN_L = "en_l"


ROLES: tuple[str, ...] = (
    "initial_solution",
    "revision",
    "hint_generation",
    "judge_initial",
    "judge_revised",
)

REQUIRED_PLACEHOLDERS: dict[str, frozenset[str]] = {
    "initial_solution": frozenset({"question"}),
    "revision": frozenset({"question", "candidate", "hint"}),
    "hint_generation": frozenset({"question", "candidate", "gold", "hint_lang"}),
    "judge_initial": frozenset({"question", "gold", "candidate"}),
    "judge_revised": frozenset({"question", "gold", "candidate"}),
}

# roles whose wording the student/teacher sees in language L; judges stay English
TRANSLATED_ROLES: tuple[str, ...] = ("initial_solution", "revision", "hint_generation")


class PromptError(Exception):
    pass


class MissingTemplate(PromptError):
    def __init__(self, role: str, language: str) -> None:
        super().__init__(f"no template for role {role!r} in language {language!r}")
        self.role = role
        self.language = language


class TemplateValidationError(PromptError):
    pass


class EmptyHint(PromptError):
    pass


_TOKEN_RE = re.compile(r"\{\{|\}\}|\{([a-z_]+)\}|\{|\}")

Segment = tuple[str, str]  # ("lit", text) or ("ph", name)


def parse_segments(body: str) -> list[Segment]:
    """Split a template body into literal and placeholder segments."""
    segments: list[Segment] = []
    literal: list[str] = []
    pos = 0
    for match in _TOKEN_RE.finditer(body):
        literal.append(body[pos : match.start()])
        token = match.group(0)
        if token == "{{":
            literal.append("{")
        elif token == "}}":
            literal.append("}")
        elif match.group(1):
            segments.append(("lit", "".join(literal)))
            literal = []
            segments.append(("ph", match.group(1)))
        else:
            raise TemplateValidationError(f"stray {token!r} at offset {match.start()}; escape braces by doubling")
        pos = match.end()
    literal.append(body[pos:])
    segments.append(("lit", "".join(literal)))
    return segments


@dataclass(frozen=True)
class PromptTemplate:
    role: str
    language: str
    body: str

    def __post_init__(self) -> None:
        required = REQUIRED_PLACEHOLDERS[self.role]
        used = self.placeholders()
        if used != required:
            missing = sorted(required - used)
            extra = sorted(used - required)
            detail = []
            if missing:
                detail.append(f"missing {missing}")
            if extra:
                detail.append(f"unknown {extra}")
            raise TemplateValidationError(
                f"template ({self.role}, {self.language}): placeholder set mismatch: {', '.join(detail)}"
            )

    def segments(self) -> list[Segment]:
        return parse_segments(self.body)

    def placeholders(self) -> frozenset[str]:
        return frozenset(name for kind, name in parse_segments(self.body) if kind == "ph")

    def render(self, **values: str) -> str:
        required = REQUIRED_PLACEHOLDERS[self.role]
        if set(values) != required:
            raise TemplateValidationError(
                f"template ({self.role}, {self.language}): render got {sorted(values)}, needs {sorted(required)}"
            )
        parts = []
        for kind, payload in self.segments():
            parts.append(values[payload] if kind == "ph" else payload)
        return "".join(parts)

    def extract(self, rendered: str) -> dict[str, str]:
        """Recover bound values from a rendered prompt (shortest-match on separators)."""
        segments = self.segments()
        values: dict[str, str] = {}
        pos = 0
        for i, (kind, payload) in enumerate(segments):
            if kind == "lit":
                if payload and not rendered.startswith(payload, pos):
                    raise ValueError(f"rendered text diverges from template at offset {pos}")
                pos += len(payload)
                continue
            # find the next literal to bound this placeholder's span
            next_lit = next((p for k, p in segments[i + 1 :] if k == "lit" and p), None)
            if next_lit is None:
                values[payload] = rendered[pos:]
                pos = len(rendered)
            else:
                end = rendered.find(next_lit, pos)
                if end < 0:
                    raise ValueError(f"separator {next_lit[:20]!r} not found after offset {pos}")
                values[payload] = rendered[pos:end]
                pos = end
        return values


def _strip_header(text: str) -> str:
    lines = text.split("\n")
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        i += 1
    while i < len(lines) and not lines[i].strip():
        i += 1
    return "\n".join(lines[i:])


class TemplateCatalog:
    """Immutable set of templates loaded from a prompts directory."""

    def __init__(self, templates: dict[tuple[str, str], PromptTemplate]) -> None:
        self._templates = dict(templates)

    @classmethod
    def load(cls, prompts_dir: Path | str) -> "TemplateCatalog":
        prompts_dir = Path(prompts_dir)
        if not prompts_dir.is_dir():
            raise TemplateValidationError(f"prompts directory not found: {prompts_dir}")
        templates: dict[tuple[str, str], PromptTemplate] = {}
        for role in ROLES:
            role_dir = prompts_dir / role
            if not role_dir.is_dir():
                continue
            for path in sorted(role_dir.glob("*.txt")):
                language = check_language(path.stem)
                body = _strip_header(path.read_text(encoding="utf-8")).strip("\n")
                if not body.strip():
                    raise TemplateValidationError(f"template file {path} is empty after header stripping")
                templates[(role, language)] = PromptTemplate(role=role, language=language, body=body)
        if not templates:
            raise TemplateValidationError(f"no templates found under {prompts_dir}")
        return cls(templates)

    def get(self, role: str, language: str) -> PromptTemplate:
        try:
            return self._templates[(role, language)]
        except KeyError:
            raise MissingTemplate(role, language) from None

    def has(self, role: str, language: str) -> bool:
        return (role, language) in self._templates

    def languages(self, role: str) -> frozenset[str]:
        return frozenset(lang for r, lang in self._templates if r == role)


def student_prompt_language(mode: StudentPromptMode, exercise_language: str) -> str:
    return exercise_language if mode is StudentPromptMode.MULTILINGUAL else "en"


def render_solution_prompt(catalog: TemplateCatalog, item: ExerciseItem, mode: StudentPromptMode) -> str:
    language = student_prompt_language(mode, item.language)
    return catalog.get("initial_solution", language).render(question=item.question)


def render_revision_prompt(
    catalog: TemplateCatalog,
    item: ExerciseItem,
    candidate: str,
    hint: str,
    mode: StudentPromptMode,
) -> str:
    if not hint.strip():
        raise EmptyHint("revision prompt needs a non-empty hint")
    language = student_prompt_language(mode, item.language)
    return catalog.get("revision", language).render(question=item.question, candidate=candidate, hint=hint)


@dataclass(frozen=True)
class HintPlan:
    teacher_prompt_language: str
    requested_hint_language: str
    post_translation: Optional[tuple[str, str]] = None  # (source, target)

    @property
    def delivered_hint_language(self) -> str:
        """Language of the hint the student actually receives."""
        return self.post_translation[1] if self.post_translation else self.requested_hint_language


def plan_hint_pipeline(strategy: HintStrategy, language: str) -> HintPlan:
    """Resolve a strategy to concrete languages. All strategies collapse for L = en."""
    check_language(language)
    if language == "en":
        return HintPlan("en", "en")
    if strategy is HintStrategy.EN_EN:
        return HintPlan("en", "en")
    if strategy is HintStrategy.EN_EN_L:
        return HintPlan("en", "en", post_translation=("en", language))
    if strategy is HintStrategy.L_L:
        return HintPlan(language, language)
    if strategy is HintStrategy.EN_L:
        return HintPlan("en", language)
    raise ValueError(f"unknown strategy {strategy!r}")


def render_hint_prompt(catalog: TemplateCatalog, item: ExerciseItem, candidate: str, plan: HintPlan) -> str:
    template = catalog.get("hint_generation", plan.teacher_prompt_language)
    return template.render(
        question=item.question,
        candidate=candidate,
        gold=item.gold_answer_str,
        hint_lang=ENGLISH_NAMES[plan.requested_hint_language],
    )


def render_judge_prompt(catalog: TemplateCatalog, item: ExerciseItem, candidate: str, revised: bool) -> str:
    role = "judge_revised" if revised else "judge_initial"
    return catalog.get(role, "en").render(question=item.question, gold=item.gold_answer_str, candidate=candidate)


def freeze_catalog_translations(
    prompts_dir: Path | str,
    languages: Iterable[str],
    translator,
    roles: tuple[str, ...] = TRANSLATED_ROLES,
    overwrite: bool = False,
) -> list[Path]:
    """Translate English templates once and write the results as frozen files.

    The translator must leave ``{name}`` tokens intact; output is re-validated
    so a mangling translator fails loudly instead of corrupting the catalog.
    """
    prompts_dir = Path(prompts_dir)
    catalog = TemplateCatalog.load(prompts_dir)
    written: list[Path] = []
    for role in roles:
        source = catalog.get(role, "en")
        for language in languages:
            check_language(language)
            if language == "en":
                continue
            out_path = prompts_dir / role / f"{language}.txt"
            if out_path.exists() and not overwrite:
                continue
            translated = translator.translate(source.body, "en", language)
            candidate = PromptTemplate(role=role, language=language, body=translated)  # validates placeholders
            header = f"# machine-translated from en/{role}; frozen, do not re-translate per run\n\n"
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_text(header + candidate.body + "\n", encoding="utf-8")
            written.append(out_path)
    return written
