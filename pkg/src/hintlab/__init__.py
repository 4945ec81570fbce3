"""Batch harness for tutor/student hint experiments over parallel math corpora.

A scripted or HTTP chat backend plays the student, another plays the teacher;
sessions run an attempt -> hint -> revision loop per exercise across a matrix
of (language, prompt mode, student, hint strategy, teacher). The journal of
sessions feeds learning-gain tables and leakage / language-consistency /
back-translation audits.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (
    LANGUAGES,
    ExerciseItem,
    CorpusError,
    load_corpora,
    load_corpus,
    resource_class,
)
from .prompts import (
    HintPlan,
    HintStrategy,
    PromptError,
    PromptTemplate,
    StudentPromptMode,
    TemplateCatalog,
    plan_hint_pipeline,
)
from .engine import (
    EngineError,
    Iteration,
    MatrixSpec,
    NumericJudge,
    SessionConfig,
    SessionRecord,
    SessionRunner,
    Verdict,
    enumerate_configs,
    extract_final_answer,
    finalize_journal,
    read_journal,
    run_matrix,
)
from .metrics import (
    AccuracyPair,
    GainTable,
    HintCountStats,
    MetricsError,
    ZeroBaseline,
    accuracy_pair,
    build_gain_table,
    category_mean,
    corpus_bleu,
    hint_count_stats,
    model_delta,
    round_half_up,
    student_gain,
)
from .audit import (
    backtranslation_report,
    consistency_report,
    detect_leakage,
    helpful_leakage_ratio,
    leakage_report,
)
from .backends import (
    BackendConfig,
    BackendError,
    ChatClient,
    HeuristicIdentifier,
    ResponseCache,
    ScriptedIdentifier,
    ScriptedTranslator,
    ScriptedTransport,
)
from .config import ConfigError, build_runner, load_matrix_corpora, parse_backends_file, parse_matrix_file

__all__ = [
    "__version__",
    "LANGUAGES",
    "ExerciseItem",
    "CorpusError",
    "load_corpora",
    "load_corpus",
    "resource_class",
    "HintPlan",
    "HintStrategy",
    "PromptError",
    "PromptTemplate",
    "StudentPromptMode",
    "TemplateCatalog",
    "plan_hint_pipeline",
    "EngineError",
    "Iteration",
    "MatrixSpec",
    "NumericJudge",
    "SessionConfig",
    "SessionRecord",
    "SessionRunner",
    "Verdict",
    "enumerate_configs",
    "extract_final_answer",
    "finalize_journal",
    "read_journal",
    "run_matrix",
    "AccuracyPair",
    "GainTable",
    "HintCountStats",
    "MetricsError",
    "ZeroBaseline",
    "accuracy_pair",
    "build_gain_table",
    "category_mean",
    "corpus_bleu",
    "hint_count_stats",
    "model_delta",
    "round_half_up",
    "student_gain",
    "backtranslation_report",
    "consistency_report",
    "detect_leakage",
    "helpful_leakage_ratio",
    "leakage_report",
    "BackendConfig",
    "BackendError",
    "ChatClient",
    "HeuristicIdentifier",
    "ResponseCache",
    "ScriptedIdentifier",
    "ScriptedTranslator",
    "ScriptedTransport",
    "ConfigError",
    "build_runner",
    "load_matrix_corpora",
    "parse_backends_file",
    "parse_matrix_file",
]
