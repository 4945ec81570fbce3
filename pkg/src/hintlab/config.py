"""Run configuration: matrix and backends files, client construction, run specs.

Config files are TOML or JSON (by extension). Secrets never live in them;
HTTP backends name an environment variable that holds the bearer token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .backends import (
    BackendConfig,
    ChatClient,
    ChatTranslator,
    FastTextIdentifier,
    HeuristicIdentifier,
    HttpChatTransport,
    IdentityTranslator,
    ResponseCache,
    ScriptedIdentifier,
    ScriptedTransport,
    ScriptedTranslator,
)
from .corpus import ExerciseItem, check_language, corpus_path, load_corpus
from .engine import MatrixSpec, SessionRunner
from .prompts import HintStrategy, StudentPromptMode, TemplateCatalog


class ConfigError(Exception):
    pass


def load_structured(path: Path | str) -> Any:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON: {err}") from err


_BACKEND_FIELDS = {
    "endpoint",
    "model_id",
    "temperature",
    "max_output_tokens",
    "timeout",
    "max_retries",
    "rate_limit",
    "api_key_env",
    "rules",
    "cache_sampled",
}


@dataclass
class BackendsSetup:
    configs: dict[str, BackendConfig]
    translator_spec: Optional[dict]
    lid_spec: Optional[dict]
    base_dir: Path


def parse_backends_file(path: Path | str) -> BackendsSetup:
    path = Path(path)
    raw = load_structured(path)
    if not isinstance(raw, dict) or "backends" not in raw:
        raise ConfigError(f"{path}: expected a mapping with a 'backends' table")
    configs: dict[str, BackendConfig] = {}
    for name, entry in raw["backends"].items():
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: backend {name!r} must be a table")
        unknown = set(entry) - _BACKEND_FIELDS
        if unknown:
            raise ConfigError(f"{path}: backend {name!r} has unknown fields {sorted(unknown)}")
        for required in ("endpoint", "model_id"):
            if required not in entry:
                raise ConfigError(f"{path}: backend {name!r} lacks required field {required!r}")
        api_key_env = str(entry.get("api_key_env", "HINTLAB_API_KEY"))
        if any(ch in api_key_env for ch in " =\t"):
            raise ConfigError(f"{path}: api_key_env must name an environment variable, not hold a value")
        rules = entry.get("rules")
        if entry["endpoint"] == "scripted" and rules is None:
            raise ConfigError(f"{path}: scripted backend {name!r} needs a 'rules' file path")
        configs[name] = BackendConfig(
            name=name,
            endpoint=entry["endpoint"],
            model_id=entry["model_id"],
            temperature=entry.get("temperature"),
            max_output_tokens=int(entry.get("max_output_tokens", 1024)),
            timeout=float(entry.get("timeout", 60.0)),
            max_retries=int(entry.get("max_retries", 3)),
            rate_limit=entry.get("rate_limit"),
            api_key_env=entry.get("api_key_env", "HINTLAB_API_KEY"),
            rules_path=str(path.parent / rules) if rules else None,
            cache_sampled=bool(entry.get("cache_sampled", True)),
        )
    return BackendsSetup(
        configs=configs,
        translator_spec=raw.get("translator"),
        lid_spec=raw.get("lid"),
        base_dir=path.parent,
    )


def parse_matrix_file(
    path: Path | str,
    backends: BackendsSetup,
    max_hints_override: Optional[int] = None,
    judge_override: Optional[str] = None,
) -> MatrixSpec:
    raw = load_structured(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping")

    def _axis(name: str) -> list:
        values = raw.get(name)
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}: axis {name!r} must be a non-empty list")
        return values

    languages = tuple(check_language(code) for code in _axis("languages"))
    try:
        modes = tuple(StudentPromptMode(m) for m in _axis("modes"))
        strategies = tuple(HintStrategy(s) for s in _axis("strategies"))
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None

    def _backend_axis(name: str) -> tuple[BackendConfig, ...]:
        resolved = []
        for backend_name in _axis(name):
            if backend_name not in backends.configs:
                raise ConfigError(f"{path}: {name} axis names unknown backend {backend_name!r}")
            resolved.append(backends.configs[backend_name])
        return tuple(resolved)

    judge_kind = judge_override or raw.get("judge", "numeric")
    if judge_kind not in ("numeric", "llm"):
        raise ConfigError(f"{path}: judge must be 'numeric' or 'llm', got {judge_kind!r}")
    judge_backend = None
    if judge_kind == "llm":
        judge_name = raw.get("judge_backend")
        if not judge_name:
            raise ConfigError(f"{path}: llm judge needs a 'judge_backend' naming a backend")
        if judge_name not in backends.configs:
            raise ConfigError(f"{path}: judge_backend names unknown backend {judge_name!r}")
        judge_backend = backends.configs[judge_name]

    max_hints = max_hints_override if max_hints_override is not None else int(raw.get("max_hints", 1))
    if max_hints < 1:
        raise ConfigError(f"{path}: max_hints must be >= 1")

    return MatrixSpec(
        languages=languages,
        modes=modes,
        students=_backend_axis("students"),
        strategies=strategies,
        teachers=_backend_axis("teachers"),
        max_hints=max_hints,
        judge_kind=judge_kind,
        judge_backend=judge_backend,
    )


def load_matrix_corpora(corpus_root: Path | str, languages: tuple[str, ...]) -> dict[str, list[ExerciseItem]]:
    """Load corpora for the matrix languages.

    corpus_root is either a directory in the default mgsm_<code>.tsv layout or
    a TOML/JSON mapping file remapping language codes to file paths.
    """
    corpus_root = Path(corpus_root)
    remap: dict[str, str] = {}
    if corpus_root.is_file():
        raw = load_structured(corpus_root)
        if not isinstance(raw, dict):
            raise ConfigError(f"{corpus_root}: corpus map must be a mapping of language -> path")
        remap = {str(k): str(v) for k, v in raw.items()}
        base = corpus_root.parent
    corpora = {}
    for language in dict.fromkeys(languages):
        if remap:
            if language not in remap:
                raise ConfigError(f"{corpus_root}: no corpus path mapped for language {language!r}")
            path = base / remap[language]
        else:
            path = corpus_path(corpus_root, language)
        corpora[language] = load_corpus(path, language)
    counts = {lang: len(items) for lang, items in corpora.items()}
    if len(set(counts.values())) > 1:
        raise ConfigError(f"corpus files are not parallel, row counts differ: {counts}")
    return corpora


def _make_client(config: BackendConfig, role: str, cache: Optional[ResponseCache]) -> ChatClient:
    bound = config.with_role_defaults(role)
    if bound.endpoint == "scripted":
        if not bound.rules_path:
            raise ConfigError(f"scripted backend {bound.name!r} needs a rules file")
        transport = ScriptedTransport.from_file(bound.rules_path)
    else:
        transport = HttpChatTransport()
    return ChatClient(bound, transport, cache=cache)


def build_translator(setup: BackendsSetup, cache: Optional[ResponseCache]):
    spec = setup.translator_spec
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "identity":
        return IdentityTranslator()
    if kind == "scripted":
        pairs = spec.get("pairs")
        if not pairs:
            raise ConfigError("scripted translator needs a 'pairs' file path")
        return ScriptedTranslator.from_file(setup.base_dir / pairs)
    if kind == "chat":
        backend_name = spec.get("backend")
        if backend_name not in setup.configs:
            raise ConfigError(f"chat translator names unknown backend {backend_name!r}")
        return ChatTranslator(_make_client(setup.configs[backend_name], "translator", cache))
    raise ConfigError(f"unknown translator kind {kind!r}")


def build_identifier(setup: BackendsSetup):
    spec = setup.lid_spec
    if spec is None:
        return HeuristicIdentifier()
    kind = spec.get("kind")
    if kind == "heuristic":
        return HeuristicIdentifier()
    if kind == "scripted":
        rules = spec.get("rules")
        if not rules:
            raise ConfigError("scripted lid needs a 'rules' file path")
        return ScriptedIdentifier.from_file(setup.base_dir / rules)
    if kind == "fasttext":
        model_path = spec.get("model_path")
        if not model_path:
            raise ConfigError("fasttext lid needs a 'model_path'")
        return FastTextIdentifier(setup.base_dir / model_path)
    raise ConfigError(f"unknown lid kind {kind!r}")


def build_runner(
    matrix: MatrixSpec,
    setup: BackendsSetup,
    catalog: TemplateCatalog,
    cache_dir: Optional[Path | str],
) -> SessionRunner:
    cache = ResponseCache(cache_dir) if cache_dir is not None else None
    clients: dict[str, ChatClient] = {}
    for config in matrix.students:
        clients.setdefault(config.name, _make_client(config, "student", cache))
    for config in matrix.teachers:
        if config.name in clients:
            raise ConfigError(f"backend {config.name!r} appears as both student and teacher; give it two names")
        clients.setdefault(config.name, _make_client(config, "teacher", cache))
    judge_clients = {}
    if matrix.judge_backend is not None:
        judge_clients[matrix.judge_backend.name] = _make_client(matrix.judge_backend, "judge", cache)
    translator = build_translator(setup, cache)
    return SessionRunner(catalog=catalog, clients=clients, translator=translator, judge_clients=judge_clients)


RUN_SPEC_SCHEMA = 1


@dataclass(frozen=True)
class RunSpec:
    matrix_path: str
    corpus_root: str
    prompts_dir: str
    backends_path: str
    out_dir: str
    parallelism: int = 1
    max_hints: Optional[int] = None  # None: take the matrix file's value
    judge: Optional[str] = None
    resume: bool = False
    cache_enabled: bool = True

    def to_dict(self, matrix: MatrixSpec) -> dict:
        return {
            "schema": RUN_SPEC_SCHEMA,
            "matrix_path": self.matrix_path,
            "corpus_root": self.corpus_root,
            "prompts_dir": self.prompts_dir,
            "backends_path": self.backends_path,
            "out_dir": self.out_dir,
            "parallelism": self.parallelism,
            "resume": self.resume,
            "cache_enabled": self.cache_enabled,
            "matrix_axes": {
                "languages": list(matrix.languages),
                "modes": [m.value for m in matrix.modes],
                "students": [b.name for b in matrix.students],
                "strategies": [s.value for s in matrix.strategies],
                "teachers": [b.name for b in matrix.teachers],
                "max_hints": matrix.max_hints,
                "judge": matrix.judge_kind,
            },
        }
