"""Command line front end.

Subcommands:

  validate  check matrix, backends, corpus, and prompt files without running
  run       execute the experiment matrix and write a session journal
  report    turn a journal into gain/hint tables (CSV + JSON) and figures
  audit     leakage, language-consistency, and back-translation reports

Exit codes: 0 success, 1 runtime failure, 2 invalid inputs or usage.
API tokens are read from environment variables only (see each backend's
api_key_env); there is no flag or config key that accepts a token value.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from ._io import dump_json, load_json
from .audit import backtranslation_report, consistency_report, leakage_report
from .backends.base import BackendError, TranslatorUnavailable
from .config import (
    ConfigError,
    RunSpec,
    build_identifier,
    build_runner,
    build_translator,
    load_matrix_corpora,
    parse_backends_file,
    parse_matrix_file,
)
from .corpus import CorpusError
from .engine import EngineError, enumerate_configs, needs_translator, read_journal, run_matrix, validate_config
from .metrics import MetricsError, build_gain_table, hint_count_stats
from .prompts import PromptError, TemplateCatalog
from .report import (
    FORMATS,
    render_gain_figure,
    render_hint_count_figure,
    render_leakage_figure,
    write_audit_reports,
    write_gain_reports,
    write_hint_stats,
)

_INPUT_ERRORS = (ConfigError, CorpusError, PromptError, EngineError, MetricsError)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_inputs(args: argparse.Namespace):
    setup = parse_backends_file(args.backends)
    matrix = parse_matrix_file(args.matrix, setup, max_hints_override=args.max_hints, judge_override=args.judge)
    corpora = load_matrix_corpora(args.corpus, matrix.languages)
    catalog = TemplateCatalog.load(args.prompts)
    return setup, matrix, corpora, catalog


def _validation_problems(setup, matrix, catalog) -> list[str]:
    problems: set[str] = set()
    for config in enumerate_configs(matrix):
        problems.update(validate_config(config, catalog))
        if needs_translator(config) and setup.translator_spec is None:
            problems.add(
                f"strategy {config.strategy.value!r} needs a translator for language {config.language!r}; "
                "add a [translator] section to the backends file"
            )
    return sorted(problems)


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        setup, matrix, corpora, catalog = _load_inputs(args)
        problems = _validation_problems(setup, matrix, catalog)
    except _INPUT_ERRORS as err:
        return _fail(str(err), 2)
    if problems:
        for problem in problems:
            print(f"problem: {problem}", file=sys.stderr)
        return 2
    configs = enumerate_configs(matrix)
    n_items = len(next(iter(corpora.values())))
    print(f"ok: {len(configs)} configs x {n_items} exercises = {len(configs) * n_items} sessions")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    try:
        setup, matrix, corpora, catalog = _load_inputs(args)
        problems = _validation_problems(setup, matrix, catalog)
    except _INPUT_ERRORS as err:
        return _fail(str(err), 2)
    if problems:
        for problem in problems:
            print(f"problem: {problem}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = RunSpec(
        matrix_path=str(Path(args.matrix).resolve()),
        corpus_root=str(Path(args.corpus).resolve()),
        prompts_dir=str(Path(args.prompts).resolve()),
        backends_path=str(Path(args.backends).resolve()),
        out_dir=str(out_dir.resolve()),
        parallelism=args.parallelism,
        max_hints=args.max_hints,
        judge=args.judge,
        resume=args.resume,
        cache_enabled=not args.no_cache,
    )
    dump_json(out_dir / "run_spec.json", spec.to_dict(matrix))

    cache_dir = None if args.no_cache else out_dir / "cache"
    try:
        runner = build_runner(matrix, setup, catalog, cache_dir)
        configs = enumerate_configs(matrix)
        manifest = run_matrix(configs, corpora, runner, out_dir, parallelism=args.parallelism, resume=args.resume)
    except _INPUT_ERRORS + (BackendError, OSError) as err:
        return _fail(str(err), 1)

    print(f"journal: {out_dir / 'journal.jsonl'}")
    print(f"manifest: {out_dir / 'manifest.json'}")
    print(
        f"sessions: {manifest['sessions']} total, {manifest['executed_this_run']} executed this run, "
        f"{manifest['resumed']} resumed"
    )
    if manifest["aborted"]:
        print(f"warning: {len(manifest['aborted'])} sessions aborted; see manifest.json", file=sys.stderr)
    return 0


def _read_run_journal(out_dir: Path):
    journal_path = out_dir / "journal.jsonl"
    if not journal_path.exists():
        return None, _fail(f"{journal_path}: no journal found; run 'hintlab run' first", 2)
    records = read_journal(journal_path)
    if not records:
        return None, _fail(f"{journal_path}: journal is empty", 2)
    return records, 0


def _run_spec_value(out_dir: Path, override: Optional[str], key: str) -> Optional[str]:
    if override:
        return override
    spec_path = out_dir / "run_spec.json"
    if spec_path.exists():
        return load_json(spec_path).get(key)
    return None


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    records, code = _read_run_journal(out_dir)
    if records is None:
        return code

    student_order = None
    spec_path = out_dir / "run_spec.json"
    if spec_path.exists():
        student_order = load_json(spec_path).get("matrix_axes", {}).get("students")

    formats = [args.format] if args.format else list(FORMATS)
    reports_dir = out_dir / "reports"
    figures_dir = reports_dir / "figures"
    try:
        table = build_gain_table(records, student_order=student_order)
        stats = hint_count_stats(records)
        written = write_gain_reports(table, reports_dir, formats)
        written += write_hint_stats(stats, reports_dir, formats)
        for figure in (
            render_gain_figure(table, figures_dir / "gains.png"),
            render_hint_count_figure(stats, figures_dir / "hint_counts.png"),
        ):
            if figure is not None:
                written.append(figure)
    except _INPUT_ERRORS as err:
        return _fail(str(err), 1)
    for path in written:
        print(f"wrote: {path}")
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    records, code = _read_run_journal(out_dir)
    if records is None:
        return code

    backends_path = _run_spec_value(out_dir, args.backends, "backends_path")
    corpus_root = _run_spec_value(out_dir, args.corpus, "corpus_root")
    if not backends_path or not corpus_root:
        return _fail("no run_spec.json in the output directory; pass --backends and --corpus explicitly", 2)

    languages = tuple(sorted({record.config["language"] for record in records}))
    formats = [args.format] if args.format else list(FORMATS)
    reports_dir = out_dir / "reports"
    try:
        setup = parse_backends_file(backends_path)
        corpora = load_matrix_corpora(corpus_root, languages)
        identifier = build_identifier(setup)
        translator = build_translator(setup, cache=None)
        leakage = leakage_report(records, corpora)
        consistency = consistency_report(records, identifier)
        backtranslation = backtranslation_report(records, translator)
    except TranslatorUnavailable as err:
        return _fail(f"{err}; add a [translator] section to the backends file to audit translated hints", 1)
    except _INPUT_ERRORS + (BackendError,) as err:
        return _fail(str(err), 2)

    written = write_audit_reports(leakage, consistency, backtranslation, reports_dir, formats)
    figure = render_leakage_figure(leakage, reports_dir / "figures" / "leakage.png")
    if figure is not None:
        written.append(figure)
    for path in written:
        print(f"wrote: {path}")
    return 0


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--matrix", required=True, help="matrix file (TOML or JSON) defining the experiment axes")
    parser.add_argument("--corpus", required=True, help="corpus directory (mgsm_<lang>.tsv) or mapping file")
    parser.add_argument("--prompts", required=True, help="prompt template directory (<role>/<lang>.txt)")
    parser.add_argument("--backends", required=True, help="backends file (TOML or JSON)")
    parser.add_argument("--max-hints", type=int, default=None, help="override the matrix max_hints")
    parser.add_argument("--judge", choices=("numeric", "llm"), default=None, help="override the matrix judge kind")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hintlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check inputs without calling any backend")
    _add_input_flags(p_validate)
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="execute the experiment matrix")
    _add_input_flags(p_run)
    p_run.add_argument("--out", required=True, help="output directory for journal, manifest, and cache")
    p_run.add_argument("--parallelism", type=int, default=1, help="concurrent sessions (default 1)")
    p_run.add_argument("--resume", action="store_true", help="skip sessions already completed in the journal")
    p_run.add_argument("--no-cache", action="store_true", help="disable the response cache")
    p_run.set_defaults(func=cmd_run)

    p_report = sub.add_parser("report", help="write gain and hint-count tables plus figures")
    p_report.add_argument("--out", required=True, help="output directory of a previous run")
    p_report.add_argument("--format", choices=FORMATS, default=None, help="write only this format (default: both)")
    p_report.set_defaults(func=cmd_report)

    p_audit = sub.add_parser("audit", help="write leakage, consistency, and back-translation tables")
    p_audit.add_argument("--out", required=True, help="output directory of a previous run")
    p_audit.add_argument("--corpus", default=None, help="corpus root (default: from run_spec.json)")
    p_audit.add_argument("--backends", default=None, help="backends file (default: from run_spec.json)")
    p_audit.add_argument("--format", choices=FORMATS, default=None, help="write only this format (default: both)")
    p_audit.set_defaults(func=cmd_audit)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
