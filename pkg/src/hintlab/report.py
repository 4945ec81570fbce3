"""Report writers: gain tables, hint-count stats, and audit tables as CSV/JSON,
with matplotlib figures rendered alongside the delimited output."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")  # headless renderer; must precede pyplot import

import matplotlib.pyplot as plt

from ._io import dump_json, write_csv
from .audit import BackTranslationReport, ConsistencyReport, LeakageReport
from .metrics import GainTable, HintCountStats, round_half_up

REPORT_SCHEMA = 1

FORMATS = ("csv", "json")


def _rnd(value: Optional[float]) -> Optional[float]:
    return None if value is None else round_half_up(value)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{round_half_up(value):.2f}"


def _write_table(out_dir: Path, name: str, header: Sequence[str], rows: list[dict], formats: Sequence[str]) -> list[Path]:
    written = []
    if "csv" in formats:
        path = out_dir / f"{name}.csv"
        write_csv(path, header, [[row[col] for col in header] for row in rows])
        written.append(path)
    if "json" in formats:
        path = out_dir / f"{name}.json"
        dump_json(path, {"schema": REPORT_SCHEMA, "rows": rows})
        written.append(path)
    return written


def _csvable(rows: list[dict], float_cols: Sequence[str]) -> list[dict]:
    """Round float columns half-up to two decimals; None becomes empty/null."""
    out = []
    for row in rows:
        row = dict(row)
        for col in float_cols:
            row[col] = _rnd(row[col])
        out.append(row)
    return out


def write_gain_reports(table: GainTable, out_dir: Path | str, formats: Sequence[str] = FORMATS) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    cell_rows = _csvable(
        [
            {
                "language": c.language,
                "strategy": c.strategy,
                "mode": c.mode,
                "student": c.student,
                "teacher": c.teacher,
                "n_items": c.n_items,
                "a_before": c.a_before,
                "a_after": c.a_after,
                "G": c.gain,
                "zero_baseline": c.zero_baseline,
            }
            for c in table.cells
        ],
        float_cols=("a_before", "a_after", "G"),
    )
    header = ("language", "strategy", "mode", "student", "teacher", "n_items", "a_before", "a_after", "G", "zero_baseline")
    written += _write_table(out_dir, "gains", header, cell_rows, formats)

    summary_rows = []
    for row in table.category_rows:
        summary_rows.append(
            {
                "row_kind": "category_mean",
                "category": row.category,
                "mode": row.mode,
                "strategy": row.strategy,
                "teacher": row.teacher,
                "student": row.student,
                "students": "",
                "languages": " ".join(row.languages),
                "value": row.mean_gain,
                "undefined_members": row.undefined_members,
            }
        )
    for row in table.avg_rows:
        summary_rows.append(
            {
                "row_kind": "category_avg",
                "category": row.category,
                "mode": row.mode,
                "strategy": row.strategy,
                "teacher": row.teacher,
                "student": "",
                "students": " ".join(row.students),
                "languages": "",
                "value": row.mean_gain,
                "undefined_members": 0,
            }
        )
    for row in table.delta_rows:
        summary_rows.append(
            {
                "row_kind": "model_delta",
                "category": row.category,
                "mode": row.mode,
                "strategy": row.strategy,
                "teacher": row.teacher,
                "student": "",
                "students": f"{row.student_a} {row.student_b}",
                "languages": "",
                "value": row.delta,
                "undefined_members": 0,
            }
        )
    summary_rows = _csvable(summary_rows, float_cols=("value",))
    header = (
        "row_kind",
        "category",
        "mode",
        "strategy",
        "teacher",
        "student",
        "students",
        "languages",
        "value",
        "undefined_members",
    )
    written += _write_table(out_dir, "gain_summary", header, summary_rows, formats)
    return written


def write_hint_stats(stats: dict[str, HintCountStats], out_dir: Path | str, formats: Sequence[str] = FORMATS) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    max_hints = max((max(s.histogram) for s in stats.values() if s.histogram), default=0)
    rows = []
    for language in sorted(stats):
        s = stats[language]
        row = {
            "language": language,
            "entered": s.entered,
            "rescued": s.rescued,
            "mean_hints": _rnd(s.mean_hints),
        }
        for n in range(1, max_hints + 1):
            row[f"h{n}"] = s.histogram.get(n, 0)
        rows.append(row)
    header = ["language", "entered", "rescued", "mean_hints"] + [f"h{n}" for n in range(1, max_hints + 1)]
    return _write_table(out_dir, "hint_stats", header, rows, formats)


def write_audit_reports(
    leakage: LeakageReport,
    consistency: ConsistencyReport,
    backtranslation: Optional[BackTranslationReport],
    out_dir: Path | str,
    formats: Sequence[str] = FORMATS,
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    group_rows = _csvable(
        [
            {
                "strategy": g.strategy,
                "student": g.student,
                "teacher": g.teacher,
                "category": g.category,
                "total_sessions": g.total_sessions,
                "leaked_sessions": g.leaked_sessions,
                "proportion": g.proportion,
                "total_hints": g.total_hints,
                "leaked_hints": g.leaked_hints,
                "leaked_pre_translation": g.leaked_pre_translation,
            }
            for g in leakage.groups
        ],
        float_cols=("proportion",),
    )
    header = (
        "strategy",
        "student",
        "teacher",
        "category",
        "total_sessions",
        "leaked_sessions",
        "proportion",
        "total_hints",
        "leaked_hints",
        "leaked_pre_translation",
    )
    written += _write_table(out_dir, "leakage_groups", header, group_rows, formats)

    lang_rows = _csvable(
        [
            {
                "language": r.language,
                "helpful_hint_total": r.helpful_hint_total,
                "helpful_leaked": r.helpful_leaked,
                "leakage_ratio": r.leakage_ratio,
            }
            for r in leakage.languages
        ],
        float_cols=("leakage_ratio",),
    )
    header = ("language", "helpful_hint_total", "helpful_leaked", "leakage_ratio")
    written += _write_table(out_dir, "leakage_by_language", header, lang_rows, formats)

    consistency_rows = _csvable(
        [
            {
                "text_kind": r.text_kind,
                "strategy": r.strategy,
                "category": r.category,
                "expected": " ".join(f"{lang}:{n}" for lang, n in r.expected_breakdown),
                "accuracy": r.accuracy,
                "scored": r.scored,
                "skipped_empty": r.skipped_empty,
                "short_texts": r.short_texts,
            }
            for r in consistency.rows
        ],
        float_cols=("accuracy",),
    )
    header = ("text_kind", "strategy", "category", "expected", "accuracy", "scored", "skipped_empty", "short_texts")
    written += _write_table(out_dir, "consistency", header, consistency_rows, formats)

    if backtranslation is not None:
        bt_rows = _csvable(
            [{"language": r.language, "n_pairs": r.n_pairs, "bleu": r.bleu} for r in backtranslation.rows],
            float_cols=("bleu",),
        )
        written += _write_table(out_dir, "backtranslation", ("language", "n_pairs", "bleu"), bt_rows, formats)
    return written


def _new_figure(width: float = 8.0, height: float = 4.5):
    return plt.figure(figsize=(width, height))


def _save_figure(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # strip the version-bearing Software chunk so output bytes depend on data only
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def render_gain_figure(table: GainTable, path: Path | str) -> Optional[Path]:
    """Mean gain per (language, strategy), averaged over the remaining axes."""
    sums: dict[tuple[str, str], list[float]] = {}
    for cell in table.cells:
        if cell.gain is not None:
            sums.setdefault((cell.language, cell.strategy), []).append(cell.gain)
    if not sums:
        return None
    languages = sorted({lang for lang, _ in sums})
    strategies = sorted({s for _, s in sums})
    fig = _new_figure()
    ax = fig.add_subplot(111)
    width = 0.8 / len(strategies)
    for si, strategy in enumerate(strategies):
        xs = []
        ys = []
        for li, language in enumerate(languages):
            values = sums.get((language, strategy))
            if values:
                xs.append(li + si * width)
                ys.append(sum(values) / len(values))
        ax.bar(xs, ys, width=width, label=strategy)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(languages))])
    ax.set_xticklabels(languages)
    ax.set_ylabel("mean gain G (%)")
    ax.set_xlabel("language")
    ax.set_title("Student gain by language and hint strategy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save_figure(fig, Path(path))


def render_hint_count_figure(stats: dict[str, HintCountStats], path: Path | str) -> Optional[Path]:
    rows = [(lang, s.mean_hints) for lang, s in sorted(stats.items()) if s.mean_hints is not None]
    if not rows:
        return None
    fig = _new_figure()
    ax = fig.add_subplot(111)
    ax.bar([r[0] for r in rows], [r[1] for r in rows], color="#4878a8")
    ax.set_ylabel("mean hints used")
    ax.set_xlabel("language")
    ax.set_title("Mean hints needed by sessions that entered the loop")
    fig.tight_layout()
    return _save_figure(fig, Path(path))


def render_leakage_figure(leakage: LeakageReport, path: Path | str) -> Optional[Path]:
    rows = [r for r in leakage.languages if r.leakage_ratio is not None]
    if not rows:
        return None
    fig = _new_figure()
    ax = fig.add_subplot(111)
    xs = [r.language for r in rows]
    ys = [r.leakage_ratio for r in rows]
    ax.bar(xs, ys, color="#a85448")
    for x, row in enumerate(rows):
        ax.annotate(str(row.helpful_hint_total), (x, row.leakage_ratio), ha="center", va="bottom", fontsize=8)
    ax.set_ylabel("helpful-hint leakage ratio (%)")
    ax.set_xlabel("language (annotation: helpful hints)")
    ax.set_title("Leakage among helpful hints by language")
    fig.tight_layout()
    return _save_figure(fig, Path(path))
