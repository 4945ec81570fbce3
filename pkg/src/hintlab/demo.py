"""Self-contained offline demo workspace.

``python -m hintlab.demo DEST`` writes a corpus, a prompts directory, scripted
backend rules, a translator pair table, a scripted language-identification
table, a backends file, and a matrix file under DEST. Running the CLI against
these files exercises the full pipeline with zero network access, and every
aggregate number is small enough to verify by hand.

Scenario: two languages (fr, sw), five exercises each, one scripted student,
one scripted teacher, all four hint strategies, up to five hints. Exercise 0
is always solved outright, exercise 3 never; the others are rescued after a
strategy-dependent number of hints. A few hints deliberately leak the gold
answer and a few revisions deliberately code-mix into English, so the audits
have known nonzero findings.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from importlib import resources
from pathlib import Path

from ._io import dump_json
from .backends.scripted import ScriptedTranslator
from .corpus import ENGLISH_NAMES
from .prompts import TemplateCatalog, freeze_catalog_translations

LANGS = ("fr", "sw")
GOLDS = ("18", "42", "7", "150", "36")
N_HINTS = 5

# rescue round per (language, strategy, exercise); exercise 0 is solved
# initially and exercise 3 never, for every strategy
RESCUE: dict[tuple[str, str], dict[int, int | None]] = {
    ("fr", "en_en"): {1: 1, 2: 2, 4: 1},
    ("fr", "en_en_l"): {1: 1, 2: None, 4: 2},
    ("fr", "l_l"): {1: 1, 2: 2, 4: 1},
    ("fr", "en_l"): {1: 2, 2: None, 4: 1},
    ("sw", "en_en"): {1: 1, 2: 3, 4: None},
    ("sw", "en_en_l"): {1: 2, 2: None, 4: None},
    ("sw", "l_l"): {1: 1, 2: 2, 4: 1},
    ("sw", "en_l"): {1: 1, 2: 2, 4: 4},
}

# strategy -> the hint-text group the student's revision prompt will contain
GROUP_OF_STRATEGY = {"en_en": "en", "en_en_l": "eel", "l_l": "ll", "en_l": "el"}

# hints whose delivered text embeds the gold answer, by (language, group, exercise, round)
LEAKS = {
    ("fr", "en", 1, 1),  # helpful leak: this hint rescues en_en/fr/ex1
    ("fr", "en", 2, 3),  # surfaces only as an en_en_l pre-translation (en_en stops at round 2)
    ("fr", "ll", 3, 4),
    ("sw", "eel", 4, 2),  # leak introduced by translation; the English source is clean
    ("sw", "el", 2, 1),
}

# revisions written in English despite a multilingual prompt, by (language, group, exercise, round)
CODE_MIXED = {
    ("fr", "en", 2, 1),
    ("fr", "ll", 3, 2),
    ("sw", "eel", 3, 5),
    ("sw", "el", 4, 2),
    ("sw", "ll", 1, 1),  # the rescue itself code-mixes
}

_QUESTION_WORDS = {
    "fr": "Combien·fr font·fr les·fr objets·fr du·fr lot·fr numéro",
    "sw": "Je·sw vitu·sw vingapi·sw kwenye·sw fungu·sw namba",
}


def question(lang: str, i: int) -> str:
    return f"[[Q{i}-{lang}]] {_QUESTION_WORDS[lang]} {i} ?"


def pseudo_translate(text: str, lang: str) -> str:
    """Word-marking stand-in for machine translation; placeholders survive intact."""
    lines = []
    for line in text.split("\n"):
        tokens = []
        for token in line.split(" "):
            if not token or "{" in token or "}" in token or token == "ANSWER:":
                tokens.append(token)
            else:
                tokens.append(f"{token}·{lang}")
        lines.append(" ".join(tokens))
    return "\n".join(lines)


def hint_en(lang: str, i: int, r: int) -> str:
    marker = f"[[H-en-{lang}-{i}-{r}]]"
    if (lang, "en", i, r) == ("fr", "en", 1, 1):
        return f"The answer is 42, use it wisely. {marker}"
    if (lang, "en", i, r) == ("fr", "en", 2, 3):
        return f"The quotient equals 7 exactly here. {marker}"
    return f"Step {r}: check the arithmetic for problem {i} once more. {marker}"


_BACK_SUBS = (("Step", "Stage"), ("check", "verify"), ("answer", "result"), ("quotient", "ratio"))


def back_translated_en(lang: str, i: int, r: int) -> str:
    """Deterministically lossy round trip of hint_en; never byte-identical."""
    text = hint_en(lang, i, r)
    for old, new in _BACK_SUBS:
        text = text.replace(old, new)
    return text


def eel_hint(lang: str, i: int, r: int) -> str:
    marker = f"[[H-eel-{lang}-{i}-{r}]]"
    if (lang, "eel", i, r) in LEAKS:
        gold = GOLDS[i]
        return {
            "fr": f"La·fr réponse·fr vaut·fr {gold} ici·fr même·fr. {marker}",
            "sw": f"Jibu·sw ni·sw {gold} kabisa·sw hatua·sw {r}. {marker}",
        }[lang]
    return {
        "fr": f"Étape·fr {r}: vérifie·fr encore·fr le·fr problème·fr {i}. {marker}",
        "sw": f"Hatua·sw {r}: angalia·sw tena·sw tatizo·sw {i}. {marker}",
    }[lang]


def ll_hint(lang: str, i: int, r: int) -> str:
    marker = f"[[H-ll-{lang}-{i}-{r}]]"
    if (lang, "ll", i, r) in LEAKS:
        gold = GOLDS[i]
        return {
            "fr": f"Essaie·fr {gold} directement·fr maintenant·fr. {marker}",
            "sw": f"Jaribu·sw {gold} moja·sw kwa·sw moja·sw. {marker}",
        }[lang]
    return {
        "fr": f"Indice·fr {r}: regarde·fr le·fr problème·fr {i} autrement·fr. {marker}",
        "sw": f"Kidokezo·sw {r}: tazama·sw tatizo·sw {i} upya·sw. {marker}",
    }[lang]


def el_hint(lang: str, i: int, r: int) -> str:
    marker = f"[[H-el-{lang}-{i}-{r}]]"
    if (lang, "el", i, r) in LEAKS:
        gold = GOLDS[i]
        return {
            "fr": f"Pense·fr à·fr {gold} ici·fr directement·fr. {marker}",
            "sw": f"Fikiria·sw kuhusu·sw {gold} hapa·sw sasa·sw. {marker}",
        }[lang]
    return {
        "fr": f"Pense·fr à·fr l'étape·fr {r} du·fr problème·fr {i}. {marker}",
        "sw": f"Fikiria·sw hatua·sw {r} ya·sw tatizo·sw {i}. {marker}",
    }[lang]


_HINT_OF_GROUP = {"en": hint_en, "eel": eel_hint, "ll": ll_hint, "el": el_hint}


def initial_correct(lang: str, i: int) -> str:
    words = {
        "fr": "J'ai·fr trouvé·fr la·fr réponse·fr directement·fr.",
        "sw": "Nimepata·sw jibu·sw moja·sw kwa·sw moja·sw.",
    }[lang]
    return f"{words} ANSWER: {GOLDS[i]}"


def initial_wrong(lang: str, i: int) -> str:
    words = {"fr": "Je·fr me·fr trompe·fr encore·fr.", "sw": "Nimekosea·sw hapa·sw mwanzoni·sw."}[lang]
    return f"{words} WRONG-{lang}-{i}-0 ANSWER: 9{i}0"


def revision_correct(lang: str, i: int, code_mixed: bool) -> str:
    if code_mixed:
        return f"Got it now thanks to the hint. ANSWER: {GOLDS[i]}"
    words = {
        "fr": "Compris·fr grâce·fr à·fr l'indice·fr.",
        "sw": "Nimeelewa·sw shukrani·sw kwa·sw kidokezo·sw.",
    }[lang]
    return f"{words} ANSWER: {GOLDS[i]}"


def revision_wrong(lang: str, i: int, r: int, code_mixed: bool) -> str:
    if code_mixed:
        return f"Still wrong despite the hint. WRONG-{lang}-{i}-{r} ANSWER: 9{i}{r}"
    words = {"fr": "Toujours·fr faux·fr hélas·fr.", "sw": "Bado·sw sijapata·sw jibu·sw."}[lang]
    return f"{words} WRONG-{lang}-{i}-{r} ANSWER: 9{i}{r}"


def _teacher_discriminator(lang: str, group: str) -> str:
    if group == "en":
        return "hint in English"
    if group == "el":
        return f"hint in {ENGLISH_NAMES[lang]}"
    # l_l: the pseudo-translated teacher template carries marked words
    return f"hint·{lang} in·{lang} {ENGLISH_NAMES[lang]}"


def student_rules() -> list[dict]:
    rules = []
    for lang in LANGS:
        for strategy, group in GROUP_OF_STRATEGY.items():
            rescue = RESCUE[(lang, strategy)]
            for i in range(5):
                for r in range(1, N_HINTS + 1):
                    mixed = (lang, group, i, r) in CODE_MIXED
                    if rescue.get(i) == r:
                        reply = revision_correct(lang, i, mixed)
                    else:
                        reply = revision_wrong(lang, i, r, mixed)
                    rules.append({"contains": f"[[H-{group}-{lang}-{i}-{r}]]", "reply": reply})
    for lang in LANGS:
        for i in range(5):
            reply = initial_correct(lang, i) if i == 0 else initial_wrong(lang, i)
            rules.append({"contains": f"[[Q{i}-{lang}]]", "reply": reply})
    rules.append({"fallback": True, "reply": "UNEXPECTED-STUDENT-PROMPT ANSWER: -1"})
    return rules


def teacher_rules() -> list[dict]:
    rules = []
    for lang in LANGS:
        for group in ("en", "ll", "el"):
            for i in range(5):
                for r in range(1, N_HINTS + 1):
                    rules.append(
                        {
                            "contains_all": [f"WRONG-{lang}-{i}-{r - 1}", _teacher_discriminator(lang, group)],
                            "reply": _HINT_OF_GROUP[group](lang, i, r),
                        }
                    )
    rules.append({"fallback": True, "reply": "UNEXPECTED-TEACHER-PROMPT [[H-fallback]]"})
    return rules


def translator_pairs(template_bodies: dict[str, str]) -> list[dict]:
    pairs = []
    for role, body in sorted(template_bodies.items()):
        for lang in LANGS:
            pairs.append({"source": "en", "target": lang, "text": body, "translation": pseudo_translate(body, lang)})
    for lang in LANGS:
        for i in range(5):
            for r in range(1, N_HINTS + 1):
                pairs.append({"source": "en", "target": lang, "text": hint_en(lang, i, r), "translation": eel_hint(lang, i, r)})
                pairs.append({"source": lang, "target": "en", "text": eel_hint(lang, i, r), "translation": back_translated_en(lang, i, r)})
    return pairs


def lid_table() -> dict:
    return {
        "rules": [
            {"contains": "·fr", "language": "fr", "confidence": 0.98},
            {"contains": "·sw", "language": "sw", "confidence": 0.98},
        ],
        "default_language": "en",
        "default_confidence": 0.9,
    }


def build_demo(dest: Path | str) -> dict[str, Path]:
    """Write the demo workspace; returns the paths the CLI needs."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)

    corpus_dir = dest / "corpus"
    corpus_dir.mkdir(exist_ok=True)
    for lang in LANGS:
        lines = "".join(f"{question(lang, i)}\t{GOLDS[i]}\n" for i in range(5))
        (corpus_dir / f"mgsm_{lang}.tsv").write_text(lines, encoding="utf-8")

    prompts_dir = dest / "prompts"
    packaged = resources.files("hintlab").joinpath("data/prompts")
    for role_dir in sorted(packaged.iterdir()):
        target = prompts_dir / role_dir.name
        target.mkdir(parents=True, exist_ok=True)
        for template_file in sorted(role_dir.iterdir()):
            shutil.copyfile(str(template_file), target / template_file.name)

    rules_dir = dest / "rules"
    rules_dir.mkdir(exist_ok=True)
    dump_json(rules_dir / "student.json", student_rules())
    dump_json(rules_dir / "teacher.json", teacher_rules())
    dump_json(rules_dir / "lid.json", lid_table())

    catalog = TemplateCatalog.load(prompts_dir)
    bodies = {role: catalog.get(role, "en").body for role in ("initial_solution", "revision", "hint_generation")}
    pairs = translator_pairs(bodies)
    dump_json(rules_dir / "translator_pairs.json", pairs)

    # produce the frozen fr/sw template files through the same path real runs use
    freeze_catalog_translations(prompts_dir, LANGS, ScriptedTranslator(pairs))

    backends_path = dest / "backends.json"
    dump_json(
        backends_path,
        {
            "backends": {
                "student-sim": {"endpoint": "scripted", "model_id": "scripted-student-v1", "rules": "rules/student.json"},
                "teacher-sim": {"endpoint": "scripted", "model_id": "scripted-teacher-v1", "rules": "rules/teacher.json"},
            },
            "translator": {"kind": "scripted", "pairs": "rules/translator_pairs.json"},
            "lid": {"kind": "scripted", "rules": "rules/lid.json"},
        },
    )

    matrix_path = dest / "matrix.json"
    dump_json(
        matrix_path,
        {
            "languages": list(LANGS),
            "modes": ["multilingual"],
            "students": ["student-sim"],
            "strategies": ["en_en", "en_en_l", "l_l", "en_l"],
            "teachers": ["teacher-sim"],
            "max_hints": N_HINTS,
            "judge": "numeric",
        },
    )

    return {"root": dest, "matrix": matrix_path, "corpus": corpus_dir, "prompts": prompts_dir, "backends": backends_path}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="python -m hintlab.demo", description=__doc__.split("\n\n")[0])
    parser.add_argument("dest", help="directory to write the demo workspace into")
    args = parser.parse_args(argv)
    paths = build_demo(args.dest)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    print("run it with:")
    print(
        f"  hintlab run --matrix {paths['matrix']} --corpus {paths['corpus']} "
        f"--prompts {paths['prompts']} --backends {paths['backends']} --out {paths['root'] / 'out'}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
