from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from hintlab.backends.base import BackendConfig, ChatClient
from hintlab.backends.scripted import ScriptedRule, ScriptedTransport
from hintlab.cli import main as cli_main
from hintlab.config import load_matrix_corpora
from hintlab.demo import build_demo
from hintlab.engine import read_journal
from hintlab.prompts import TemplateCatalog


@pytest.fixture(scope="session")
def demo_paths(tmp_path_factory) -> dict[str, Path]:
    return build_demo(tmp_path_factory.mktemp("demo"))


def run_demo_cli(demo_paths: dict[str, Path], out: Path, *extra: str) -> int:
    return cli_main(
        [
            "run",
            "--matrix", str(demo_paths["matrix"]),
            "--corpus", str(demo_paths["corpus"]),
            "--prompts", str(demo_paths["prompts"]),
            "--backends", str(demo_paths["backends"]),
            "--out", str(out),
            *extra,
        ]
    )


@pytest.fixture(scope="session")
def demo_out(demo_paths) -> Path:
    out = demo_paths["root"] / "out"
    assert run_demo_cli(demo_paths, out) == 0
    return out


@pytest.fixture(scope="session")
def demo_records(demo_out):
    return read_journal(demo_out / "journal.jsonl")


@pytest.fixture(scope="session")
def demo_corpora(demo_paths):
    return load_matrix_corpora(demo_paths["corpus"], ("fr", "sw"))


@pytest.fixture(scope="session")
def demo_catalog(demo_paths) -> TemplateCatalog:
    return TemplateCatalog.load(demo_paths["prompts"])


@pytest.fixture(scope="session")
def en_catalog() -> TemplateCatalog:
    return TemplateCatalog.load(resources.files("hintlab").joinpath("data/prompts"))


def make_rules(dicts: list[dict]) -> list[ScriptedRule]:
    rules = [ScriptedRule.from_dict(d) for d in dicts]
    if not any(r.fallback for r in rules):
        rules.append(ScriptedRule(reply="NO-RULE-MATCHED", fallback=True))
    return rules


def make_client(name: str, dicts: list[dict], temperature: float = 0.0, **config_kwargs) -> ChatClient:
    config = BackendConfig(
        name=name,
        endpoint="scripted",
        model_id=f"{name}-model",
        temperature=temperature,
        **config_kwargs,
    )
    return ChatClient(config, ScriptedTransport(make_rules(dicts)))
