import json
from pathlib import Path

import pytest

from morphgrid.cli import build_parser, config_from_args
from morphgrid.config import (
    EmbeddingConfig,
    OmegaMode,
    PipelineConfig,
    SourceMode,
    config_from_dict,
    load_config,
)
from morphgrid.errors import ConfigError

TOML = """
seed = 7
pos = "NOUN"
output_dir = "runs"

[inputs]
conllu = "data/train.conllu"
tables = "/abs/tables.tsv"
raw_text = ["wiki.txt"]

[embeddings.biased]
dim = 20

[paradigms]
omega = "const0"
passes = 1

[reinflect]
sources = "random"
"""


def test_defaults():
    config = PipelineConfig()
    assert config.embeddings.biased == EmbeddingConfig.biased()
    assert (config.embeddings.default.ngram_min, config.embeddings.default.ngram_max) == (3, 6)
    assert config.embeddings.default.window == 5
    assert config.cells.restarts == 25
    assert config.paradigms.n_neighbors == 250
    assert config.evaluate.n_analogies == 2000


def test_load_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TOML, encoding="utf-8")
    config = load_config(path)
    assert config.seed == 7
    assert config.pos == "NOUN"
    assert config.inputs.conllu == str(tmp_path / "data/train.conllu")
    assert config.inputs.tables == "/abs/tables.tsv"
    assert config.inputs.raw_text == [str(tmp_path / "wiki.txt")]
    assert config.output_dir == str(tmp_path / "runs")
    # the rest of the section comes from the preset
    assert config.embeddings.biased == EmbeddingConfig.biased(dim=20)
    assert config.embeddings.default == EmbeddingConfig.default()
    assert config.paradigms.omega is OmegaMode.const0
    assert config.reinflect.sources is SourceMode.random


def test_load_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"cells": {"gold_k": 12}}), encoding="utf-8")
    assert load_config(path).cells.gold_k == 12


@pytest.mark.parametrize(
    "data",
    [
        {"colour": 1},
        {"cells": {"k": 3}},
        {"embeddings": {"biased": {"size": 3}}},
        {"embeddings": {"fancy": {}}},
        {"paradigms": {"omega": "const2"}},
        {"paradigms": {"passes": 3}},
        {"embeddings": {"biased": {"ngram_min": 5, "ngram_max": 4}}},
    ],
)
def test_bad_config(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_missing_or_unknown_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    path = tmp_path / "run.yaml"
    path.write_text("seed: 1", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_section_snapshot():
    config = config_from_dict({"paradigms": {"omega": "const1"}})
    assert config.section("paradigms") == {"n_neighbors": 250, "omega": "const1", "passes": 2}
    assert config.section("pos") == "VERB"


def test_flags_override_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TOML, encoding="utf-8")
    args = build_parser().parse_args(
        [
            "run-all",
            "-c",
            str(path),
            "--seed",
            "3",
            "--no-affix-bias",
            "--no-window-bias",
            "--gold-k",
            "12",
            "--omega",
            "const1",
            "--sources",
            "ranked",
            "--ud-only",
            "--repeats",
            "4",
        ]
    )
    config = config_from_args(args)
    assert config.seed == 3
    assert config.repeats == 4
    assert config.cells.gold_k == 12
    assert config.paradigms.omega is OmegaMode.const1
    assert config.paradigms.passes == 1
    assert config.reinflect.sources is SourceMode.ranked
    assert config.inputs.raw_text == []
    biased = config.embeddings.biased
    assert (biased.ngram_min, biased.ngram_max, biased.window, biased.dim) == (3, 6, 5, 20)


def test_single_pass_and_raw_flags():
    args = build_parser().parse_args(["paradigms", "--single-pass", "--raw", "a.txt", "--raw", "b.txt"])
    config = config_from_args(args)
    assert config.paradigms.passes == 1
    assert config.inputs.raw_text == ["a.txt", "b.txt"]
    assert Path(config.output_dir) == Path("out")
