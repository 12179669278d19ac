import dataclasses
import json
import shutil
from pathlib import Path

import pytest

from morphgrid.config import OmegaMode, ParadigmsConfig, config_from_dict, load_config, resolve_paths
from morphgrid.db.models.run import Stage
from morphgrid.errors import InputError, MissingArtifactError
from morphgrid.metrics import MetricsReport
from morphgrid.paradigms import Paradigm, read_paradigms
from morphgrid.pipeline import SPECS, _invalidate_downstream, run_all, run_seed, run_stage
from morphgrid.synthetic import make_fixtures, write_synthetic


def small_config(data_dir, out, **overrides):
    data = {
        "inputs": {
            "conllu": "synthetic.conllu",
            "tables": "synthetic_tables.tsv",
            "raw_text": ["synthetic.txt"],
        },
        "embeddings": {"biased": {"dim": 20, "epochs": 1}, "default": {"dim": 20, "epochs": 1}},
        "cells": {"restarts": 2, "gold_k": 4},
        "evaluate": {"n_analogies": 50},
        "output_dir": str(out),
    }
    data.update(overrides)
    return resolve_paths(config_from_dict(data), data_dir)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synthetic")
    write_synthetic(out, seed=0, n_stems=20, n_tokens=4000)
    return out


@pytest.fixture(scope="module")
def finished(data_dir, tmp_path_factory):
    config = small_config(data_dir, tmp_path_factory.mktemp("run_a"))
    report, manifests = run_all(config)
    return config, report, manifests


def copy_artifacts(src, dst, stages):
    dst.mkdir(parents=True, exist_ok=True)
    for stage in stages:
        for name in SPECS[stage].produces:
            shutil.copy(Path(src) / name, dst / name)


def test_pipeline_writes_report(finished):
    config, report, manifests = finished
    out = Path(config.output_dir)
    data = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert set(MetricsReport.METRICS) <= set(data)
    assert all(0.0 <= data[m] <= 1.0 for m in MetricsReport.METRICS)
    assert report.n_cells == 4
    assert list(manifests[0].stages) == [s.value for s in Stage]
    assert not any(s["cached"] for s in manifests[0].stages.values())
    for spec in SPECS.values():
        for name in spec.produces:
            assert (out / name).exists()
    assert (out / "manifest.json").exists()
    assert (out / "manifest.sqlite").exists()


def test_rerun_hits_cache(finished):
    config, report, _ = finished
    assert run_stage(Stage.cells, config).cached
    again, manifest = run_seed(config)
    assert all(s["cached"] for s in manifest.stages.values())
    assert again.to_dict() == report.to_dict()


def test_same_seed_same_outputs(finished, data_dir, tmp_path):
    config, _, _ = finished
    run_all(small_config(data_dir, tmp_path))
    for name in ["predicted_grid.jsonl", "report.json"]:
        assert (tmp_path / name).read_bytes() == (Path(config.output_dir) / name).read_bytes()


def test_missing_artifact_names_its_stage(data_dir, tmp_path):
    with pytest.raises(MissingArtifactError, match="reinflect"):
        run_stage(Stage.evaluate, small_config(data_dir, tmp_path))


def test_missing_input(data_dir, tmp_path):
    config = small_config(data_dir, tmp_path / "out")
    config = dataclasses.replace(
        config, inputs=dataclasses.replace(config.inputs, conllu=str(tmp_path / "absent.conllu"))
    )
    with pytest.raises(InputError):
        run_stage(Stage.ingest, config)


def test_const1_matches_single_pass(finished, data_dir, tmp_path):
    config, _, _ = finished
    upstream = [Stage.ingest, Stage.embed, Stage.cells]
    outputs = []
    for name, paradigms in [
        ("single", ParadigmsConfig(passes=1)),
        ("const1", ParadigmsConfig(omega=OmegaMode.const1)),
    ]:
        copy_artifacts(config.output_dir, tmp_path / name, upstream)
        variant = dataclasses.replace(
            small_config(data_dir, tmp_path / name), paradigms=paradigms
        )
        run_stage(Stage.paradigms, variant)
        outputs.append((tmp_path / name / "paradigms.jsonl").read_bytes())
    assert outputs[0] == outputs[1]


def test_changed_stage_removes_downstream_artifacts(tmp_path):
    for stage in [Stage.reinflect, Stage.evaluate]:
        for name in SPECS[stage].produces:
            (tmp_path / name).write_text("stale", encoding="utf-8")
    (tmp_path / "cells.tsv").write_text("kept", encoding="utf-8")
    _invalidate_downstream(Stage.paradigms, tmp_path)
    assert (tmp_path / "cells.tsv").exists()
    assert not (tmp_path / "predicted_grid.jsonl").exists()
    assert not (tmp_path / "report.json").exists()


def test_repeats_write_summary(data_dir, tmp_path):
    config = small_config(data_dir, tmp_path, repeats=2, seed=3)
    summary, manifests = run_all(config)
    assert [m.seed for m in manifests] == [3, 4]
    assert (tmp_path / "seed-3" / "report.json").exists()
    assert (tmp_path / "seed-4" / "report.json").exists()
    data = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert len(data["runs"]) == 2
    expected = (manifests[0].metrics["f_grid"] + manifests[1].metrics["f_grid"]) / 2
    assert data["mean"]["f_grid"] == pytest.approx(expected)
    assert summary.f_grid == pytest.approx(expected)
    assert "mean" in (tmp_path / "summary.txt").read_text(encoding="utf-8")


@pytest.mark.slow
def test_synthetic_language_end_to_end(tmp_path):
    paths = make_fixtures(tmp_path / "fixtures", seed=0)
    config = load_config(paths["config"])
    config = dataclasses.replace(config, output_dir=str(tmp_path / "out"))
    report, _ = run_all(config)
    assert report.f_grid >= 0.9
    assert report.lexicon_expansion >= 0.8


def test_supervised_toy_run(tmp_path):
    data = Path(__file__).parent / "data"
    config = resolve_paths(
        config_from_dict(
            {
                "inputs": {"conllu": "toy.conllu", "tables": "toy_tables.tsv"},
                "evaluate": {"n_analogies": 10},
                "supervised": True,
                "output_dir": str(tmp_path),
            }
        ),
        data,
    )
    report, manifests = run_all(config)
    assert "embed" not in manifests[0].stages
    assert not (tmp_path / "biased.emb").exists()
    assert read_paradigms(tmp_path / "paradigms.jsonl") == [
        Paradigm(((0, "follows"), (2, "followed"))),
        Paradigm(((1, "see"), (4, "seen"))),
        Paradigm(((2, "watched"), (3, "watching"))),
    ]
    assert report.f_par == 1.0
    assert report.n_cells == 5
    assert 0.0 <= report.analogy <= report.lexicon_expansion <= 1.0


def test_supervised_cells_need_no_embeddings(data_dir, tmp_path):
    config = dataclasses.replace(small_config(data_dir, tmp_path), supervised=True)
    run_stage(Stage.ingest, config)
    run_stage(Stage.cells, config)
    assert not (tmp_path / "biased.emb").exists()
    assert (tmp_path / "cells.tsv").exists()
