"""Stage orchestration with content-hash caching and a run manifest.

Every stage reads its upstream artifacts from the output directory and writes
its own next to them. A stage's cache key digests its upstream artifacts, its
configuration section and its seed; a stage whose key was seen before and
whose recorded outputs are still on disk is skipped.
"""
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd

from morphgrid.cells import cluster_cells, gold_assignment, read_assignment, write_assignment, write_curve
from morphgrid.config import PipelineConfig
from morphgrid.db import ManifestStore, database_url
from morphgrid.db.models.run import Stage
from morphgrid.embeddings import NeighborIndex, load_model, save_model, train_embeddings
from morphgrid.errors import InputError, MissingArtifactError
from morphgrid.grid import (
    read_corpus_jsonl,
    read_grid,
    read_lexicon,
    write_corpus,
    write_grid,
    write_lexicon,
)
from morphgrid.helpers import file_digest, json_digest, spawn_seeds
from morphgrid.ingest import (
    build_gold_grid,
    build_lexicon,
    parse_annotations,
    parse_inflection_tables,
    read_corpus,
)
from morphgrid.metrics import (
    MetricsReport,
    evaluate,
    interpret_cells,
    sample_analogies,
    write_analogies,
)
from morphgrid.paradigms import (
    cluster_paradigms_with_distribution,
    exponent_distribution,
    gold_paradigms,
    read_paradigms,
    write_paradigms,
)
from morphgrid.reinflect import fill_grid, make_pairs, rank_sources, train_rewriter

logger = logging.getLogger(__name__)

STAGES = list(Stage)


def _input_file(path: Optional[str], what: str) -> Path:
    if not path:
        raise InputError(f"no {what} file configured")
    if not Path(path).exists():
        raise InputError(f"{what} file {path!r} does not exist")
    return Path(path)


def _ingest(config: PipelineConfig, out: Path, seed: int):
    conllu = _input_file(config.inputs.conllu, "annotation")
    tables_path = _input_file(config.inputs.tables, "inflection table")
    raw = [_input_file(p, "raw text") for p in config.inputs.raw_text]
    with open(conllu, encoding="utf-8") as f:
        tuples, annotated = parse_annotations(f, config.pos, config.normalization)
    with open(tables_path, encoding="utf-8") as f:
        tables = parse_inflection_tables(f, config.normalization)
    corpus = annotated + read_corpus(raw, config.normalization)
    gold = build_gold_grid(tuples, tables)
    lexicon = build_lexicon(tuples, corpus, config.pos)
    logger.info(f"corpus: {corpus.token_count} tokens; lexicon: {len(lexicon)} forms; gold: {len(gold.rows)} paradigms")
    write_corpus(corpus, out / "corpus.jsonl")
    write_lexicon(lexicon, out / "lexicon.jsonl")
    write_grid(gold, out / "gold_grid.jsonl")


def _embed(config: PipelineConfig, out: Path, seed: int):
    corpus = read_corpus_jsonl(out / "corpus.jsonl")
    biased_seed, default_seed = spawn_seeds(seed, 2)
    biased = train_embeddings(corpus, dataclasses.replace(config.embeddings.biased, seed=biased_seed))
    save_model(biased, out / "biased.emb")
    default = train_embeddings(corpus, dataclasses.replace(config.embeddings.default, seed=default_seed))
    save_model(default, out / "default.emb")


def _cells(config: PipelineConfig, out: Path, seed: int):
    lexicon = read_lexicon(out / "lexicon.jsonl")
    if config.supervised:
        assignment, _ = gold_assignment(read_grid(out / "gold_grid.jsonl"), lexicon)
    else:
        assignment = cluster_cells(
            load_model(out / "biased.emb"),
            lexicon,
            restarts=config.cells.restarts,
            k_max=config.cells.k_max,
            gold_k=config.cells.gold_k,
            seed=seed,
            max_iter=config.cells.max_iter,
        )
    write_assignment(assignment, out / "cells.tsv")
    if assignment.curve is not None:
        write_curve(assignment.curve, out / "dispersion.csv")
    else:
        pd.DataFrame(columns=["k", "d_k", "decel"]).to_csv(out / "dispersion.csv", index=False)


def _paradigms(config: PipelineConfig, out: Path, seed: int):
    if config.supervised:
        gold = read_grid(out / "gold_grid.jsonl")
        assignment, labels = gold_assignment(gold, read_lexicon(out / "lexicon.jsonl"))
        paradigms = gold_paradigms(gold, assignment.cells, labels)
        write_paradigms(paradigms, out / "paradigms.jsonl")
        exponent_distribution(paradigms).to_frame().to_csv(out / "exponents.tsv", sep="\t", index=False)
        return
    cells = read_assignment(out / "cells.tsv").members()
    index = NeighborIndex(load_model(out / "default.emb"), cells, config.paradigms.n_neighbors)
    paradigms, distribution = cluster_paradigms_with_distribution(cells, index, config.paradigms)
    write_paradigms(paradigms, out / "paradigms.jsonl")
    distribution = distribution or exponent_distribution(paradigms)
    distribution.to_frame().to_csv(out / "exponents.tsv", sep="\t", index=False)


def _reinflect(config: PipelineConfig, out: Path, seed: int):
    paradigms = read_paradigms(out / "paradigms.jsonl")
    k = read_assignment(out / "cells.tsv").k
    split_seed, fill_seed = spawn_seeds(seed, 2)
    train, dev = make_pairs(paradigms, split_seed, config.reinflect.dev_fraction)
    model = train_rewriter(train)
    if not dev:
        logger.warning("no development pairs; ranking sources on the training pairs")
        dev = train
    attested = sorted({c for p in paradigms for c, _ in p})
    ranking = rank_sources(model, dev, attested)
    grid = fill_grid(paradigms, model, ranking, k, config.reinflect.sources, fill_seed)
    write_grid(grid, out / "predicted_grid.jsonl")
    model.to_frame().to_csv(out / "rules.tsv", sep="\t", index=False)
    ranking.to_frame().to_csv(out / "sources.tsv", sep="\t", index=False)


def _evaluate(config: PipelineConfig, out: Path, seed: int):
    pred = read_grid(out / "predicted_grid.jsonl")
    gold = read_grid(out / "gold_grid.jsonl")
    lexicon = read_lexicon(out / "lexicon.jsonl")
    instances = sample_analogies(gold, lexicon, config.evaluate.n_analogies, seed)
    report = evaluate(pred, gold, lexicon, instances, joint=config.evaluate.joint)
    report.write(out / "report.json")
    write_analogies(instances, out / "analogies.tsv")
    interpret_cells(pred, gold, lexicon).to_csv(out / "cell_interpretation.tsv", sep="\t", index=False)


@dataclass(frozen=True)
class StageSpec:
    run: Callable[[PipelineConfig, Path, int], None]
    requires: Tuple[str, ...]
    produces: Tuple[str, ...]
    sections: Tuple[str, ...]
    # upstream artifacts when cells and paradigms come from the gold grid
    supervised_requires: Optional[Tuple[str, ...]] = None


SPECS = {
    Stage.ingest: StageSpec(
        _ingest, (), ("corpus.jsonl", "lexicon.jsonl", "gold_grid.jsonl"), ("pos", "normalization")
    ),
    Stage.embed: StageSpec(_embed, ("corpus.jsonl",), ("biased.emb", "default.emb"), ("embeddings",)),
    Stage.cells: StageSpec(
        _cells,
        ("lexicon.jsonl", "biased.emb"),
        ("cells.tsv", "dispersion.csv"),
        ("cells", "supervised"),
        ("lexicon.jsonl", "gold_grid.jsonl"),
    ),
    Stage.paradigms: StageSpec(
        _paradigms,
        ("cells.tsv", "default.emb"),
        ("paradigms.jsonl", "exponents.tsv"),
        ("paradigms", "supervised"),
        ("cells.tsv", "gold_grid.jsonl", "lexicon.jsonl"),
    ),
    Stage.reinflect: StageSpec(
        _reinflect,
        ("paradigms.jsonl", "cells.tsv"),
        ("predicted_grid.jsonl", "rules.tsv", "sources.tsv"),
        ("reinflect",),
    ),
    Stage.evaluate: StageSpec(
        _evaluate,
        ("predicted_grid.jsonl", "gold_grid.jsonl", "lexicon.jsonl"),
        ("report.json", "report.txt", "report_forms.tsv", "analogies.tsv", "cell_interpretation.tsv"),
        ("evaluate",),
    ),
}
PRODUCER = {name: stage for stage, spec in SPECS.items() for name in spec.produces}


def requires(stage: Stage, config: PipelineConfig) -> Tuple[str, ...]:
    spec = SPECS[stage]
    if config.supervised and spec.supervised_requires is not None:
        return spec.supervised_requires
    return spec.requires


def stages_for(config: PipelineConfig) -> List[Stage]:
    """Stages a full run executes; supervised runs need no embeddings"""
    if config.supervised:
        return [s for s in STAGES if s is not Stage.embed]
    return list(STAGES)


def stage_seed(config: PipelineConfig, stage: Stage) -> int:
    return spawn_seeds(config.seed, len(STAGES))[STAGES.index(stage)]


def cache_key(stage: Stage, config: PipelineConfig) -> str:
    out = Path(config.output_dir)
    spec = SPECS[stage]
    if stage is Stage.ingest:
        files = [config.inputs.conllu, config.inputs.tables] + list(config.inputs.raw_text)
        upstream = [file_digest(_input_file(p, "input")) for p in files]
    else:
        upstream = {name: file_digest(out / name) for name in requires(stage, config)}
    return json_digest(
        {
            "stage": stage.value,
            "upstream": upstream,
            "config": {name: config.section(name) for name in spec.sections},
            "seed": stage_seed(config, stage),
        }
    )


def _digests(out: Path, names) -> Optional[Dict[str, str]]:
    if not all((out / name).exists() for name in names):
        return None
    return {name: file_digest(out / name) for name in names}


def _invalidate_downstream(stage: Stage, out: Path):
    for later in STAGES[STAGES.index(stage) + 1 :]:
        for name in SPECS[later].produces:
            if (out / name).exists():
                logger.info(f"removing stale {name}")
                (out / name).unlink()


@dataclass
class StageResult:
    stage: Stage
    cache_key: str
    artifacts: Dict[str, str]
    seconds: float
    cached: bool

    @property
    def output_hash(self) -> str:
        return json_digest(self.artifacts)


def _open_store(config: PipelineConfig) -> Tuple[ManifestStore, int]:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    store = ManifestStore(database_url(out))
    run_id = store.start_run(config.seed, json_digest(config.to_dict()), config.to_dict(), str(out))
    return store, run_id


def run_stage(stage: Stage, config: PipelineConfig, store: ManifestStore = None, run_id: int = None) -> StageResult:
    """Runs one stage unless an identical execution's outputs are on disk.

    Raises:
        MissingArtifactError: an upstream artifact is absent
    """
    stage = Stage(stage)
    spec = SPECS[stage]
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in requires(stage, config):
        if not (out / name).exists():
            raise MissingArtifactError(name, PRODUCER[name].value)

    own_store = store is None
    if own_store:
        store, run_id = _open_store(config)
    try:
        key = cache_key(stage, config)
        before = _digests(out, spec.produces)
        recorded = store.lookup(stage, key)
        if recorded is not None and recorded == before:
            logger.info(f"{stage.value}: cache hit")
            result = StageResult(stage, key, before, 0.0, True)
        else:
            logger.info(f"{stage.value}: cache miss, running")
            start = time.perf_counter()
            spec.run(config, out, stage_seed(config, stage))
            seconds = time.perf_counter() - start
            after = _digests(out, spec.produces)
            if after != before:
                _invalidate_downstream(stage, out)
            result = StageResult(stage, key, after, seconds, False)
            logger.info(f"{stage.value}: finished in {seconds:.2f}s")
        store.record_stage(run_id, stage, key, result.output_hash, result.artifacts, result.seconds, result.cached)
        if stage is Stage.evaluate:
            report = MetricsReport.from_dict(json.loads((out / "report.json").read_text(encoding="utf-8")))
            store.record_metrics(run_id, {m: getattr(report, m) for m in MetricsReport.METRICS})
        if own_store:
            store.finish_run(run_id)
    finally:
        if own_store:
            store.close()
    return result


@dataclass
class RunManifest:
    """Attributes:
    config (dict): configuration snapshot
    seed (int): master seed
    stages (Dict[str, dict]): per stage cache key, output hash, seconds, cached
    metrics (Dict[str, float]): evaluation results
    """

    config: dict
    seed: int
    stages: Dict[str, dict] = field(default_factory=dict)
    metrics: Dict[str, float] = field(default_factory=dict)

    def write(self, path: Path):
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_seed(config: PipelineConfig, store: ManifestStore = None) -> Tuple[MetricsReport, RunManifest]:
    """All stages for the config's seed"""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    own_store = store is None
    if own_store:
        store = ManifestStore(database_url(out))
    try:
        run_id = store.start_run(config.seed, json_digest(config.to_dict()), config.to_dict(), str(out))
        manifest = RunManifest(config=config.to_dict(), seed=config.seed)
        for stage in stages_for(config):
            result = run_stage(stage, config, store, run_id)
            manifest.stages[stage.value] = {
                "cache_key": result.cache_key,
                "output_hash": result.output_hash,
                "seconds": result.seconds,
                "cached": result.cached,
            }
        report = MetricsReport.from_dict(json.loads((out / "report.json").read_text(encoding="utf-8")))
        manifest.metrics = {m: getattr(report, m) for m in MetricsReport.METRICS}
        manifest.write(out / "manifest.json")
        store.finish_run(run_id)
    finally:
        if own_store:
            store.close()
    return report, manifest


def mean_report(reports: List[MetricsReport]) -> MetricsReport:
    fields = [f.name for f in dataclasses.fields(MetricsReport) if f.name != "per_form"]
    return MetricsReport(**{name: mean(getattr(r, name) for r in reports) for name in fields})


def run_all(config: PipelineConfig) -> Tuple[MetricsReport, List[RunManifest]]:
    """Runs every stage for each of `repeats` consecutive seeds.

    Repeats go to per-seed subdirectories and their metric means are written
    to summary.json and summary.txt in the output directory.
    """
    if config.repeats == 1:
        report, manifest = run_seed(config)
        return report, [manifest]

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    store = ManifestStore(database_url(out))
    reports, manifests = [], []
    try:
        for r in range(config.repeats):
            seed = config.seed + r
            sub = dataclasses.replace(config, seed=seed, repeats=1, output_dir=str(out / f"seed-{seed}"))
            logger.info(f"repeat {r + 1}/{config.repeats} (seed {seed})")
            report, manifest = run_seed(sub, store)
            reports.append(report)
            manifests.append(manifest)
    finally:
        store.close()

    summary = mean_report(reports)
    rows = [{"seed": m.seed, **m.metrics} for m in manifests]
    rows.append({"seed": "mean", **{name: getattr(summary, name) for name in MetricsReport.METRICS}})
    (out / "summary.json").write_text(
        json.dumps({"runs": rows[:-1], "mean": rows[-1]}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    table = pd.DataFrame(rows).to_string(index=False, float_format=lambda x: f"{x:.4f}")
    (out / "summary.txt").write_text(table + "\n", encoding="utf-8")
    return summary, manifests
