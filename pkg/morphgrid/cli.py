"""Command line entry point: one subcommand per stage plus run-all and
make-fixtures. Flags override the configuration file."""
import argparse
import dataclasses
import logging
import logging.config
import sys
from pathlib import Path
from typing import List

from morphgrid.config import OmegaMode, PipelineConfig, SourceMode, load_config
from morphgrid.db.models.run import Stage
from morphgrid.errors import ConfigError, MorphGridError
from morphgrid.pipeline import run_all, run_stage
from morphgrid.synthetic import make_fixtures

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("-c", "--config", help="TOML or JSON configuration file")
    parser.add_argument("-o", "--output-dir", help="artifact directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    parser.add_argument("--log-config", help="logging fileConfig .ini file")


def _pipeline_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("inputs")
    group.add_argument("--conllu", help="annotated sentences")
    group.add_argument("--tables", help="inflection table TSV")
    group.add_argument("--raw", action="append", help="raw text file; repeat for more")
    group.add_argument("--ud-only", action="store_true", help="ignore raw text")
    group.add_argument("--pos", help="POS tag of the lexicon")

    group = parser.add_argument_group("ablations")
    group.add_argument("--no-affix-bias", action="store_true", help="biased embeddings use 3-6 grams")
    group.add_argument("--no-window-bias", action="store_true", help="biased embeddings use window 5")
    group.add_argument("--gold-k", type=int, help="fixed number of cells")
    group.add_argument("--omega", choices=[m.value for m in OmegaMode], help="second-pass penalty")
    group.add_argument("--single-pass", action="store_true", help="skip the penalized pass")
    group.add_argument("--sources", choices=[m.value for m in SourceMode], help="source cell choice")
    group.add_argument("--n-analogies", type=int, help="analogies to sample")
    group.add_argument("--joint", action="store_true", help="joint slot assignment for analogies")
    group.add_argument("--repeats", type=int, help="runs with consecutive seeds")
    group.add_argument("--sup", action="store_true", help="gold cells and paradigms, reinflection only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphgrid", description="Unsupervised paradigm discovery from raw and annotated text"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in Stage:
        p = sub.add_parser(stage.value, help=f"run the {stage.value} stage")
        _common(p)
        _pipeline_flags(p)
    p = sub.add_parser("run-all", help="run every stage")
    _common(p)
    _pipeline_flags(p)
    p = sub.add_parser("make-fixtures", help="write the synthetic and toy fixtures")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stems", type=int, default=50)
    p.add_argument("--tokens", type=int, default=100_000)
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--log-config")
    return parser


def setup_logging(args: argparse.Namespace):
    if args.log_config:
        logging.config.fileConfig(args.log_config, disable_existing_loggers=False)
    else:
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    replace = dataclasses.replace

    inputs = config.inputs
    if args.conllu:
        inputs = replace(inputs, conllu=args.conllu)
    if args.tables:
        inputs = replace(inputs, tables=args.tables)
    if args.raw:
        inputs = replace(inputs, raw_text=list(args.raw))
    if args.ud_only:
        inputs = replace(inputs, raw_text=[])

    biased, default = config.embeddings.biased, config.embeddings.default
    if args.no_affix_bias:
        biased = replace(biased, ngram_min=default.ngram_min, ngram_max=default.ngram_max)
    if args.no_window_bias:
        biased = replace(biased, window=default.window)

    cells, paradigms = config.cells, config.paradigms
    if args.gold_k is not None:
        if args.gold_k < 1:
            raise ConfigError("--gold-k must be >= 1")
        cells = replace(cells, gold_k=args.gold_k)
    if args.omega:
        paradigms = replace(paradigms, omega=OmegaMode(args.omega))
    if args.single_pass:
        paradigms = replace(paradigms, passes=1)

    reinflect, evaluate = config.reinflect, config.evaluate
    if args.sources:
        reinflect = replace(reinflect, sources=SourceMode(args.sources))
    if args.n_analogies is not None:
        evaluate = replace(evaluate, n_analogies=args.n_analogies)
    if args.joint:
        evaluate = replace(evaluate, joint=True)

    overrides = {}
    if args.pos:
        overrides["pos"] = args.pos
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if args.repeats is not None:
        if args.repeats < 1:
            raise ConfigError("--repeats must be >= 1")
        overrides["repeats"] = args.repeats
    if args.sup:
        overrides["supervised"] = True
    return replace(
        config,
        inputs=inputs,
        embeddings=replace(config.embeddings, biased=biased, default=default),
        cells=cells,
        paradigms=paradigms,
        reinflect=reinflect,
        evaluate=evaluate,
        **overrides,
    )


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args)
    try:
        if args.command == "make-fixtures":
            paths = make_fixtures(args.out_dir, args.seed, n_stems=args.stems, n_tokens=args.tokens)
            for name, path in sorted(paths.items()):
                print(f"{name}\t{path}")
            return 0
        config = config_from_args(args)
        if args.command == "run-all":
            report, _ = run_all(config)
            print(report.to_table())
        else:
            result = run_stage(Stage(args.command), config)
            for name, digest in sorted(result.artifacts.items()):
                print(f"{Path(config.output_dir) / name}\t{digest[:12]}")
    except MorphGridError as e:
        logger.error(str(e))
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
