"""Configuration dataclasses and the TOML/JSON loader"""
import dataclasses
import json
import tomllib
from dataclasses import dataclass, field
from enum import Enum, unique
from pathlib import Path
from typing import List, Optional, Union

from morphgrid.errors import ConfigError


@unique
class OmegaMode(Enum):
    """Exponent penalty used by the second paradigm clustering pass"""

    heuristic = "heuristic"
    const1 = "const1"
    const0 = "const0"


@unique
class SourceMode(Enum):
    """How reinflection picks the source cell for an empty slot"""

    ranked = "ranked"
    random = "random"


@dataclass(frozen=True)
class NormalizationConfig:
    """Orthographic transforms applied to every token, lemma and table form

    Attributes:
        lowercase (bool): case-fold forms
        strip_diacritics (bool): drop combining marks (macrons, harakat, ...)
    """

    lowercase: bool = False
    strip_diacritics: bool = False


@dataclass(frozen=True)
class EmbeddingConfig:
    """Hyperparameters of the subword skip-gram trainer

    Attributes:
        ngram_min (int): shortest character n-gram
        ngram_max (int): longest character n-gram
        window (int): context radius in tokens
        dim (int): vector dimension
        negatives (int): negative samples per positive pair
        epochs (int): passes over the corpus
        learning_rate (float): initial learning rate, decayed linearly to 0
        bucket_count (int): number of hash buckets n-grams are mapped into
        min_count (int): vocabulary frequency floor
        seed (int): seed for initialization and sampling
    """

    ngram_min: int = 2
    ngram_max: int = 4
    window: int = 1
    dim: int = 100
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.05
    bucket_count: int = 2_000_000
    min_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.ngram_min <= self.ngram_max:
            raise ConfigError(
                f"need 1 <= ngram_min <= ngram_max, got {self.ngram_min}, "
                f"{self.ngram_max}"
            )
        for name in ("window", "dim", "negatives", "epochs", "bucket_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1")

    @classmethod
    def biased(cls, **overrides) -> "EmbeddingConfig":
        """Short n-grams and a one-token window favour affixes and syntax"""
        return cls(**{"ngram_min": 2, "ngram_max": 4, "window": 1, **overrides})

    @classmethod
    def default(cls, **overrides) -> "EmbeddingConfig":
        """Stock subword settings, used for candidate pruning"""
        return cls(**{"ngram_min": 3, "ngram_max": 6, "window": 5, **overrides})


@dataclass(frozen=True)
class InputsConfig:
    """Input files

    Attributes:
        conllu (str): annotated sentences
        tables (str): 3-column inflection table TSV
        raw_text (List[str]): unannotated text files, one sentence per line
    """

    conllu: Optional[str] = None
    tables: Optional[str] = None
    raw_text: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class EmbeddingsConfig:
    biased: EmbeddingConfig = field(default_factory=EmbeddingConfig.biased)
    default: EmbeddingConfig = field(default_factory=EmbeddingConfig.default)


@dataclass(frozen=True)
class CellsConfig:
    """
    Attributes:
        restarts (int): k-means runs averaged into each d_k
        k_max (int): largest k the elbow search considers
        gold_k (int): fixed number of cells; skips the elbow search
        max_iter (int): Lloyd iteration cap
    """

    restarts: int = 25
    k_max: int = 40
    gold_k: Optional[int] = None
    max_iter: int = 100


@dataclass(frozen=True)
class ParadigmsConfig:
    """
    Attributes:
        n_neighbors (int): candidates per later cell considered when extending
        omega (OmegaMode): penalty for the second pass
        passes (int): 1 runs only the unpenalized pass, 2 runs both
    """

    n_neighbors: int = 250
    omega: OmegaMode = OmegaMode.heuristic
    passes: int = 2

    def __post_init__(self):
        if self.passes not in (1, 2):
            raise ConfigError("passes must be 1 or 2")
        if self.n_neighbors < 1:
            raise ConfigError("n_neighbors must be >= 1")


@dataclass(frozen=True)
class ReinflectConfig:
    sources: SourceMode = SourceMode.ranked
    dev_fraction: float = 0.1


@dataclass(frozen=True)
class EvaluateConfig:
    """
    Attributes:
        n_analogies (int): analogy instances sampled from the gold grid
        joint (bool): require one consistent slot assignment per analogy
    """

    n_analogies: int = 2000
    joint: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run depends on

    Attributes:
        pos (str): POS tag the lexicon is restricted to
        seed (int): master seed; every stage derives its own seeds from it
        repeats (int): independent runs with consecutive seeds
        output_dir (str): where artifacts, reports and the manifest go
        supervised (bool): take cells and paradigms from the gold grid instead
            of discovering them, leaving only reinflection to be learned
    """

    inputs: InputsConfig = field(default_factory=InputsConfig)
    pos: str = "VERB"
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    embeddings: EmbeddingsConfig = field(default_factory=EmbeddingsConfig)
    cells: CellsConfig = field(default_factory=CellsConfig)
    paradigms: ParadigmsConfig = field(default_factory=ParadigmsConfig)
    reinflect: ReinflectConfig = field(default_factory=ReinflectConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    seed: int = 0
    repeats: int = 1
    output_dir: str = "out"
    supervised: bool = False

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def section(self, name: str) -> dict:
        return self.to_dict()[name]


_ENUM_FIELDS = {"omega": OmegaMode, "sources": SourceMode}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    return obj


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {where!r} must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {where!r}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        nested = _NESTED.get((cls, name))
        if nested is not None:
            value = _build(nested, value, f"{where}.{name}" if where else name)
        elif name in _ENUM_FIELDS:
            try:
                value = _ENUM_FIELDS[name](value)
            except ValueError as e:
                raise ConfigError(str(e)) from e
        elif name == "raw_text" and isinstance(value, str):
            value = [value]
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from e


_NESTED = {
    (PipelineConfig, "inputs"): InputsConfig,
    (PipelineConfig, "normalization"): NormalizationConfig,
    (PipelineConfig, "embeddings"): EmbeddingsConfig,
    (PipelineConfig, "cells"): CellsConfig,
    (PipelineConfig, "paradigms"): ParadigmsConfig,
    (PipelineConfig, "reinflect"): ReinflectConfig,
    (PipelineConfig, "evaluate"): EvaluateConfig,
    (EmbeddingsConfig, "biased"): EmbeddingConfig,
    (EmbeddingsConfig, "default"): EmbeddingConfig,
}


def config_from_dict(data: dict) -> PipelineConfig:
    data = dict(data)
    embeddings = data.get("embeddings")
    if isinstance(embeddings, dict):
        # presets fill in whatever a partial section leaves out
        data["embeddings"] = EmbeddingsConfig(
            biased=_preset(EmbeddingConfig.biased, embeddings.get("biased", {})),
            default=_preset(EmbeddingConfig.default, embeddings.get("default", {})),
        )
        unknown = set(embeddings) - {"biased", "default"}
        if unknown:
            raise ConfigError(f"unknown keys in 'embeddings': {sorted(unknown)}")
        built = _build(PipelineConfig, {k: v for k, v in data.items() if k != "embeddings"}, "")
        return dataclasses.replace(built, embeddings=data["embeddings"])
    return _build(PipelineConfig, data, "")


def _preset(factory, overrides: dict) -> EmbeddingConfig:
    base = dataclasses.asdict(factory())
    unknown = set(overrides) - set(base)
    if unknown:
        raise ConfigError(f"unknown embedding keys: {sorted(unknown)}")
    return EmbeddingConfig(**{**base, **overrides})


def load_config(path: Union[str, Path]) -> PipelineConfig:
    """Reads a TOML or JSON configuration document"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    if path.suffix == ".toml":
        with open(path, "rb") as f:
            try:
                data = tomllib.load(f)
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e
    elif path.suffix == ".json":
        with open(path, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e
    else:
        raise ConfigError(f"config must be .toml or .json, got {path.suffix!r}")
    return resolve_paths(config_from_dict(data), path.parent)


def resolve_paths(config: PipelineConfig, root: Union[str, Path]) -> PipelineConfig:
    """Anchors relative input paths and the output directory at root"""
    root = Path(root)

    def anchor(p):
        return None if p is None else str(root / p)

    inputs = dataclasses.replace(
        config.inputs,
        conllu=anchor(config.inputs.conllu),
        tables=anchor(config.inputs.tables),
        raw_text=[anchor(p) for p in config.inputs.raw_text],
    )
    return dataclasses.replace(config, inputs=inputs, output_dir=anchor(config.output_dir))
