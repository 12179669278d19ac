"""Fixture generators behind `morphgrid make-fixtures`.

The synthetic language is agglutinative: every verb is an eight-letter stem
followed by one of four unambiguous two-letter suffixes, and every verb is
preceded by a particle that marks its cell. Some slots are held out of the
corpus so that analogies have something to predict.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Set, Tuple, Union

import numpy as np
from conllu.models import Token, TokenList

logger = logging.getLogger(__name__)

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"


@dataclass(frozen=True)
class SyntheticCell:
    feats: Dict[str, str]
    label: str
    suffix: str
    particle: str


CELLS = (
    SyntheticCell({"Tense": "Pres", "VerbForm": "Fin"}, "V;PRS", "ka", "na"),
    SyntheticCell({"Tense": "Past", "VerbForm": "Fin"}, "V;PST", "mi", "lo"),
    SyntheticCell({"VerbForm": "Part"}, "V;V.PTCP", "tu", "se"),
    SyntheticCell({"VerbForm": "Ger"}, "V;V.MSDR", "ro", "pu"),
)


@dataclass
class SyntheticLanguage:
    """Attributes:
    stems (List[str]): verb stems, most frequent first
    held_out (Set[Tuple[int, int]]): (stem index, cell index) slots never attested
    """

    stems: List[str]
    held_out: Set[Tuple[int, int]]

    def form(self, stem: int, cell: int) -> str:
        return self.stems[stem] + CELLS[cell].suffix

    def attested(self) -> List[Tuple[int, int]]:
        return [
            (s, c)
            for s in range(len(self.stems))
            for c in range(len(CELLS))
            if (s, c) not in self.held_out
        ]


def generate_language(n_stems: int = 50, seed: int = 0, held_out_rate: float = 0.3) -> SyntheticLanguage:
    rng = np.random.default_rng(seed)
    stems = []
    while len(stems) < n_stems:
        stem = "".join(
            rng.choice(list(CONSONANTS)) + rng.choice(list(VOWELS)) for _ in range(4)
        )
        if stem not in stems:
            stems.append(stem)
    held_out = {
        (s, int(rng.integers(len(CELLS))))
        for s in range(n_stems)
        if rng.random() < held_out_rate
    }
    return SyntheticLanguage(stems, held_out)


def _verb(i: int, form: str, lemma: str, cell: SyntheticCell) -> Token:
    return Token(
        id=i, form=form, lemma=lemma, upos="VERB", xpos=None, feats=dict(cell.feats),
        head=0, deprel="root", deps=None, misc=None,
    )


def _particle(i: int, cell: SyntheticCell) -> Token:
    return Token(
        id=i, form=cell.particle, lemma=cell.particle, upos="PART", xpos=None, feats=None,
        head=i + 1, deprel="aux", deps=None, misc=None,
    )


def _serialize(sentences: List[TokenList]) -> str:
    return "".join(s.serialize().rstrip("\n") + "\n\n" for s in sentences)


def write_synthetic(
    out_dir: Union[str, Path],
    seed: int = 0,
    n_stems: int = 50,
    n_tokens: int = 100_000,
    pairs_per_sentence: int = 5,
) -> Dict[str, Path]:
    """Writes annotations, inflection tables and Zipf-sampled raw text"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    language = generate_language(n_stems, seed)
    attested = language.attested()

    annotated = [
        TokenList(
            [_particle(1, CELLS[c]), _verb(2, language.form(s, c), language.stems[s], CELLS[c])],
            metadata={"sent_id": str(i)},
        )
        for i, (s, c) in enumerate(attested)
    ]
    paths = {
        "conllu": out_dir / "synthetic.conllu",
        "tables": out_dir / "synthetic_tables.tsv",
        "raw": out_dir / "synthetic.txt",
        "config": out_dir / "synthetic.toml",
    }
    paths["conllu"].write_text(_serialize(annotated), encoding="utf-8")

    with open(paths["tables"], "w", encoding="utf-8") as f:
        for s, stem in enumerate(language.stems):
            for c, cell in enumerate(CELLS):
                f.write(f"{stem}\t{language.form(s, c)}\t{cell.label}\n")

    rng = np.random.default_rng(seed + 1)
    weights = np.array([1.0 / (1 + s) for s, _ in attested])
    picks = rng.choice(len(attested), size=n_tokens // 2, p=weights / weights.sum())
    with open(paths["raw"], "w", encoding="utf-8") as f:
        for start in range(0, len(picks), pairs_per_sentence):
            words = []
            for i in picks[start : start + pairs_per_sentence]:
                s, c = attested[i]
                words += [CELLS[c].particle, language.form(s, c)]
            f.write(" ".join(words) + "\n")

    paths["config"].write_text(
        f"""seed = {seed}
pos = "VERB"
output_dir = "out"

[inputs]
conllu = "{paths['conllu'].name}"
tables = "{paths['tables'].name}"
raw_text = ["{paths['raw'].name}"]

[embeddings.biased]
dim = 50
epochs = 3

[embeddings.default]
dim = 50
epochs = 3

[cells]
restarts = 5
gold_k = {len(CELLS)}

[evaluate]
n_analogies = 500
""",
        encoding="utf-8",
    )
    logger.info(
        f"wrote synthetic language: {n_stems} stems, {len(attested)} attested slots, "
        f"{len(language.held_out)} held out"
    )
    return paths


# (form, lemma, feats) per token; None marks tokens outside the lexicon POS
TOY_SENTENCES = [
    [
        ("the", None, None),
        ("cat", None, None),
        ("watched", "watch", {"Tense": "Past", "VerbForm": "Fin"}),
        ("me", None, None),
        ("watching", "watch", {"Tense": "Pres", "VerbForm": "Part"}),
        ("it", None, None),
        (".", None, None),
    ],
    [
        ("i", None, None),
        ("followed", "follow", {"Tense": "Past", "VerbForm": "Fin"}),
        ("the", None, None),
        ("show", None, None),
        ("but", None, None),
        ("she", None, None),
        ("hasn't", None, None),
        ("seen", "see", {"Tense": "Past", "VerbForm": "Part"}),
        ("it", None, None),
        (".", None, None),
    ],
    [
        ("let's", None, None),
        ("see", "see", {"VerbForm": "Inf"}),
        ("who", None, None),
        ("follows", "follow", {"Number": "Sing", "Person": "3", "Tense": "Pres", "VerbForm": "Fin"}),
        ("your", None, None),
        ("logic", None, None),
        (".", None, None),
    ],
]

TOY_TABLES = {
    "watch": ["watch", "watches", "watching", "watched", "watched"],
    "follow": ["follow", "follows", "following", "followed", "followed"],
    "see": ["see", "sees", "seeing", "saw", "seen"],
}
TOY_LABELS = ["V;NFIN", "V;3;SG;PRS", "V;V.PTCP;PRS", "V;PST", "V;V.PTCP;PST"]


def write_toy(out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Writes the three-sentence English toy corpus and its full tables"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sentences = []
    for n, words in enumerate(TOY_SENTENCES):
        tokens = [
            Token(
                id=i, form=form, lemma=lemma or form, upos="VERB" if feats else "X", xpos=None,
                feats=feats, head=0, deprel="dep", deps=None, misc=None,
            )
            for i, (form, lemma, feats) in enumerate(words, start=1)
        ]
        sentences.append(TokenList(tokens, metadata={"sent_id": f"toy-{n}"}))
    paths = {"conllu": out_dir / "toy.conllu", "tables": out_dir / "toy_tables.tsv"}
    paths["conllu"].write_text(_serialize(sentences), encoding="utf-8")
    with open(paths["tables"], "w", encoding="utf-8") as f:
        for lemma, forms in TOY_TABLES.items():
            for form, label in zip(forms, TOY_LABELS):
                f.write(f"{lemma}\t{form}\t{label}\n")
    return paths


def make_fixtures(out_dir: Union[str, Path], seed: int = 0, **kwargs) -> Dict[str, Path]:
    paths = write_synthetic(Path(out_dir) / "synthetic", seed, **kwargs)
    paths.update({f"toy_{k}": v for k, v in write_toy(Path(out_dir) / "toy").items()})
    return paths
