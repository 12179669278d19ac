"""Builds the corpus, lexicon and gold grid from annotations, tables and raw text.

The annotated sentences are CoNLL-U. Inflection tables are 3-column TSV
(lemma, form, cell label). Raw text has one sentence per line.
"""
import logging
import re
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Optional, Set, TextIO, Tuple

import conllu
from conllu.exceptions import ParseException

from morphgrid.config import NormalizationConfig
from morphgrid.errors import (
    AnnotationFormatError,
    NoGoldParadigmsError,
    TableFormatError,
)
from morphgrid.grid import AnalysisTuple, Corpus, GoldGrid, GridRow, Lexicon
from morphgrid.helpers import normalize

logger = logging.getLogger(__name__)

TOKEN_PATTERN = re.compile(r"\w+(?:['’]\w+)*|['’]\w+|[^\w\s]")

POS_TAGS = {
    "VERB": "V",
    "AUX": "AUX",
    "NOUN": "N",
    "PROPN": "PROPN",
    "ADJ": "ADJ",
    "ADV": "ADV",
    "PRON": "PRO",
    "DET": "DET",
    "NUM": "NUM",
    "ADP": "ADP",
}
UNIMORPH_POS = set(POS_TAGS.values())

# None drops the feature; UniMorph leaves it implicit
FEATURE_TAGS = {
    ("Tense", "Past"): "PST",
    ("Tense", "Pres"): "PRS",
    ("Tense", "Fut"): "FUT",
    ("Tense", "Imp"): "IPFV",
    ("Tense", "Pqp"): "PLPRF",
    ("VerbForm", "Fin"): None,
    ("VerbForm", "Inf"): "NFIN",
    ("VerbForm", "Part"): "V.PTCP",
    ("VerbForm", "Ger"): "V.MSDR",
    ("VerbForm", "Conv"): "V.CVB",
    ("VerbForm", "Sup"): "SUP",
    ("Number", "Sing"): "SG",
    ("Number", "Plur"): "PL",
    ("Number", "Dual"): "DU",
    ("Person", "1"): "1",
    ("Person", "2"): "2",
    ("Person", "3"): "3",
    ("Mood", "Ind"): "IND",
    ("Mood", "Sub"): "SBJV",
    ("Mood", "Imp"): "IMP",
    ("Mood", "Cnd"): "COND",
    ("Mood", "Opt"): "OPT",
    ("Mood", "Jus"): "JUS",
    ("Aspect", "Perf"): "PFV",
    ("Aspect", "Imp"): "IPFV",
    ("Aspect", "Prog"): "PROG",
    ("Voice", "Act"): "ACT",
    ("Voice", "Pass"): "PASS",
    ("Voice", "Mid"): "MID",
    ("Case", "Nom"): "NOM",
    ("Case", "Acc"): "ACC",
    ("Case", "Gen"): "GEN",
    ("Case", "Dat"): "DAT",
    ("Case", "Ins"): "INS",
    ("Case", "Loc"): "ESS",
    ("Case", "Abl"): "ABL",
    ("Case", "Voc"): "VOC",
    ("Case", "Par"): "PRT",
    ("Gender", "Masc"): "MASC",
    ("Gender", "Fem"): "FEM",
    ("Gender", "Neut"): "NEUT",
    ("Animacy", "Anim"): "ANIM",
    ("Animacy", "Inan"): "INAN",
    ("Definite", "Def"): "DEF",
    ("Definite", "Ind"): "INDF",
    ("Definite", "Cons"): "PSSD",
    ("Degree", "Cmp"): "CMPR",
    ("Degree", "Sup"): "SPRL",
    ("Polarity", "Neg"): "NEG",
}


def _order(tags: Iterable[str]) -> str:
    tags = set(tags)
    pos = sorted(tags & UNIMORPH_POS)
    return ";".join(pos + sorted(tags - UNIMORPH_POS))


def canonical_cell(upos: str, feats: Optional[Dict[str, str]]) -> str:
    """Converts a UD POS and feature bundle into a UniMorph-style label"""
    tags = [POS_TAGS.get(upos, upos)]
    for key, value in (feats or {}).items():
        # multi-valued features such as Case=Acc,Dat
        for part in str(value).split(","):
            if (key, part) in FEATURE_TAGS:
                tag = FEATURE_TAGS[(key, part)]
            else:
                tag = f"{key}={part}"
            if tag is not None:
                tags.append(tag)
    return _order(tags)


def canonical_label(label: str) -> str:
    """Puts an existing UniMorph label into canonical tag order"""
    return _order(tag for tag in label.strip().split(";") if tag)


def tokenize(raw_text: str, config: NormalizationConfig = None) -> Corpus:
    """Splits text into sentences (lines) of whitespace/punctuation tokens"""
    sentences = []
    for line in raw_text.splitlines():
        tokens = [normalize(t, config) for t in TOKEN_PATTERN.findall(line)]
        tokens = [t for t in tokens if t]
        if tokens:
            sentences.append(tokens)
    return Corpus(sentences)


def read_corpus(paths: Iterable[str], config: NormalizationConfig = None) -> Corpus:
    """Tokenizes one or more raw-text files into a single corpus"""
    corpus = Corpus()
    for path in paths:
        with open(path, encoding="utf-8") as f:
            corpus = corpus + tokenize(f.read(), config)
    return corpus


def _sentence_blocks(stream: TextIO) -> Iterable[Tuple[int, List[str]]]:
    start, lines = None, []
    for number, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            if lines:
                yield start, lines
            start, lines = None, []
            continue
        if not line.startswith("#"):
            columns = line.split("\t")
            if len(columns) != 10:
                raise AnnotationFormatError(
                    f"expected 10 tab-separated columns, got {len(columns)}",
                    line=number,
                )
        if start is None:
            start = number
        lines.append(line)
    if lines:
        yield start, lines


def parse_annotations(
    stream: TextIO, pos_filter: str, config: NormalizationConfig = None
) -> Tuple[List[AnalysisTuple], Corpus]:
    """Reads CoNLL-U into analysis tuples of one POS plus the plain sentences

    Returns:
        tuples sorted by (form, lemma, cell), each counted over all sentences,
        and the sentences stripped to their (syntactic word) tokens.
    """
    counts = Counter()
    sentences = []
    for start, lines in _sentence_blocks(stream):
        try:
            parsed = conllu.parse("\n".join(lines) + "\n\n")
        except ParseException as e:
            raise AnnotationFormatError(str(e), line=start) from e
        for sentence in parsed:
            tokens = []
            for token in sentence:
                if not isinstance(token["id"], int):
                    continue
                form = normalize(token["form"], config)
                if not form:
                    continue
                tokens.append(form)
                if token["upos"] != pos_filter:
                    continue
                lemma = normalize(token["lemma"], config)
                cell = canonical_cell(token["upos"], token["feats"])
                counts[(form, lemma, cell)] += 1
            if tokens:
                sentences.append(tokens)
    tuples = [
        AnalysisTuple(form, lemma, cell, count)
        for (form, lemma, cell), count in sorted(counts.items())
    ]
    logger.info(
        f"read {len(tuples)} {pos_filter} analyses from {len(sentences)} sentences"
    )
    return tuples, Corpus(sentences)


def parse_inflection_tables(
    stream: TextIO, config: NormalizationConfig = None
) -> Dict[str, Dict[str, Set[str]]]:
    """Reads lemma/form/label TSV into lemma -> cell label -> forms

    Identical rows collapse; distinct forms for one slot are all kept.
    """
    tables = defaultdict(lambda: defaultdict(set))
    for number, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        columns = line.split("\t")
        if len(columns) != 3:
            raise TableFormatError(
                f"expected 3 tab-separated columns, got {len(columns)}", line=number
            )
        lemma, form, label = columns
        tables[normalize(lemma, config)][canonical_label(label)].add(
            normalize(form, config)
        )
    return {lemma: dict(cells) for lemma, cells in tables.items()}


def build_gold_grid(
    tuples: List[AnalysisTuple], tables: Dict[str, Dict[str, Set[str]]]
) -> GoldGrid:
    """Adds the full table of every lemma attested with a matching analysis.

    Overabundant slots keep only the realization attested most often in the
    annotated data, ties going to the lexicographically smallest form.
    """
    if not tuples:
        raise NoGoldParadigmsError("no gold paradigms: no analyses given")
    attested = Counter()
    lemmas = set()
    for t in tuples:
        attested[(t.lemma, t.cell, t.form)] += t.count
        if t.form in tables.get(t.lemma, {}).get(t.cell, ()):
            lemmas.add(t.lemma)
    if not lemmas:
        raise NoGoldParadigmsError(
            "no gold paradigms: no analysis matches an inflection table"
        )
    rows = []
    for lemma in sorted(lemmas):
        slots = {}
        for cell, forms in sorted(tables[lemma].items()):
            best = min(forms, key=lambda f: (-attested[(lemma, cell, f)], f))
            slots[cell] = (best,)
        rows.append(GridRow(slots=slots, label=lemma))
    logger.info(f"gold grid has {len(rows)} paradigms")
    return GoldGrid(rows)


def build_lexicon(tuples: List[AnalysisTuple], corpus: Corpus, pos: str = None) -> Lexicon:
    """Every form with an analysis, with its frequency over the whole corpus"""
    forms = {t.form for t in tuples}
    counts = Counter(token for token in corpus.tokens() if token in forms)
    entries = {form: counts[form] for form in sorted(forms) if counts[form] > 0}
    return Lexicon(entries, pos)
