import io
from pathlib import Path

import pytest

from morphgrid.config import NormalizationConfig
from morphgrid.errors import AnnotationFormatError, NoGoldParadigmsError, TableFormatError
from morphgrid.grid import AnalysisTuple, Corpus
from morphgrid.ingest import (
    build_gold_grid,
    build_lexicon,
    canonical_cell,
    canonical_label,
    parse_annotations,
    parse_inflection_tables,
    read_corpus,
    tokenize,
)
from morphgrid.synthetic import write_toy

DATA = Path(__file__).parent / "data"

WATCHED = "1\twatched\twatch\tVERB\t_\tTense=Past|VerbForm=Fin\t0\troot\t_\t_\n"


@pytest.fixture
def toy_analyses():
    with open(DATA / "toy.conllu", encoding="utf-8") as f:
        return parse_annotations(f, "VERB")


@pytest.fixture
def toy_tables():
    with open(DATA / "toy_tables.tsv", encoding="utf-8") as f:
        return parse_inflection_tables(f)


def test_tokenize():
    assert tokenize("The cat watched me.").sentences == [["The", "cat", "watched", "me", "."]]
    assert tokenize("").sentences == []
    assert tokenize("watched,me").sentences == [["watched", ",", "me"]]
    assert tokenize("one\n\ntwo three").sentences == [["one"], ["two", "three"]]


def test_tokenize_normalizes():
    config = NormalizationConfig(lowercase=True, strip_diacritics=True)
    assert tokenize("Fīliō", config).sentences == [["filio"]]


def test_read_corpus(tmp_path):
    (tmp_path / "a.txt").write_text("a b\n", encoding="utf-8")
    (tmp_path / "b.txt").write_text("c\n", encoding="utf-8")
    corpus = read_corpus([tmp_path / "a.txt", tmp_path / "b.txt"])
    assert corpus.sentences == [["a", "b"], ["c"]]
    assert read_corpus([]).token_count == 0


def test_canonical_cell():
    assert canonical_cell("VERB", {"Tense": "Past", "VerbForm": "Fin"}) == "V;PST"
    assert canonical_cell("VERB", {"Tense": "Past", "VerbForm": "Part"}) == "V;PST;V.PTCP"
    assert canonical_cell("NOUN", {"Case": "Gen", "Number": "Plur"}) == "N;GEN;PL"
    assert canonical_cell("VERB", None) == "V"
    assert canonical_cell("VERB", {"Evident": "Nfh"}) == "V;Evident=Nfh"


def test_canonical_label():
    assert canonical_label("V;V.PTCP;PRS") == "V;PRS;V.PTCP"
    assert canonical_label("PL;N;GEN") == "N;GEN;PL"
    assert canonical_label("V;3;SG;PRS") == canonical_cell(
        "VERB", {"Number": "Sing", "Person": "3", "Tense": "Pres", "VerbForm": "Fin"}
    )


def test_parse_annotations():
    tuples, corpus = parse_annotations(io.StringIO(WATCHED + "\n"), "VERB")
    assert tuples == [AnalysisTuple("watched", "watch", "V;PST", 1)]
    assert corpus.sentences == [["watched"]]

    tuples, _ = parse_annotations(io.StringIO(WATCHED + "\n"), "NOUN")
    assert tuples == []

    tuples, corpus = parse_annotations(io.StringIO(WATCHED + "\n" + WATCHED + "\n"), "VERB")
    assert tuples == [AnalysisTuple("watched", "watch", "V;PST", 2)]
    assert corpus.token_count == 2


def test_parse_annotations_malformed_line():
    text = "# sent_id = 1\n" + WATCHED + "2\tme\tI\tPRON\n\n"
    with pytest.raises(AnnotationFormatError) as e:
        parse_annotations(io.StringIO(text), "VERB")
    assert e.value.line == 3
    assert "line 3" in str(e.value)


def test_parse_annotations_skips_multiword_tokens(toy_analyses):
    tuples, corpus = toy_analyses
    assert {t.form for t in tuples} == {"watched", "watching", "followed", "seen", "see", "follows"}
    assert "hasn't" not in set(corpus.tokens())
    assert "has" in set(corpus.tokens())


def test_parse_inflection_tables():
    assert parse_inflection_tables(io.StringIO("watch\twatched\tV;PST\n")) == {
        "watch": {"V;PST": {"watched"}}
    }
    tables = parse_inflection_tables(io.StringIO("watch\twatched\tV;PST\n" * 2))
    assert tables == {"watch": {"V;PST": {"watched"}}}
    tables = parse_inflection_tables(io.StringIO("color\tcolor\tN;SG\ncolor\tcolour\tN;SG\n"))
    assert tables == {"color": {"N;SG": {"color", "colour"}}}


def test_parse_inflection_tables_bad_row():
    with pytest.raises(TableFormatError) as e:
        parse_inflection_tables(io.StringIO("watch\twatched\tV;PST\nwatch\twatches\n"))
    assert e.value.line == 2


def test_build_gold_grid(toy_tables):
    grid = build_gold_grid([AnalysisTuple("watched", "watch", "V;PST")], toy_tables)
    assert len(grid.rows) == 1
    row = grid.rows[0]
    assert row.label == "watch"
    assert row.forms() == {"watch", "watches", "watching", "watched"}
    assert row.slots["V;PST"] == ("watched",)
    assert row.slots["V;PST;V.PTCP"] == ("watched",)


def test_build_gold_grid_overabundance():
    tables = {"color": {"N;SG": {"color", "colour"}}}
    tuples = [AnalysisTuple("color", "color", "N;SG", 3), AnalysisTuple("colour", "color", "N;SG", 1)]
    grid = build_gold_grid(tuples, tables)
    assert grid.rows[0].slots == {"N;SG": ("color",)}


def test_build_gold_grid_errors(toy_tables):
    with pytest.raises(NoGoldParadigmsError, match="no gold paradigms"):
        build_gold_grid([], toy_tables)
    with pytest.raises(NoGoldParadigmsError, match="no gold paradigms"):
        build_gold_grid([AnalysisTuple("ran", "run", "V;PST")], toy_tables)


def test_build_lexicon(toy_analyses, toy_tables):
    tuples, corpus = toy_analyses
    lexicon = build_lexicon(tuples, corpus, "VERB")
    assert set(lexicon.entries) == {"watching", "seen", "follows", "watched", "followed", "see"}
    assert lexicon.pos == "VERB"

    grid = build_gold_grid(tuples, toy_tables)
    assert [row.label for row in grid.rows] == ["follow", "see", "watch"]


def test_build_lexicon_frequencies():
    tuples = [AnalysisTuple("color", "color", "N;SG"), AnalysisTuple("colour", "color", "N;SG")]
    corpus = Corpus([["color", "x"], ["color", "colour"], ["color"]])
    lexicon = build_lexicon(tuples, corpus)
    assert lexicon.entries == {"color": 3, "colour": 1}


def test_written_toy_matches_fixture(tmp_path, toy_analyses):
    paths = write_toy(tmp_path)
    with open(paths["conllu"], encoding="utf-8") as f:
        tuples, _ = parse_annotations(f, "VERB")
    assert [(t.form, t.lemma, t.cell) for t in tuples] == [
        (t.form, t.lemma, t.cell) for t in toy_analyses[0]
    ]
    with open(paths["tables"], encoding="utf-8") as f, open(DATA / "toy_tables.tsv", encoding="utf-8") as g:
        assert parse_inflection_tables(f) == parse_inflection_tables(g)
