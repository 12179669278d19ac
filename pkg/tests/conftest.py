import pytest

from morphgrid.grid import Grid, GridRow, Lexicon


def gold_row(lemma, forms, cells=("c1", "c2", "c3", "c4", "c5")):
    return GridRow(
        slots={c: (f,) for c, f in zip(cells, forms) if f is not None}, label=lemma
    )


@pytest.fixture
def toy_lexicon():
    return Lexicon(
        {f: 1 for f in ["watching", "seen", "follows", "watched", "followed", "see"]},
        "VERB",
    )


@pytest.fixture
def toy_gold_grid():
    """Every analysis of the syncretic past forms"""
    return Grid(
        [
            gold_row("watch", ["watch", "watches", "watching", "watched", "watched"]),
            gold_row("follow", ["follow", "follows", "following", "followed", "followed"]),
            gold_row("see", ["see", "sees", "seeing", "saw", "seen"]),
        ]
    )


@pytest.fixture
def toy_gold_restricted():
    """watched and followed only in the column their corpus token realizes"""
    return Grid(
        [
            gold_row("watch", ["watch", "watches", "watching", "watched", None]),
            gold_row("follow", ["follow", "follows", "following", "followed", None]),
            gold_row("see", ["see", "sees", "seeing", "saw", "seen"]),
        ]
    )


@pytest.fixture
def toy_prediction():
    """Four proposed paradigms; seen is split from see"""
    rows = [
        ["watched", "watching", "watches", "watch"],
        ["followed", "following", "follows", "follow"],
        ["seed", "seeing", "sees", "see"],
        ["seened", "seening", "seens", "seen"],
    ]
    return Grid(
        [GridRow(slots={str(c): (f,) for c, f in enumerate(row)}) for row in rows]
    )
