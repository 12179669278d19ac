"""Corpus, lexicon and grid types plus their line-delimited JSON codecs"""
import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

from morphgrid.errors import FormatError

PathLike = Union[str, Path]


@dataclass
class Corpus:
    """Tokenized sentences

    Attributes:
        sentences (List[List[str]]): token sequences, every token non-empty
    """

    sentences: List[List[str]] = field(default_factory=list)

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self) -> Iterator[str]:
        for sentence in self.sentences:
            yield from sentence

    def __add__(self, other: "Corpus") -> "Corpus":
        return Corpus(self.sentences + other.sentences)


@dataclass
class Lexicon:
    """Attested forms of one POS with their corpus frequencies

    Attributes:
        entries (Dict[str, int]): form to corpus frequency, every count >= 1
        pos (str): POS label all entries share
    """

    entries: Dict[str, int]
    pos: str

    def __contains__(self, form: str) -> bool:
        return form in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def forms(self) -> List[str]:
        return sorted(self.entries)


@dataclass(frozen=True)
class AnalysisTuple:
    """A form with its lemma and cell label, counted over annotated sentences"""

    form: str
    lemma: str
    cell: str
    count: int = 1


@dataclass
class GridRow:
    """One paradigm of a grid

    Attributes:
        slots (Dict[str, Tuple[str, ...]]): cell label to the forms in that slot
        label (str): lemma for gold rows, None for predicted rows
        predicted (Dict[str, bool]): per slot, whether its form was generated
    """

    slots: Dict[str, Tuple[str, ...]]
    label: Optional[str] = None
    predicted: Dict[str, bool] = field(default_factory=dict)

    def forms(self) -> Set[str]:
        return {form for forms in self.slots.values() for form in forms}


@dataclass
class Grid:
    """Rows are paradigms, columns are cells, slots hold zero or more forms.

    The same type holds gold grids (cell labels are feature strings) and
    predicted grids (cell labels are cluster ids).
    """

    rows: List[GridRow]

    @property
    def width(self) -> int:
        return len(self.columns)

    @cached_property
    def columns(self) -> List[str]:
        return sorted({cell for row in self.rows for cell in row.slots})

    @cached_property
    def form_rows(self) -> Dict[str, Set[int]]:
        index = defaultdict(set)
        for i, row in enumerate(self.rows):
            for forms in row.slots.values():
                for form in forms:
                    index[form].add(i)
        return dict(index)

    @cached_property
    def form_columns(self) -> Dict[str, Set[str]]:
        index = defaultdict(set)
        for row in self.rows:
            for cell, forms in row.slots.items():
                for form in forms:
                    index[form].add(cell)
        return dict(index)

    @cached_property
    def column_forms(self) -> Dict[str, Set[str]]:
        index = defaultdict(set)
        for row in self.rows:
            for cell, forms in row.slots.items():
                index[cell].update(forms)
        return dict(index)

    def forms(self) -> Set[str]:
        return set(self.form_rows)

    def occurrences(self, form: str) -> List[Tuple[int, str]]:
        """(row, cell) pairs of every slot holding form"""
        return [
            (i, cell)
            for i in sorted(self.form_rows.get(form, ()))
            for cell, forms in self.rows[i].slots.items()
            if form in forms
        ]


GoldGrid = Grid
PredictedGrid = Grid


def write_jsonl(path: PathLike, records: Iterable[dict]):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            f.write("\n")


def read_jsonl(path: PathLike) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}: {e.msg}", line=number) from e


def write_corpus(corpus: Corpus, path: PathLike):
    write_jsonl(path, ({"tokens": s} for s in corpus.sentences))


def read_corpus_jsonl(path: PathLike) -> Corpus:
    return Corpus([record["tokens"] for record in read_jsonl(path)])


def write_lexicon(lexicon: Lexicon, path: PathLike):
    write_jsonl(
        path,
        (
            {"form": form, "count": lexicon.entries[form], "pos": lexicon.pos}
            for form in lexicon.forms
        ),
    )


def read_lexicon(path: PathLike) -> Lexicon:
    entries, pos = {}, None
    for record in read_jsonl(path):
        entries[record["form"]] = record["count"]
        pos = record["pos"]
    return Lexicon(entries, pos)


def write_grid(grid: Grid, path: PathLike):
    def record(i: int, row: GridRow) -> dict:
        out = {"row_id": i, "slots": {c: list(f) for c, f in row.slots.items()}}
        if row.label is not None:
            out["lemma"] = row.label
        if row.predicted:
            out["predicted"] = row.predicted
        return out

    write_jsonl(path, (record(i, row) for i, row in enumerate(grid.rows)))


def read_grid(path: PathLike) -> Grid:
    records = sorted(read_jsonl(path), key=lambda r: r["row_id"])
    return Grid(
        [
            GridRow(
                slots={c: tuple(f) for c, f in r["slots"].items()},
                label=r.get("lemma"),
                predicted=r.get("predicted", {}),
            )
            for r in records
        ]
    )
