"""Fills empty paradigm slots by reinflecting from an attested source cell.

The built-in transducer learns exponent rewrites: for every training pair the
two forms are split into base and exponents, and the differing gaps become
edits keyed by the (source cell, target cell) pair.
"""
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from morphgrid.config import SourceMode
from morphgrid.errors import NothingToTrainError
from morphgrid.grid import Grid, GridRow, PredictedGrid
from morphgrid.paradigms import Exponent, Paradigm, base, format_exponent

logger = logging.getLogger(__name__)

START, INTERIOR, END, WHOLE = "start", "interior", "end", "whole"


@dataclass(frozen=True)
class ReinflectionInstance:
    source_cell: int
    source_form: str
    target_cell: int
    target_form: str = ""

    def __post_init__(self):
        if self.source_cell == self.target_cell:
            raise ValueError(f"source and target cell are both {self.source_cell}")


class Transducer(Protocol):
    def predict(self, form: str, source_cell: int, target_cell: int) -> str:
        ...


@dataclass(frozen=True, order=True)
class Edit:
    """Replace `old` with `new` in one gap of the base.

    Interior edits also carry `context`, the base character just before the
    gap, which anchors them in a new form.
    """

    position: str
    old: str
    new: str
    context: str = ""


@dataclass(frozen=True)
class Rule:
    edits: Tuple[Edit, ...]
    source_exponent: Exponent
    target_exponent: Exponent

    @property
    def matched_length(self) -> int:
        return sum(len(e.old) for e in self.edits)

    def sort_key(self) -> tuple:
        return (format_exponent(self.source_exponent), format_exponent(self.target_exponent), self.edits)

    def apply(self, form: str) -> Optional[str]:
        """The rewritten form, or None when the source side does not fit"""
        head, tail, middle = "", "", form
        interior = []
        for edit in self.edits:
            if edit.position == WHOLE:
                return edit.new if form == edit.old else None
            if edit.position == START:
                if not middle.startswith(edit.old):
                    return None
                head, middle = edit.new, middle[len(edit.old) :]
            elif edit.position == END:
                if not middle.endswith(edit.old):
                    return None
                tail, middle = edit.new, middle[: len(middle) - len(edit.old)]
            else:
                interior.append(edit)
        pieces, cursor = [], 0
        for edit in interior:
            anchor = edit.context + edit.old
            at = middle.find(anchor, cursor)
            if at < 0:
                return None
            cut = at + len(edit.context)
            pieces.append(middle[cursor:cut])
            pieces.append(edit.new)
            cursor = cut + len(edit.old)
        pieces.append(middle[cursor:])
        return head + "".join(pieces) + tail


def derive_rule(source_form: str, target_form: str) -> Rule:
    analysis = base([source_form, target_form])
    src_gaps, tgt_gaps = analysis.gaps
    last = len(analysis.base)
    edits = []
    for i, (old, new) in enumerate(zip(src_gaps, tgt_gaps)):
        if old == new:
            continue
        if last == 0:
            edits.append(Edit(WHOLE, old, new))
        elif i == 0:
            edits.append(Edit(START, old, new))
        elif i == last:
            edits.append(Edit(END, old, new))
        else:
            edits.append(Edit(INTERIOR, old, new, analysis.base[i - 1]))
    return Rule(tuple(edits), *analysis.exponents)


@dataclass
class RewriteModel:
    """Exponent rewrite rules per (source cell, target cell)

    Attributes:
        rules (Dict[Tuple[int, int], List[Tuple[Rule, int]]]): rules with their
            counts, most frequent first, ties lexicographic
    """

    rules: Dict[Tuple[int, int], List[Tuple[Rule, int]]] = field(default_factory=dict)

    def predict(self, form: str, source_cell: int, target_cell: int) -> str:
        """Applies the fitting rule with the longest source side; copies the
        form when nothing fits"""
        best, best_key = None, None
        for rank, (rule, count) in enumerate(self.rules.get((source_cell, target_cell), ())):
            output = rule.apply(form)
            if output is None:
                continue
            key = (rule.matched_length, count, -rank)
            if best_key is None or key > best_key:
                best, best_key = output, key
        return form if best is None else best

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "source_cell": src,
                "target_cell": tgt,
                "source_exponent": format_exponent(rule.source_exponent),
                "target_exponent": format_exponent(rule.target_exponent),
                "count": count,
            }
            for (src, tgt), ranked in sorted(self.rules.items())
            for rule, count in ranked
        ]
        return pd.DataFrame(
            rows, columns=["source_cell", "target_cell", "source_exponent", "target_exponent", "count"]
        )


def make_pairs(
    paradigms: Sequence[Paradigm], seed: int = 0, dev_fraction: float = 0.1
) -> Tuple[List[ReinflectionInstance], List[ReinflectionInstance]]:
    """All ordered within-paradigm pairs, split into train and dev by paradigm"""
    multi = [p for p in paradigms if len(p) >= 2]
    if not multi:
        raise NothingToTrainError(f"nothing to train on: none of {len(paradigms)} paradigms has two members")
    order = np.random.default_rng(seed).permutation(len(multi))
    n_dev = int(round(len(multi) * dev_fraction))
    if len(multi) >= 2:
        n_dev = max(1, n_dev)
    dev_ids = set(order[:n_dev].tolist())

    train, dev = [], []
    for i, paradigm in enumerate(multi):
        target = dev if i in dev_ids else train
        for src_cell, src_form in paradigm:
            for tgt_cell, tgt_form in paradigm:
                if src_cell != tgt_cell:
                    target.append(ReinflectionInstance(src_cell, src_form, tgt_cell, tgt_form))
    logger.info(f"{len(train)} train and {len(dev)} dev pairs from {len(multi)} paradigms")
    return train, dev


def train_rewriter(train_pairs: Iterable[ReinflectionInstance]) -> RewriteModel:
    counts = defaultdict(Counter)
    for pair in train_pairs:
        rule = derive_rule(pair.source_form, pair.target_form)
        counts[(pair.source_cell, pair.target_cell)][rule] += 1
    if not counts:
        raise NothingToTrainError("nothing to train on: no training pairs")
    model = RewriteModel(
        {
            key: sorted(rules.items(), key=lambda rc: (-rc[1], rc[0].sort_key()))
            for key, rules in sorted(counts.items())
        }
    )
    logger.info(f"learned {sum(len(r) for r in model.rules.values())} rules over {len(model.rules)} cell pairs")
    return model


def apply(model: Transducer, source_form: str, c_src: int, c_tgt: int) -> str:
    return model.predict(source_form, c_src, c_tgt)


@dataclass
class SourceRanking:
    """Per target cell, source cells ordered by held-out exact-match accuracy

    Attributes:
        order (Dict[int, List[int]]): target cell to ranked source cells
        accuracy (Dict[Tuple[int, int], float]): (source, target) accuracy on
            the pairs that were observed
    """

    order: Dict[int, List[int]] = field(default_factory=dict)
    accuracy: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def sources(self, target: int) -> List[int]:
        return self.order.get(target, [])

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "target_cell": tgt,
                "rank": rank,
                "source_cell": src,
                "accuracy": self.accuracy.get((src, tgt), 0.0),
            }
            for tgt in sorted(self.order)
            for rank, src in enumerate(self.order[tgt])
        ]
        return pd.DataFrame(rows, columns=["target_cell", "rank", "source_cell", "accuracy"])


def rank_sources(
    model: Transducer, dev_pairs: Iterable[ReinflectionInstance], cells: Iterable[int] = None
) -> SourceRanking:
    """Ranks every attested cell as a source for every other cell.

    Pairs never seen on dev score 0 and come after observed pairs with equal
    accuracy. `cells` defaults to the cells appearing in dev_pairs.
    """
    correct, total = Counter(), Counter()
    seen = set()
    for pair in dev_pairs:
        key = (pair.source_cell, pair.target_cell)
        total[key] += 1
        correct[key] += apply(model, pair.source_form, *key) == pair.target_form
        seen.update(key)
    cells = sorted(seen if cells is None else set(cells))
    accuracy = {key: correct[key] / n for key, n in total.items()}
    order = {
        tgt: sorted(
            (src for src in cells if src != tgt),
            key=lambda src: (-accuracy.get((src, tgt), 0.0), (src, tgt) not in accuracy, src),
        )
        for tgt in cells
    }
    return SourceRanking(order, accuracy)


def fill_grid(
    paradigms: Sequence[Paradigm],
    model: Transducer,
    ranking: SourceRanking,
    k: int,
    sources: SourceMode = SourceMode.ranked,
    seed: int = 0,
) -> PredictedGrid:
    """A k-column grid with one row per paradigm and every slot filled.

    Attested forms are kept; each empty slot is predicted from the best
    ranked attested cell of its paradigm, or from a seeded uniform choice in
    random-source mode.
    """
    rng = np.random.default_rng(seed)
    rows, filled = [], 0
    for paradigm in paradigms:
        attested = paradigm.slots()
        if any(c >= k or c < 0 for c in attested):
            raise ValueError(f"paradigm {paradigm.members} has cells outside 0..{k - 1}")
        slots = {str(c): (f,) for c, f in attested.items()}
        predicted = {str(c): False for c in attested}
        choices = sorted(attested)
        for target in range(k):
            if target in attested:
                continue
            if sources is SourceMode.random:
                source = choices[int(rng.integers(len(choices)))]
            else:
                ranked = [c for c in ranking.sources(target) if c in attested]
                source = ranked[0] if ranked else choices[0]
            slots[str(target)] = (apply(model, attested[source], source, target),)
            predicted[str(target)] = True
            filled += 1
        rows.append(GridRow(slots=slots, predicted=predicted))
    logger.info(f"filled {filled} slots in {len(rows)} paradigms ({sources.value} sources)")
    return Grid(rows)


def write_pairs(pairs: Iterable[ReinflectionInstance], path: Union[str, Path]):
    frame = pd.DataFrame(
        [(p.source_cell, p.source_form, p.target_cell, p.target_form) for p in pairs],
        columns=["source_cell", "source_form", "target_cell", "target_form"],
    )
    frame.to_csv(path, sep="\t", index=False)
