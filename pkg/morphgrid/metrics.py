"""Scores a predicted grid against a gold grid.

Paradigm discovery is scored by macro-averaged retrieval F over each lexicon
form's paradigm mates and cell mates. Cell filling is scored on four-way
analogies sampled from the gold grid.
"""
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Container, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from morphgrid.errors import EmptyEvaluationError, NoAnalogiesError
from morphgrid.grid import Grid
from morphgrid.helpers import harmonic_mean

logger = logging.getLogger(__name__)

PARADIGM, CELL = "paradigm", "cell"

# enumerate every candidate instance below this many, sample by rejection above
ENUMERATION_LIMIT = 200_000


def mates(grid: Grid, form: str, mode: str, lexicon: Container[str]) -> Set[str]:
    """Other lexicon forms sharing a row (paradigm mode) or a column (cell
    mode) with any occurrence of form"""
    if mode == PARADIGM:
        groups = [grid.rows[i].forms() for i in grid.form_rows.get(form, ())]
    elif mode == CELL:
        groups = [grid.column_forms[c] for c in grid.form_columns.get(form, ())]
    else:
        raise ValueError(f"unknown mate mode {mode!r}")
    return {f for group in groups for f in group if f != form and f in lexicon}


def f_score(predicted_set: Set[str], gold_set: Set[str]) -> float:
    if not predicted_set and not gold_set:
        return 1.0
    hits = len(predicted_set & gold_set)
    if hits == 0:
        return 0.0
    return harmonic_mean(hits / len(predicted_set), hits / len(gold_set))


def form_scores(pred_grid: Grid, gold_grid: Grid, lexicon: Container[str]) -> pd.DataFrame:
    """Per evaluation form (lexicon forms in the gold grid) paradigm and cell F"""
    forms = sorted(f for f in gold_grid.forms() if f in lexicon)
    if not forms:
        raise EmptyEvaluationError("empty evaluation set: no lexicon form occurs in the gold grid")
    rows = []
    for form in forms:
        rows.append(
            {
                "form": form,
                "f_par": f_score(mates(pred_grid, form, PARADIGM, lexicon), mates(gold_grid, form, PARADIGM, lexicon)),
                "f_cell": f_score(mates(pred_grid, form, CELL, lexicon), mates(gold_grid, form, CELL, lexicon)),
            }
        )
    return pd.DataFrame(rows, columns=["form", "f_par", "f_cell"])


def pdp_scores(pred_grid: Grid, gold_grid: Grid, lexicon: Container[str]) -> Tuple[float, float, float]:
    """(F_par, F_cell, F_grid)"""
    scores = form_scores(pred_grid, gold_grid, lexicon)
    f_par, f_cell = float(scores["f_par"].mean()), float(scores["f_cell"].mean())
    return f_par, f_cell, harmonic_mean(f_par, f_cell)


@dataclass(frozen=True)
class AnalogyInstance:
    """f1 : f2 :: f3 : f4

    f1 and f2 share a gold row, as do f3 and f4; f1 and f3 share a gold
    column, as do f2 and f4. f4 is the unattested form to predict. The
    provenance fields are None for instances read back from TSV.
    """

    f1: str
    f2: str
    f3: str
    f4: str
    rows: Optional[Tuple[int, int]] = None
    columns: Optional[Tuple[str, str]] = None

    @property
    def forms(self) -> Tuple[str, str, str, str]:
        return (self.f1, self.f2, self.f3, self.f4)


def _share_row(grid: Grid, a: str, b: str) -> bool:
    return bool(grid.form_rows.get(a, set()) & grid.form_rows.get(b, set()))


def _share_column(grid: Grid, a: str, b: str) -> bool:
    return bool(grid.form_columns.get(a, set()) & grid.form_columns.get(b, set()))


def _holds(instance: AnalogyInstance, grid: Grid) -> bool:
    return (
        _share_row(grid, instance.f1, instance.f2)
        and _share_row(grid, instance.f3, instance.f4)
        and _share_column(grid, instance.f1, instance.f3)
        and _share_column(grid, instance.f2, instance.f4)
    )


def _holds_jointly(instance: AnalogyInstance, grid: Grid) -> bool:
    """Some rows r, r' and columns a, b put f1 at (r, a), f2 at (r, b), f3 at
    (r', a) and f4 at (r', b)"""
    for r, a in grid.occurrences(instance.f1):
        for b, forms in grid.rows[r].slots.items():
            if b == a or instance.f2 not in forms:
                continue
            for r2, a3 in grid.occurrences(instance.f3):
                if a3 == a and instance.f4 in grid.rows[r2].slots.get(b, ()):
                    return True
    return False


def is_valid_analogy(instance: AnalogyInstance, gold_grid: Grid, lexicon: Container[str]) -> bool:
    attested = all(f in lexicon for f in (instance.f1, instance.f2, instance.f3))
    return attested and instance.f4 not in lexicon and _holds(instance, gold_grid)


def _analogy_groups(gold_grid: Grid, lexicon: Container[str]) -> List[Tuple[str, str, list, list]]:
    """Per ordered column pair (a, b): (row, f1, f2) triples with both forms
    attested and (row, f3, f4) triples with f3 attested and f4 not"""
    groups = []
    columns = gold_grid.columns
    for a in columns:
        for b in columns:
            if a == b:
                continue
            left, right = [], []
            for r, row in enumerate(gold_grid.rows):
                for x in sorted(row.slots.get(a, ())):
                    if x not in lexicon:
                        continue
                    for y in sorted(row.slots.get(b, ())):
                        if y == x:
                            continue
                        (left if y in lexicon else right).append((r, x, y))
            if left and right:
                groups.append((a, b, left, right))
    return groups


def _decode(groups, offsets, index: int) -> Optional[AnalogyInstance]:
    g = int(np.searchsorted(offsets, index, side="right")) - 1
    a, b, left, right = groups[g]
    i, j = divmod(index - int(offsets[g]), len(right))
    (r1, f1, f2), (r2, f3, f4) = left[i], right[j]
    if r1 == r2:
        return None
    return AnalogyInstance(f1, f2, f3, f4, rows=(r1, r2), columns=(a, b))


def sample_analogies(gold_grid: Grid, lexicon: Container[str], n: int = 2000, seed: int = 0) -> List[AnalogyInstance]:
    """Uniform sample without replacement of n valid analogy instances, distinct
    by their four forms.

    Returns every valid instance, with a warning, when fewer than n exist.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    groups = _analogy_groups(gold_grid, lexicon)
    sizes = np.array([len(left) * len(right) for _, _, left, right in groups], dtype=np.int64)
    total = int(sizes.sum())
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)

    if total <= max(ENUMERATION_LIMIT, 4 * n):
        valid, seen = [], set()
        for i in range(total):
            inst = _decode(groups, offsets, i)
            if inst is not None and inst.forms not in seen:
                seen.add(inst.forms)
                valid.append(inst)
        if not valid:
            raise NoAnalogiesError("no valid analogy instances in the gold grid")
        if len(valid) <= n:
            if len(valid) < n:
                logger.warning(f"only {len(valid)} valid analogy instances, fewer than the {n} requested")
            return valid
        picked = np.sort(rng.choice(len(valid), size=n, replace=False))
        return [valid[i] for i in picked]

    sample, tried, seen = {}, set(), set()
    while len(sample) < n and len(tried) < total:
        index = int(rng.integers(total))
        if index in tried:
            continue
        tried.add(index)
        inst = _decode(groups, offsets, index)
        if inst is not None and inst.forms not in seen:
            seen.add(inst.forms)
            sample[index] = inst
    if not sample:
        raise NoAnalogiesError("no valid analogy instances in the gold grid")
    if len(sample) < n:
        logger.warning(f"only {len(sample)} valid analogy instances, fewer than the {n} requested")
    return [sample[i] for i in sorted(sample)]


def _check_instances(instances: Sequence[AnalogyInstance]):
    if not instances:
        raise EmptyEvaluationError("empty evaluation set: no analogy instances")


def analogy_accuracy(instances: Sequence[AnalogyInstance], pred_grid: Grid, joint: bool = False) -> float:
    _check_instances(instances)
    holds = _holds_jointly if joint else _holds
    return sum(holds(inst, pred_grid) for inst in instances) / len(instances)


def lexicon_expansion(instances: Sequence[AnalogyInstance], pred_grid: Grid) -> float:
    _check_instances(instances)
    return sum(inst.f4 in pred_grid.form_rows for inst in instances) / len(instances)


def _shared_suffix(forms: Sequence[str], share: float = 0.9) -> str:
    """Longest suffix ending at least `share` of forms, ties lexicographic"""
    need = share * len(forms)
    for length in range(max((len(f) for f in forms), default=0), 0, -1):
        counts = Counter(f[-length:] for f in forms if len(f) >= length)
        winners = sorted(s for s, c in counts.items() if c >= need)
        if winners:
            return winners[0]
    return ""


def interpret_cells(pred_grid: Grid, gold_grid: Grid, lexicon: Container[str]) -> pd.DataFrame:
    """Per predicted cell: gold-label proportions of its lexicon members and
    the longest suffix most of them share"""
    rows = []
    for cell in pred_grid.columns:
        members = sorted(f for f in pred_grid.column_forms[cell] if f in lexicon)
        labels = Counter()
        for form in members:
            gold = gold_grid.form_columns.get(form, ())
            for label in gold:
                labels[label] += 1 / len(gold)
        total = sum(labels.values())
        top = sorted(labels.items(), key=lambda kv: (-kv[1], kv[0]))
        rows.append(
            {
                "cell": cell,
                "members": len(members),
                "labels": ", ".join(f"{label}:{count / total:.2f}" for label, count in top),
                "suffix": _shared_suffix(members),
            }
        )
    return pd.DataFrame(rows, columns=["cell", "members", "labels", "suffix"])


@dataclass
class MetricsReport:
    """Attributes:
    f_cell, f_par, f_grid (float): paradigm discovery scores
    analogy, lexicon_expansion (float): cell filling accuracies
    n_cells, n_paradigms (int): predicted grid shape
    n_instances (int): analogy instances scored
    per_form (pd.DataFrame): per-form paradigm and cell F
    """

    f_cell: float
    f_par: float
    f_grid: float
    analogy: float
    lexicon_expansion: float
    n_cells: int
    n_paradigms: int
    n_instances: int
    per_form: pd.DataFrame = field(default=None, repr=False, compare=False)

    METRICS = ("f_cell", "f_par", "f_grid", "analogy", "lexicon_expansion")

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("per_form")
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k != "per_form"})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{name: getattr(self, name) for name in self.METRICS}])

    def to_table(self) -> str:
        return self.to_frame().to_string(index=False, float_format=lambda x: f"{x:.4f}")

    def write(self, path: Union[str, Path]):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        path.with_suffix(".txt").write_text(self.to_table() + "\n", encoding="utf-8")
        if self.per_form is not None:
            self.per_form.to_csv(path.with_name(path.stem + "_forms.tsv"), sep="\t", index=False)


def evaluate(
    pred_grid: Grid,
    gold_grid: Grid,
    lexicon: Container[str],
    instances: Sequence[AnalogyInstance],
    joint: bool = False,
) -> MetricsReport:
    per_form = form_scores(pred_grid, gold_grid, lexicon)
    f_par, f_cell = float(per_form["f_par"].mean()), float(per_form["f_cell"].mean())
    report = MetricsReport(
        f_cell=f_cell,
        f_par=f_par,
        f_grid=harmonic_mean(f_par, f_cell),
        analogy=analogy_accuracy(instances, pred_grid, joint=joint),
        lexicon_expansion=lexicon_expansion(instances, pred_grid),
        n_cells=pred_grid.width,
        n_paradigms=len(pred_grid.rows),
        n_instances=len(instances),
        per_form=per_form,
    )
    logger.info(f"F_par={report.f_par:.4f} F_cell={report.f_cell:.4f} F_grid={report.f_grid:.4f}")
    logger.info(f"analogy={report.analogy:.4f} lexicon expansion={report.lexicon_expansion:.4f}")
    return report


def write_analogies(instances: Sequence[AnalogyInstance], path: Union[str, Path]):
    frame = pd.DataFrame([inst.forms for inst in instances], columns=["f1", "f2", "f3", "f4"])
    frame.to_csv(path, sep="\t", index=False)


def read_analogies(path: Union[str, Path]) -> List[AnalogyInstance]:
    frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
    return [AnalogyInstance(*row) for row in frame[["f1", "f2", "f3", "f4"]].itertuples(index=False)]
