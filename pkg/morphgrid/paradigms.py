"""Greedy paradigm clustering over cell-assigned forms.

A paradigm's base is the longest common subsequence of its forms; each form's
exponent is what remains of it once the base is removed, as a tuple of
segments. Segments before the first base character carry a leading "<" and
segments after the last one a trailing ">"; the markers are not counted as
characters.
"""
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from morphgrid.config import OmegaMode, ParadigmsConfig
from morphgrid.grid import Grid, read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

Exponent = Tuple[str, ...]
Member = Tuple[int, str]


@dataclass(frozen=True)
class Paradigm:
    """Ordered (cell id, form) pairs; no cell occurs twice"""

    members: Tuple[Member, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("a paradigm needs at least one member")
        cells = [c for c, _ in self.members]
        if len(set(cells)) != len(cells):
            raise ValueError(f"cells repeat within paradigm {self.members}")

    def __iter__(self) -> Iterator[Member]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def forms(self) -> List[str]:
        return [f for _, f in self.members]

    def slots(self) -> Dict[int, str]:
        return dict(self.members)

    def extend(self, cell: int, form: str) -> "Paradigm":
        return Paradigm(self.members + ((cell, form),))


@dataclass(frozen=True)
class BaseExponent:
    """
    Attributes:
        base (str): common subsequence of every form
        gaps (Tuple[Tuple[str, ...], ...]): per form, the |base| + 1 residual
            strings before, between and after the embedded base characters
        exponents (Tuple[Exponent, ...]): per form, the non-empty gaps with
            word-boundary markers
    """

    base: str
    gaps: Tuple[Tuple[str, ...], ...]
    exponents: Tuple[Exponent, ...]

    def exponent_length(self, i: int) -> int:
        return sum(len(g) for g in self.gaps[i])


@lru_cache(maxsize=1 << 18)
def lcs_pair(a: str, b: str) -> str:
    """A longest common subsequence of a and b.

    Backtracing prefers the diagonal, then moving up (dropping a character of
    a), then left.
    """
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    out = []
    i, j = m, n
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            out.append(a[i - 1])
            i -= 1
            j -= 1
        elif dp[i - 1][j] >= dp[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return "".join(reversed(out))


def embed_gaps(base: str, form: str) -> Tuple[str, ...]:
    """Residual strings around the leftmost embedding of base in form"""
    gaps, current, pos = [], [], 0
    for ch in form:
        if pos < len(base) and ch == base[pos]:
            gaps.append("".join(current))
            current = []
            pos += 1
        else:
            current.append(ch)
    if pos != len(base):
        raise ValueError(f"{base!r} is not a subsequence of {form!r}")
    gaps.append("".join(current))
    return tuple(gaps)


def render_exponent(gaps: Sequence[str]) -> Exponent:
    last = len(gaps) - 1
    segments = []
    for i, gap in enumerate(gaps):
        if not gap:
            continue
        if i == 0:
            gap = "<" + gap
        if i == last:
            gap = gap + ">"
        segments.append(gap)
    return tuple(segments)


def format_exponent(exponent: Exponent) -> str:
    return "(" + ", ".join(exponent) + ")"


@lru_cache(maxsize=1 << 16)
def _base(forms: Tuple[str, ...]) -> BaseExponent:
    ordered = sorted(forms, key=lambda f: (len(f), f))
    common = ordered[0]
    for form in ordered[1:]:
        common = lcs_pair(common, form)
    gaps = tuple(embed_gaps(common, f) for f in forms)
    return BaseExponent(common, gaps, tuple(render_exponent(g) for g in gaps))


def base(forms: Sequence[str]) -> BaseExponent:
    """Base and exponents of a group of forms; exponents follow input order.

    The multi-string subsequence is approximated by folding the pairwise LCS
    over the forms, shortest first.
    """
    if not forms:
        raise ValueError("base of an empty set of forms")
    return _base(tuple(forms))


def score(paradigm: Iterable[Member]) -> int:
    """Base characters minus exponent characters, summed over members"""
    forms = [f for _, f in paradigm]
    analysis = base(forms)
    return sum(len(analysis.base) - analysis.exponent_length(i) for i in range(len(forms)))


@dataclass
class ExponentDistribution:
    """Unsmoothed p(exponent | cell) estimated from a clustering

    Attributes:
        probs (Dict[int, Dict[Exponent, float]]): per cell, exponent probabilities
        counts (Dict[int, Counter]): per cell, exponent counts
        argmax (Dict[int, Exponent]): per cell, its most probable exponent
    """

    probs: Dict[int, Dict[Exponent, float]] = field(default_factory=dict)
    counts: Dict[int, Counter] = field(default_factory=dict)
    argmax: Dict[int, Exponent] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, counts: Mapping[int, Mapping[Exponent, int]]) -> "ExponentDistribution":
        dist = cls()
        for cell, exps in counts.items():
            total = sum(exps.values())
            if total == 0:
                continue
            dist.counts[cell] = Counter(exps)
            dist.probs[cell] = {x: n / total for x, n in exps.items()}
            dist.argmax[cell] = min(dist.probs[cell], key=lambda x: (-dist.probs[cell][x], x))
        return dist

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "cell": cell,
                "exponent": format_exponent(x),
                "count": self.counts[cell][x],
                "probability": p,
                "argmax": x == self.argmax[cell],
            }
            for cell in sorted(self.probs)
            for x, p in sorted(self.probs[cell].items(), key=lambda kv: (-kv[1], kv[0]))
        ]
        return pd.DataFrame(rows, columns=["cell", "exponent", "count", "probability", "argmax"])


def exponent_distribution(paradigms: Iterable[Paradigm]) -> ExponentDistribution:
    """How often each exponent realizes each occupied cell"""
    counts = defaultdict(Counter)
    for paradigm in paradigms:
        analysis = base(paradigm.forms)
        for (cell, _), exponent in zip(paradigm, analysis.exponents):
            counts[cell][exponent] += 1
    return ExponentDistribution.from_counts(counts)


def penalty(x: Exponent, c: int, dist: ExponentDistribution) -> float:
    """0 for the cell's most likely exponent, else 2 - p(x|c) / max p(.|c)"""
    if c not in dist.probs:
        return 2.0
    if dist.argmax[c] == x:
        return 0.0
    best = dist.probs[c][dist.argmax[c]]
    return 2.0 - dist.probs[c].get(x, 0.0) / best


def score_penalized(paradigm: Iterable[Member], dist: ExponentDistribution = None, omega: float = None) -> float:
    """Base characters minus exponent characters weighted by their penalty.

    A constant `omega` replaces the estimated penalty for every exponent.
    """
    members = list(paradigm)
    analysis = base([f for _, f in members])
    total = 0.0
    for i, (cell, _) in enumerate(members):
        weight = omega if omega is not None else penalty(analysis.exponents[i], cell, dist)
        total += len(analysis.base) - analysis.exponent_length(i) * weight
    return total


def cell_order(cells: Mapping[int, Iterable[str]]) -> List[int]:
    """Largest cells first, ties by cell id"""
    sizes = {c: len(list(forms)) for c, forms in cells.items()}
    return sorted(sizes, key=lambda c: (-sizes[c], c))


def cluster_pass(
    cells: Mapping[int, Iterable[str]],
    score_fn: Callable[[Paradigm], float] = score,
    neighbor_index=None,
    n: int = 250,
) -> List[Paradigm]:
    """One greedy pass: seed a paradigm with every remaining form, then extend
    it with at most one form per later cell whenever that strictly raises the
    score. Accepted forms are consumed.

    Candidates from a later cell are the remaining members among its n
    nearest neighbours of the seed (all remaining members without an index).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cells = {c: sorted(set(forms)) for c, forms in cells.items()}
    order = cell_order(cells)
    remaining = {c: set(forms) for c, forms in cells.items()}
    paradigms = []
    for position, ci in enumerate(order):
        for seed in sorted(remaining[ci]):
            remaining[ci].discard(seed)
            paradigm = Paradigm(((ci, seed),))
            current = score_fn(paradigm)
            for cj in order[position + 1 :]:
                if neighbor_index is not None:
                    pool = neighbor_index.candidates(seed, cj)[:n]
                else:
                    pool = cells[cj]
                best_form, best_score = None, None
                for form in pool:
                    if form not in remaining[cj]:
                        continue
                    s = score_fn(paradigm.extend(cj, form))
                    if best_score is None or s > best_score or (s == best_score and form < best_form):
                        best_form, best_score = form, s
                if best_form is not None and best_score > current:
                    paradigm = paradigm.extend(cj, best_form)
                    current = best_score
                    remaining[cj].discard(best_form)
            paradigms.append(paradigm)
    return paradigms


def cluster_paradigms_with_distribution(
    cells: Mapping[int, Iterable[str]],
    neighbor_index=None,
    config: ParadigmsConfig = None,
    distribution: ExponentDistribution = None,
) -> Tuple[List[Paradigm], Optional[ExponentDistribution]]:
    """Runs the unpenalized pass, estimates p(x|c), then re-clusters from
    scratch with the penalized score.

    A supplied `distribution` is used for the second pass instead of the
    first-pass estimate. Returns the final paradigms and the distribution
    the second pass used (None for a single pass).
    """
    config = config or ParadigmsConfig()
    first = cluster_pass(cells, score, neighbor_index, config.n_neighbors)
    logger.info(f"first pass: {len(first)} paradigms")
    if config.passes == 1:
        return first, None
    if distribution is None:
        distribution = exponent_distribution(first)
    if config.omega is OmegaMode.const1:
        score_fn = lambda p: score_penalized(p, omega=1.0)
    elif config.omega is OmegaMode.const0:
        score_fn = lambda p: score_penalized(p, omega=0.0)
    else:
        score_fn = lambda p: score_penalized(p, distribution)
    second = cluster_pass(cells, score_fn, neighbor_index, config.n_neighbors)
    logger.info(f"second pass ({config.omega.value}): {len(second)} paradigms")
    return second, distribution


def cluster_paradigms(
    cells: Mapping[int, Iterable[str]],
    neighbor_index=None,
    config: ParadigmsConfig = None,
    distribution: ExponentDistribution = None,
) -> List[Paradigm]:
    return cluster_paradigms_with_distribution(cells, neighbor_index, config, distribution)[0]


def gold_paradigms(gold_grid: Grid, cells: Mapping[str, int], labels: Sequence[str]) -> List[Paradigm]:
    """Gold rows restricted to the forms a gold-column assignment placed.

    `labels[i]` is the gold column of cell id i. A form only joins a row
    through the column its cell stands for; rows left empty are dropped.
    """
    ids = {label: i for i, label in enumerate(labels)}
    paradigms = []
    for row in gold_grid.rows:
        members = {}
        for column, forms in sorted(row.slots.items()):
            for form in sorted(forms):
                cell = cells.get(form)
                if cell is not None and cell == ids.get(column):
                    members.setdefault(cell, form)
        if members:
            paradigms.append(Paradigm(tuple(sorted(members.items()))))
    logger.info(f"{len(paradigms)} gold paradigms over {len(labels)} cells")
    return paradigms


def write_paradigms(paradigms: Sequence[Paradigm], path: Union[str, Path]):
    write_jsonl(
        path,
        (
            {"paradigm_id": i, "members": [{"cell": c, "form": f} for c, f in p]}
            for i, p in enumerate(paradigms)
        ),
    )


def read_paradigms(path: Union[str, Path]) -> List[Paradigm]:
    records = sorted(read_jsonl(path), key=lambda r: r["paradigm_id"])
    return [
        Paradigm(tuple((m["cell"], m["form"]) for m in r["members"])) for r in records
    ]
