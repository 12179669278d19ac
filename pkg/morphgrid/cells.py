"""Clusters lexicon forms into cells with k-means over biased embeddings.

The number of cells comes from the dispersion-deceleration elbow rule: with
d_k the mean k-means dispersion at k clusters, decel(k) = d_{k-1} - 2 d_k +
d_{k+1}, and the search stops at the first k >= 2 whose deceleration drops
below sqrt(decel(2)).
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from morphgrid.errors import ClusteringError
from morphgrid.grid import Grid, Lexicon
from morphgrid.helpers import spawn_seeds

logger = logging.getLogger(__name__)


@dataclass
class DispersionCurve:
    """Mean dispersion d_k for a contiguous range of k starting at 1"""

    values: Dict[int, float] = field(default_factory=dict)

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def decel(self, k: int) -> float:
        return decel(self.values, k)

    def to_frame(self) -> pd.DataFrame:
        ks = sorted(self.values)
        return pd.DataFrame(
            {
                "k": ks,
                "d_k": [self.values[k] for k in ks],
                "decel": [
                    decel(self.values, k) if k - 1 in self.values and k + 1 in self.values else None
                    for k in ks
                ],
            }
        )


@dataclass
class CellAssignment:
    """
    Attributes:
        cells (Dict[str, int]): form to cell id, cell 0 being the largest
        k (int): number of cells
        dispersion (float): dispersion of the final clustering
        curve (DispersionCurve): curve the elbow search evaluated, if it ran
    """

    cells: Dict[str, int]
    k: int
    dispersion: float
    curve: Optional[DispersionCurve] = None

    def members(self) -> Dict[int, List[str]]:
        out = {c: [] for c in range(self.k)}
        for form in sorted(self.cells):
            out[self.cells[form]].append(form)
        return out


def kmeans(vectors: np.ndarray, k: int, seed: int = 0, max_iter: int = 100) -> Tuple[np.ndarray, float]:
    """One Lloyd run from k-means++ seeds

    Returns:
        cluster label per vector and the summed squared distance of every
        vector to its cluster centroid
    """
    X = np.asarray(vectors, dtype=np.float64)
    n = len(X)
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if k > n:
        raise ClusteringError(f"cannot form {k} clusters from {n} vectors")
    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=1,
        max_iter=max_iter,
        tol=0,
        algorithm="lloyd",
        random_state=seed,
    )
    with warnings.catch_warnings():
        # raised when duplicate vectors leave fewer distinct points than k
        warnings.simplefilter("ignore", ConvergenceWarning)
        labels = model.fit_predict(X)
    return labels.astype(np.int64), float(model.inertia_)


def avg_dispersion(vectors: np.ndarray, k: int, restarts: int = 25, seed: int = 0, max_iter: int = 100) -> float:
    """Mean dispersion over `restarts` k-means runs with seeds derived from seed"""
    if restarts < 1:
        raise ClusteringError("restarts must be >= 1")
    return float(
        np.mean(
            [kmeans(vectors, k, s, max_iter)[1] for s in spawn_seeds(seed, restarts)]
        )
    )


def decel(curve: Mapping[int, float], k: int) -> float:
    """Dispersion deceleration d_{k-1} - 2 d_k + d_{k+1}"""
    if k < 2:
        raise ClusteringError("decel is defined for k >= 2")
    missing = [j for j in (k - 1, k, k + 1) if j not in curve]
    if missing:
        raise ClusteringError(f"dispersion curve lacks d_k for k in {missing}")
    return curve[k - 1] - 2 * curve[k] + curve[k + 1]


def elbow(dispersion: Callable[[int], float], k_max: int) -> Tuple[int, DispersionCurve]:
    """Applies the stopping rule to a lazily evaluated dispersion curve.

    d_k is only computed for the k the rule needs. When decel(2) <= 0 the
    threshold is undefined and the k with the largest deceleration over
    2..k_max wins.
    """
    curve = DispersionCurve()

    def d(k: int) -> float:
        if k not in curve.values:
            curve.values[k] = dispersion(k)
            logger.debug(f"d_{k} = {curve.values[k]:.6g}")
        return curve.values[k]

    def dd(k: int) -> float:
        for j in (k - 1, k, k + 1):
            d(j)
        return curve.decel(k)

    first = dd(2)
    if first <= 0:
        decels = {k: dd(k) for k in range(2, k_max + 1)}
        best = max(decels, key=lambda k: (decels[k], -k))
        logger.warning(
            f"decel(2) = {first:.6g} <= 0; taking the largest deceleration, k = {best}"
        )
        return best, curve
    threshold = math.sqrt(first)
    for k in range(2, k_max + 1):
        value = dd(k)
        logger.info(f"decel({k}) = {value:.6g}, threshold {threshold:.6g}")
        if value < threshold:
            return k, curve
    logger.warning(f"deceleration never fell below {threshold:.6g}; using k_max = {k_max}")
    return k_max, curve


def _select_k(
    vectors: np.ndarray, k_max: int, restarts: int, seed: int, max_iter: int = 100
) -> Tuple[int, DispersionCurve]:
    n = len(vectors)
    k_max = min(k_max, n - 1)
    if k_max < 2:
        return 1, DispersionCurve({1: avg_dispersion(vectors, 1, restarts, seed, max_iter)})
    return elbow(lambda k: avg_dispersion(vectors, k, restarts, seed, max_iter), k_max)


def select_k(vectors: np.ndarray, k_max: int = 40, restarts: int = 25, seed: int = 0) -> int:
    """Number of cells chosen by the elbow rule"""
    if k_max < 3:
        raise ClusteringError("k_max must be >= 3")
    return _select_k(vectors, k_max, restarts, seed)[0]


def relabel_by_size(labels: np.ndarray, k: int) -> np.ndarray:
    """Renumbers clusters so cluster 0 is the largest; ties keep label order"""
    sizes = np.bincount(labels, minlength=k)
    order = sorted(range(k), key=lambda c: (-sizes[c], c))
    mapping = np.empty(k, dtype=np.int64)
    for new, old in enumerate(order):
        mapping[old] = new
    return mapping[labels]


def cluster_cells(
    model,
    lexicon: Lexicon,
    restarts: int = 25,
    k_max: int = 40,
    gold_k: int = None,
    seed: int = 0,
    max_iter: int = 100,
) -> CellAssignment:
    """Assigns every lexicon form to one of k cells.

    `model` is anything with a `vector(form)` method. A `gold_k` skips the
    elbow search and clusters into exactly that many cells.
    """
    forms = lexicon.forms
    if not forms:
        raise ClusteringError("cannot cluster an empty lexicon")
    X = np.array([model.vector(f) for f in forms], dtype=np.float64)
    curve_seed, final_seed = spawn_seeds(seed, 2)
    curve = None
    if gold_k is not None:
        k = gold_k
    elif len(forms) == 1:
        k = 1
    else:
        k, curve = _select_k(X, k_max, restarts, curve_seed, max_iter)
    logger.info(f"clustering {len(forms)} forms into {k} cells")
    labels, dispersion = kmeans(X, k, final_seed, max_iter)
    labels = relabel_by_size(labels, k)
    return CellAssignment(
        cells={f: int(c) for f, c in zip(forms, labels)},
        k=k,
        dispersion=dispersion,
        curve=curve,
    )


def gold_assignment(gold_grid: Grid, lexicon: Lexicon) -> Tuple[CellAssignment, List[str]]:
    """Cells taken from the gold columns instead of clustering.

    Each lexicon form goes to the first column, in label order, that holds it;
    columns holding no lexicon form get no cell. Returns the assignment and
    the column label of every cell id.
    """
    first = {f: min(columns) for f, columns in gold_grid.form_columns.items() if f in lexicon}
    if not first:
        raise ClusteringError("no lexicon form occurs in the gold grid")
    labels = sorted(set(first.values()))
    ids = {label: i for i, label in enumerate(labels)}
    logger.info(f"{len(first)} of {len(lexicon)} lexicon forms in {len(labels)} gold cells")
    return CellAssignment(cells={f: ids[c] for f, c in first.items()}, k=len(labels), dispersion=0.0), labels


def write_assignment(assignment: CellAssignment, path: Union[str, Path]):
    frame = pd.DataFrame(
        sorted(assignment.cells.items()), columns=["form", "cell_id"]
    )
    frame.to_csv(path, sep="\t", index=False)


def read_assignment(path: Union[str, Path]) -> CellAssignment:
    frame = pd.read_csv(path, sep="\t", dtype={"form": str, "cell_id": int}, keep_default_na=False)
    cells = dict(zip(frame["form"], frame["cell_id"].astype(int)))
    k = int(frame["cell_id"].max()) + 1 if len(frame) else 0
    return CellAssignment(cells={f: int(c) for f, c in cells.items()}, k=k, dispersion=float("nan"))


def write_curve(curve: DispersionCurve, path: Union[str, Path]):
    curve.to_frame().to_csv(path, index=False)
