"""Subword skip-gram embeddings with negative sampling.

A word's vector is the sum of the vectors of its character n-grams and of the
bracketed word itself. N-grams are hashed into a fixed number of buckets; only
buckets that some vocabulary word touches are materialized, every other
bucket is implicitly zero.
"""
import dataclasses
import json
import logging
import struct
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from morphgrid.config import EmbeddingConfig
from morphgrid.errors import EmptyVocabularyError, ModelFormatError
from morphgrid.grid import Corpus
from morphgrid.helpers import fnv1a

logger = logging.getLogger(__name__)

MAGIC = b"MGEMB\x01"
NEGATIVE_POWER = 0.75


def extract_ngrams(form: str, ngram_min: int, ngram_max: int) -> List[str]:
    """Character n-grams of `<form>` grouped by length, then the whole word.

    An n-gram spanning the entire bracketed word is kept as an n-gram, so
    short forms list `<form>` twice and both copies add to the vector.
    """
    word = f"<{form}>"
    units = [
        word[i : i + n]
        for n in range(ngram_min, ngram_max + 1)
        for i in range(len(word) - n + 1)
    ]
    units.append(word)
    return units


def bucket(unit: str, bucket_count: int) -> int:
    return fnv1a(unit.encode("utf-8")) % bucket_count


@dataclass
class EmbeddingModel:
    """Trained subword vectors

    Attributes:
        config (EmbeddingConfig): hyperparameters the model was trained with
        vocab (List[str]): vocabulary, most frequent first
        counts (np.ndarray): corpus frequency of each vocabulary word
        bucket_ids (np.ndarray): sorted ids of the materialized buckets
        subword_vectors (np.ndarray): one float32 row per materialized bucket
        output_vectors (np.ndarray): one float32 context row per vocabulary word
        losses (List[float]): mean training loss of every epoch
    """

    config: EmbeddingConfig
    vocab: List[str]
    counts: np.ndarray
    bucket_ids: np.ndarray
    subword_vectors: np.ndarray
    output_vectors: np.ndarray
    losses: List[float] = field(default_factory=list)

    @cached_property
    def word_index(self) -> Dict[str, int]:
        return {w: i for i, w in enumerate(self.vocab)}

    @property
    def dim(self) -> int:
        return self.config.dim

    def unit_rows(self, form: str) -> np.ndarray:
        """Rows of the materialized buckets form's units fall into, in unit order"""
        buckets = np.array(
            [
                bucket(u, self.config.bucket_count)
                for u in extract_ngrams(form, self.config.ngram_min, self.config.ngram_max)
            ],
            dtype=np.int64,
        )
        rows = np.searchsorted(self.bucket_ids, buckets)
        rows = np.minimum(rows, max(len(self.bucket_ids) - 1, 0))
        if len(self.bucket_ids) == 0:
            return rows[:0]
        return rows[self.bucket_ids[rows] == buckets]

    def unit_vector(self, unit: str) -> np.ndarray:
        b = bucket(unit, self.config.bucket_count)
        row = np.searchsorted(self.bucket_ids, b)
        if row < len(self.bucket_ids) and self.bucket_ids[row] == b:
            return self.subword_vectors[row]
        return np.zeros(self.dim, dtype=np.float32)

    def vector(self, form: str) -> np.ndarray:
        rows = self.unit_rows(form)
        if len(rows) == 0:
            return np.zeros(self.dim, dtype=np.float32)
        return self.subword_vectors[rows].sum(axis=0)


def vector(model: EmbeddingModel, form: str) -> np.ndarray:
    return model.vector(form)


def _negative_cdf(counts: np.ndarray) -> np.ndarray:
    weights = counts.astype(np.float64) ** NEGATIVE_POWER
    return np.cumsum(weights / weights.sum())


def train_embeddings(corpus: Corpus, config: EmbeddingConfig) -> EmbeddingModel:
    """Skip-gram with negative sampling over subword sums.

    Each center word is processed as one batch: its summed subword vector is
    scored against every context word and the negatives drawn for it, then
    the output rows and the center's subword rows are updated. The learning
    rate decays linearly to 0 over all center words of all epochs. Training is
    single-threaded and fully determined by `config.seed`.
    """
    if corpus.token_count == 0:
        raise EmptyVocabularyError("cannot train embeddings on an empty corpus")
    counter = Counter(corpus.tokens())
    ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
    vocab = [w for w, c in ranked if c >= config.min_count]
    if not vocab:
        raise EmptyVocabularyError(
            f"no word occurs at least {config.min_count} times"
        )
    counts = np.array([counter[w] for w in vocab], dtype=np.int64)
    index = {w: i for i, w in enumerate(vocab)}

    word_buckets = [
        np.array(
            [bucket(u, config.bucket_count) for u in extract_ngrams(w, config.ngram_min, config.ngram_max)],
            dtype=np.int64,
        )
        for w in vocab
    ]
    bucket_ids = np.unique(np.concatenate(word_buckets))
    word_rows = [np.searchsorted(bucket_ids, b) for b in word_buckets]

    rng = np.random.default_rng(config.seed)
    dim = config.dim
    subword = rng.uniform(-1.0 / dim, 1.0 / dim, (len(bucket_ids), dim)).astype(np.float32)
    output = np.zeros((len(vocab), dim), dtype=np.float32)
    cdf = _negative_cdf(counts)

    sentences = [
        np.array([index[t] for t in s if t in index], dtype=np.int64)
        for s in corpus.sentences
    ]
    sentences = [s for s in sentences if len(s)]
    total = config.epochs * sum(len(s) for s in sentences)
    processed = 0
    losses = []
    logger.info(
        f"training on {total // config.epochs} tokens, {len(vocab)} words, "
        f"{len(bucket_ids)} buckets, n-grams {config.ngram_min}-{config.ngram_max}, "
        f"window {config.window}"
    )
    for epoch in range(config.epochs):
        loss_sum, pair_count = 0.0, 0
        for sentence in sentences:
            length = len(sentence)
            for pos in range(length):
                lr = np.float32(config.learning_rate * (1.0 - processed / total))
                processed += 1
                radius = int(rng.integers(1, config.window + 1))
                lo, hi = max(0, pos - radius), min(length, pos + radius + 1)
                contexts = np.concatenate([sentence[lo:pos], sentence[pos + 1 : hi]])
                if len(contexts) == 0:
                    continue
                draws = rng.random((len(contexts), config.negatives))
                negatives = np.minimum(np.searchsorted(cdf, draws, side="right"), len(vocab) - 1)
                ids = np.concatenate([contexts[:, None], negatives], axis=1)
                labels = np.zeros(ids.shape, dtype=np.float32)
                labels[:, 0] = 1.0
                mask = np.ones(ids.shape, dtype=np.float32)
                mask[:, 1:] = negatives != contexts[:, None]

                rows = word_rows[sentence[pos]]
                hidden = subword[rows].sum(axis=0)
                targets = output[ids]
                scores = np.clip(targets @ hidden, -30.0, 30.0)
                sig = 1.0 / (1.0 + np.exp(-scores))
                probs = np.where(labels == 1.0, sig, 1.0 - sig)
                loss_sum += float(-(mask * np.log(np.maximum(probs, 1e-7))).sum())
                pair_count += int(mask.sum())

                g = (labels - sig) * lr * mask
                grad_hidden = (g[..., None] * targets).sum(axis=(0, 1))
                np.add.at(output, ids.ravel(), g.reshape(-1, 1) * hidden[None, :])
                np.add.at(subword, rows, grad_hidden)
        losses.append(loss_sum / max(pair_count, 1))
        logger.info(f"epoch {epoch + 1}/{config.epochs} mean loss {losses[-1]:.4f}")
    return EmbeddingModel(
        config=config,
        vocab=vocab,
        counts=counts,
        bucket_ids=bucket_ids,
        subword_vectors=subword,
        output_vectors=output,
        losses=losses,
    )


def _cosines(model: EmbeddingModel, form: str, candidates: Sequence[str]) -> np.ndarray:
    target = model.vector(form).astype(np.float64)
    matrix = np.array([model.vector(c) for c in candidates], dtype=np.float64).reshape(
        len(candidates), model.dim
    )
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(target)
    dots = matrix @ target
    return np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)


def nearest(model: EmbeddingModel, form: str, candidates: Iterable[str], n: int) -> List[str]:
    """Up to n candidates by descending cosine similarity, ties lexicographic"""
    if n < 1:
        raise ValueError("n must be >= 1")
    candidates = sorted(set(candidates))
    if not candidates:
        return []
    sims = _cosines(model, form, candidates)
    order = sorted(range(len(candidates)), key=lambda i: (-sims[i], candidates[i]))
    return [candidates[i] for i in order[:n]]


class NeighborIndex:
    """Caches the n nearest members of each cell for every queried form

    With no model, or when a cell has at most n members, the whole cell is
    the candidate list.
    """

    def __init__(self, model: Optional[EmbeddingModel], cells: Mapping[int, Iterable[str]], n: int):
        self.model = model
        self.cells = {c: sorted(forms) for c, forms in cells.items()}
        self.n = n
        self._cache = {}

    def candidates(self, form: str, cell: int) -> List[str]:
        members = self.cells.get(cell, [])
        if self.model is None or len(members) <= self.n:
            return members
        key = (form, cell)
        if key not in self._cache:
            self._cache[key] = nearest(self.model, form, members, self.n)
        return self._cache[key]


def save_model(model: EmbeddingModel, path: Union[str, Path]):
    header = json.dumps(
        {
            "config": dataclasses.asdict(model.config),
            "vocab": model.vocab,
            "counts": model.counts.tolist(),
            "bucket_ids": model.bucket_ids.tolist(),
            "losses": model.losses,
        },
        ensure_ascii=False,
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(model.subword_vectors.astype("<f4").tobytes())
        f.write(model.output_vectors.astype("<f4").tobytes())


def load_model(path: Union[str, Path]) -> EmbeddingModel:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(MAGIC):
        raise ModelFormatError(f"{path} is not an embedding model")
    offset = len(MAGIC)
    (length,) = struct.unpack_from("<I", data, offset)
    offset += 4
    try:
        header = json.loads(data[offset : offset + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"{path}: corrupt header") from e
    offset += length
    config = EmbeddingConfig(**header["config"])
    n_buckets, n_words = len(header["bucket_ids"]), len(header["vocab"])
    expected = offset + 4 * config.dim * (n_buckets + n_words)
    if len(data) != expected:
        raise ModelFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    matrices = np.frombuffer(data, dtype="<f4", offset=offset).astype(np.float32)
    split = n_buckets * config.dim
    return EmbeddingModel(
        config=config,
        vocab=header["vocab"],
        counts=np.array(header["counts"], dtype=np.int64),
        bucket_ids=np.array(header["bucket_ids"], dtype=np.int64),
        subword_vectors=matrices[:split].reshape(n_buckets, config.dim),
        output_vectors=matrices[split:].reshape(n_words, config.dim),
        losses=header["losses"],
    )


def export_text(model: EmbeddingModel, path: Union[str, Path], forms: Iterable[str] = None):
    """Writes "form v1 v2 ..." lines, vocabulary order unless forms are given"""
    forms = model.vocab if forms is None else forms
    with open(path, "w", encoding="utf-8") as f:
        for form in forms:
            values = " ".join(f"{x:.6g}" for x in model.vector(form))
            f.write(f"{form} {values}\n")
