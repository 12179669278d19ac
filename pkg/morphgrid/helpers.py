import hashlib
import json
import unicodedata
from pathlib import Path
from typing import List, Union

import numpy as np


def normalize(form: str, config=None) -> str:
    """Applies the configured orthographic transforms to a form.

    Case folding runs first so that any combining marks it introduces are
    stripped along with the original ones. The result is NFC composed, which
    makes the transform idempotent.
    """
    if config is None:
        return unicodedata.normalize("NFC", form)
    if config.lowercase:
        form = form.casefold()
    if config.strip_diacritics:
        form = "".join(
            ch
            for ch in unicodedata.normalize("NFD", form)
            if unicodedata.category(ch) != "Mn"
        )
    return unicodedata.normalize("NFC", form)


def fnv1a(data: bytes) -> int:
    """32-bit FNV-1a hash"""
    h = 2166136261
    for byte in data:
        h ^= byte
        h = (h * 16777619) & 0xFFFFFFFF
    return h


def file_digest(path: Union[str, Path]) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


def json_digest(obj) -> str:
    """Hash of a JSON-serializable object, independent of key order"""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derives `count` independent child seeds from a master seed"""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def is_subsequence(sub: str, form: str) -> bool:
    chars = iter(form)
    return all(ch in chars for ch in sub)


def harmonic_mean(a: float, b: float) -> float:
    if a + b == 0:
        return 0.0
    return 2 * a * b / (a + b)
