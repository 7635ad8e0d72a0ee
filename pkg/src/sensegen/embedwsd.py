"""Nearest-neighbour WSD over precomputed synset and token-occurrence vectors."""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class EmbeddingStore:
    """Fixed-dimension id -> vector table.

    Files start with a header line ``N d`` followed by ``N`` lines of
    ``id v1 ... vd``.
    """

    def __init__(self, dim: int, vectors: Mapping[str, np.ndarray] | None = None):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self._vectors: dict[str, np.ndarray] = {}
        for key, vec in (vectors or {}).items():
            self.add(key, vec)

    def add(self, key: str, vec) -> None:
        arr = np.asarray(vec, dtype=float)
        if arr.shape != (self.dim,):
            raise ValueError(f"vector for {key!r} has shape {arr.shape}, expected ({self.dim},)")
        if key in self._vectors:
            raise ValueError(f"duplicate embedding id {key!r}")
        arr.setflags(write=False)
        self._vectors[key] = arr

    def __contains__(self, key: object) -> bool:
        return key in self._vectors

    def __getitem__(self, key: str) -> np.ndarray:
        return self._vectors[key]

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, key: str) -> np.ndarray | None:
        return self._vectors.get(key)

    def keys(self):
        return self._vectors.keys()

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2 or not all(h.isdigit() for h in header):
                raise ValueError("line 1: embedding header must be 'N d'")
            n, dim = int(header[0]), int(header[1])
            store = cls(dim)
            for lineno, raw in enumerate(fh, start=2):
                parts = raw.split()
                if not parts:
                    continue
                if len(parts) != dim + 1:
                    raise ValueError(f"line {lineno}: expected an id and {dim} values, got {len(parts) - 1}")
                try:
                    values = [float(x) for x in parts[1:]]
                except ValueError:
                    raise ValueError(f"line {lineno}: non-numeric vector component") from None
                try:
                    store.add(parts[0], values)
                except ValueError as exc:
                    raise ValueError(f"line {lineno}: {exc}") from None
        if len(store) != n:
            raise ValueError(f"header announces {n} vectors but the file holds {len(store)}")
        return store

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self._vectors)} {self.dim}\n")
            for key in sorted(self._vectors):
                fh.write(key + " " + " ".join(repr(float(x)) for x in self._vectors[key]) + "\n")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def nn_disambiguate(
    token_vec, candidates: Iterable[str], synsets: EmbeddingStore
) -> tuple[str, float] | None:
    """Candidate synset with the highest cosine to the token vector.

    A token vector half the store's dimension is concatenated with itself
    first. Candidates missing from the store are skipped; ties go to the
    smallest id.
    """
    vec = np.asarray(token_vec, dtype=float)
    if synsets.dim == 2 * vec.shape[0]:
        vec = np.concatenate([vec, vec])
    elif synsets.dim != vec.shape[0]:
        raise ValueError(
            f"token dimension {vec.shape[0]} is neither equal to nor half of synset dimension {synsets.dim}"
        )
    best = None
    for sid in sorted(candidates):
        target = synsets.get(sid)
        if target is None:
            continue
        sim = cosine(vec, target)
        if best is None or sim > best[1]:
            best = (sid, sim)
    return best


def pseudo_vector(key: str, dim: int) -> np.ndarray:
    """Deterministic unit vector seeded from a hash of ``key``."""
    seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
    vec = np.random.default_rng(seed).standard_normal(dim)
    return vec / np.linalg.norm(vec)
