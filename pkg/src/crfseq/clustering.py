"""Word-embedding ingestion and k-means clustering for cluster-id features.

Embedding file contract: one entry per line, ``word v1 v2 ... vd``
space-separated, with an optional ``vocab_count dim`` header line. Cluster
file contract: a ``k<TAB>dim<TAB>inertia`` header, then k centroid lines of
d space-separated floats, then ``word<TAB>cluster_id`` assignment lines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, DataError, ParseError
from .textutil import nfc

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingTable:
    """Word -> d-vector map with a single consistent dimension."""

    dim: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors


def load_embeddings(path) -> EmbeddingTable:
    """Parse a text embedding file into an EmbeddingTable.

    Later duplicates of a word override earlier ones (logged with a count).
    Ragged dimensions and empty files are errors.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read embeddings {path}: {exc}") from exc

    vectors: dict[str, np.ndarray] = {}
    dim = None
    duplicates = 0
    start = 0
    first = next((ln for ln in lines if ln.strip()), "")
    head = first.split()
    if len(head) == 2 and all(tok.lstrip("+-").isdigit() for tok in head):
        start = lines.index(first) + 1
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split()
        word, values = nfc(parts[0]), parts[1:]
        if dim is None:
            if not values:
                raise ParseError("embedding row has no values", line=lineno, path=str(path))
            dim = len(values)
        if len(values) != dim:
            raise ParseError(
                f"expected {dim} values, got {len(values)}", line=lineno, path=str(path)
            )
        try:
            vec = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"bad float: {exc}", line=lineno, path=str(path)) from exc
        if word in vectors:
            duplicates += 1
        vectors[word] = vec
    if not vectors:
        raise DataError(f"embedding file {path} contains no vectors")
    if duplicates:
        log.warning("%d duplicate words overridden in %s", duplicates, path)
    return EmbeddingTable(dim=dim, vectors=vectors)


@dataclass(frozen=True)
class ClusterModel:
    """k centroids plus word -> cluster-id assignments.

    The OOV sentinel id is ``k`` (one past the last real cluster), so
    ``assign_cluster`` is total over all possible words.
    """

    centroids: np.ndarray  # (k, d)
    assignments: dict[str, int]
    inertia: float
    iterations: int = field(default=0, compare=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n_points, n_centroids)."""
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic k-means++ seeding over the given (canonically ordered) points."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(points, points[chosen]).min(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a centroid: take the first unused
            used = set(chosen)
            chosen.append(next(i for i in range(n) if i not in used))
        else:
            chosen.append(int(rng.choice(n, p=d2 / total)))
        d2 = np.minimum(d2, _sq_dists(points, points[chosen[-1:]])[:, 0])
    return points[chosen].copy()


def kmeans(
    table: EmbeddingTable,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Words are canonically sorted before seeding, so the result depends only
    on (table contents, k, seed), never on input order. Stops when the
    assignments stabilize, every centroid moves less than ``tol``, or
    ``max_iter`` is reached. An empty cluster is repaired by reseeding it to
    the point currently farthest from its assigned centroid. Inertia is
    non-increasing across iterations.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > len(table):
        raise ConfigError(f"k={k} exceeds vocabulary size {len(table)}")
    words = sorted(table.vectors)
    points = np.stack([table.vectors[w] for w in words]).astype(np.float64)
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(points, k, rng)

    assign = None
    prev_inertia = np.inf
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        d2 = _sq_dists(points, centroids)
        new_assign = d2.argmin(axis=1)
        inertia = float(((points - centroids[new_assign]) ** 2).sum())
        assert inertia <= prev_inertia + 1e-8, "inertia increased"
        prev_inertia = inertia
        if assign is not None and np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign

        moved = 0.0
        repaired = False
        contrib = ((points - centroids[assign]) ** 2).sum(axis=1)
        for c in range(k):
            members = points[assign == c]
            if len(members) == 0:
                worst = int(contrib.argmax())
                centroids[c] = points[worst]
                contrib[worst] = -1.0  # keep a second empty cluster from stealing it
                repaired = True
            else:
                new_c = members.mean(axis=0)
                moved = max(moved, float(np.linalg.norm(new_c - centroids[c])))
                centroids[c] = new_c
        if not repaired and moved < tol:
            break

    # final assignment so centroids/assignments/inertia are mutually consistent
    assign = _sq_dists(points, centroids).argmin(axis=1)
    inertia = float(((points - centroids[assign]) ** 2).sum())
    return ClusterModel(
        centroids=centroids,
        assignments={w: int(a) for w, a in zip(words, assign)},
        inertia=inertia,
        iterations=iterations,
    )


def assign_cluster(model: ClusterModel, word: str, table: EmbeddingTable | None = None) -> int:
    """Cluster id for any word: stored assignment, nearest centroid for a
    word with a known vector, else the OOV sentinel ``model.k``."""
    if word in model.assignments:
        return model.assignments[word]
    if table is not None and word in table.vectors:
        d2 = _sq_dists(table.vectors[word][None, :], model.centroids)[0]
        return int(d2.argmin())
    return model.k


def save_clusters(model: ClusterModel, path) -> None:
    lines = [f"{model.k}\t{model.dim}\t{model.inertia!r}"]
    for c in model.centroids:
        lines.append(" ".join(repr(float(x)) for x in c))
    for word in sorted(model.assignments):
        lines.append(f"{word}\t{model.assignments[word]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_clusters(path) -> ClusterModel:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read cluster file {path}: {exc}") from exc
    if not lines or not lines[0].strip():
        raise DataError(f"cluster file {path} is empty")
    head = lines[0].split("\t")
    if len(head) != 3:
        raise ParseError("expected 'k<TAB>dim<TAB>inertia' header", line=1, path=str(path))
    try:
        k, dim, inertia = int(head[0]), int(head[1]), float(head[2])
    except ValueError as exc:
        raise ParseError(f"bad header: {exc}", line=1, path=str(path)) from exc
    if k < 1:
        raise DataError(f"cluster file {path}: k must be >= 1, got {k}")
    if dim < 1:
        raise DataError(f"cluster file {path}: dim must be >= 1, got {dim}")
    if len(lines) < 1 + k:
        raise DataError(f"cluster file {path}: truncated centroid block")
    centroids = np.empty((k, dim), dtype=np.float64)
    for c in range(k):
        lineno = 2 + c
        parts = lines[1 + c].split()
        if len(parts) != dim:
            raise ParseError(
                f"expected {dim} centroid values, got {len(parts)}",
                line=lineno,
                path=str(path),
            )
        try:
            centroids[c] = [float(x) for x in parts]
        except ValueError as exc:
            raise ParseError(f"bad float: {exc}", line=lineno, path=str(path)) from exc
    assignments: dict[str, int] = {}
    for offset, line in enumerate(lines[1 + k :], start=2 + k):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected 'word<TAB>cluster_id'", line=offset, path=str(path))
        word, id_str = parts
        try:
            cid = int(id_str)
        except ValueError as exc:
            raise ParseError(f"bad cluster id: {id_str!r}", line=offset, path=str(path)) from exc
        if not 0 <= cid < k:
            raise DataError(
                f"cluster file {path}: line {offset}: id {cid} out of range [0, {k})"
            )
        assignments[word] = cid
    return ClusterModel(centroids=centroids, assignments=assignments, inertia=inertia)
