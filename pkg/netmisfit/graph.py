"""Undirected simple graphs, the canonical pair enumeration and edge-list I/O.

Vertices and blocks are 1-based at every public boundary. Internally the
adjacency is a dense numpy bool matrix indexed from 0.

The canonical order walks the strictly lower triangle column by column:
(2,1), (3,1), ..., (n,1), (3,2), ..., (n,n-1).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import MAX_VERTICES, PAIR_CACHE_MAX_N
from .errors import CapacityExceeded, InvalidIndex, InvalidLabel, InvalidVertex, ParseError, SelfLoop

logger = logging.getLogger(__name__)


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def _build_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    # Row-major upper triangle (r, c) read as (j, i) is the column-major lower triangle.
    j_idx, i_idx = np.triu_indices(n, k=1)
    i_idx.flags.writeable = False
    j_idx.flags.writeable = False
    return i_idx, j_idx


@lru_cache(maxsize=4)
def _cached_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return _build_pairs(n)


def canonical_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """0-based (row, column) arrays of the C(n,2) pairs in canonical order.

    Only graphs up to PAIR_CACHE_MAX_N vertices are cached; larger index
    arrays are rebuilt on each call.
    """
    n = int(n)
    if n <= PAIR_CACHE_MAX_N:
        return _cached_pairs(n)
    return _build_pairs(n)


@lru_cache(maxsize=32)
def _column_offsets(n: int) -> np.ndarray:
    # offsets[j-1] = number of pairs listed before column j
    lengths = np.arange(n - 1, 0, -1, dtype=np.int64)
    return np.concatenate(([0], np.cumsum(lengths)))


def edge_index(i: int, j: int, n: int) -> int:
    """1-based canonical index t of the pair (i, j), i > j."""
    if not (1 <= j < i <= n):
        raise InvalidVertex(f"pair ({i}, {j}) is not a lower-triangle pair for n={n}", i=i, j=j, n=n)
    return (j - 1) * n - j * (j - 1) // 2 + (i - j)


def edge_pair(t: int, n: int) -> Tuple[int, int]:
    """Inverse of edge_index."""
    if n < 2 or not (1 <= t <= pair_count(n)):
        raise InvalidIndex(f"index {t} outside 1..{pair_count(n)}", t=t, n=n)
    offsets = _column_offsets(n)
    j = int(np.searchsorted(offsets, t, side="left"))
    i = j + (t - int(offsets[j - 1]))
    return i, j


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    adj: np.ndarray
    labels: Optional[np.ndarray] = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidVertex(f"vertex count must be positive, got {self.n}", n=self.n)
        if self.n > MAX_VERTICES:
            raise CapacityExceeded(
                f"n={self.n} exceeds the dense-storage bound of {MAX_VERTICES} vertices",
                n=self.n,
                limit=MAX_VERTICES,
            )
        adj = np.asarray(self.adj, dtype=bool)
        if adj.shape != (self.n, self.n):
            raise ParseError(f"adjacency shape {adj.shape} does not match n={self.n}")
        if adj.diagonal().any():
            raise SelfLoop("adjacency has a nonzero diagonal")
        if not np.array_equal(adj, adj.T):
            raise ParseError("adjacency is not symmetric")
        adj = adj.copy()
        adj.flags.writeable = False
        object.__setattr__(self, "adj", adj)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.n,):
                raise InvalidLabel(f"expected {self.n} labels, got {labels.size}")
            if labels.size and (not np.issubdtype(labels.dtype, np.integer) or labels.min() < 1):
                raise InvalidLabel("labels must be integer block ids >= 1")
            labels = labels.astype(np.int64)
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or not np.array_equal(self.adj, other.adj):
            return False
        if self.labels is None or other.labels is None:
            return self.labels is None and other.labels is None
        return np.array_equal(self.labels, other.labels)

    __hash__ = None

    @classmethod
    def from_pair_bits(cls, n: int, bits: np.ndarray, labels=None, meta: Optional[Mapping[str, Any]] = None) -> "Graph":
        """Build a graph from C(n,2) indicators given in canonical order."""
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (pair_count(n),):
            raise ParseError(f"expected {pair_count(n)} pair indicators, got {bits.size}")
        i_idx, j_idx = canonical_pairs(n)
        adj = np.zeros((n, n), dtype=bool)
        adj[i_idx, j_idx] = bits
        adj |= adj.T
        return cls(n=n, adj=adj, labels=labels, meta=dict(meta or {}))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], labels=None) -> "Graph":
        adj = np.zeros((n, n), dtype=bool)
        for a, b in edges:
            if a == b:
                raise SelfLoop(f"self-loop on vertex {a}", vertex=a)
            if not (1 <= a <= n and 1 <= b <= n):
                raise InvalidVertex(f"edge ({a}, {b}) references a vertex outside 1..{n}", i=a, j=b, n=n)
            adj[a - 1, b - 1] = adj[b - 1, a - 1] = True
        return cls(n=n, adj=adj, labels=labels)

    @classmethod
    def empty(cls, n: int, labels=None) -> "Graph":
        return cls(n=n, adj=np.zeros((n, n), dtype=bool), labels=labels)

    @classmethod
    def complete(cls, n: int, labels=None) -> "Graph":
        return cls(n=n, adj=~np.eye(n, dtype=bool), labels=labels)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = self.adj.sum(axis=1, dtype=np.int64)
        deg.flags.writeable = False
        return deg

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    @property
    def block_count(self) -> int:
        return 0 if self.labels is None else int(self.labels.max())

    def pair_bits(self) -> np.ndarray:
        i_idx, j_idx = canonical_pairs(self.n)
        return self.adj[i_idx, j_idx]

    def edges(self) -> List[Tuple[int, int]]:
        """Edges as 1-based (i, j), i > j, in canonical order."""
        i_idx, j_idx = canonical_pairs(self.n)
        present = self.adj[i_idx, j_idx]
        return [(int(i) + 1, int(j) + 1) for i, j in zip(i_idx[present], j_idx[present])]

    def with_labels(self, labels) -> "Graph":
        return Graph(n=self.n, adj=self.adj, labels=labels, meta=self.meta)

    def permuted(self, perm: Sequence[int]) -> "Graph":
        """Relabel vertices: new vertex v+1 is old vertex perm[v]+1 (0-based perm)."""
        perm = np.asarray(perm, dtype=np.int64)
        labels = None if self.labels is None else self.labels[perm]
        return Graph(n=self.n, adj=self.adj[np.ix_(perm, perm)], labels=labels, meta=self.meta)


def degree(g: Graph, i: int) -> int:
    if not (1 <= i <= g.n):
        raise InvalidVertex(f"vertex {i} outside 1..{g.n}", i=i, n=g.n)
    return int(g.degrees[i - 1])


def _data_lines(text: str) -> List[Tuple[int, str]]:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            lines.append((lineno, line))
    return lines


def _parse_ints(line: str, lineno: int, count: int) -> List[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"line {lineno}: expected {count} integers, got {line!r}", line=lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"line {lineno}: not an integer in {line!r}", line=lineno)


def parse_edge_list(text: str) -> Tuple[int, List[Tuple[int, int]]]:
    lines = _data_lines(text)
    if not lines:
        raise ParseError("empty edge-list file")
    lineno, header = lines[0]
    n, m = _parse_ints(header, lineno, 2)
    if n < 1 or m < 0:
        raise ParseError(f"line {lineno}: invalid header {header!r}", line=lineno)
    body = lines[1:]
    if len(body) != m:
        raise ParseError(f"header announces {m} edges, found {len(body)} edge lines", expected=m, found=len(body))
    edges = []
    for lineno, line in body:
        i, j = _parse_ints(line, lineno, 2)
        if i == j:
            raise SelfLoop(f"line {lineno}: self-loop on vertex {i}", line=lineno, vertex=i)
        if not (1 <= i <= n and 1 <= j <= n):
            raise InvalidVertex(f"line {lineno}: vertex outside 1..{n}", line=lineno, i=i, j=j, n=n)
        edges.append((i, j))
    return n, edges


def parse_labels(text: str, n: int) -> np.ndarray:
    lines = _data_lines(text)
    if len(lines) != n:
        raise ParseError(f"expected {n} labels, found {len(lines)}", expected=n, found=len(lines))
    labels = []
    for lineno, line in lines:
        (label,) = _parse_ints(line, lineno, 1)
        if label < 1:
            raise InvalidLabel(f"line {lineno}: block ids start at 1, got {label}", line=lineno)
        labels.append(label)
    return np.asarray(labels, dtype=np.int64)


def read_graph(path, labels_path=None) -> Graph:
    text = Path(path).read_text(encoding="utf-8")
    n, edges = parse_edge_list(text)
    if n > MAX_VERTICES:
        raise CapacityExceeded(f"n={n} exceeds {MAX_VERTICES}", n=n, limit=MAX_VERTICES)
    labels = None
    if labels_path is not None:
        labels = parse_labels(Path(labels_path).read_text(encoding="utf-8"), n)
    g = Graph.from_edges(n, edges, labels=labels)
    logger.debug("read graph %s: n=%d, %d edges (%d lines)", path, n, g.edge_count, len(edges))
    return g


def format_edge_list(g: Graph) -> str:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)}"] + [f"{i} {j}" for i, j in edges]
    return "\n".join(lines) + "\n"


def format_labels(g: Graph) -> str:
    if g.labels is None:
        raise InvalidLabel("graph carries no labels")
    return "".join(f"{int(x)}\n" for x in g.labels)


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g), encoding="utf-8", newline="\n")


def write_labels(g: Graph, path) -> None:
    Path(path).write_text(format_labels(g), encoding="utf-8", newline="\n")


def graph_summary(g: Graph) -> Dict[str, Any]:
    n_pairs = pair_count(g.n)
    return {
        "n": g.n,
        "edges": g.edge_count,
        "density": g.edge_count / n_pairs if n_pairs else 0.0,
        "blocks": g.block_count or None,
    }
