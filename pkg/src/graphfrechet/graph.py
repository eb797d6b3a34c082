"""Simple undirected graphs, adjacency spectra and the spectral pseudometrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or incompatible graph arguments."""


def _canonical_edges(n: int, edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphError("edges must be a sequence of vertex pairs")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    if np.any(lo == hi):
        bad = int(lo[lo == hi][0])
        raise GraphError(f"self-loop at vertex {bad}")
    if lo.min() < 0 or hi.max() >= n:
        raise GraphError(f"vertex id out of range for n={n}")
    keys = lo * n + hi
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    if np.any(keys[1:] == keys[:-1]):
        dup = int(keys[1:][keys[1:] == keys[:-1]][0])
        raise GraphError(f"duplicate edge ({dup // n}, {dup % n})")
    out = np.stack([lo[order], hi[order]], axis=1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on vertices ``0 .. n-1``.

    Edges are stored canonically as an ``(m, 2)`` integer array with
    ``i < j`` in each row and rows sorted lexicographically, so two graphs
    with the same edge set always compare (and serialize) identically.
    """

    n: int
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    def __post_init__(self):
        if int(self.n) < 1:
            raise GraphError("a graph needs at least one vertex")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", _canonical_edges(self.n, self.edges))

    @classmethod
    def from_adjacency(cls, A) -> Graph:
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise GraphError("adjacency must have a zero diagonal")
        if not np.all((A == 0) | (A == 1)):
            raise GraphError("adjacency entries must be 0 or 1")
        i, j = np.nonzero(np.triu(A, 1))
        return cls(A.shape[0], np.stack([i, j], axis=1))

    @classmethod
    def complete(cls, n: int) -> Graph:
        i, j = np.triu_indices(n, 1)
        return cls(n, np.stack([i, j], axis=1))

    @classmethod
    def empty(cls, n: int) -> Graph:
        return cls(n)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self, dtype=float) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=dtype)
        if self.m:
            A[self.edges[:, 0], self.edges[:, 1]] = 1
            A[self.edges[:, 1], self.edges[:, 0]] = 1
        return A

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def permuted(self, perm) -> Graph:
        """Relabel vertex ``v`` as ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise GraphError("perm must be a permutation of range(n)")
        return Graph(self.n, perm[self.edges])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def spectrum(g: Graph) -> np.ndarray:
    """All ``n`` adjacency eigenvalues of `g`, sorted in non-increasing order."""
    # eigvalsh returns ascending order; reversing keeps ties stable
    return np.linalg.eigvalsh(g.adjacency())[::-1].copy()


def truncated_spectrum(g: Graph, c: int) -> np.ndarray:
    """The ``c`` largest adjacency eigenvalues of `g`."""
    if not 1 <= c <= g.n:
        raise GraphError(f"c must lie in [1, {g.n}], got {c}")
    return spectrum(g)[:c]


def _check_same_size(g1: Graph, g2: Graph):
    if g1.n != g2.n:
        raise GraphError(f"graph sizes differ: {g1.n} != {g2.n}")


def spectral_distance(g1: Graph, g2: Graph) -> float:
    """Adjacency spectral pseudometric ``||sigma(g1) - sigma(g2)||_2``."""
    _check_same_size(g1, g2)
    return float(np.linalg.norm(spectrum(g1) - spectrum(g2)))


def truncated_spectral_distance(g1: Graph, g2: Graph, c: int) -> float:
    """Spectral pseudometric restricted to the ``c`` largest eigenvalues."""
    _check_same_size(g1, g2)
    return float(np.linalg.norm(truncated_spectrum(g1, c) - truncated_spectrum(g2, c)))


# short aliases matching the usual notation
d_A = spectral_distance
d_Ac = truncated_spectral_distance


def density(g: Graph) -> float:
    if g.n <= 1:
        raise GraphError("density is undefined for n <= 1")
    return 2.0 * g.m / (g.n * (g.n - 1))


def sparsity_threshold(n: int, kappa: float = 1.0) -> float:
    """Edge-density floor ``kappa * ln(n)**3 / n`` of the sparse regime."""
    return kappa * math.log(n) ** 3 / n


def is_sparse(g: Graph, kappa: float = 1.0) -> bool:
    return density(g) >= sparsity_threshold(g.n, kappa)
