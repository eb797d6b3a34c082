"""Kernel random graphs on the equispaced grid and the standard ensembles.

Vertex ``i`` (0-based) sits at grid point ``xi_i = i / n``.  Block ``k`` of a
stochastic block model owns the half-open interval
``[s_1 + ... + s_{k-1}, s_1 + ... + s_k)`` of ``[0, 1]`` (the last block is
closed at 1), so the block sizes are fixed by ``s`` and ``n``.

Random streams
--------------
Every sampler accepts ``seed`` as an int, a :class:`numpy.random.SeedSequence`
or a :class:`numpy.random.Generator` and draws from PCG64.  Bernoulli kernel
samplers draw exactly one uniform per vertex pair, visiting pairs in
lexicographic ``(i, j)`` order, ``i < j``; edge ``(i, j)`` is present when
its uniform is below the kernel value.  Independent samples of a dataset use
``SeedSequence(seed).spawn(N)[i]`` for sample ``i`` (see :func:`spawn_seeds`),
which does not depend on ``N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

C_MAX = 20
_BOUNDARY_EPS = 1e-12


class ModelError(ValueError):
    """Invalid model parameters or model configuration."""


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    if isinstance(seed, np.random.SeedSequence):
        return seed.spawn(count)
    return np.random.SeedSequence(seed).spawn(count)


# ---------------------------------------------------------------------------
# stochastic block model parameters


@dataclass(frozen=True)
class SbmParams:
    """Parameters ``(p, q, s, n)`` of a stochastic block model.

    ``p[k]`` is the edge probability inside block ``k``, ``q`` the probability
    across blocks and ``s[k]`` the relative size of block ``k``.
    """

    p: tuple
    q: float
    s: tuple
    n: int
    c_max: int = C_MAX

    def __post_init__(self):
        p = tuple(float(v) for v in np.atleast_1d(self.p))
        s = tuple(float(v) for v in np.atleast_1d(self.s))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "n", int(self.n))
        if len(p) != len(s) or not p:
            raise ModelError("p and s must be non-empty and of equal length")
        if len(p) > self.c_max:
            raise ModelError(f"number of blocks {len(p)} exceeds cap {self.c_max}")
        if not all(0.0 < v < 1.0 for v in p + (self.q,)):
            raise ModelError("edge probabilities must lie in the open interval (0, 1)")
        if not all(0.0 < v <= 1.0 for v in s):
            raise ModelError("block sizes must lie in (0, 1]")
        if abs(math.fsum(s) - 1.0) > 1e-12:
            raise ModelError(f"block sizes must sum to 1, got {math.fsum(s)!r}")
        if self.n < 1:
            raise ModelError("n must be positive")

    @property
    def c(self) -> int:
        return len(self.p)

    def boundaries(self) -> np.ndarray:
        return block_boundaries(self.s)

    def labels(self) -> np.ndarray:
        """Block index of every vertex under the half-open interval rule."""
        return grid_labels(self.s, self.n)

    def block_sizes(self) -> np.ndarray:
        return grid_block_sizes(self.s, self.n)

    def block_matrix(self) -> np.ndarray:
        """``c x c`` matrix of kernel values: ``p`` on the diagonal, ``q`` off it."""
        B = np.full((self.c, self.c), self.q)
        np.fill_diagonal(B, self.p)
        return B

    def with_p(self, p, q=None) -> SbmParams:
        return SbmParams(tuple(p), self.q if q is None else q, self.s, self.n, self.c_max)

    def to_dict(self) -> dict:
        return {"p": list(self.p), "q": self.q, "s": list(self.s), "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> SbmParams:
        try:
            return cls(tuple(d["p"]), d["q"], tuple(d["s"]), d["n"])
        except KeyError as exc:
            raise ModelError(f"SBM parameters missing field {exc}") from None


def block_boundaries(s) -> np.ndarray:
    cum = np.cumsum(np.asarray(s, dtype=float))
    cum[-1] = 1.0
    return cum


def grid_labels(s, n: int) -> np.ndarray:
    return block_index(np.arange(n) / n, block_boundaries(s))


def grid_block_sizes(s, n: int) -> np.ndarray:
    """Number of grid vertices in each block of relative sizes `s`."""
    return np.bincount(grid_labels(s, n), minlength=len(s))


def block_index(x, boundaries) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    # a point within _BOUNDARY_EPS below a boundary counts as on it
    idx = np.searchsorted(np.asarray(boundaries) - _BOUNDARY_EPS, x, side="right")
    return np.minimum(idx, len(boundaries) - 1)


def sbm_kernel_eval(params: SbmParams, x: float, y: float) -> float:
    """Canonical block-model kernel ``f(x, y; p, q, s)``."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ModelError(f"kernel arguments must lie in [0, 1], got ({x}, {y})")
    bx, by = block_index([x, y], params.boundaries())
    return params.p[bx] if bx == by else params.q


def kernel_grid(f, n: int) -> np.ndarray:
    """Evaluate a vectorized kernel ``f(x, y)`` on the grid, diagonal zeroed."""
    xi = np.arange(n) / n
    P = np.asarray(f(xi[:, None], xi[None, :]), dtype=float)
    P = np.broadcast_to(P, (n, n)).copy()
    np.fill_diagonal(P, 0.0)
    if not np.allclose(P, P.T, rtol=0, atol=0):
        raise ModelError("kernel is not symmetric on the grid")
    return P


def expected_adjacency(params: SbmParams) -> np.ndarray:
    """Expected adjacency matrix ``f(xi_i, xi_j)`` with a zero diagonal."""
    lab = params.labels()
    P = params.block_matrix()[lab[:, None], lab[None, :]]
    np.fill_diagonal(P, 0.0)
    return P


def expected_density(P: np.ndarray) -> float:
    n = P.shape[0]
    return float(np.triu(P, 1).sum() / (n * (n - 1) / 2))


def rank_one_cosine_kernel(a: float, b: float):
    """Kernel ``g(x) g(y)`` with ``g(x) = a + b cos(2 pi x)``.

    Dense and degree-heterogeneous for large ``a``; ``g(1 - x) = g(x)`` keeps the
    kernel invariant under ``(x, y) -> (1 - y, 1 - x)``.
    """
    if not (0 < a - abs(b) and a + abs(b) < 1):
        raise ModelError("need 0 < a - |b| and a + |b| < 1")

    def f(x, y):
        return (a + b * np.cos(2 * np.pi * x)) * (a + b * np.cos(2 * np.pi * y))

    return f


# ---------------------------------------------------------------------------
# samplers


def sample_from_probabilities(P: np.ndarray, seed=None) -> Graph:
    """Independent Bernoulli edges with probabilities ``P[i, j]``, ``i < j``."""
    n = P.shape[0]
    rng = as_generator(seed)
    iu, ju = np.triu_indices(n, 1)
    u = rng.random(iu.size)
    keep = u < P[iu, ju]
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1))


def sample_sbm(params: SbmParams, seed=None) -> Graph:
    return sample_from_probabilities(expected_adjacency(params), seed)


def sample_erdos_renyi(n: int, p: float, seed=None) -> Graph:
    if not 0.0 <= p <= 1.0:
        raise ModelError("p must lie in [0, 1]")
    if n < 1:
        raise ModelError("n must be positive")
    P = np.full((n, n), float(p))
    return sample_from_probabilities(P, seed)


def sample_kernel(f, n: int, seed=None) -> Graph:
    return sample_from_probabilities(kernel_grid(f, n), seed)


def sample_small_world(n: int, K: int, beta: float, seed=None) -> Graph:
    """Watts-Strogatz small-world graph.

    Starts from the ring lattice joining each vertex to its ``K/2`` nearest
    neighbours on either side.  For each offset ``j = 1 .. K/2`` and each vertex
    ``u`` in order, the lattice edge ``(u, u + j mod n)`` is rewired with
    probability `beta` to ``(u, w)`` with ``w`` uniform among vertices that are
    neither ``u`` nor already adjacent to ``u``.  Rewiring keeps the edge count
    at ``n K / 2``.

    Per visited edge the stream holds one uniform for the rewiring decision;
    on rewiring, integers in ``[0, n)`` are drawn until an allowed target comes
    up.
    """
    if K < 0 or K % 2 or K >= n:
        raise ModelError("K must be even with 0 <= K < n")
    if not 0.0 <= beta <= 1.0:
        raise ModelError("beta must lie in [0, 1]")
    rng = as_generator(seed)
    nbrs = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, K // 2 + 1):
            v = (u + j) % n
            nbrs[u].add(v)
            nbrs[v].add(u)
    for j in range(1, K // 2 + 1):
        for u in range(n):
            if rng.random() >= beta:
                continue
            v = (u + j) % n
            if v not in nbrs[u]:
                # lattice edge already rewired away from the other endpoint
                continue
            if len(nbrs[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in nbrs[u]:
                w = int(rng.integers(n))
            nbrs[u].discard(v)
            nbrs[v].discard(u)
            nbrs[u].add(w)
            nbrs[w].add(u)
    edges = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def sample_barabasi_albert(n: int, m0: int, m: int, seed=None) -> Graph:
    """Preferential attachment grown from the complete graph on `m0` vertices.

    Each new vertex attaches to `m` distinct existing vertices; targets are
    drawn one at a time with probability proportional to degree, redrawing
    vertices already chosen in the current step.
    """
    if not (1 <= m <= m0 <= n):
        raise ModelError("need 1 <= m <= m0 <= n")
    rng = as_generator(seed)
    edges = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    # each vertex appears once per incident edge
    repeated = [v for e in edges for v in e]
    for v in range(m0, n):
        targets: list[int] = []
        chosen = set()
        while len(targets) < m:
            if repeated:
                t = repeated[rng.integers(len(repeated))]
            else:
                t = int(rng.integers(v))
            if t not in chosen:
                chosen.add(t)
                targets.append(t)
        for t in targets:
            edges.append((t, v))
        repeated.extend(targets)
        repeated.extend([v] * m)
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


# ---------------------------------------------------------------------------
# model configurations ({"model": "sbm|er|ws|ba|kernel", "n": ..., ..., "seed": ...})

MODEL_KINDS = ("sbm", "er", "ws", "ba", "kernel")


def _require(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ModelError(f"model config '{cfg.get('model')}' missing {', '.join(missing)}")


def sample_from_config(cfg: dict, seed=None) -> Graph:
    """Draw one graph from a model configuration.

    `seed` overrides ``cfg["seed"]`` when given.
    """
    kind = cfg.get("model")
    if kind not in MODEL_KINDS:
        raise ModelError(f"unknown model {kind!r}; expected one of {MODEL_KINDS}")
    if seed is None:
        seed = cfg.get("seed")
    _require(cfg, "n")
    n = int(cfg["n"])
    if kind == "sbm":
        _require(cfg, "p", "q", "s")
        return sample_sbm(SbmParams(tuple(cfg["p"]), cfg["q"], tuple(cfg["s"]), n), seed)
    if kind == "er":
        _require(cfg, "p")
        return sample_erdos_renyi(n, float(cfg["p"]), seed)
    if kind == "ws":
        _require(cfg, "K", "beta")
        return sample_small_world(n, int(cfg["K"]), float(cfg["beta"]), seed)
    if kind == "ba":
        _require(cfg, "m0", "m")
        return sample_barabasi_albert(n, int(cfg["m0"]), int(cfg["m"]), seed)
    _require(cfg, "kernel")
    kernel_cfg = cfg["kernel"]
    if kernel_cfg.get("kind") != "rank_one_cosine":
        raise ModelError(f"unknown kernel kind {kernel_cfg.get('kind')!r}")
    return sample_kernel(rank_one_cosine_kernel(float(kernel_cfg["a"]), float(kernel_cfg["b"])), n, seed)


def model_expected_adjacency(cfg: dict) -> np.ndarray | None:
    """Expected adjacency of a kernel-type model config, ``None`` for ws/ba."""
    kind = cfg.get("model")
    n = int(cfg["n"])
    if kind == "sbm":
        return expected_adjacency(SbmParams(tuple(cfg["p"]), cfg["q"], tuple(cfg["s"]), n))
    if kind == "er":
        P = np.full((n, n), float(cfg["p"]))
        np.fill_diagonal(P, 0.0)
        return P
    if kind == "kernel":
        kernel_cfg = cfg["kernel"]
        return kernel_grid(rank_one_cosine_kernel(float(kernel_cfg["a"]), float(kernel_cfg["b"])), n)
    return None
