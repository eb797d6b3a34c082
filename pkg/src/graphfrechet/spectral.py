"""Spectra of expected adjacency matrices and the expected sample spectrum.

For an SBM the top eigenvalues of a sampled adjacency ``A = E[A] + W`` sit
near, but not at, the eigenvalues ``d_k`` of ``E[A]``.  Their expectation is
predicted as the root of

    f_k(z) = 1 + d_k R(v_k, v_k, z),
    R(x, y, z) = -sum_{l=0..L} x^T E[W^l] y / z^(l+1),

with ``E[W^1] = 0``.  The optional full form subtracts the coupling through
the other top eigenvectors ``V_{-k}``.

Block-constant kernels make everything reducible to ``c x c`` matrices: the
top eigenvectors of ``E[A]`` are constant on blocks and every moment matrix
``E[W^l]`` has block-structured row sums, so ``v^T E[W^l] v`` is computed
without touching ``n x n`` arrays.  The dense route on an explicit kernel grid
is kept for general kernels and as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.linalg as sl

from .models import SbmParams, expected_adjacency, sample_from_probabilities, spawn_seeds


class RootFindError(RuntimeError):
    """The expected-eigenvalue equation has no usable root."""


@dataclass(frozen=True)
class RootFindConfig:
    """Settings for :func:`expected_sample_spectrum`.

    ``moments="analytic"`` uses exact second to fourth moments of ``W`` (cheap
    for block kernels); ``"monte_carlo"`` estimates the third and fourth from
    ``mc_moment_samples`` sampled graphs seeded by ``mc_seed``.
    """

    L: int = 4
    c0: float = 0.5
    mc_moment_samples: int = 50
    tol: float = 1e-8
    max_iter: int = 100
    full_correction: bool = False
    moments: str = "analytic"
    mc_seed: int = 0

    def __post_init__(self):
        if self.L not in (0, 2, 3, 4):
            raise ValueError("L must be one of 0, 2, 3, 4")
        if not 0.0 < self.c0 < 1.0:
            raise ValueError("c0 must lie in (0, 1)")
        if self.tol <= 0 or self.max_iter < 1 or self.mc_moment_samples < 1:
            raise ValueError("tol, max_iter and mc_moment_samples must be positive")
        if self.moments not in ("analytic", "monte_carlo"):
            raise ValueError("moments must be 'analytic' or 'monte_carlo'")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> RootFindConfig:
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown root-finder settings: {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# spectra of E[A] and of the limit operator


def _block_parts(params: SbmParams):
    """Nonempty block sizes, kernel block matrix and the reduced matrix ``S``.

    ``E[A] = Z F Z^T - diag(p_label)`` with ``Z`` the block indicator.  On
    block-constant vectors this acts as ``S = diag(sqrt nk) F diag(sqrt nk) -
    diag(p)``; on vectors summing to zero inside a block it acts as ``-p_k``.
    """
    nk = params.block_sizes()
    keep = nk > 0
    nk = nk[keep].astype(float)
    F = params.block_matrix()[np.ix_(keep, keep)]
    sq = np.sqrt(nk)
    S = F * np.outer(sq, sq) - np.diag(np.diag(F))
    return nk, F, S


def _block_eigh(params: SbmParams):
    nk, F, S = _block_parts(params)
    w, U = np.linalg.eigh(S)
    order = np.argsort(w, kind="stable")[::-1]
    return w[order], U[:, order], nk, F


def expected_adjacency_spectrum(params: SbmParams, method: str = "block") -> np.ndarray:
    """All ``n`` eigenvalues of ``E[A]``, descending.

    ``method="block"`` combines the ``c x c`` reduction with the eigenvalue
    ``-p_k`` of multiplicity ``n_k - 1``; ``"dense"`` diagonalizes ``E[A]``.
    """
    if method == "dense":
        return np.linalg.eigvalsh(expected_adjacency(params))[::-1].copy()
    if method != "block":
        raise ValueError("method must be 'block' or 'dense'")
    w, _, nk, F = _block_eigh(params)
    inner = np.repeat(np.diag(F) * -1.0, (nk - 1).astype(int))
    return np.sort(np.concatenate([w, inner]), kind="stable")[::-1]


def operator_spectrum(params: SbmParams) -> np.ndarray:
    """Nonzero spectrum of the integral operator with the block kernel.

    Eigenvalues of ``M[k, l] = s_l F[k, l]``, computed from the similar
    symmetric matrix ``diag(sqrt s) F diag(sqrt s)``; length ``c``, descending.
    """
    rs = np.sqrt(np.asarray(params.s))
    return np.linalg.eigvalsh(rs[:, None] * params.block_matrix() * rs[None, :])[::-1].copy()


def kernel_l2_norm_sq(params: SbmParams) -> float:
    """``integral of f^2`` over the unit square for the block kernel."""
    s = np.asarray(params.s)
    return float(s @ (params.block_matrix() ** 2) @ s)


def expected_density_of(params: SbmParams) -> float:
    """Expected edge density of the grid kernel, from integer block sizes."""
    nk = params.block_sizes().astype(float)
    T = params.n * (params.n - 1) / 2
    within = nk * (nk - 1) / 2
    return float((within @ np.asarray(params.p) + (T - within.sum()) * params.q) / T)


# ---------------------------------------------------------------------------
# moments of W = A - E[A]


def _entry_moments(F):
    s2 = F * (1 - F)
    mu3 = s2 * (1 - 2 * F)
    mu4 = s2 * ((1 - F) ** 3 + F**3)
    return s2, mu3, mu4


def _block_moment_matrices(U, nk, F, L):
    """``U^T E[W^l] U`` in the block basis, for the analytic moments.

    Central moments of a Bernoulli(f) entry: ``s2 = f(1-f)``,
    ``mu3 = s2 (1-2f)``, ``mu4 = s2 ((1-f)^3 + f^3)``.  ``E[W^2]`` and ``E[W^4]``
    are diagonal; ``E[W^3]`` equals ``mu3`` off the diagonal.  Row sums over a
    block count ``n_l`` partners, one fewer inside the own block.
    """
    c = len(nk)
    s2, mu3, mu4 = _entry_moments(F)
    cnt = nk[None, :] - np.eye(c)
    D2 = (s2 * cnt).sum(1)
    mats = {0: np.eye(c)}
    if L >= 2:
        mats[2] = U.T @ (D2[:, None] * U)
    if L >= 3:
        sq = np.sqrt(nk)
        T3 = mu3 * (np.outer(sq, sq) - np.eye(c))
        mats[3] = U.T @ T3 @ U
    if L >= 4:
        # (W^4)_ii = sum_j W_ij^2 sum_k W_jk^2 expands into these four terms
        e4 = D2**2 - 2 * (s2**2 * cnt).sum(1) + (s2 * cnt) @ D2 + (mu4 * cnt).sum(1)
        mats[4] = U.T @ (e4[:, None] * U)
    return mats


def dense_moments(P: np.ndarray, L: int = 4) -> dict:
    """Exact ``E[W^l]`` for independent Bernoulli entries with means ``P``."""
    n = P.shape[0]
    s2, mu3, mu4 = _entry_moments(P)
    np.fill_diagonal(s2, 0.0)
    np.fill_diagonal(mu3, 0.0)
    np.fill_diagonal(mu4, 0.0)
    d = s2.sum(1)
    mom = {0: np.eye(n)}
    if L >= 2:
        mom[2] = np.diag(d)
    if L >= 3:
        mom[3] = mu3
    if L >= 4:
        mom[4] = np.diag(d**2 - 2 * (s2**2).sum(1) + s2 @ d + mu4.sum(1))
    return mom


def _mc_moment_matrices(P, V, L, samples, seed):
    """Projected moments with a sampled third and fourth moment."""
    s2 = P * (1 - P)
    np.fill_diagonal(s2, 0.0)
    mats = {0: V.T @ V}
    if L >= 2:
        mats[2] = V.T @ (s2.sum(1)[:, None] * V)
    acc3 = np.zeros((V.shape[1],) * 2)
    acc4 = np.zeros_like(acc3)
    for child in spawn_seeds(seed, samples):
        W = sample_from_probabilities(P, child).adjacency() - P
        WV = W @ V
        W2V = W @ WV
        acc3 += WV.T @ W2V
        acc4 += W2V.T @ W2V
    if L >= 3:
        mats[3] = acc3 / samples
    if L >= 4:
        mats[4] = acc4 / samples
    return mats


# ---------------------------------------------------------------------------
# root finding


def newton_bisect(f, df, a, b, tol=1e-8, max_iter=100):
    """Root of `f` in ``[a, b]``: Newton from the midpoint, bisection fallback.

    A Newton iterate is accepted only if it stays strictly inside the current
    bracket; otherwise the bracket midpoint is used.  Stops when
    ``|f(z)| <= tol``.  Returns ``(z, iterations)``.
    """
    fa, fb = f(a), f(b)
    if fa == 0:
        return a, 0
    if fb == 0:
        return b, 0
    if np.sign(fa) == np.sign(fb):
        raise RootFindError(f"no sign change on bracket [{a:.6g}, {b:.6g}] (f = {fa:.3g}, {fb:.3g})")
    z = 0.5 * (a + b)
    for it in range(1, max_iter + 1):
        fz = f(z)
        if abs(fz) <= tol:
            return z, it
        if np.sign(fz) == np.sign(fa):
            a, fa = z, fz
        else:
            b = z
        slope = df(z)
        step = z - fz / slope if slope != 0 and np.isfinite(slope) else np.nan
        lo, hi = min(a, b), max(a, b)
        z = step if lo < step < hi else 0.5 * (a + b)
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi)):
            return z, it
    raise RootFindError(f"no convergence after {max_iter} iterations (last z = {z:.10g})")


def bracket(d: float, c0: float) -> tuple[float, float]:
    """Search interval ``[d / (1 + c0/2), (1 + c0/2) d]`` (reflected for ``d < 0``)."""
    g = 1.0 + c0 / 2
    return (d / g, d * g) if d > 0 else (d * g, d / g)


def _solve_all(D, mats, cfg: RootFindConfig):
    K = len(D)
    ls = sorted(mats)

    def Rmat(z):
        return -sum(mats[l] * z ** -(l + 1) for l in ls)

    out = np.empty(K)
    for k in range(K):
        dk = float(D[k])
        if dk == 0:
            raise RootFindError(f"eigenvalue {k + 1} of E[A] is zero")
        diag = np.array([mats[l][k, k] for l in ls])
        powers = np.array(ls, dtype=float) + 1

        if cfg.full_correction and K > 1:
            idx = [j for j in range(K) if j != k]

            def f(z, k=k, idx=idx, dk=dk):
                R = Rmat(z)
                B = np.diag(1.0 / D[idx]) + R[np.ix_(idx, idx)]
                return 1.0 + dk * (R[k, k] - R[k, idx] @ np.linalg.solve(B, R[idx, k]))

            def df(z, f=f):
                h = 1e-7 * abs(z)
                return (f(z + h) - f(z - h)) / (2 * h)
        else:

            def f(z, dk=dk, diag=diag, powers=powers):
                return 1.0 - dk * float(diag @ z**-powers)

            def df(z, dk=dk, diag=diag, powers=powers):
                return dk * float((diag * powers) @ z ** -(powers + 1))

        a, b = bracket(dk, cfg.c0)
        try:
            out[k], _ = newton_bisect(f, df, a, b, cfg.tol, cfg.max_iter)
        except RootFindError as exc:
            raise RootFindError(f"index {k + 1} (E[A] eigenvalue {dk:.6g}): {exc}") from None
    return out


def expected_sample_spectrum(model, cfg: RootFindConfig | None = None, c: int | None = None) -> np.ndarray:
    """Predicted expectation of the top-``c`` sampled adjacency eigenvalues.

    Parameters
    ----------
    model : SbmParams or ndarray
        Block model (fast ``c x c`` route) or an explicit ``n x n`` matrix of
        edge probabilities with zero diagonal (dense route).
    cfg : RootFindConfig, optional
    c : int, optional
        Number of eigenvalues; defaults to the number of blocks.  Required
        for the dense route.

    Raises
    ------
    RootFindError
        When some index has no sign change on its bracket or Newton/bisection
        does not converge.
    """
    cfg = cfg or RootFindConfig()
    if isinstance(model, SbmParams):
        c = model.c if c is None else c
        if cfg.moments == "analytic" and c <= model.c:
            w, U, nk, F = _block_eigh(model)
            if c > len(w):
                raise RootFindError("more eigenvalues requested than nonempty blocks")
            mats = _block_moment_matrices(U[:, :c], nk, F, cfg.L)
            return _solve_all(w[:c], mats, cfg)
        P = expected_adjacency(model)
    else:
        P = np.asarray(model, dtype=float)
        if c is None:
            raise ValueError("c is required for an explicit probability matrix")
    n = P.shape[0]
    w, V = sl.eigh(P, subset_by_index=[n - c, n - 1])
    w, V = w[::-1], V[:, ::-1]
    if cfg.moments == "monte_carlo":
        mats = _mc_moment_matrices(P, V, cfg.L, cfg.mc_moment_samples, cfg.mc_seed)
    else:
        mats = {l: V.T @ (M @ V) for l, M in dense_moments(P, cfg.L).items()}
    return _solve_all(w, mats, cfg)


def spike_separation(params: SbmParams) -> np.ndarray:
    """Ratio of each top eigenvalue of ``E[A]`` to the bulk edge estimate.

    The bulk edge is ``2 sqrt(max_i sum_j Var A_ij)``.  The truncated moment
    expansion is accurate when the ratio is comfortably above 1 (about 2 and
    more); near 1 the eigenvalue interacts with the bulk.
    """
    w, _, nk, F = _block_eigh(params)
    s2 = F * (1 - F)
    row = (s2 * (nk[None, :] - np.eye(len(nk)))).sum(1)
    return w[: params.c] / (2 * math.sqrt(row.max()))


# ---------------------------------------------------------------------------
# Monte Carlo oracle and checks


@dataclass(frozen=True)
class MonteCarloSpectrum:
    mean: np.ndarray
    stderr: np.ndarray
    samples: int


def top_eigenvalues(A: np.ndarray, c: int) -> np.ndarray:
    n = A.shape[0]
    return sl.eigvalsh(A, subset_by_index=[n - c, n - 1])[::-1].copy()


def monte_carlo_mean_spectrum(model, c: int, samples: int, seed=None) -> MonteCarloSpectrum:
    """Mean and standard error of the top-``c`` eigenvalues over sampled graphs.

    Sample ``i`` uses the ``i``-th spawned child of `seed`.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    P = expected_adjacency(model) if isinstance(model, SbmParams) else np.asarray(model, float)
    vals = np.array([top_eigenvalues(sample_from_probabilities(P, ch).adjacency(), c) for ch in spawn_seeds(seed, samples)])
    return MonteCarloSpectrum(vals.mean(0), vals.std(0, ddof=1) / math.sqrt(samples), samples)


def weyl_perturbation_bound_check(H: np.ndarray, A: np.ndarray, atol: float = 1e-10) -> bool:
    """Every eigenvalue of ``H + A`` lies within ``||A||_2`` of the spectrum of ``H``."""
    ev_h = np.linalg.eigvalsh(H)
    ev = np.linalg.eigvalsh(H + A)
    norm = np.abs(np.linalg.eigvalsh(A)).max() if A.size else 0.0
    dist = np.abs(ev[:, None] - ev_h[None, :]).min(1)
    return bool(np.all(dist <= norm + atol))


def kernel_spectrum_closeness_check(f1: np.ndarray, f2: np.ndarray) -> tuple[float, float]:
    """Discretized ``L2`` kernel gap and ``l2`` gap of the operator spectra.

    The grid operator of a kernel matrix ``f`` is ``f / n``; its sorted
    eigenvalues approximate the integral operator spectrum and
    ``||f / n||_F`` its Hilbert-Schmidt norm.
    """
    f1 = np.asarray(f1, float)
    f2 = np.asarray(f2, float)
    if f1.shape != f2.shape:
        raise ValueError("kernel grids differ in shape")
    n = f1.shape[0]
    gap = float(np.linalg.norm(f1 - f2) / n)
    s1 = np.linalg.eigvalsh(f1 / n)[::-1]
    s2 = np.linalg.eigvalsh(f2 / n)[::-1]
    return gap, float(np.linalg.norm(s1 - s2))


__all__ = [
    "RootFindConfig",
    "RootFindError",
    "MonteCarloSpectrum",
    "bracket",
    "dense_moments",
    "expected_adjacency_spectrum",
    "expected_density_of",
    "expected_sample_spectrum",
    "kernel_l2_norm_sq",
    "kernel_spectrum_closeness_check",
    "monte_carlo_mean_spectrum",
    "newton_bisect",
    "operator_spectrum",
    "spike_separation",
    "top_eigenvalues",
    "weyl_perturbation_bound_check",
]
