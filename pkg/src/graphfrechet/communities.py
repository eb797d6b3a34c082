"""Estimating the number of communities from a mean adjacency spectrum.

The leading eigenvalues of a community-structured random graph stand apart
from a bulk that is roughly semicircular.  Walking down the sorted mean
spectrum, candidate ``i`` is taken as the bulk edge ``r`` and the next ``K``
eigenvalues are compared with the expected largest order statistics of
``n - i`` semicircle draws of radius ``r``.  The first candidate whose
followers all fall within one standard deviation of their prediction marks the
start of the bulk, and everything above it counts as a community eigenvalue.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

QUAD_NODES = 2048


class QuadratureError(RuntimeError):
    pass


def semicircle_pdf(lam, r: float):
    """Wigner semicircle density ``2 / (pi r^2) sqrt(r^2 - lam^2)`` on ``[-r, r]``."""
    if r <= 0:
        raise ValueError("radius must be positive")
    lam = np.asarray(lam, dtype=float)
    out = 2.0 / (np.pi * r * r) * np.sqrt(np.clip(r * r - lam * lam, 0.0, None))
    return np.where(np.abs(lam) <= r, out, 0.0)


def semicircle_cdf(lam, r: float):
    if r <= 0:
        raise ValueError("radius must be positive")
    u = np.clip(np.asarray(lam, dtype=float) / r, -1.0, 1.0)
    return 0.5 + (u * np.sqrt(1.0 - u * u) + np.arcsin(u)) / np.pi


@dataclass(frozen=True)
class BulkModel:
    """Semicircle bulk of radius `r` with `m` draws, `K` order statistics compared."""

    r: float
    m: int
    K: int = 3

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("radius must be positive")
        if not 1 <= self.K <= self.m:
            raise ValueError("need 1 <= K <= m")


@lru_cache(maxsize=1)
def _unit_nodes(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


def order_statistic_moments(model: BulkModel, j: int, nodes: int = QUAD_NODES) -> tuple[float, float]:
    """Mean and standard deviation of the ``j``-th largest of ``m`` semicircle draws.

    The density ``m! / ((m-j)! (j-1)!) F^(m-j) (1-F)^(j-1) s`` is integrated by
    Gauss-Legendre quadrature on ``[-r, r]``, with the combinatorial factor and
    powers evaluated in log space.
    """
    if not 1 <= j <= model.m:
        raise ValueError(f"j must lie in [1, {model.m}]")
    r, m = model.r, model.m
    xg, wg = _unit_nodes(nodes)
    x = xg * r
    w = wg * r
    F = semicircle_cdf(x, r)
    s = semicircle_pdf(x, r)
    logc = gammaln(m + 1) - gammaln(m - j + 1) - gammaln(j)
    with np.errstate(divide="ignore"):
        logd = logc + (m - j) * np.log(F) + (j - 1) * np.log1p(-F) + np.log(s)
    dens = np.exp(logd)
    mass = float(w @ dens)
    if abs(mass - 1.0) > 1e-6:
        raise QuadratureError(f"order-statistic density integrates to {mass:.8f} with {nodes} nodes")
    mean = float(w @ (x * dens)) / mass
    second = float(w @ (x * x * dens)) / mass
    return mean, float(np.sqrt(max(second - mean * mean, 0.0)))


@dataclass
class CommunityEstimate:
    """Outcome of :func:`estimate_c`.

    ``c_star`` is floored at 1 for downstream fitting; ``raw`` is the loop's
    own answer before flooring.  ``diagnostics`` holds one record per
    candidate: its index, radius, bulk size and the ``K`` comparisons.
    """

    c_star: int
    raw: int
    warning: str | None = None
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"c_star": self.c_star, "raw": self.raw, "warning": self.warning, "iterations": self.diagnostics}


def estimate_c(mean_spectrum, K: int = 3, c_cap: int = 20) -> CommunityEstimate:
    """Number of eigenvalues standing above a semicircle bulk.

    Parameters
    ----------
    mean_spectrum : array_like
        Sorted (descending) mean adjacency spectrum of length ``n >= K + 1``.
    K : int
        Number of order statistics compared per candidate.
    c_cap : int
        Upper bound on the answer; also returned, with a warning, when the
        candidate radius reaches zero before a bulk is found.
    """
    lam = np.asarray(mean_spectrum, dtype=float)
    n = lam.size
    if K < 1:
        raise ValueError("K must be at least 1")
    if n < K + 1:
        raise ValueError(f"spectrum of length {n} is too short for K={K}")
    if np.any(np.diff(lam) > 1e-9 * max(1.0, np.abs(lam).max())):
        raise ValueError("mean spectrum must be sorted in descending order")
    diag = []
    for i in range(1, n - K + 1):
        r = float(lam[i - 1])
        if r <= 0:
            msg = f"radius {r:.4g} at candidate {i} is not positive; no bulk found"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            return CommunityEstimate(c_cap, c_cap, msg, diag)
        model = BulkModel(r, n - i, K)
        rows = []
        ok = True
        for j in range(1, K + 1):
            mu, sd = order_statistic_moments(model, j)
            obs = float(lam[i + j - 1])
            rows.append({"j": j, "observed": obs, "mean": mu, "std": sd})
            ok &= abs(obs - mu) <= sd
        diag.append({"i": i, "r": r, "m": n - i, "comparisons": rows, "accepted": bool(ok)})
        if ok:
            raw = min(i - 1, c_cap)
            return CommunityEstimate(max(raw, 1), raw, None, diag)
    msg = "no candidate matched the bulk model"
    warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return CommunityEstimate(c_cap, c_cap, msg, diag)
