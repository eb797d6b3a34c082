"""Independent Monte Carlo oracles shared by the unit and acceptance tests."""

import numpy as np

from graphfrechet.communities import semicircle_cdf


def semicircle_ppf(u, r):
    lo = np.full_like(u, -r)
    hi = np.full_like(u, r)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid, r) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def order_statistic_draws(m, j, r, draws, seed):
    """``draws`` samples of the j-th largest of m semicircle(r) variables.

    The j-th largest uniform order statistic is Beta(m - j + 1, j); the
    inverse CDF maps it onto the semicircle scale.
    """
    rng = np.random.default_rng(seed)
    return semicircle_ppf(rng.beta(m - j + 1, j, size=draws), r)
