"""Fréchet regression of graphs on a scalar predictor.

The regression mean at ``t`` is a weighted Fréchet mean with the linear
weights ``w_i(t) = 1 + (t_i - tbar) (t - tbar) / vhat``, where ``tbar`` and
``vhat`` are the sample mean and (1/N) variance of the predictors.  The
weights average to exactly 1 and are affine in ``t``; individual weights may be
negative under extrapolation as long as their sum stays positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frechet import FitConfig, FitResult, GraphDataset, as_dataset, fit_frechet_mean
from .graph import GraphError
from .communities import estimate_c


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    """Predictor values ``t_i`` paired with graphs (via their cached spectra)."""

    times: np.ndarray
    data: GraphDataset

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).copy()
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "data", as_dataset(self.data))
        if t.ndim != 1 or t.size != len(self.data):
            raise GraphError("need exactly one predictor value per graph")
        if t.size < 2:
            raise GraphError("regression needs at least two samples")
        if not self.v_hat > 0:
            raise GraphError("predictor values have zero variance")

    @classmethod
    def from_pairs(cls, pairs) -> RegressionDataset:
        pairs = list(pairs)
        return cls(np.array([t for t, _ in pairs], dtype=float), GraphDataset.from_graphs([g for _, g in pairs]))

    @property
    def t_bar(self) -> float:
        return float(self.times.mean())

    @property
    def v_hat(self) -> float:
        return float(((self.times - self.times.mean()) ** 2).mean())

    def __len__(self):
        return self.times.size


def regression_weights(ds: RegressionDataset, t: float) -> np.ndarray:
    return 1.0 + (ds.times - ds.t_bar) * (float(t) - ds.t_bar) / ds.v_hat


def _checked_weights(ds, t):
    w = regression_weights(ds, t)
    if not w.sum() > 0:
        raise ValueError(f"weights at t={t} sum to {w.sum():.6g}; extrapolation is degenerate")
    return w


def weighted_target_spectrum(ds: RegressionDataset, t: float, c: int) -> np.ndarray:
    """Minimizer of the weighted squared spectral distance: the weighted mean spectrum."""
    w = _checked_weights(ds, t)
    return w @ ds.data.top(c) / w.sum()


def pooled_c_star(ds: RegressionDataset, cfg: FitConfig | None = None) -> int:
    """Number of blocks estimated once from the unweighted pooled sample."""
    cfg = cfg or FitConfig()
    if cfg.c_override is not None:
        return cfg.c_override
    return estimate_c(ds.data.spectra.mean(0), cfg.K, cfg.c_cap).c_star


def fit_regression_point(ds: RegressionDataset, t: float, cfg: FitConfig | None = None, c_star: int | None = None) -> FitResult:
    """Block model fitted to the weighted sample at predictor value `t`.

    The density target is the weighted mean density and the number of blocks
    is held at the pooled estimate unless `c_star` is given.
    """
    cfg = cfg or FitConfig()
    if c_star is None:
        c_star = pooled_c_star(ds, cfg)
    w = _checked_weights(ds, t)
    return fit_frechet_mean(ds.data, cfg, weights=w, c_star=c_star)


def _spectrum_of(fit):
    return fit.fitted_spectrum if isinstance(fit, FitResult) else np.asarray(fit, dtype=float)


def _sum_sq(ds, fits):
    total = 0.0
    for t, row in zip(ds.times, ds.data.spectra):
        key = float(t)
        if key not in fits:
            raise KeyError(f"no fit for t={key}")
        lam = _spectrum_of(fits[key])
        total += float(((row[: lam.size] - lam) ** 2).sum())
    return total


def regression_error(ds: RegressionDataset, fits, sbm_spectra=None) -> tuple[float, float]:
    """Summed squared truncated distances from the fitted means to the sample.

    `fits` maps each ``t_i`` to a :class:`~graphfrechet.frechet.FitResult` or
    a fitted top spectrum.  The fitted mean is itself the block-model mean, so
    the second error equals the first unless `sbm_spectra` (same keys) supplies
    separately computed spectra of the fitted models, e.g. Monte Carlo means.
    """
    e = _sum_sq(ds, fits)
    e_sbm = e if sbm_spectra is None else _sum_sq(ds, sbm_spectra)
    return e, e_sbm


@dataclass
class RegressionReport:
    c_star: int
    query_times: list
    fits: dict
    e: float | None
    e_sbm: float | None

    def to_dict(self) -> dict:
        rows = []
        for t in self.query_times:
            r = self.fits[t]
            rows.append(
                {
                    "t": t,
                    "status": r.status,
                    "p": list(r.params.p),
                    "q": r.params.q,
                    "fitted_spectrum": r.fitted_spectrum.tolist(),
                    "target_spectrum": r.target_spectrum.tolist(),
                    "objective": r.final_objective,
                    "iterations": len(r.trace),
                }
            )
        return {"c_star": self.c_star, "times": list(self.query_times), "fits": rows, "e": self.e, "e_sbm": self.e_sbm}


def run_regression(
    ds: RegressionDataset,
    query_times,
    cfg: FitConfig | None = None,
    with_error: bool = True,
    sbm_check_samples: int = 0,
    threads: int = 1,
) -> RegressionReport:
    """Fit the regression mean at every query time (and every ``t_i`` for the errors).

    ``sbm_check_samples > 0`` evaluates the second error against Monte Carlo
    mean spectra of the fitted models instead of their predicted spectra.
    """
    from .datasets import parallel_map
    from .spectral import monte_carlo_mean_spectrum

    cfg = cfg or FitConfig()
    c = pooled_c_star(ds, cfg)
    query = [float(t) for t in query_times]
    needed = list(dict.fromkeys(query + ([float(t) for t in ds.times] if with_error else [])))
    results = parallel_map(lambda t: fit_regression_point(ds, t, cfg, c), needed, threads)
    fits = dict(zip(needed, results))
    e = e_sbm = None
    if with_error:
        sbm = None
        if sbm_check_samples > 0:
            sbm = {
                t: monte_carlo_mean_spectrum(fits[t].params, c, sbm_check_samples, cfg.seed).mean
                for t in map(float, ds.times)
            }
        e, e_sbm = regression_error(ds, fits, sbm)
    return RegressionReport(c, query, fits, e, e_sbm)
