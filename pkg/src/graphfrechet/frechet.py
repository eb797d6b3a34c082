"""Fitting block models whose expected top spectrum matches a graph sample.

The empirical Fréchet mean of graphs under the truncated spectral distance
has the sample-mean top spectrum.  The search runs over block models with
near-equal block sizes: the number of blocks comes from
:func:`~graphfrechet.communities.estimate_c`, the across-block probability
is eliminated through the density constraint, and the within-block
probabilities are moved by projected gradient descent with centered
differences and a halving line search.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .communities import CommunityEstimate, estimate_c
from .graph import Graph, GraphError, density, spectrum
from .models import SbmParams, grid_block_sizes, sample_sbm, spawn_seeds
from .spectral import RootFindConfig, RootFindError, expected_density_of, expected_sample_spectrum, monte_carlo_mean_spectrum


class FitError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True, eq=False)
class GraphDataset:
    """Graphs of a common size together with their cached spectra."""

    spectra: np.ndarray
    densities: np.ndarray
    n: int
    graphs: tuple = ()

    @classmethod
    def from_graphs(cls, graphs) -> GraphDataset:
        graphs = tuple(graphs)
        if not graphs:
            raise GraphError("dataset is empty")
        n = graphs[0].n
        for g in graphs:
            if g.n != n:
                raise GraphError(f"graph sizes differ: {g.n} != {n}")
        spectra = np.array([spectrum(g) for g in graphs])
        dens = np.array([density(g) for g in graphs])
        spectra.setflags(write=False)
        dens.setflags(write=False)
        return cls(spectra, dens, n, graphs)

    @classmethod
    def from_spectra(cls, spectra, densities=None) -> GraphDataset:
        spectra = np.atleast_2d(np.asarray(spectra, dtype=float)).copy()
        n = spectra.shape[1]
        if densities is None:
            # sum of squared eigenvalues is twice the edge count
            densities = (spectra**2).sum(1) / (n * (n - 1))
        dens = np.asarray(densities, dtype=float).copy()
        spectra.setflags(write=False)
        dens.setflags(write=False)
        return cls(spectra, dens, n)

    def __len__(self):
        return self.spectra.shape[0]

    def top(self, c: int) -> np.ndarray:
        if not 1 <= c <= self.n:
            raise GraphError(f"c must lie in [1, {self.n}], got {c}")
        return self.spectra[:, :c]


def as_dataset(data) -> GraphDataset:
    if isinstance(data, GraphDataset):
        return data
    if isinstance(data, np.ndarray):
        return GraphDataset.from_spectra(data)
    return GraphDataset.from_graphs(data)


def _weights(weights, N):
    if weights is None:
        return np.ones(N)
    w = np.asarray(weights, dtype=float)
    if w.shape != (N,):
        raise ValueError(f"expected {N} weights, got shape {w.shape}")
    if not w.sum() > 0:
        raise ValueError(f"weights must have a positive sum, got {w.sum():.6g}")
    return w


def mean_spectrum(data, c: int, weights=None) -> np.ndarray:
    """(Weighted) entrywise mean of the top-``c`` spectra."""
    ds = as_dataset(data)
    w = _weights(weights, len(ds))
    return w @ ds.top(c) / w.sum()


def irreducible_objective(data, c: int, weights=None) -> float:
    """``sum_i w_i ||sigma_c(G_i) - mean||^2``, the floor of the objective."""
    ds = as_dataset(data)
    w = _weights(weights, len(ds))
    X = ds.top(c)
    return float(w @ ((X - w @ X / w.sum()) ** 2).sum(1))


# ---------------------------------------------------------------------------
# parameterization


def build_s_star(n: int, c: int) -> np.ndarray:
    """Relative block sizes: ``c`` equal blocks, the remainder added to the first."""
    if not 1 <= c <= n:
        raise ValueError(f"need 1 <= c <= n, got c={c}, n={n}")
    w, r = divmod(n, c)
    s = np.full(c, w / n)
    s[0] = (w + r) / n
    return s


def pair_counts(s, n: int):
    """Within-block pair counts per block, across-block and total pair counts."""
    nk = grid_block_sizes(s, n).astype(float)
    within = nk * (nk - 1) / 2
    total = n * (n - 1) / 2
    return within, total - within.sum(), total


def solve_q_for_density(p, s, n: int, rho_bar: float, box_margin: float = 1e-4) -> tuple[float, bool]:
    """Across-block probability giving expected density `rho_bar`.

    Returns ``(q, clamped)``; ``clamped`` is set when the exact solution falls
    outside ``[box_margin, 1 - box_margin]``.
    """
    p = np.asarray(p, dtype=float)
    if p.size < 2:
        raise ValueError("with a single block q is undefined; the model is Erdős-Rényi")
    within, across, total = pair_counts(s, n)
    if across <= 0:
        raise ValueError("no across-block pairs")
    q = (rho_bar * total - within @ p) / across
    lo, hi = box_margin, 1 - box_margin
    if q < lo or q > hi:
        return float(min(max(q, lo), hi)), True
    return float(q), False


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    ``spectrum_source`` selects how a candidate model's expected top spectrum
    is computed: ``"root"`` (moment expansion root-finder) or
    ``"monte_carlo"`` (average over ``mc_samples`` sampled graphs with a fixed
    seed, slow, for validation).  With ``mc_fallback`` the root-finder is
    used until the first candidate without a root; from then on the fit
    uses the Monte Carlo mean for every evaluation, so that all comparisons
    are made on one objective.  This covers eigenvalues pressed against the
    bulk edge.

    ``max_step`` caps the Euclidean length of the first trial step
    ``step_size * gradient``; objectives summed over many large graphs have
    gradients in the thousands, where the uncapped trial step leaves the box
    and halving accepts the first decrease wherever it lands.
    """

    step_size: float = 0.05
    max_step: float | None = 0.05
    fd_step: float = 1e-3
    box_margin: float = 1e-4
    rel_tol: float = 1e-4
    max_iter: int = 500
    max_halvings: int = 20
    c_override: int | None = None
    K: int = 3
    c_cap: int = 20
    root: RootFindConfig = field(default_factory=RootFindConfig)
    spectrum_source: str = "root"
    mc_samples: int = 50
    mc_fallback: bool = False
    representative_samples: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("step_size", "fd_step", "box_margin", "rel_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.box_margin >= 0.5:
            raise ValueError("box_margin must be below 0.5")
        if self.max_iter < 1 or self.representative_samples < 1:
            raise ValueError("max_iter and representative_samples must be positive")
        if self.spectrum_source not in ("root", "monte_carlo"):
            raise ValueError("spectrum_source must be 'root' or 'monte_carlo'")
        if self.c_override is not None and self.c_override < 1:
            raise ValueError("c_override must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["root"] = self.root.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> FitConfig:
        d = dict(d or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown fit settings: {sorted(unknown)}")
        if "root" in d:
            d["root"] = RootFindConfig.from_dict(d["root"])
        return cls(**d)


@dataclass
class TraceRow:
    iteration: int
    p: list
    q: float
    objective: float
    gradient_norm: float | None
    step_size: float | None
    step_accepted: bool | None
    halvings: int
    density_gap: float
    q_clamped: bool


@dataclass
class FitTrace:
    rows: list = field(default_factory=list)

    def append(self, row: TraceRow):
        if not math.isfinite(row.objective):
            raise FitError(f"non-finite objective at iteration {row.iteration}")
        self.rows.append(row)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def to_list(self) -> list:
        return [asdict(r) for r in self.rows]


@dataclass
class FitResult:
    params: SbmParams
    c_star: int
    final_objective: float
    initial_objective: float
    irreducible: float
    target_spectrum: np.ndarray
    fitted_spectrum: np.ndarray
    rho_bar: float
    q_clamped: bool
    status: str
    trace: FitTrace
    representative: Graph | None = None
    representative_distance: float | None = None
    community: CommunityEstimate | None = None
    seconds: float = 0.0
    spectrum_source: str = "root"

    @property
    def reducible(self) -> float:
        return self.final_objective - self.irreducible

    @property
    def initial_reducible(self) -> float:
        return self.initial_objective - self.irreducible

    @property
    def density_gap(self) -> float:
        return abs(expected_density_of(self.params) - self.rho_bar)

    def to_dict(self) -> dict:
        from .io import format_edgelist

        return {
            "status": self.status,
            "spectrum_source": self.spectrum_source,
            "c_star": self.c_star,
            "params": self.params.to_dict(),
            "rho_bar": self.rho_bar,
            "density_gap": self.density_gap,
            "q_clamped": self.q_clamped,
            "objective": {
                "initial": self.initial_objective,
                "final": self.final_objective,
                "irreducible": self.irreducible,
                "reducible_initial": self.initial_reducible,
                "reducible_final": self.reducible,
            },
            "target_spectrum": self.target_spectrum.tolist(),
            "fitted_spectrum": self.fitted_spectrum.tolist(),
            "iterations": len(self.trace),
            "trace": self.trace.to_list(),
            "representative": None if self.representative is None else format_edgelist(self.representative),
            "representative_distance": self.representative_distance,
            "community": None if self.community is None else self.community.to_dict(),
            "seconds": self.seconds,
        }


# ---------------------------------------------------------------------------
# objective


def model_spectrum(params: SbmParams, c: int, cfg: FitConfig | None = None) -> np.ndarray:
    """Expected top-``c`` sample spectrum of the block model `params`."""
    cfg = cfg or FitConfig()
    if cfg.spectrum_source == "monte_carlo":
        return monte_carlo_mean_spectrum(params, c, cfg.mc_samples, cfg.seed).mean
    try:
        return expected_sample_spectrum(params, cfg.root, c)
    except RootFindError:
        if not cfg.mc_fallback:
            raise
        return monte_carlo_mean_spectrum(params, c, cfg.mc_samples, cfg.seed).mean


def objective(params: SbmParams, data, c: int, cfg: FitConfig | None = None, weights=None) -> float:
    """``sum_i w_i ||lambda_c(params) - sigma_c(G_i)||^2``."""
    ds = as_dataset(data)
    w = _weights(weights, len(ds))
    lam = model_spectrum(params, c, cfg)
    return float(w @ ((ds.top(c) - lam) ** 2).sum(1))


class _SourceSwitch(Exception):
    """The fit has just switched from root-finder to Monte Carlo spectra."""


class _Problem:
    """The objective as a function of the within-block probabilities alone."""

    def __init__(self, X, w, s, n, rho_bar, cfg):
        self.X, self.w, self.s, self.n, self.rho, self.cfg = X, w, s, n, rho_bar, cfg
        self.c = X.shape[1]
        self.use_mc = cfg.spectrum_source == "monte_carlo"

    def spectrum(self, params):
        if self.use_mc:
            return monte_carlo_mean_spectrum(params, self.c, self.cfg.mc_samples, self.cfg.seed).mean
        try:
            return expected_sample_spectrum(params, self.cfg.root, self.c)
        except RootFindError:
            if not self.cfg.mc_fallback:
                raise
            self.use_mc = True
            raise _SourceSwitch from None

    def params(self, p):
        if self.c == 1:
            # Erdős-Rényi: nothing across blocks to adjust
            return SbmParams((float(p[0]),), float(p[0]), (1.0,), self.n), False
        q, clamped = solve_q_for_density(p, self.s, self.n, self.rho, self.cfg.box_margin)
        return SbmParams(tuple(p), q, tuple(self.s), self.n), clamped

    def value(self, p):
        params, clamped = self.params(p)
        lam = self.spectrum(params)
        return float(self.w @ ((self.X - lam) ** 2).sum(1)), params, clamped

    def project(self, p):
        return np.clip(p, self.cfg.box_margin, 1 - self.cfg.box_margin)

    def _try(self, p):
        try:
            return self.value(p)[0]
        except RootFindError:
            return None

    def gradient(self, p, h, f0=None):
        """Centered differences; one-sided next to the unsolvable region.

        `f0` is the value at `p`, needed only for the one-sided fallback.
        """
        g = np.empty(self.c)
        for k in range(self.c):
            e = np.zeros(self.c)
            e[k] = h
            hi, lo = self.project(p + e), self.project(p - e)
            fh, fl = self._try(hi), self._try(lo)
            if fh is not None and fl is not None:
                g[k] = (fh - fl) / (hi[k] - lo[k])
            elif f0 is not None and fh is not None and hi[k] > p[k]:
                g[k] = (fh - f0) / (hi[k] - p[k])
            elif f0 is not None and fl is not None and lo[k] < p[k]:
                g[k] = (f0 - fl) / (p[k] - lo[k])
            else:
                raise RootFindError(f"no solvable neighbour of p along coordinate {k + 1}")
        return g


def gradient_estimate(params: SbmParams, data, c: int, cfg: FitConfig | None = None, weights=None, rho_bar=None) -> np.ndarray:
    """Centered-difference gradient of the objective in the within-block probabilities.

    The across-block probability is re-solved from the density constraint at
    every perturbed point.  `rho_bar` defaults to the expected density of
    `params`, so the constraint passes through the given point.
    """
    cfg = cfg or FitConfig()
    ds = as_dataset(data)
    w = _weights(weights, len(ds))
    rho = expected_density_of(params) if rho_bar is None else rho_bar
    prob = _Problem(ds.top(c), w, np.asarray(params.s), params.n, rho, cfg)
    return prob.gradient(np.asarray(params.p), cfg.fd_step)


def sample_frechet_statistic(data, c: int) -> int:
    """Index of the dataset element minimizing total squared ``d_Ac`` to the rest.

    Ties go to the lowest index; totals within ``1e-9`` (relative to their
    size) count as tied, since cospectral graphs get spectra that agree only
    to rounding.
    """
    ds = as_dataset(data)
    X = ds.top(c)
    total = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1).sum(1)
    best = total.min()
    return int(np.flatnonzero(total <= best + 1e-9 * max(1.0, best))[0])


# ---------------------------------------------------------------------------
# the fitting loop


def _initial_p(target, within, across, total, rho, delta):
    # p proportional to the target spectrum, scaled so that q starts at rho / 2;
    # equal p with equal blocks is a symmetric point where descent stalls
    a = (rho * total - across * rho / 2) / (within @ target)
    return np.clip(a * target, delta, 1 - delta)


def fit_frechet_mean(data, cfg: FitConfig | None = None, weights=None, c_star: int | None = None, rho_bar: float | None = None) -> FitResult:
    """Fit a block model whose expected top spectrum matches the (weighted) sample mean.

    Parameters
    ----------
    data : sequence of Graph, GraphDataset or ndarray of spectra
    cfg : FitConfig, optional
    weights : array_like, optional
        Per-graph weights with a positive sum (Fréchet regression).
    c_star : int, optional
        Fixed number of blocks; otherwise ``cfg.c_override`` or the estimate
        from the dataset mean spectrum.
    rho_bar : float, optional
        Density target; defaults to the weighted mean density.
    """
    t0 = time.perf_counter()
    cfg = cfg or FitConfig()
    ds = as_dataset(data)
    N, n = len(ds), ds.n
    w = _weights(weights, N)
    rho = float(w @ ds.densities / w.sum()) if rho_bar is None else float(rho_bar)
    if not 0 < rho < 1:
        raise FitError(f"density target {rho:.6g} must lie in (0, 1)")

    community = None
    if c_star is None:
        c_star = cfg.c_override
    if c_star is None:
        community = estimate_c(w @ ds.spectra / w.sum(), cfg.K, cfg.c_cap)
        c_star = community.c_star
    c = int(c_star)
    if c > n:
        raise FitError(f"{c} blocks exceed n={n}")
    X = ds.top(c)
    target = w @ X / w.sum()
    irr = float(w @ ((X - target) ** 2).sum(1))
    s = build_s_star(n, c)
    trace = FitTrace()
    delta = cfg.box_margin

    if c == 1:
        # a single block is Erdős-Rényi and the density fixes p
        p1 = min(max(rho, delta), 1 - delta)
        params = SbmParams((p1,), p1, (1.0,), n)
        lam = model_spectrum(params, 1, cfg)
        val = float(w @ ((X - lam) ** 2).sum(1))
        trace.append(TraceRow(0, [p1], p1, val, None, None, None, 0, abs(p1 - rho), p1 != rho))
        return _finish(params, c, val, val, irr, target, lam, rho, p1 != rho, "converged", trace, ds, cfg, community, t0)

    prob = _Problem(X, w, s, n, rho, cfg)
    within, across, total = pair_counts(s, n)
    p = _initial_p(target, within, across, total, rho, delta)
    for _ in range(21):
        try:
            f, params, clamped = prob.value(p)
            break
        except _SourceSwitch:
            f, params, clamped = prob.value(p)
            break
        except RootFindError:
            # push the blocks further apart until every index has a root
            params, _ = prob.params(p)
            p = prob.project(params.q + 1.5 * (p - params.q))
    else:
        raise FitError("no initial parameters with a solvable spectrum equation")
    f0 = f
    status = "max_iter"
    for it in range(cfg.max_iter):
        try:
            g = prob.gradient(p, cfg.fd_step, f)
            gnorm = float(np.linalg.norm(g))
            alpha = cfg.step_size
            if cfg.max_step is not None and alpha * gnorm > cfg.max_step:
                alpha = cfg.max_step / gnorm
            accepted = False
            for halvings in range(cfg.max_halvings + 1):
                pn = prob.project(p - alpha * g)
                try:
                    fn, params_n, clamped_n = prob.value(pn)
                except RootFindError:
                    fn = math.inf
                if fn <= f and (not clamped_n or clamped):
                    accepted = True
                    break
                alpha /= 2
        except _SourceSwitch:
            # restart the iteration on the Monte Carlo objective
            f, params, clamped = prob.value(p)
            continue
        except RootFindError:
            status = "root_failure"
            trace.append(_row(it, params, f, None, None, None, 0, rho, clamped))
            break
        trace.append(_row(it, params, f, gnorm, alpha, accepted, halvings, rho, clamped))
        if not accepted:
            status = "stalled"
            break
        old = np.r_[p, params.q]
        new = np.r_[pn, params_n.q]
        rel = np.linalg.norm(new - old) / np.linalg.norm(old)
        p, f, params, clamped = pn, fn, params_n, clamped_n
        if rel < cfg.rel_tol:
            status = "converged"
            break
    if status in ("converged", "max_iter"):
        trace.append(_row(len(trace), params, f, None, None, None, 0, rho, clamped))
    source = "monte_carlo" if prob.use_mc else "root"
    lam = model_spectrum(params, c, replace(cfg, spectrum_source=source))
    return _finish(params, c, f, f0, irr, target, lam, rho, clamped, status, trace, ds, cfg, community, t0, source)


def _row(it, params, f, gnorm, alpha, accepted, halvings, rho, clamped):
    return TraceRow(
        it, list(params.p), params.q, f, gnorm, alpha, accepted, halvings, abs(expected_density_of(params) - rho), bool(clamped)
    )


def _finish(params, c, f, f0, irr, target, lam, rho, clamped, status, trace, ds, cfg, community, t0, source=None):
    graphs = [sample_sbm(params, ch) for ch in spawn_seeds(cfg.seed, cfg.representative_samples)]
    idx = sample_frechet_statistic(graphs, c)
    rep = graphs[idx]
    rep_dist = float(np.linalg.norm(spectrum(rep)[:c] - lam))
    return FitResult(
        params=params,
        c_star=c,
        final_objective=f,
        initial_objective=f0,
        irreducible=irr,
        target_spectrum=np.asarray(target),
        fitted_spectrum=np.asarray(lam),
        rho_bar=rho,
        q_clamped=bool(clamped),
        status=status,
        trace=trace,
        representative=rep,
        representative_distance=rep_dist,
        community=community,
        seconds=time.perf_counter() - t0,
        spectrum_source=source or cfg.spectrum_source,
    )
