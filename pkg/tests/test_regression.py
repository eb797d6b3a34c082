import numpy as np
import pytest

from conftest import random_graph
from graphfrechet.frechet import FitConfig, GraphDataset, fit_frechet_mean, mean_spectrum
from graphfrechet.graph import GraphError, truncated_spectrum
from graphfrechet.models import SbmParams, sample_sbm, spawn_seeds
from graphfrechet.regression import (
    RegressionDataset,
    fit_regression_point,
    pooled_c_star,
    regression_error,
    regression_weights,
    run_regression,
    weighted_target_spectrum,
)

FAST = FitConfig(representative_samples=2, seed=1)


def drifting_sample(N=8, n=200, seed=0):
    times = np.linspace(0, 1, N)
    graphs = [
        sample_sbm(SbmParams(p=[0.4 + 0.1 * t, 0.25 + 0.05 * t], q=0.05, s=[0.5, 0.5], n=n), ch)
        for t, ch in zip(times, spawn_seeds(seed, N))
    ]
    return RegressionDataset.from_pairs(zip(times, graphs))


@pytest.fixture(scope="module")
def ds():
    return drifting_sample()


def test_two_point_weights(rng):
    g1, g2 = random_graph(rng, 6), random_graph(rng, 6)
    two = RegressionDataset.from_pairs([(0.0, g1), (1.0, g2)])
    assert two.t_bar == 0.5 and two.v_hat == 0.25
    np.testing.assert_array_equal(regression_weights(two, 1.0), [0.0, 2.0])
    np.testing.assert_allclose(weighted_target_spectrum(two, 1.0, 3), truncated_spectrum(g2, 3), rtol=1e-15)


def test_weights_average_to_one(ds, rng):
    for t in rng.uniform(-2, 3, 50):
        assert regression_weights(ds, t).mean() == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(regression_weights(ds, ds.t_bar), 1.0, rtol=1e-15)


def test_target_affine_in_t(ds):
    a, b, c = (weighted_target_spectrum(ds, t, 2) for t in (0.1, 0.45, 0.9))
    # collinear: the middle point lies on the chord
    lam = (0.45 - 0.1) / (0.9 - 0.1)
    np.testing.assert_allclose(b, a + lam * (c - a), atol=1e-9)


def test_target_at_mean_time_is_plain_mean(ds):
    np.testing.assert_allclose(weighted_target_spectrum(ds, ds.t_bar, 2), mean_spectrum(ds.data, 2), rtol=1e-13)


def test_shuffle_invariance(ds):
    perm = np.random.default_rng(1).permutation(len(ds))
    shuffled = RegressionDataset(ds.times[perm], GraphDataset.from_spectra(ds.data.spectra[perm], ds.data.densities[perm]))
    np.testing.assert_allclose(weighted_target_spectrum(shuffled, 0.8, 2), weighted_target_spectrum(ds, 0.8, 2), rtol=1e-13)


def test_degenerate_inputs(rng):
    g = random_graph(rng, 6)
    with pytest.raises(GraphError):
        RegressionDataset.from_pairs([(0.5, g), (0.5, g)])
    with pytest.raises(GraphError):
        RegressionDataset.from_pairs([(0.5, g)])
    two = RegressionDataset.from_pairs([(0.0, g), (1.0, g)])
    # weights 1 + (t_i - 0.5)(t - 0.5) * 4 sum to 2 for every t, so the positive-sum
    # requirement holds for any query, extrapolation included
    assert regression_weights(two, 10.0).sum() == pytest.approx(2.0)


def test_pooled_c_star(ds):
    assert pooled_c_star(ds) == 2
    assert pooled_c_star(ds, FitConfig(c_override=4)) == 4


def test_fit_at_mean_time_equals_plain_fit(ds):
    a = fit_regression_point(ds, ds.t_bar, FAST)
    b = fit_frechet_mean(ds.data, FAST)
    np.testing.assert_allclose(a.fitted_spectrum, b.fitted_spectrum, rtol=1e-9)
    np.testing.assert_allclose(a.params.p, b.params.p, rtol=1e-9)


def test_repeated_graph_gives_constant_fit():
    g = sample_sbm(SbmParams(p=[0.4, 0.25], q=0.05, s=[0.5, 0.5], n=200), 3)
    rep = RegressionDataset.from_pairs([(t, g) for t in (0.0, 0.3, 0.7, 1.0)])
    spectra = [fit_regression_point(rep, t, FAST).fitted_spectrum for t in (0.0, 0.5, 1.0)]
    for s in spectra[1:]:
        np.testing.assert_allclose(s, spectra[0], rtol=1e-9)


def test_regression_error(ds):
    perfect = {float(t): row[:2] for t, row in zip(ds.times, ds.data.spectra)}
    assert regression_error(ds, perfect) == (0.0, 0.0)
    with pytest.raises(KeyError):
        regression_error(ds, {0.0: np.zeros(2)})


def test_run_regression_tracks_drift(ds):
    report = run_regression(ds, [0.0, 0.5, 1.0], FAST, sbm_check_samples=5)
    assert report.c_star == 2
    assert set(report.fits) >= set(map(float, ds.times))
    lam = [report.fits[t].fitted_spectrum for t in (0.0, 0.5, 1.0)]
    assert lam[0][0] < lam[1][0] < lam[2][0]
    for t in (0.0, 0.5, 1.0):
        np.testing.assert_allclose(report.fits[t].fitted_spectrum, report.fits[t].target_spectrum, rtol=0.02)
    assert report.e >= 0 and report.e_sbm >= 0
    assert report.e_sbm != report.e
    doc = report.to_dict()
    assert doc["times"] == [0.0, 0.5, 1.0] and len(doc["fits"]) == 3
    again = run_regression(ds, [0.0, 0.5, 1.0], FAST, with_error=False, threads=3)
    assert again.e is None
    for t in (0.0, 0.5, 1.0):
        np.testing.assert_array_equal(again.fits[t].params.p, report.fits[t].params.p)
