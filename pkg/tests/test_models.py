import math

import numpy as np
import pytest

from graphfrechet.graph import Graph
from graphfrechet.models import (
    ModelError,
    SbmParams,
    block_index,
    expected_adjacency,
    expected_density,
    grid_block_sizes,
    kernel_grid,
    rank_one_cosine_kernel,
    sample_barabasi_albert,
    sample_erdos_renyi,
    sample_from_config,
    sample_sbm,
    sample_small_world,
    sbm_kernel_eval,
    spawn_seeds,
)


def test_equal_blocks_hold_exactly_200():
    np.testing.assert_array_equal(grid_block_sizes([1 / 3] * 3, 600), [200, 200, 200])
    params = SbmParams(p=[0.3, 0.2, 0.1], q=0.05, s=[1 / 3] * 3, n=600)
    labels = params.labels()
    np.testing.assert_array_equal(np.bincount(labels), [200, 200, 200])
    assert np.all(np.diff(labels) >= 0)


def test_half_open_intervals():
    b = np.array([0.5, 0.75, 1.0])
    np.testing.assert_array_equal(block_index(np.array([0.0, 0.49, 0.5, 0.74, 0.75, 1.0]), b), [0, 0, 1, 1, 2, 2])


def test_kernel_eval_examples():
    params = SbmParams(p=[0.4, 0.3, 0.2], q=0.05, s=[0.5, 0.25, 0.25], n=10)
    assert sbm_kernel_eval(params, 0.1, 0.1) == 0.4
    assert sbm_kernel_eval(params, 0.1, 0.9) == 0.05
    assert sbm_kernel_eval(params, 0.6, 0.7) == 0.3
    assert sbm_kernel_eval(params, 1.0, 0.8) == 0.2
    er = SbmParams(p=[0.3], q=0.1, s=[1.0], n=10)
    for x, y in [(0, 0), (0.2, 0.9), (1, 0.5)]:
        assert sbm_kernel_eval(er, x, y) == 0.3
    with pytest.raises(ModelError):
        sbm_kernel_eval(params, -0.1, 0.5)
    with pytest.raises(ModelError):
        sbm_kernel_eval(params, 0.5, 1.1)


def test_param_validation():
    with pytest.raises(ModelError):
        SbmParams(p=[0.3, 0.2], q=0.1, s=[0.5, 0.6], n=10)
    with pytest.raises(ModelError):
        SbmParams(p=[1.0], q=0.1, s=[1.0], n=10)
    with pytest.raises(ModelError):
        SbmParams(p=[0.3], q=0.0, s=[1.0], n=10)
    with pytest.raises(ModelError):
        SbmParams(p=[0.3] * 3, q=0.1, s=[1 / 3] * 3, n=10, c_max=2)


def test_expected_adjacency_examples():
    P = expected_adjacency(SbmParams(p=[0.3], q=0.1, s=[1.0], n=4))
    np.testing.assert_array_equal(P, 0.3 * (np.ones((4, 4)) - np.eye(4)))
    params = SbmParams(p=[0.5, 0.2], q=0.05, s=[0.3, 0.7], n=17)
    P = expected_adjacency(params)
    np.testing.assert_array_equal(P, P.T)
    # direct summation oracle over i > j
    n = params.n
    total = 0.0
    for i in range(n):
        for j in range(i):
            total += sbm_kernel_eval(params, i / n, j / n)
    assert expected_density(P) == pytest.approx(total / (n * (n - 1) / 2), rel=1e-13)


def test_kernel_grid_symmetric_exactly():
    P = kernel_grid(rank_one_cosine_kernel(0.7, 0.28), 101)
    np.testing.assert_array_equal(P, P.T)
    assert np.all(np.diag(P) == 0)


def test_sbm_determinism_and_near_complete():
    params = SbmParams(p=[0.999], q=0.5, s=[1.0], n=50)
    assert sample_sbm(params, seed=3) == sample_sbm(params, seed=3)
    ms = [sample_sbm(params, seed=s).m for s in range(50)]
    # Binomial(1225, 0.999): mean 1223.775, sd 1.106; the mean of 50 has sd 0.156
    assert abs(np.mean(ms) - 0.999 * 1225) <= 3 * math.sqrt(1225 * 0.999 * 0.001 / 50)


def test_two_block_densities_clt():
    params = SbmParams(p=[0.3, 0.15], q=0.05, s=[0.5, 0.5], n=20)
    lab = params.labels()
    iu, ju = np.triu_indices(20, 1)
    masks = {
        "p1": (lab[iu] == 0) & (lab[ju] == 0),
        "p2": (lab[iu] == 1) & (lab[ju] == 1),
        "q": lab[iu] != lab[ju],
    }
    target = {"p1": 0.3, "p2": 0.15, "q": 0.05}
    counts = {k: 0 for k in masks}
    S = 500
    for child in spawn_seeds(99, S):
        A = sample_sbm(params, child).adjacency()[iu, ju]
        for k, mk in masks.items():
            counts[k] += A[mk].sum()
    for k, mk in masks.items():
        trials = S * mk.sum()
        rate = counts[k] / trials
        se = math.sqrt(target[k] * (1 - target[k]) / trials)
        assert abs(rate - target[k]) <= 3 * se, k


def test_sbm_single_block_matches_erdos_renyi():
    n, p, S = 20, 0.2, 600
    iu, ju = np.triu_indices(n, 1)
    params = SbmParams(p=[p], q=0.5, s=[1.0], n=n)
    a = np.zeros(iu.size)
    b = np.zeros(iu.size)
    for k, (c1, c2) in enumerate(zip(spawn_seeds(1, S), spawn_seeds(2, S))):
        a += sample_sbm(params, c1).adjacency()[iu, ju]
        b += sample_erdos_renyi(n, p, c2).adjacency()[iu, ju]
    ra, rb = a / S, b / S
    se = math.sqrt(2 * p * (1 - p) / S)
    z = (ra - rb) / se
    # 190 per-edge comparisons: allow the ~0.3% expected two-sided exceedances
    assert np.mean(np.abs(z) <= 3) >= 0.98
    assert abs(ra.mean() - rb.mean()) <= 3 * se / math.sqrt(iu.size)


def test_erdos_renyi_edges_and_degrees():
    n, p = 300, 0.1
    g = sample_erdos_renyi(n, p, seed=5)
    assert g == sample_erdos_renyi(n, p, seed=5)
    N = n * (n - 1) / 2
    assert abs(g.m - p * N) <= 3 * math.sqrt(N * p * (1 - p))
    # degree histogram vs Binomial(n-1, p) through mean and variance
    deg = np.concatenate([sample_erdos_renyi(n, p, s).degrees() for s in range(20)])
    assert deg.mean() == pytest.approx(p * (n - 1), rel=0.02)
    assert deg.var() == pytest.approx(p * (1 - p) * (n - 1), rel=0.1)


def test_small_world():
    ring = sample_small_world(30, 4, 0.0, seed=0)
    np.testing.assert_array_equal(ring.degrees(), np.full(30, 4))
    g = sample_small_world(600, 22, 0.7, seed=1)
    assert g.m == 6600
    assert sample_small_world(600, 22, 0.7, seed=1) == g
    assert sample_small_world(100, 10, 1.0, seed=2).m == 500
    for bad in [(10, 3, 0.1), (10, 10, 0.1), (10, 4, 1.5)]:
        with pytest.raises(ModelError):
            sample_small_world(*bad)


def test_barabasi_albert():
    g = sample_barabasi_albert(600, 5, 5, seed=0)
    assert g.m == 10 + 595 * 5 == 2985
    assert g.degrees().sum() == 2 * g.m
    assert sample_barabasi_albert(5, 5, 3, seed=0) == Graph.complete(5)
    assert sample_barabasi_albert(40, 3, 2, seed=4) == sample_barabasi_albert(40, 3, 2, seed=4)
    for bad in [(10, 2, 3), (10, 11, 2), (10, 3, 0)]:
        with pytest.raises(ModelError):
            sample_barabasi_albert(*bad)


def test_sample_from_config():
    g = sample_from_config({"model": "sbm", "n": 30, "p": [0.4, 0.3], "q": 0.1, "s": [0.5, 0.5], "seed": 4})
    assert g == sample_sbm(SbmParams(p=[0.4, 0.3], q=0.1, s=[0.5, 0.5], n=30), 4)
    assert sample_from_config({"model": "er", "n": 30, "p": 0.2}, 3) == sample_erdos_renyi(30, 0.2, 3)
    assert sample_from_config({"model": "ws", "n": 30, "K": 4, "beta": 0.2}, 3).m == 60
    assert sample_from_config({"model": "ba", "n": 30, "m0": 3, "m": 2}, 3).m == 3 + 27 * 2
    k = sample_from_config({"model": "kernel", "n": 30, "kernel": {"kind": "rank_one_cosine", "a": 0.6, "b": 0.2}}, 3)
    assert k.n == 30
    with pytest.raises(ModelError):
        sample_from_config({"model": "xyz", "n": 3})
    with pytest.raises(ModelError):
        sample_from_config({"model": "sbm", "n": 3, "p": [0.1]})


def test_every_sampler_gives_simple_graphs():
    gs = [
        sample_sbm(SbmParams(p=[0.3, 0.2], q=0.1, s=[0.4, 0.6], n=40), 0),
        sample_small_world(40, 6, 0.5, 0),
        sample_barabasi_albert(40, 4, 3, 0),
        sample_erdos_renyi(40, 0.3, 0),
    ]
    for g in gs:
        A = g.adjacency()
        assert np.array_equal(A, A.T) and not np.any(np.diag(A))
        assert set(np.unique(A)) <= {0.0, 1.0}
