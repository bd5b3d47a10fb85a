import numpy as np
import pytest

from netmisfit.errors import DegenerateEstimate, InvalidArgument
from netmisfit.graph import Graph
from netmisfit.samplers import SbmParams, Seed, sample_sbm
from netmisfit.sbm import FitMethod, fit_sbm, sbm_mle_observed, sbm_test
from netmisfit.vem import label_accuracy, sbm_vem_fit


@pytest.fixture
def planted():
    eta = np.full((3, 3), 0.1)
    np.fill_diagonal(eta, 0.8)
    return sample_sbm(90, SbmParams.uniform(eta), Seed(17))


def test_single_block_matches_observed_fit(planted):
    fit = sbm_vem_fit(planted, 1)
    ref = sbm_mle_observed(planted.with_labels(np.ones(planted.n, dtype=np.int64)))
    assert fit.method is FitMethod.VEM
    assert np.array_equal(fit.theta_hat, ref.theta_hat)
    assert np.array_equal(fit.eta_hat, ref.eta_hat)
    assert fit.eta_hat[0, 0] == planted.edge_count / (90 * 89 / 2)


def test_planted_partition_is_recovered(planted):
    fit = sbm_vem_fit(planted, 3, restarts=3, seed=Seed(1))
    assert label_accuracy(planted.labels, fit.labels_used, 3) >= 0.9
    assert np.allclose(fit.eta_hat, fit.eta_hat.T)
    assert fit.theta_hat.sum() == pytest.approx(1.0)
    assert np.sort(np.diag(fit.eta_hat)).min() > 0.6


def test_elbo_is_non_decreasing(planted):
    fit = sbm_vem_fit(planted, 3, restarts=2, seed=Seed(4))
    trace = np.asarray(fit.em_meta["elbo_trace"])
    assert trace.size >= 2
    steps = np.diff(trace)
    assert np.all(steps >= -1e-9 * np.abs(trace[:-1]))
    assert fit.em_meta["elbo"] == trace[-1]
    assert fit.em_meta["restarts"] == 2


def test_same_seed_same_fit(planted):
    a = sbm_vem_fit(planted, 2, restarts=2, seed=Seed(9))
    b = sbm_vem_fit(planted, 2, restarts=2, seed=Seed(9))
    assert np.array_equal(a.labels_used, b.labels_used)
    assert np.array_equal(a.eta_hat, b.eta_hat)


def test_zero_edge_graph_is_degenerate():
    with pytest.raises(DegenerateEstimate):
        sbm_vem_fit(Graph.empty(12), 2, restarts=2)


def test_zero_edge_graph_clamped():
    fit = sbm_vem_fit(Graph.empty(12), 1, clamp=1e-6)
    assert fit.eta_hat[0, 0] == 1e-6
    assert fit.clamped == [(1, 1)]


def test_bad_arguments(planted):
    with pytest.raises(InvalidArgument):
        sbm_vem_fit(planted, 0)
    with pytest.raises(InvalidArgument):
        sbm_vem_fit(Graph.empty(2), 3)
    with pytest.raises(InvalidArgument):
        sbm_vem_fit(planted, 2, restarts=0)


def test_fit_sbm_refits_on_recovered_labels(planted):
    fit = fit_sbm(planted.with_labels(None), FitMethod.VEM, blocks=3, restarts=2, seed=Seed(2))
    ref = sbm_mle_observed(planted.with_labels(fit.labels_used), blocks=3)
    assert fit.method is FitMethod.VEM
    assert np.array_equal(fit.eta_hat, ref.eta_hat)
    assert "elbo_trace" in fit.em_meta


def test_fit_sbm_vem_needs_block_count(planted):
    with pytest.raises(InvalidArgument):
        fit_sbm(planted, FitMethod.VEM)


def test_sbm_test_with_variational_fit(planted):
    report = sbm_test(planted.with_labels(None), fit_method=FitMethod.VEM, blocks=3, restarts=2, seed=Seed(3))
    assert report.fit.method is FitMethod.VEM
    assert report.fit.labels_used.shape == (90,)
    assert report.diagnostics.n_observations == 90 * 89 // 2


@pytest.mark.parametrize(
    "true,est,expected",
    [
        ([1, 1, 2, 2], [2, 2, 1, 1], 1.0),
        ([1, 1, 2, 2], [1, 2, 1, 2], 0.5),
        ([1, 2, 3, 3], [3, 1, 2, 2], 1.0),
        ([1, 1, 1, 2], [1, 1, 2, 2], 0.75),
    ],
)
def test_label_accuracy(true, est, expected):
    m = max(max(true), max(est))
    assert label_accuracy(true, est, m) == expected


def test_label_accuracy_validates():
    with pytest.raises(InvalidArgument):
        label_accuracy([1, 2], [1], 2)
    with pytest.raises(InvalidArgument):
        label_accuracy([1] * 9, [1] * 9, 9)


@pytest.mark.slow
def test_planted_recovery_rate():
    eta = np.full((3, 3), 0.05)
    np.fill_diagonal(eta, 0.6)
    params = SbmParams.uniform(eta)
    good = 0
    for s in range(50):
        g = sample_sbm(150, params, Seed(1000, s))
        fit = sbm_vem_fit(g, 3, seed=Seed(2000, s))
        good += label_accuracy(g.labels, fit.labels_used, 3) >= 0.95
    assert good >= 45
