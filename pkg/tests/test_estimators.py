import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexcov.chordal import GMatrix, SparsePrecision, clique_inverse_sum, complete, project, random_qg
from flexcov.errors import DomainError, EmptyData, SampleDeficient
from flexcov.estimators import (all_losses, bayes_bundle, loss_omega, loss_sigma, mle_full,
                                mle_g, reference_bundle, sample_cov, saturated_posterior_mean,
                                scaled_completion)
from flexcov.graph import banded_graph, two_clique_graph
from flexcov.priors import WpgParams, hiw_shape, proportional_shape, with_scale

from conftest import junction_trees


def test_sample_cov():
    z = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(sample_cov(z), z.T @ z / 2)
    assert np.allclose(sample_cov(z, center=True), [[1, 1], [1, 1]])
    with pytest.raises(EmptyData):
        sample_cov(np.zeros((0, 2)))


def test_mle_g_path():
    t = banded_graph(3, 1)
    S = np.array([[1, .5, .9], [.5, 1, .5], [.9, .5, 1]])
    om, sig = mle_g(S, t, n=10)
    ref = 4 / 3 * np.array([[1, -.5, 0], [-.5, 1.25, -.5], [0, -.5, 1]])
    assert np.allclose(om.values, ref)
    assert complete(sig)[0, 2] == pytest.approx(0.25)
    with pytest.raises(SampleDeficient):
        mle_g(S, t, n=2)


def test_mle_full_needs_n_above_r():
    with pytest.raises(SampleDeficient):
        mle_full(np.eye(3), n=3)


def test_scalar_stein_loss():
    t = banded_graph(1, 0)
    truth = GMatrix(t, [[1.0]])
    assert loss_sigma(GMatrix(t, [[2.0]]), truth) == pytest.approx(2 - np.log(2) - 1)
    assert loss_sigma(GMatrix(t, [[2.0]]), truth) == pytest.approx(0.30685281944, abs=1e-10)
    assert loss_sigma(GMatrix(t, [[2.0]]), truth, "L2") == 1.0
    assert loss_omega(SparsePrecision(t, [[2.0]]), SparsePrecision(t, [[1.0]])) \
        == pytest.approx(0.30685281944, abs=1e-10)
    with pytest.raises(ValueError):
        loss_sigma(truth, truth, "L3")


@settings(max_examples=40, deadline=None)
@given(junction_trees(max_r=8), st.integers(0, 2**32 - 1))
def test_graph_stein_loss_equals_completed_loss(t, seed):
    rng = np.random.default_rng(seed)
    truth, est = random_qg(t, rng), random_qg(t, rng)
    a, b = complete(est), complete(truth)
    m = a @ np.linalg.inv(b)
    dense = np.trace(m) - np.linalg.slogdet(m)[1] - t.r
    assert loss_sigma(est, truth) == pytest.approx(dense, rel=1e-8, abs=1e-9)
    assert loss_sigma(truth, truth) == pytest.approx(0.0, abs=1e-9)
    tom = SparsePrecision(t, clique_inverse_sum(truth))
    assert loss_omega(tom, tom) == pytest.approx(0.0, abs=1e-9)
    vals = all_losses(est, SparsePrecision(t, clique_inverse_sum(est)), truth, tom)
    assert all(v >= -1e-9 for v in vals.values())


@settings(max_examples=40, deadline=None)
@given(junction_trees(max_r=8), st.integers(0, 2**32 - 1), st.integers(0, 1))
def test_duality(t, seed, ref):
    rng = np.random.default_rng(seed)
    n = t.r + 3 + int(rng.integers(0, 20))
    S = sample_cov(rng.standard_normal((n, t.r)))
    if ref:
        b = reference_bundle(n, S, t)
    else:
        b = bayes_bundle(with_scale(hiw_shape(3, t), t, False), n, S)
    scale = max(np.abs(m).max() for m in b.matrices().values())
    assert max(b.duality_gaps()) <= 1e-10 * max(1.0, scale)


def test_bundle_orders_by_loss_optimality():
    rng = np.random.default_rng(1)
    t = two_clique_graph(8, 6, 2)
    S = sample_cov(rng.standard_normal((40, t.r)))
    b = bayes_bundle(with_scale(proportional_shape(1.0, t), t, True), 40, S)
    # sigma_l1 shrinks more than the posterior mean: E(Omega)^-1 <= E(Sigma)
    d = complete(b.sigma_l2) - complete(b.sigma_l1)
    assert np.linalg.eigvalsh(d).min() > -1e-10


def test_saturated_posterior_mean():
    rng = np.random.default_rng(2)
    r, n, nu = 5, 30, 12.0
    S = sample_cov(rng.standard_normal((n, r)))
    lbar = np.trace(S) / r
    m = saturated_posterior_mean(nu, lbar * np.eye(r), n, S)
    l = np.linalg.eigvalsh(S)
    g = np.linalg.eigvalsh(m)
    assert np.allclose(g, (nu * lbar + n * l) / (nu - (r + 1) + n))
    with pytest.raises(DomainError):
        saturated_posterior_mean(1.0, np.eye(r), 2, S)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.floats(0.0, 30.0), st.integers(0, 2**32 - 1))
def test_saturated_span_shrinks_above_r_plus_one(r, extra, seed):
    rng = np.random.default_rng(seed)
    n = r + 5
    S = sample_cov(rng.standard_normal((n, r)))
    nu = r + 1 + extra + 1e-3
    g = np.linalg.eigvalsh(saturated_posterior_mean(nu, np.trace(S) / r * np.eye(r), n, S))
    l = np.linalg.eigvalsh(S)
    assert g[-1] - g[0] < l[-1] - l[0]


def test_scaled_completion():
    t = banded_graph(3, 1)
    S = np.eye(3) + 0.3
    x = scaled_completion(S, 5, t, 0.2)
    assert np.allclose(x.values, project(S, t).values)
