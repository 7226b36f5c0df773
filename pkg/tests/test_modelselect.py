import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from flexcov.chordal import GMatrix, project, random_qg
from flexcov.errors import ModelError, NoAdmissiblePoint
from flexcov.graph import banded_graph, two_clique_graph
from flexcov.modelselect import (empirical_bayes, log_marginal, resolve_prior, select_banded,
                                 select_diff_banded)
from flexcov.priors import (ShapeParams, WpgParams, eb_proportional_shape, hiw_shape, in_bp,
                            log_multigamma)

from conftest import junction_trees


def _complete_graph_marginal(z, p, theta):
    """Inverse Wishart marginal of zero-mean data with 2 Sigma ~ IW(p, theta)."""
    n, r = z.shape
    U = z.T @ z
    ld = lambda a: np.linalg.slogdet(a)[1]  # noqa: E731
    return (-n * r / 2 * math.log(math.pi) + log_multigamma(r, p + n / 2) - log_multigamma(r, p)
            + p * ld(theta) - (p + n / 2) * ld(theta + U))


def test_r1_against_quadrature():
    z = np.array([[0.3], [-1.2], [0.8], [2.1], [-0.4]])
    t = banded_graph(1, 0)
    a, th = -2.5, 1.7
    p = WpgParams(ShapeParams((a,), ()), GMatrix(t, [[th]]), t)
    # x = 2 sigma^2 has density proportional to x^(a-1) exp(-th/x)
    lognorm = math.lgamma(-a) - (-a) * math.log(th)

    def integrand(u):
        x = math.exp(u)
        ll = -0.5 * len(z) * math.log(math.pi * x) - float(z[:, 0] @ z[:, 0]) / x
        return math.exp(ll + a * u - th / x - lognorm)

    ref = math.log(integrate.quad(integrand, -30, 30, epsabs=0, epsrel=1e-12, limit=400)[0])
    assert log_marginal(z, t, p) == pytest.approx(ref, rel=1e-6)


def test_complete_r2_against_multigamma():
    rng = np.random.default_rng(4)
    z = rng.standard_normal((9, 2)) @ np.array([[1.0, 0.4], [0.0, 0.8]])
    t = banded_graph(2, 1)
    theta = np.array([[1.5, 0.2], [0.2, 0.7]])
    p = WpgParams(hiw_shape(4.0, t), GMatrix(t, theta), t)
    ref = _complete_graph_marginal(z, (4.0 + 1) / 2, theta)
    assert log_marginal(z, t, p) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(junction_trees(max_r=7), st.integers(0, 2**32 - 1), st.floats(2.5, 8.0))
def test_hiw_marginal_factorizes_over_cliques(t, seed, delta):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((t.r + 4, t.r))
    th = random_qg(t, rng)
    got = log_marginal(z, t, WpgParams(hiw_shape(delta, t), th, t))
    ref = 0.0
    for c in t.cliques:
        ref += _complete_graph_marginal(z[:, c], (delta + len(c) - 1) / 2, th.block(c))
    for s in t.separators[1:]:
        if s:
            ref -= _complete_graph_marginal(z[:, s], (delta + len(s) - 1) / 2, th.block(s))
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-8)


def test_log_marginal_requires_admissible_shape():
    t = banded_graph(3, 1)
    p = WpgParams(ShapeParams((0.5, -2.0), (-1.0,)), project(np.eye(3), t), t)
    with pytest.raises(NoAdmissiblePoint):
        log_marginal(np.ones((4, 3)), t, p)
    with pytest.raises(ModelError):
        log_marginal(np.ones((4, 3)), t, resolve_prior("reference", t))


def test_diff_band_grid_with_equal_widths_matches_banded():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((40, 8))
    band = select_banded(z, 3)
    grid = [[k, k, 6] for k in range(4)]
    diff = select_diff_banded(z, grid)
    a = {row["id"]: row["score"] for row in band.ranked}
    b = {row["id"][0]: row["score"] for row in diff.ranked}
    assert a == pytest.approx(b, rel=1e-12)


def test_selection_picks_true_band():
    rng = np.random.default_rng(6)
    r = 12
    om = np.eye(r) - 0.4 * (np.eye(r, k=1) + np.eye(r, k=-1))
    z = rng.standard_normal((2000, r)) @ np.linalg.cholesky(np.linalg.inv(om)).T
    res = select_banded(z, 4)
    assert res.best == 1
    post = res.posterior()
    assert post.sum() == pytest.approx(1.0) and post[0] == post.max()


def test_unscorable_candidates_sink():
    # hiw with delta <= 1 leaves B_P as soon as there is a separator
    z = np.random.default_rng(0).standard_normal((10, 6))
    res = select_banded(z, 3, "hiw:0.5")
    assert res.best == 0
    assert [row["score"] for row in res.ranked[1:]] == [None] * 3


def test_empirical_bayes_nesting():
    rng = np.random.default_rng(9)
    t = two_clique_graph(6, 5, 2)
    z = rng.standard_normal((30, t.r)) * np.linspace(0.5, 2.0, t.r)
    f1 = empirical_bayes(z, t, "proportional")
    f2 = empirical_bayes(z, t, "affine")
    assert f2.log_marginal >= f1.log_marginal - 1e-9
    assert log_marginal(z, t, f1.prior(t)) == pytest.approx(f1.log_marginal)
    assert log_marginal(z, t, f2.prior(t)) == pytest.approx(f2.log_marginal)
    # the proportional optimum beats its neighbours
    d = f1.params[0]
    for dd in (0.9 * d, 1.1 * d):
        s = eb_proportional_shape(dd, t)
        if in_bp(s, t):
            assert log_marginal(z, t, WpgParams(s, f1.theta, t)) <= f1.log_marginal + 1e-9


def test_empirical_bayes_needs_data():
    t = banded_graph(3, 1)
    with pytest.raises(NoAdmissiblePoint):
        empirical_bayes(np.zeros((0, 3)), t)
    with pytest.raises(ValueError):
        resolve_prior("eb1", t)
