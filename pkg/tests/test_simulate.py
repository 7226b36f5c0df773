import json

import numpy as np
import pytest

from flexcov.chordal import GMatrix, complete, project
from flexcov.errors import DimensionTooLarge, DomainError, MomentUndefined, ParseError
from flexcov.graph import banded_graph, two_clique_graph
from flexcov.moments import iwpg_mean
from flexcov.priors import ShapeParams, WpgParams, hiw_shape, log_gamma_ii, log_h_g
from flexcov.simulate.quadrature import quadrature_log_normalizer, quadrature_mean
from flexcov.simulate.risk import SimConfig, run_risk
from flexcov.simulate.sampling import (draw_mean_se, hiw_sample, inv_wishart_batch, make_rng,
                                       sample_data)
from flexcov.simulate.truth import make_true_sigma, template_sigma


def test_rng_streams_are_deterministic():
    a = make_rng(7, 1, 2).standard_normal(5)
    assert np.array_equal(a, make_rng(7, 1, 2).standard_normal(5))
    assert not np.array_equal(a, make_rng(7, 2, 1).standard_normal(5))
    s = np.eye(3) + 0.2
    assert np.array_equal(sample_data(s, 10, 3, (0, 1)), sample_data(s, 10, 3, (0, 1)))


def test_hiw_sample_is_deterministic_and_on_pattern():
    t = two_clique_graph(4, 3, 1)
    th = project(np.eye(t.r), t)
    a = hiw_sample(5.0, th, t, 50, seed=11, chunk=20)
    b = hiw_sample(5.0, th, t, 50, seed=11, chunk=20)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, hiw_sample(5.0, th, t, 50, seed=12, chunk=20))
    assert np.all(a[:, ~t.mask] == 0)
    for x in a[:5]:
        assert GMatrix(t, x).in_qg()


def test_scalar_quadrature():
    t = banded_graph(1, 0)
    p = WpgParams(ShapeParams((-1.5,), ()), GMatrix(t, [[1.0]]), t)
    assert quadrature_mean(p).values[0, 0] == pytest.approx(2.0, rel=1e-8)
    with pytest.raises(MomentUndefined):
        quadrature_mean(WpgParams(ShapeParams((-0.9,), ()), GMatrix(t, [[1.0]]), t))


def test_path_quadrature_non_hiw_shape():
    t = banded_graph(3, 1)
    th = project(np.array([[1.0, .3, 0], [.3, 2.0, .4], [0, .4, 1.5]]), t)
    s = ShapeParams((-4.0, -3.0), (-1.5,))
    p = WpgParams(s, th, t)
    q = quadrature_mean(p).values
    assert np.abs(q - iwpg_mean(p).values).max() <= 1e-6 * np.abs(q).max()
    assert quadrature_log_normalizer(p) == pytest.approx(log_gamma_ii(s, t) + log_h_g(s, th),
                                                         rel=1e-9)


def test_quadrature_detects_divergence():
    # HIW with delta = 2 sits exactly on the boundary where the mean stops existing
    t = banded_graph(2, 1)
    p = WpgParams(hiw_shape(2.0, t), project(np.eye(2), t), t)
    with pytest.raises(MomentUndefined):
        quadrature_mean(p)


def test_quadrature_dimension_limit():
    t = banded_graph(4, 1)
    with pytest.raises(DimensionTooLarge):
        quadrature_mean(WpgParams(hiw_shape(3, t), project(np.eye(4), t), t))


def test_sampler_mean_and_se_scaling():
    t = banded_graph(3, 1)
    th = project(np.array([[1.0, .3, 0], [.3, 2.0, .4], [0, .4, 1.5]]), t)
    closed = iwpg_mean(WpgParams(hiw_shape(9.0, t), th, t)).values
    draws = hiw_sample(9.0, th, t, 40000, seed=5)
    mean, se = draw_mean_se(draws)
    m = t.mask
    assert (np.abs(mean - closed)[m] / se[m]).max() < 4.0
    _, se_small = draw_mean_se(draws[:10000])
    ratio = se_small[m] / se[m]
    assert np.all(np.abs(ratio - 2.0) < 0.3)


def test_inverse_wishart_batch_domain():
    with pytest.raises(DomainError):
        inv_wishart_batch(make_rng(0), 0.5, np.eye(3), 2)
    with pytest.raises(DomainError):
        hiw_sample(0.0, project(np.eye(2), banded_graph(2, 1)), banded_graph(2, 1), 2, 0)


def test_true_sigma():
    t = two_clique_graph(8, 6, 2)
    sig, dense, om = make_true_sigma(template_sigma(t.r), t)
    assert np.array_equal(dense, complete(sig))
    assert np.allclose(np.linalg.inv(dense), om.values, atol=1e-10)
    om.check()


def _config(**kw):
    base = dict(graph={"cliques": [[1, 2, 3, 4], [3, 4, 5, 6]], "vertices": 6},
                estimators=["mle", "mle_g", "hiw:3", "reference"],
                sample_sizes=[6, 15], replications=6, seed=3, scree=True)
    base.update(kw)
    return SimConfig(**base)


def test_risk_table_shape_and_missing_cells():
    tab = run_risk(_config(), workers=1)
    assert tab.cells[("mle", 6, "L1_sigma")] is None
    assert tab.cells[("mle", 15, "L1_sigma")]["count"] == 6
    assert "–" in tab.to_text()
    assert set(tab.scree[15]) >= {"truth", "sample", "hiw:3"}
    assert tab.scree_csv().startswith("n,estimator,index,eigenvalue\n")


def test_risk_is_independent_of_worker_count():
    a = run_risk(_config(), workers=1)
    b = run_risk(_config(), workers=2)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    assert a.scree_csv() == b.scree_csv()


def test_sim_config_validation():
    with pytest.raises(ValueError):
        _config(replications=0)
    with pytest.raises(ValueError):
        _config(losses=["L3"])
    with pytest.raises(ParseError):
        _config(estimators=["bogus:1"])
