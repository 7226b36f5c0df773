import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexcov.chordal import GMatrix, project
from flexcov.errors import DomainError, MomentUndefined, ParseError
from flexcov.graph import JunctionTree, banded_graph, two_clique_graph
from flexcov.moments import iwpg_mean
from flexcov.priors import (ShapeParams, WpgParams, calibrate_theta, constant_shape,
                            eb_affine_shape, eb_proportional_shape, hiw_shape, in_bp,
                            log_gamma_ii, log_h_g, log_multigamma, parse_prior,
                            posterior_update, proportional_shape, reference_shape)


@pytest.fixture
def call_center_graph():
    return two_clique_graph(70, 40, 10)


def test_hiw_values_on_call_center_graph(call_center_graph):
    s = hiw_shape(3, call_center_graph)
    assert s.alpha == (-36.0, -21.0)
    assert s.beta == (-6.0,)
    chk = in_bp(s, call_center_graph)
    assert chk.ok
    assert chk.margins["c2_1"] == pytest.approx(6.5)
    assert chk.margins["c2_2"] == pytest.approx(6.5)
    # condition 3: 5.5 > (s2 - 1)/2 = 4.5
    assert chk.margins["c3"] == pytest.approx(1.0)
    assert s.gamma2(call_center_graph) == 0.0


def test_reference_shape(call_center_graph):
    s = reference_shape(call_center_graph)
    assert s.alpha == (0.0, 0.0)
    assert s.beta == (45.0,)
    b = reference_shape(banded_graph(6, 2))
    assert b.beta == ((3 + 3) / 2 - 2, 0.5, 0.5)


def test_constant_shape_on_band():
    for k in (1, 2, 4):
        s = constant_shape(-5, banded_graph(20, k))
        assert set(s.alpha) == {-5.0}
        assert s.beta[0] == -4 + k / 2


def test_proportional_shape_balances():
    t = two_clique_graph(8, 6, 2)
    s = proportional_shape(0.25, t)
    assert s.alpha == (-(2 + 7) / 2, -(1.5 + 5) / 2)
    assert s.beta == (-(1.5 + 1) / 2,)
    assert s.gamma2(t) == 0.0


def test_in_bp_reports_first_violation():
    t = banded_graph(3, 1)
    bad = ShapeParams((0.5, -2.0), (-1.0,))
    chk = in_bp(bad, t)
    assert not chk.ok and "condition 2" in chk.violation
    assert not bool(chk)


def test_beta_mismatch_across_occurrences():
    t = JunctionTree.from_cliques(5, [[1, 2], [2, 3], [3, 4], [3, 5]])
    with pytest.raises(ValueError):
        ShapeParams((-2,) * 4, (-1.5, -1, -1.5)).check_tree(t)


def test_repeated_s2_keeps_beta_per_occurrence():
    t = JunctionTree.from_cliques(4, [[1, 2], [2, 3], [2, 4]])
    ref = reference_shape(t)
    assert ref.beta == (1.0, 0.5)
    assert ref.check_tree(t) is ref


def test_log_multigamma():
    assert log_multigamma(0, 5.0) == 0.0
    assert log_multigamma(1, 3.5) == pytest.approx(math.lgamma(3.5))
    ref = 0.5 * math.log(math.pi) + math.lgamma(2.0) + math.lgamma(1.5)
    assert log_multigamma(2, 2.0) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(DomainError):
        log_multigamma(3, 1.0)


def test_log_gamma_ii_complete_graph_is_multigamma():
    t = banded_graph(4, 3)
    s = hiw_shape(5, t)
    assert log_gamma_ii(s, t) == pytest.approx(log_multigamma(4, (5 + 3) / 2))


def test_log_h_g_matches_blocks():
    t = banded_graph(3, 1)
    x = GMatrix(t, [[2, .5, 0], [.5, 1, .3], [0, .3, 3]])
    s = ShapeParams((-2.0, -3.0), (-1.0,))
    ref = (-2 * np.log(2 - .25) - 3 * np.log(3 - .09) + np.log(1.0))
    assert log_h_g(s, x) == pytest.approx(ref)


def test_posterior_update():
    t = banded_graph(4, 1)
    p = WpgParams(hiw_shape(3, t), GMatrix(t, np.eye(4)), t)
    S = np.full((4, 4), 0.2) + np.eye(4)
    q = posterior_update(p, 10, S)
    assert q.shape.alpha == tuple(a - 5 for a in p.shape.alpha)
    assert q.shape.beta == tuple(b - 5 for b in p.shape.beta)
    assert np.array_equal(q.theta.values, (p.theta + project(10 * S, t)).values)
    with pytest.raises(ValueError):
        posterior_update(p, 0, S)


@pytest.mark.parametrize("graph", [two_clique_graph(8, 6, 2), banded_graph(30, 3),
                                   two_clique_graph(20, 15, 5)])
@pytest.mark.parametrize("factor", [0.75, 1.0, 2.0])
def test_calibration_closed_loop(graph, factor):
    s = proportional_shape(factor, graph)
    theta = calibrate_theta(s, graph)
    m = iwpg_mean(WpgParams(s, theta, graph)).values
    assert np.abs(m - 2 * np.eye(graph.r)).max() < 1e-8


def test_calibration_without_mean():
    t = two_clique_graph(8, 6, 2)
    with pytest.raises(MomentUndefined):
        calibrate_theta(proportional_shape(0.25, t), t)


def test_parse_prior():
    assert parse_prior("hiw:3").kind == "hiw"
    p = parse_prior("iwpg-prop:0.25:D")
    assert (p.kind, p.value, p.calibrated) == ("iwpg-prop", 0.25, True)
    assert parse_prior("reference").kind == "reference"
    assert parse_prior("eb2:D").calibrated
    assert parse_prior("iwpg:foo.json").path == "foo.json"
    for bad in ("hiw", "hiw:x", "reference:D", "nope:1", "iwpg-const:1:2"):
        with pytest.raises(ParseError):
            parse_prior(bad)


def test_iwpg_file(tmp_path):
    t = banded_graph(4, 1)
    f = tmp_path / "p.json"
    f.write_text('{"alpha": [-3, -3, -3], "beta": [-2, -2], "theta": "calibrated"}')
    p = parse_prior(f"iwpg:{f}").build(t)
    assert np.allclose(iwpg_mean(p).values, 2 * np.eye(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 4), st.floats(0.05, 4.0))
def test_eb_families_satisfy_equalities(r, k, delta):
    k = min(k, r - 1)
    t = banded_graph(r, k)
    for s in (eb_proportional_shape(delta, t), eb_affine_shape(-(delta + 1) / 2, 0.5, t)):
        chk = in_bp(s, t)
        assert not any(v.startswith("eq") and abs(m) > 1e-9 for v, m in chk.margins.items())


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(1, 4), st.floats(2.5, 20.0))
def test_hiw_in_bp(r, k, delta):
    t = banded_graph(r, min(k, r - 1))
    assert in_bp(hiw_shape(delta, t), t).ok
