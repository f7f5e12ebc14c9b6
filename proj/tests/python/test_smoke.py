import math

import numpy as np
import pytest

import locality_lab as ll


def test_graph_distances_and_certificate():
    g = ll.banded_graph(4, 1)
    assert g.distance(0, 3) == 3
    assert sorted(ll.banded_graph(7, 1).q_neighborhood(3, 2)) == [1, 2, 3, 4, 5]
    assert ll.certify_locality(ll.banded_graph(10, 2), 4.0, 1).certified
    assert not ll.certify_locality(ll.complete_graph(10), 2.0, 1, 1).certified


def test_delta_bounds():
    assert ll.delta_graphical(2, 1, 1, 2).value == pytest.approx(4.0)
    assert ll.delta_diag_dominant(np.array([[2.0, 1.0], [1.0, 2.0]])).value == pytest.approx(1.0)
    with pytest.raises(ll.LocalityError):
        ll.delta_diag_dominant(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert ll.diffusion_decay_bound(2, 1.0, 1.0) == pytest.approx(1 - 2 / math.e)
    lhs, rhs, ok = ll.li_series_bound_check(1.0, 0.5)
    assert ok and lhs == pytest.approx(2.0) and rhs == pytest.approx(2.0)


def test_gaussian_model_and_w1():
    g = ll.gaussian_chain(6, 2.0, -0.8)
    x = g.sample(1000, 3)
    assert x.shape == (1000, 6)
    assert np.allclose(g.score(np.zeros(6)), 0.0)
    assert ll.gaussian_w1_1d(0.0, 1.0, 0.5, 1.0) == pytest.approx(0.5)
    assert ll.empirical_w1_1d([0.0, 0.0], [1.5]) == pytest.approx(1.5)


def test_marginal_inequality_identical_models():
    g = ll.gaussian_chain(8, 2.0, -0.8)
    rep = ll.verify_marginal_inequality(g, g, ll.delta_graphical(2, 1, g.min_eigenvalue, g.max_eigenvalue), 500, 1)
    assert rep.passed
    assert rep.rhs == 0.0


def test_gl_chain_sampling_is_reproducible():
    gl = ll.GLChain(5, 1.0, 0.0, 0.5, 1.0)
    a = ll.sample_model(gl, 50, 4)
    b = ll.sample_model(gl, 50, 4)
    assert np.array_equal(a, b)


def test_score_matching_recovers_chain():
    truth = ll.gaussian_chain(6, 2.0, -0.8)
    fit = ll.fit_score_matching(ll.banded_graph(6, 1), truth.sample(10000, 5))
    assert np.abs(fit["precision"] - truth.precision).max() < 0.1 * 2.0


def test_model_from_json_and_cli(tmp_path):
    m = ll.model_from_json('{"type":"gl_chain","n":4,"lambda":1,"m_param":0,"beta":0.5,"pinning":1}')
    assert m.kind == "gl_chain" and m.dim == 4
    assert ll.cli(["bounds", "delta", "--S", "2", "--nu", "1", "--m", "1", "--M", "2"]) == 0
    assert ll.cli(["langevin", "run", "--out", str(tmp_path / "x.csv")]) == 2


def test_quick_criterion(tmp_path):
    r = ll.run_criterion(1, quick=True, out_dir=str(tmp_path))
    assert r.passed
