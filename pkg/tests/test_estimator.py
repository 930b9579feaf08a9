import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from smoothsdp.estimator import BurerMonteiroSDP, MaxCutSDP, refit_certificate
from smoothsdp.exceptions import DimensionMismatchError
from smoothsdp.maxcut import brute_force_maxcut

from conftest import complete, cycle, gaussian_cost


def test_get_params_and_clone():
    est = BurerMonteiroSDP(constraint="trace", p_max=6, random_state=3)
    params = est.get_params()
    assert params["constraint"] == "trace" and params["p_max"] == 6
    c = clone(est)
    assert c.get_params() == params and c is not est
    assert est.set_params(p_start=3).p_start == 3


def test_fit_diag(rng):
    C = gaussian_cost(30, rng)
    est = BurerMonteiroSDP().fit(C)
    assert est.certified_ and est.Y_.shape[0] == 30
    np.testing.assert_allclose(np.sum(est.Y_**2, axis=1), 1.0, atol=1e-12)
    assert est.transform() is est.Y_
    assert est.score() <= 0 and est.n_features_in_ == 30


def test_fit_trace_recovers_lambda_min(rng):
    C = gaussian_cost(12, rng)
    est = BurerMonteiroSDP(constraint="trace").fit(C)
    assert est.objective_ == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-8)


def test_fit_blockdiag_sparse(rng):
    C = sp.csr_matrix(gaussian_cost(12, rng))
    Y = BurerMonteiroSDP(constraint="blockdiag", block_size=3).fit_transform(C)
    for b in range(4):
        blk = Y[3 * b:3 * b + 3]
        np.testing.assert_allclose(blk @ blk.T, np.eye(3), atol=1e-10)


def test_input_validation(rng):
    with pytest.raises(ValueError):
        BurerMonteiroSDP(constraint="blockdiag", block_size=4).fit(np.eye(6))
    with pytest.raises(ValueError):
        BurerMonteiroSDP(constraint="nope").fit(np.eye(3))
    with pytest.raises(DimensionMismatchError):
        BurerMonteiroSDP().fit(np.ones((2, 3)))
    with pytest.raises(ValueError):
        BurerMonteiroSDP().fit(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        BurerMonteiroSDP().fit(np.array([[np.nan, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        BurerMonteiroSDP(random_state=-1).fit(np.eye(3))
    with pytest.raises(NotFittedError):
        BurerMonteiroSDP().transform()


def test_maxcut_estimator():
    g = cycle(8)
    W = g.adjacency().to_dense()
    m = MaxCutSDP().fit(W)
    assert m.cut_value_ == 8 and m.cut_bound_ == pytest.approx(8, abs=1e-6)
    assert set(m.labels_) == {0, 1} and np.all(m.labels_ == (m.assignment_ < 0))
    np.testing.assert_array_equal(m.fit_predict(W), m.labels_)
    assert m.predict() is m.labels_


def test_maxcut_accepts_graph_and_sparse():
    g = complete(5)
    a = MaxCutSDP().fit(g)
    b = MaxCutSDP().fit(sp.csr_matrix(g.adjacency().to_dense()))
    assert a.cut_value_ == b.cut_value_ == brute_force_maxcut(g)[0]
    cert, bound = refit_certificate(a)
    assert bound == pytest.approx(a.cut_bound_)


def test_maxcut_rejects_self_loops():
    with pytest.raises(ValueError):
        MaxCutSDP().fit(np.eye(3))
