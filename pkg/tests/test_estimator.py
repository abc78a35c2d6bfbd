import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from riemann_kwave import ContractError, RiemannKWave

import cases


def test_params_and_clone():
    est = RiemannKWave(rgrid="-0.5:0.5:101")
    assert est.get_params()["rgrid"] == "-0.5:0.5:101"
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est


def test_not_fitted():
    with pytest.raises(NotFittedError):
        RiemannKWave().transform([[0.0, 0.0]])


def test_transform_and_predict_match_closed_form():
    xs = np.array([[0.0, 0.0], [0.1, 0.3], [0.4, -0.5]])
    est = RiemannKWave().fit(xs)
    r, u = cases.closed_form(xs)
    np.testing.assert_allclose(est.transform(xs)[:, 0], r, atol=1e-12)
    np.testing.assert_allclose(est.predict(xs), u, atol=1e-12)
    assert est.n_features_in_ == 2


def test_failed_points_are_nan():
    est = RiemannKWave().fit()
    out = est.predict([[-1.0 / 3.0, 0.0], [0.0, 0.5]])
    assert np.all(np.isnan(out[0])) and np.all(np.isfinite(out[1]))


def test_wrong_feature_count():
    with pytest.raises(ValueError):
        RiemannKWave().fit().transform([[0.0, 0.0, 0.0]])


def test_uncertified_frame_rejected():
    est = RiemannKWave(model="gas-polytropic", frame=("fast", "slow"), base_state=(1.0, 0.0), tracked=True,
                       rgrid="-0.1:0.1:5,-0.1:0.1:5", profiles=cases.DOUBLE_PSI)
    with pytest.raises(ContractError):
        est.fit()
