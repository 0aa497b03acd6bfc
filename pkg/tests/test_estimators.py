import numpy as np
import pytest
from sklearn.base import clone

from greenbundles.errors import ConfigurationError
from greenbundles.estimators import (
    GreenBundleEstimator,
    HyperbolicityClassifier,
    IndexFormPositivity,
    QuasiHyperbolicityAnalyzer,
)


def test_params_and_clone():
    est = IndexFormPositivity(system="pendulum", T_list=(5, 10), mesh=64)
    assert est.get_params()["mesh"] == 64
    c = clone(est).set_params(mesh=32)
    assert c.mesh == 32 and est.mesh == 64
    assert not hasattr(c, "report_")


def test_green_bundle_estimator():
    est = GreenBundleEstimator("pendulum", T=10.0)
    out = est.fit().transform()
    assert out.shape == (1, 2) and np.allclose(out[0], [-1.0, 1.0], atol=1e-8)
    out = est.transform([[0.0, 0.0, 0.0], [0.0, 0.0, 0.5]])
    assert out.shape == (2, 2)
    with pytest.raises(ConfigurationError):
        est.fit([[0.0, 0.0, 0.0, 0.0]])


def test_index_positivity_score():
    a = IndexFormPositivity("pendulum", T_list=(5, 10), mesh=128).score()
    assert a == pytest.approx(1.0 + (np.pi / 10) ** 2, rel=1e-3)  # sine Rayleigh quotient at T = 10
    est = IndexFormPositivity("free_particle", T_list=(5, 10), mesh=128).fit()
    assert est.uniform_a_ == pytest.approx((np.pi / 10) ** 2, rel=0.05)


def test_hyperbolicity_classifier():
    clf = HyperbolicityClassifier("pendulum").fit()
    assert clf.verdict_ == "hyperbolic"
    assert list(clf.predict([[0.0, 0.0]])) == ["hyperbolic"]
    assert HyperbolicityClassifier("free_particle(2)").fit().verdict_ == "not_hyperbolic"
    with pytest.raises(ConfigurationError):
        HyperbolicityClassifier("pendulum", pipeline="theoremZ").fit()


def test_quasi_hyperbolicity_analyzer():
    qa = QuasiHyperbolicityAnalyzer(horizon=30)
    assert qa.predict(np.diag([2.0, 0.5]))
    assert not qa.predict(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert qa.fit(np.stack([np.diag([2.0, 0.5]), np.diag([3.0, 1 / 3])])).quasi_hyperbolic_
    with pytest.raises(ConfigurationError):
        qa.fit(np.ones(3))
