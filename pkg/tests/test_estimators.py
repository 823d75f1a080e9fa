import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hybridmech import MechanismClassifier
from hybridmech import mechanisms as M
from hybridmech.core import Profile, canonicalize
from hybridmech.exceptions import DegenerateBids, DegenerateExpert, InvalidProfile, UnknownMechanism
from hybridmech.payments import myerson_payments

from conftest import SHIPPED, profiles

VIEWS_ROW = [0.3, 0.0, 1.0, 1.0, 0.9]


def rows(ps):
    return np.array([[*p.expert, *p.bids] for p in ps])


def test_params_round_trip():
    est = MechanismClassifier(mechanism="eim", normalize=False)
    assert est.get_params() == {"mechanism": "eim", "curve": None, "normalize": False}
    copy = clone(est).set_params(mechanism="d")
    assert copy.mechanism == "d" and est.mechanism == "eim"


def test_fit_records_metadata():
    est = MechanismClassifier().fit([VIEWS_ROW])
    assert est.classes_.tolist() == ["A", "B", "none"]
    assert est.n_features_in_ == 5
    assert est.mechanism_.name == "eom"


def test_predict_proba_views():
    est = MechanismClassifier("eom").fit([VIEWS_ROW])
    assert est.predict_proba([VIEWS_ROW])[0] == pytest.approx([1 / 3, 0, 2 / 3])
    assert est.predict([VIEWS_ROW]).tolist() == ["none"]


@pytest.mark.parametrize("name", SHIPPED)
@settings(max_examples=10)
@given(ps=st.lists(profiles(), min_size=1, max_size=6))
def test_rows_match_scalar_evaluation(name, ps):
    est = MechanismClassifier(name).fit(rows(ps))
    P = est.predict_proba(rows(ps))
    for p, probs in zip(ps, P):
        assert probs == pytest.approx(M.lookup(name).evaluate(p).as_array(), abs=1e-15)


def test_raw_rows_are_normalized():
    raw = [[5.0, 3.0, 1.0, 2.0, 4.0]]
    est = MechanismClassifier("eim").fit(raw)
    p = canonicalize((5, 3, 1), (2, 4))
    assert est.predict_proba(raw)[0] == pytest.approx(M.lookup("eim").evaluate(p).as_array())


def test_unnormalized_rejected_without_normalize():
    with pytest.raises(InvalidProfile, match="row 0"):
        MechanismClassifier(normalize=False).fit([[5.0, 3.0, 1.0, 2.0, 4.0]])


def test_ratios_and_score():
    X = np.array([VIEWS_ROW, [1, 0, 0, 1, 0]])
    est = MechanismClassifier("eom").fit(X)
    r = est.ratios(X)
    # second row: optimum A at 2, EOM gives 2/3 * 2 + 1/3 * 0
    assert r[1] == pytest.approx(1.5)
    assert est.score(X) == pytest.approx(np.mean(1 / r))
    assert est.score(X, sample_weight=[0, 1]) == pytest.approx(2 / 3)


def test_payments_match_myerson():
    X = np.array([VIEWS_ROW, [0, 1, 0, 0.7, 1.0]])
    pay = MechanismClassifier("eim").fit(X).payments(X)
    for row, got in zip(X, pay):
        expected = myerson_payments(M.lookup("eim"), Profile(*row))
        assert got == pytest.approx([expected.a, expected.b], abs=1e-15)


def test_custom_curve():
    curve = [{"y": 0, "c": 0.1}, {"y": 1, "c": 0.5}]
    est = MechanismClassifier(curve=curve).fit([VIEWS_ROW])
    assert est.mechanism_.name == "custom-template"
    assert est.predict_proba([[0, 1, 0, 1, 0.5]])[0] == pytest.approx([0.7, 0.3, 0.0])


def test_not_fitted():
    with pytest.raises(NotFittedError):
        MechanismClassifier().predict([VIEWS_ROW])


def test_unknown_mechanism():
    with pytest.raises(UnknownMechanism):
        MechanismClassifier("vcg").fit([VIEWS_ROW])


@pytest.mark.parametrize(
    "X,err",
    [
        ([[1, 0, 0, 1]], InvalidProfile),
        ([[1, 0, 0, -1, 1]], InvalidProfile),
        ([[1, 0, np.nan, 1, 1]], InvalidProfile),
        ([[1, 0, 0, 0, 0]], DegenerateBids),
        ([[2, 2, 2, 1, 1]], DegenerateExpert),
    ],
)
def test_validation(X, err):
    with pytest.raises(err):
        MechanismClassifier().fit(X)
