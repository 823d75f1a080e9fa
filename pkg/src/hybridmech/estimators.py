"""Scikit-learn style wrapper: a mechanism as a probabilistic classifier
over the three options."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .core import AGENTS, OPTIONS, Profile, pointwise_ratio
from .mechanisms import PiecewiseLinearCurve, lookup, make_template
from .payments import myerson_payments
from .validation import check_profiles


class MechanismClassifier(ClassifierMixin, BaseEstimator):
    """Apply a named mechanism (or a custom template curve) to profile rows.

    Parameters
    ----------
    mechanism : str
        Registry name such as ``"eim"``.  Ignored when ``curve`` is given.
    curve : list of {"y": float, "c": float}, optional
        Knots of a non-decreasing piecewise-linear template curve.
    normalize : bool
        Rescale expert values per row instead of rejecting unnormalized rows.

    ``fit`` learns nothing; it validates the configuration and records the
    input width.  ``predict_proba`` returns the lottery of each row with
    columns ordered as ``classes_``.
    """

    def __init__(self, mechanism="eom", curve=None, normalize=True):
        self.mechanism = mechanism
        self.curve = curve
        self.normalize = normalize

    def _resolve(self):
        if self.curve is not None:
            return make_template(PiecewiseLinearCurve(self.curve), name="custom-template")
        return lookup(self.mechanism)

    def fit(self, X, y=None):
        check_profiles(X, normalize=self.normalize)
        self.mechanism_ = self._resolve()
        self.classes_ = np.array([o.label for o in OPTIONS])
        self.n_features_in_ = 5
        return self

    def _split(self, X):
        check_is_fitted(self, "mechanism_")
        return check_profiles(X, normalize=self.normalize)

    def predict_proba(self, X) -> np.ndarray:
        V, W = self._split(X)
        return self.mechanism_.lotteries(V, W)

    def predict(self, X) -> np.ndarray:
        """Most likely option per row; ties go to the earlier of A, B, none."""
        P = self.predict_proba(X)
        return self.classes_[np.argmax(P, axis=1)]

    def ratios(self, X) -> np.ndarray:
        V, W = self._split(X)
        return pointwise_ratio(self.mechanism_.lotteries(V, W), V, W)

    def score(self, X, y=None, sample_weight=None) -> float:
        """Mean welfare efficiency (expected over optimal welfare)."""
        return float(np.average(1.0 / self.ratios(X), weights=sample_weight))

    def payments(self, X) -> np.ndarray:
        """Myerson payments of agents A and B for every row."""
        V, W = self._split(X)
        out = np.empty((V.shape[0], len(AGENTS)))
        for k in range(V.shape[0]):
            pv = myerson_payments(self.mechanism_, Profile(*V[k], *W[k]))
            out[k] = pv.a, pv.b
        return out
