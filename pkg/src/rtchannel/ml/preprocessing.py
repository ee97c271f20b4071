import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted


class Standardizer(TransformerMixin, BaseEstimator):
    """Per-column ``(x - mean) / std`` with population std.

    Columns that are constant on the fit set carry no information and are
    dropped; ``keep_`` records which columns survive.
    """

    def __init__(self, atol=0.0):
        self.atol = atol

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[0] < 2:
            raise ValueError("standardization needs at least 2 rows")
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.keep_ = self.scale_ > self.atol
        return self

    @property
    def dropped_(self):
        return np.flatnonzero(~self.keep_)

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        k = self.keep_
        return (X[:, k] - self.mean_[k]) / self.scale_[k]

    def to_dict(self):
        return {"mean": self.mean_.tolist(), "scale": self.scale_.tolist(),
                "keep": self.keep_.tolist(), "atol": self.atol}

    @classmethod
    def from_dict(cls, doc):
        s = cls(atol=doc.get("atol", 0.0))
        s.mean_ = np.array(doc["mean"], dtype=float)
        s.scale_ = np.array(doc["scale"], dtype=float)
        s.keep_ = np.array(doc["keep"], dtype=bool)
        s.n_features_in_ = len(s.mean_)
        return s
