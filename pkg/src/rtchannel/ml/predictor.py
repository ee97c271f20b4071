"""A standardizer and a regressor bound to one coefficient component."""
import json

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from .baseline import MeanRegressor
from .linear import LinearRegressor
from .preprocessing import Standardizer
from .svr import SVRRegressor
from .tree import TreeRegressor

MODELS = {
    "lr": LinearRegressor,
    "svr": SVRRegressor,
    "dtr": TreeRegressor,
    "mean": MeanRegressor,
}


def make_model(name, **hyper):
    try:
        return MODELS[name](**hyper)
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


class TrainedPredictor(RegressorMixin, BaseEstimator):
    """Standardize raw features with training statistics, then regress.

    The standardizer is fit once, on the training rows, and reused for every
    later prediction.
    """

    def __init__(self, model=None, target="re"):
        self.model = model
        self.target = target

    def fit(self, X, y, **train_meta):
        if self.target not in ("re", "im"):
            raise ValueError("target must be 're' or 'im'")
        X = check_array(X, dtype=float)
        self.standardizer_ = Standardizer().fit(X)
        self.model_ = clone(self.model if self.model is not None else LinearRegressor())
        self.model_.fit(self.standardizer_.transform(X), np.asarray(y, dtype=float))
        self.n_features_in_ = X.shape[1]
        self.train_meta_ = dict(train_meta)
        return self

    @property
    def model_name(self):
        for name, cls in MODELS.items():
            if type(self.model_ if hasattr(self, "model_") else self.model) is cls:
                return name
        raise ValueError("unregistered model type")

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} raw columns, got {X.shape[1]}")
        return self.model_.predict(self.standardizer_.transform(X))

    def to_dict(self):
        check_is_fitted(self, "model_")
        return {
            "type": self.model_name,
            "target": self.target,
            "hyper": self.model_.get_params(),
            "standardizer": self.standardizer_.to_dict(),
            "parameters": self.model_.get_state(),
            "train_meta": self.train_meta_,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc):
        model = make_model(doc["type"], **doc.get("hyper", {}))
        p = cls(model=model, target=doc["target"])
        p.standardizer_ = Standardizer.from_dict(doc["standardizer"])
        p.model_ = clone(model).set_state(doc["parameters"])
        p.n_features_in_ = p.standardizer_.n_features_in_
        if not hasattr(p.model_, "n_features_in_"):
            p.model_.n_features_in_ = int(p.standardizer_.keep_.sum())
        p.train_meta_ = doc.get("train_meta", {})
        return p

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def save_predictor(p, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(p.to_json())


def load_predictor(path):
    with open(path, encoding="utf-8") as fh:
        return TrainedPredictor.from_json(fh.read())
