import logging

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

log = logging.getLogger(__name__)


class LinearRegressor(RegressorMixin, BaseEstimator):
    """Ordinary least squares with intercept, solved by QR on centred data.

    Rank-deficient designs fall back to the minimum-norm solution and set
    ``rank_deficient_``.
    """

    def __init__(self, rcond=1e-12):
        self.rcond = rcond

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n, p = X.shape
        if n < p + 1:
            raise ValueError(f"need at least {p + 1} rows for {p} features, got {n}")
        self.n_features_in_ = p
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean

        self.rank_deficient_ = False
        if p == 0:
            w = np.zeros(0)
        else:
            Q, R = np.linalg.qr(Xc, mode="reduced")
            diag = np.abs(np.diag(R))
            if diag.min() <= self.rcond * max(diag.max(), np.finfo(float).tiny):
                self.rank_deficient_ = True
                log.warning("rank-deficient design; using the minimum-norm solution")
                w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
            else:
                w = _back_substitute(R, Q.T @ yc)
        self.coef_ = w
        self.intercept_ = float(y_mean - x_mean @ w)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.coef_ + self.intercept_

    def get_state(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_,
                "rank_deficient": self.rank_deficient_}

    def set_state(self, doc):
        self.coef_ = np.array(doc["coef"], dtype=float)
        self.intercept_ = float(doc["intercept"])
        self.rank_deficient_ = bool(doc.get("rank_deficient", False))
        self.n_features_in_ = len(self.coef_)
        return self


def _back_substitute(R, b):
    n = len(b)
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x
