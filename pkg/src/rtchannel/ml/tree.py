import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

LEAF = -1


def best_split(X, y, min_samples_leaf=1):
    """Exhaustive variance-reduction split search.

    Thresholds are midpoints between consecutive distinct sorted values. Ties
    go to the lowest feature index, then the lowest threshold. Returns
    ``(feature, threshold, sse_children)`` or ``None`` when no admissible
    split exists.
    """
    n, p = X.shape
    yc = y - y.mean()
    best = None
    for k in range(p):
        order = np.argsort(X[:, k], kind="stable")
        xs = X[order, k]
        ys = yc[order]
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys * ys)
        n_left = np.arange(1, n)
        n_right = n - n_left
        sse_left = s2[:-1] - s1[:-1] ** 2 / n_left
        sse_right = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / n_right
        total = sse_left + sse_right
        ok = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        if not ok.any():
            continue
        total = np.where(ok, total, np.inf)
        pos = int(np.argmin(total))
        if best is None or total[pos] < best[2]:
            best = (k, 0.5 * (xs[pos] + xs[pos + 1]), float(total[pos]))
    return best


class TreeRegressor(RegressorMixin, BaseEstimator):
    """CART regression tree grown greedily on squared error.

    A node is split only if the split strictly lowers the total squared
    deviation. Samples with ``x[feature] <= threshold`` go left.
    """

    def __init__(self, max_depth=8, min_samples_leaf=5):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if self.min_samples_leaf < 1 or X.shape[0] < self.min_samples_leaf:
            raise ValueError("need at least min_samples_leaf rows and min_samples_leaf >= 1")
        self.n_features_in_ = X.shape[1]
        feature, threshold, left, right, value = [], [], [], [], []

        def grow(idx, depth):
            node = len(value)
            yy = y[idx]
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(float(yy.mean()))
            if self.max_depth is not None and depth >= self.max_depth:
                return node
            if len(idx) < 2 * self.min_samples_leaf:
                return node
            parent = float(((yy - yy.mean()) ** 2).sum())
            split = best_split(X[idx], yy, self.min_samples_leaf)
            if split is None or not parent - split[2] > 1e-12 * parent:
                return node
            k, thr, _ = split
            go_left = X[idx, k] <= thr
            feature[node] = k
            threshold[node] = float(thr)
            left[node] = grow(idx[go_left], depth + 1)
            right[node] = grow(idx[~go_left], depth + 1)
            return node

        grow(np.arange(len(y)), 0)
        self.feature_ = np.array(feature, dtype=int)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=int)
        self.right_ = np.array(right, dtype=int)
        self.value_ = np.array(value, dtype=float)
        return self

    @property
    def n_leaves_(self):
        return int(np.sum(self.feature_ == LEAF))

    def apply(self, X):
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=int)
        active = self.feature_[node] != LEAF
        while active.any():
            a = np.flatnonzero(active)
            f = self.feature_[node[a]]
            go_left = X[a, f] <= self.threshold_[node[a]]
            node[a] = np.where(go_left, self.left_[node[a]], self.right_[node[a]])
            active = self.feature_[node] != LEAF
        return node

    def predict(self, X):
        check_is_fitted(self, "value_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.value_[self.apply(X)]

    def get_state(self):
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
            "n_features": self.n_features_in_,
        }

    def set_state(self, doc):
        self.feature_ = np.array(doc["feature"], dtype=int)
        self.threshold_ = np.array(doc["threshold"], dtype=float)
        self.left_ = np.array(doc["left"], dtype=int)
        self.right_ = np.array(doc["right"], dtype=int)
        self.value_ = np.array(doc["value"], dtype=float)
        self.n_features_in_ = int(doc["n_features"])
        return self
