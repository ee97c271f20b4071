"""Epsilon-SVR with an RBF kernel, solved by SMO.

The dual over ``beta = [alpha, alpha*]`` is

    min 1/2 beta' Q beta + p' beta,  z' beta = 0,  0 <= beta <= C

with ``z = [1, -1]``, ``Q_ij = z_i z_j K(x_i, x_j)`` and
``p = [eps - y, eps + y]``. Working pairs are chosen with second-order
information (maximal violating ``i``, then the ``j`` with the largest
guaranteed objective decrease), which is fully deterministic.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

TAU = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, message, violation):
        super().__init__(message)
        self.violation = violation


def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo_solve(K, y, C, epsilon, tol=1e-3, max_iter=100000):
    """Solve the epsilon-SVR dual for kernel matrix ``K``.

    Returns ``(coef, rho, n_iter, violation)`` where predictions are
    ``K(x, X) @ coef - rho``.
    """
    n = len(y)
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    beta = np.zeros(2 * n)
    G = p.copy()
    Kd = np.diag(K)
    QD = np.concatenate([Kd, Kd])

    n_iter = 0
    while True:
        up = ((z > 0) & (beta < C)) | ((z < 0) & (beta > 0))
        low = ((z > 0) & (beta > 0)) | ((z < 0) & (beta < C))
        score = -z * G
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        g_max = s_up[i]
        g_min = np.min(np.where(low, score, np.inf))
        violation = g_max - g_min
        if violation < tol:
            break
        if n_iter >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations (KKT violation {violation:.3e})", violation)
        n_iter += 1

        Ki = K[i % n]
        Qi = z[i] * z * np.concatenate([Ki, Ki])
        b = g_max - score
        a = QD[i] + QD - 2.0 * z[i] * Qi * z
        a = np.where(a > 0, a, TAU)
        cand = low & (b > 0)
        gain = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))

        Kj = K[j % n]
        Qj = z[j] * z * np.concatenate([Kj, Kj])
        old_i, old_j = beta[i], beta[j]
        if z[i] != z[j]:
            quad = QD[i] + QD[j] + 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = beta[i] - beta[j]
            beta[i] += delta
            beta[j] += delta
            if diff > 0:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = diff
            elif beta[i] < 0:
                beta[i] = 0.0
                beta[j] = -diff
            if diff > 0:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = C - diff
            elif beta[j] > C:
                beta[j] = C
                beta[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = beta[i] + beta[j]
            beta[i] -= delta
            beta[j] += delta
            if total > C:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = total - C
            elif beta[j] < 0:
                beta[j] = 0.0
                beta[i] = total
            if total > C:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = total - C
            elif beta[i] < 0:
                beta[i] = 0.0
                beta[j] = total
        G += Qi * (beta[i] - old_i) + Qj * (beta[j] - old_j)

    rho = _rho(beta, G, z, C)
    coef = beta[:n] - beta[n:]
    return coef, rho, n_iter, float(violation)


def _rho(beta, G, z, C):
    yG = z * G
    free = (beta > 0) & (beta < C)
    if free.any():
        return float(yG[free].mean())
    at_ub = beta >= C
    at_lb = beta <= 0
    ub_mask = (at_ub & (z < 0)) | (at_lb & (z > 0))
    lb_mask = (at_ub & (z > 0)) | (at_lb & (z < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


class SVRRegressor(RegressorMixin, BaseEstimator):
    """RBF epsilon-SVR.

    Targets are standardised internally, so ``epsilon`` and ``tol`` are in
    units of the target's standard deviation. ``gamma=None`` means
    ``1 / n_features``.
    """

    def __init__(self, C=1.0, epsilon=0.1, gamma=None, tol=1e-3, max_iter=100000):
        self.C = C
        self.epsilon = epsilon
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if X.shape[0] < 2:
            raise ValueError("SVR needs at least 2 rows")
        if not (self.C > 0 and self.epsilon >= 0):
            raise ValueError("C must be > 0 and epsilon >= 0")
        self.n_features_in_ = X.shape[1]
        self.gamma_ = float(self.gamma) if self.gamma is not None else 1.0 / max(X.shape[1], 1)
        if self.gamma_ <= 0:
            raise ValueError("gamma must be > 0")
        self.y_mean_ = float(y.mean())
        sd = float(y.std())
        self.y_scale_ = sd if sd > 0 else 1.0
        ys = (y - self.y_mean_) / self.y_scale_

        K = rbf_kernel(X, X, self.gamma_)
        coef, rho, self.n_iter_, self.kkt_violation_ = smo_solve(
            K, ys, self.C, self.epsilon, self.tol, self.max_iter)
        sv = coef != 0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = coef[sv]
        self.intercept_ = -rho
        return self

    def decision_function(self, X):
        if len(self.dual_coef_) == 0:
            return np.full(len(X), self.intercept_)
        return rbf_kernel(X, self.support_vectors_, self.gamma_) @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.decision_function(X) * self.y_scale_ + self.y_mean_

    def get_state(self):
        return {
            "support_vectors": self.support_vectors_.tolist(),
            "support": self.support_.tolist(),
            "dual_coef": self.dual_coef_.tolist(),
            "intercept": self.intercept_,
            "gamma": self.gamma_,
            "y_mean": self.y_mean_,
            "y_scale": self.y_scale_,
            "n_iter": self.n_iter_,
            "kkt_violation": self.kkt_violation_,
            "n_features": self.n_features_in_,
        }

    def set_state(self, doc):
        self.n_features_in_ = int(doc["n_features"])
        self.support_vectors_ = np.array(doc["support_vectors"], dtype=float).reshape(-1, self.n_features_in_)
        self.support_ = np.array(doc["support"], dtype=int)
        self.dual_coef_ = np.array(doc["dual_coef"], dtype=float)
        self.intercept_ = float(doc["intercept"])
        self.gamma_ = float(doc["gamma"])
        self.y_mean_ = float(doc["y_mean"])
        self.y_scale_ = float(doc["y_scale"])
        self.n_iter_ = int(doc["n_iter"])
        self.kkt_violation_ = float(doc["kkt_violation"])
        return self
