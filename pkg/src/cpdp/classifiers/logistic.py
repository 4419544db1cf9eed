import numpy as np
from scipy.special import expit

from .base import TrainedModel

ETA_CLIP = 35.0


class LogisticRegression(TrainedModel):
    """L2-regularized logistic regression fitted by Newton/IRLS.

    Inputs are standardized internally; the penalty does not touch the intercept.
    On separable data the coefficients keep growing until ``max_iter``, which is
    harmless for ranking and accuracy.
    """

    def __init__(self, spec, data):
        self.spec = spec
        hp = spec.hyperparameters
        lam = float(hp.get("l2", 1e-8))
        max_iter = int(hp.get("max_iter", 100))
        tol = float(hp.get("tol", 1e-8))
        X, y, w = data.rows, data.labels.astype(float), data.weights
        self.n_features = X.shape[1]
        self.center = X.mean(axis=0)
        sd = X.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)
        Z = np.column_stack([np.ones(len(X)), (X - self.center) / self.scale])
        beta = np.zeros(Z.shape[1])
        penalty = np.full(Z.shape[1], lam)
        penalty[0] = 0.0
        self.n_iter = 0
        for it in range(max_iter):
            p = expit(np.clip(Z @ beta, -ETA_CLIP, ETA_CLIP))
            W = w * p * (1 - p)
            grad = Z.T @ (w * (y - p)) - penalty * beta
            H = (Z * W[:, None]).T @ Z + np.diag(penalty + 1e-12)
            try:
                step = np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, grad, rcond=None)[0]
            beta = beta + step
            self.n_iter = it + 1
            if np.max(np.abs(step)) < tol:
                break
        self.coef = beta

    def decision(self, X):
        Z = (X - self.center) / self.scale
        return self.coef[0] + Z @ self.coef[1:]

    def _score(self, X):
        return expit(np.clip(self.decision(X), -ETA_CLIP, ETA_CLIP))
