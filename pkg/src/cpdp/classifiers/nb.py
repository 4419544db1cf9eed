import numpy as np
from scipy.special import logsumexp

from .base import TrainedModel

SIGMA_FLOOR = 1e-6


class GaussianNB(TrainedModel):
    """Gaussian naive Bayes with weighted maximum-likelihood estimates.

    Class priors come from the weighted class mass; per-class means and standard
    deviations are weighted MLEs, with the deviation floored at ``SIGMA_FLOOR``.
    """

    def __init__(self, spec, data):
        self.spec = spec
        X, y, w = data.rows, data.labels, data.weights
        self.n_features = X.shape[1]
        floor = float(spec.hyperparameters.get("sigma_floor", SIGMA_FLOOR))
        self.log_prior = np.empty(2)
        self.mean = np.empty((2, self.n_features))
        self.sigma = np.empty((2, self.n_features))
        total = w.sum()
        for c in (0, 1):
            wc = w[y == c]
            Xc = X[y == c]
            mass = wc.sum()
            self.log_prior[c] = np.log(mass / total)
            mu = wc @ Xc / mass
            var = wc @ (Xc - mu) ** 2 / mass
            self.mean[c] = mu
            self.sigma[c] = np.maximum(np.sqrt(var), floor)

    def log_joint(self, X):
        z = (X[:, None, :] - self.mean[None]) / self.sigma[None]
        ll = -0.5 * z**2 - np.log(self.sigma)[None] - 0.5 * np.log(2 * np.pi)
        return ll.sum(axis=2) + self.log_prior[None]

    def _score(self, X):
        lj = self.log_joint(X)
        return np.exp(lj[:, 1] - logsumexp(lj, axis=1))
