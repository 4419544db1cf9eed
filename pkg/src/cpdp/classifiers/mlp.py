import math

import numpy as np
from numba import njit

from .base import TrainedModel


@njit(cache=True)
def _sigmoid(z):
    if z < -35.0:
        z = -35.0
    elif z > 35.0:
        z = 35.0
    return 1.0 / (1.0 + np.exp(-z))


@njit(cache=True)
def _train(X, y, n_hidden, lr, momentum, epochs, seed):
    np.random.seed(seed)
    n, m = X.shape
    W1 = np.random.uniform(-0.05, 0.05, (n_hidden, m + 1))
    W2 = np.random.uniform(-0.05, 0.05, n_hidden + 1)
    dW1 = np.zeros_like(W1)
    dW2 = np.zeros_like(W2)
    h = np.empty(n_hidden)
    dh = np.empty(n_hidden)
    for _ in range(epochs):
        order = np.random.permutation(n)
        for r in order:
            for k in range(n_hidden):
                z = W1[k, m]
                for j in range(m):
                    z += W1[k, j] * X[r, j]
                h[k] = _sigmoid(z)
            z = W2[n_hidden]
            for k in range(n_hidden):
                z += W2[k] * h[k]
            out = _sigmoid(z)
            delta = (y[r] - out) * out * (1.0 - out)
            for k in range(n_hidden):
                dh[k] = delta * W2[k] * h[k] * (1.0 - h[k])
            for k in range(n_hidden):
                dW2[k] = lr * delta * h[k] + momentum * dW2[k]
                W2[k] += dW2[k]
            dW2[n_hidden] = lr * delta + momentum * dW2[n_hidden]
            W2[n_hidden] += dW2[n_hidden]
            for k in range(n_hidden):
                for j in range(m):
                    dW1[k, j] = lr * dh[k] * X[r, j] + momentum * dW1[k, j]
                    W1[k, j] += dW1[k, j]
                dW1[k, m] = lr * dh[k] + momentum * dW1[k, m]
                W1[k, m] += dW1[k, m]
    return W1, W2


@njit(cache=True)
def _forward(X, W1, W2):
    n, m = X.shape
    n_hidden = W2.shape[0] - 1
    out = np.empty(n)
    for r in range(n):
        z2 = W2[n_hidden]
        for k in range(n_hidden):
            z = W1[k, m]
            for j in range(m):
                z += W1[k, j] * X[r, j]
            z2 += W2[k] * _sigmoid(z)
        out[r] = _sigmoid(z2)
    return out


class MLP(TrainedModel):
    """One-hidden-layer sigmoid network trained by online backpropagation with momentum."""

    def __init__(self, spec, data):
        self.spec = spec
        hp = spec.hyperparameters
        X = data.rows
        m = X.shape[1]
        self.n_features = m
        self.n_hidden = int(hp.get("hidden", math.ceil((m + 2) / 2)))
        self.center = X.mean(axis=0)
        sd = X.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)
        Z = np.ascontiguousarray((X - self.center) / self.scale)
        self.W1, self.W2 = _train(Z, data.labels.astype(np.float64), self.n_hidden,
                                  float(hp.get("learning_rate", 0.3)),
                                  float(hp.get("momentum", 0.2)),
                                  int(hp.get("epochs", 500)), int(spec.seed))

    def _score(self, X):
        Z = np.ascontiguousarray((X - self.center) / self.scale)
        return _forward(Z, self.W1, self.W2)
