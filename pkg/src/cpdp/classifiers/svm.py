"""Linear-kernel SVM trained with Platt's sequential minimal optimization."""
import numpy as np
from numba import njit

from .base import TrainedModel


@njit(cache=True)
def _f(X, w, b, i):
    s = 0.0
    for j in range(X.shape[1]):
        s += w[j] * X[i, j]
    return s - b


@njit(cache=True)
def _dot(X, i, k):
    s = 0.0
    for j in range(X.shape[1]):
        s += X[i, j] * X[k, j]
    return s


@njit(cache=True)
def _take_step(i1, i2, X, y, alpha, w, bb, C, eps):
    if i1 == i2:
        return False
    a1 = alpha[i1]
    a2 = alpha[i2]
    y1 = y[i1]
    y2 = y[i2]
    b = bb[0]
    E1 = _f(X, w, b, i1) - y1
    E2 = _f(X, w, b, i2) - y2
    s = y1 * y2
    if s < 0:
        L = max(0.0, a2 - a1)
        H = min(C, C + a2 - a1)
    else:
        L = max(0.0, a2 + a1 - C)
        H = min(C, a2 + a1)
    if L == H:
        return False
    k11 = _dot(X, i1, i1)
    k12 = _dot(X, i1, i2)
    k22 = _dot(X, i2, i2)
    eta = k11 + k22 - 2.0 * k12
    if eta > 0:
        a2n = a2 + y2 * (E1 - E2) / eta
        if a2n < L:
            a2n = L
        elif a2n > H:
            a2n = H
    else:
        f1 = y1 * (E1 + b) - a1 * k11 - s * a2 * k12
        f2 = y2 * (E2 + b) - s * a1 * k12 - a2 * k22
        L1 = a1 + s * (a2 - L)
        H1 = a1 + s * (a2 - H)
        Lobj = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
        Hobj = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
        if Lobj < Hobj - eps:
            a2n = L
        elif Lobj > Hobj + eps:
            a2n = H
        else:
            a2n = a2
    if abs(a2n - a2) < eps * (a2n + a2 + eps):
        return False
    a1n = a1 + s * (a2 - a2n)
    if a1n < 0.0:
        a2n += s * a1n
        a1n = 0.0
    elif a1n > C:
        a2n += s * (a1n - C)
        a1n = C
    b1 = E1 + y1 * (a1n - a1) * k11 + y2 * (a2n - a2) * k12 + b
    b2 = E2 + y1 * (a1n - a1) * k12 + y2 * (a2n - a2) * k22 + b
    if 0.0 < a1n < C:
        bb[0] = b1
    elif 0.0 < a2n < C:
        bb[0] = b2
    else:
        bb[0] = 0.5 * (b1 + b2)
    d1 = y1 * (a1n - a1)
    d2 = y2 * (a2n - a2)
    for j in range(X.shape[1]):
        w[j] += d1 * X[i1, j] + d2 * X[i2, j]
    alpha[i1] = a1n
    alpha[i2] = a2n
    return True


@njit(cache=True)
def _examine(i2, X, y, alpha, w, bb, C, tol, eps):
    n = X.shape[0]
    y2 = y[i2]
    a2 = alpha[i2]
    E2 = _f(X, w, bb[0], i2) - y2
    r2 = E2 * y2
    if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
        return 0
    # second-choice heuristic over non-bound multipliers
    best = -1
    best_gap = -1.0
    n_nonbound = 0
    for i in range(n):
        if 0.0 < alpha[i] < C:
            n_nonbound += 1
            gap = abs(_f(X, w, bb[0], i) - y[i] - E2)
            if gap > best_gap:
                best_gap = gap
                best = i
    if n_nonbound > 1 and best >= 0:
        if _take_step(best, i2, X, y, alpha, w, bb, C, eps):
            return 1
    start = np.random.randint(0, n)
    for k in range(n):
        i1 = (start + k) % n
        if 0.0 < alpha[i1] < C:
            if _take_step(i1, i2, X, y, alpha, w, bb, C, eps):
                return 1
    start = np.random.randint(0, n)
    for k in range(n):
        i1 = (start + k) % n
        if _take_step(i1, i2, X, y, alpha, w, bb, C, eps):
            return 1
    return 0


@njit(cache=True)
def smo_linear(X, y, C, tol, eps, max_passes, seed):
    np.random.seed(seed)
    n, m = X.shape
    alpha = np.zeros(n)
    w = np.zeros(m)
    bb = np.zeros(1)
    examine_all = True
    changed = 0
    passes = 0
    while (changed > 0 or examine_all) and passes < max_passes:
        changed = 0
        if examine_all:
            for i in range(n):
                changed += _examine(i, X, y, alpha, w, bb, C, tol, eps)
        else:
            for i in range(n):
                if 0.0 < alpha[i] < C:
                    changed += _examine(i, X, y, alpha, w, bb, C, tol, eps)
        if examine_all:
            examine_all = False
        elif changed == 0:
            examine_all = True
        passes += 1
    return w, bb[0], alpha, passes


class LinearSVM(TrainedModel):
    """Soft-margin linear SVM; scores are signed decision values (no Platt scaling).

    Attributes are min-max normalized on the training data before optimization.
    """

    def __init__(self, spec, data):
        self.spec = spec
        hp = spec.hyperparameters
        X = data.rows
        self.n_features = X.shape[1]
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        self.lo = lo
        self.span = np.where(span > 0, span, 1.0)
        Z = np.ascontiguousarray((X - self.lo) / self.span)
        y = np.where(data.labels == 1, 1.0, -1.0)
        self.w, self.b, alpha, self.passes = smo_linear(
            Z, y, float(hp.get("C", 1.0)), float(hp.get("tol", 1e-3)),
            float(hp.get("eps", 1e-12)), int(hp.get("max_passes", 100_000)), int(spec.seed))
        self.n_support = int(np.count_nonzero(alpha))

    def _score(self, X):
        return ((X - self.lo) / self.span) @ self.w - self.b
