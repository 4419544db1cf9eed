"""Numba kernels for binary decision trees on continuous attributes.

A tree is stored as flat arrays (feature, threshold, left, right, value); a node
with feature == -1 is a leaf whose value is the positive-class frequency. Rows go
left when ``x[feature] <= threshold``.
"""
import numpy as np
from numba import njit

GAIN = 0
GAIN_RATIO = 1


@njit(cache=True)
def _entropy(pos, n):
    if n <= 0.0 or pos <= 0.0 or pos >= n:
        return 0.0
    p = pos / n
    return -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))


@njit(cache=True)
def _best_threshold(rk, ys, uniq, n_uniq, min_leaf, total_pos, cnt_buf, pos_buf):
    """Best info-gain cut of one attribute given dense value ranks of the node rows.

    Returns (gain, threshold, n_left); gain is -1 when no admissible cut exists.
    """
    n = rk.shape[0]
    parent = _entropy(total_pos, n)
    best_gain = -1.0
    best_thr = 0.0
    best_left = 0
    if n_uniq <= n:
        for u in range(n_uniq):
            cnt_buf[u] = 0.0
            pos_buf[u] = 0.0
        for i in range(n):
            cnt_buf[rk[i]] += 1.0
            pos_buf[rk[i]] += ys[i]
        nl = 0.0
        left_pos = 0.0
        prev = -1
        for u in range(n_uniq):
            c = cnt_buf[u]
            if c == 0.0:
                continue
            if prev >= 0 and nl >= min_leaf and n - nl >= min_leaf:
                nr = n - nl
                child = (nl * _entropy(left_pos, nl) + nr * _entropy(total_pos - left_pos, nr)) / n
                gain = parent - child
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    v0 = uniq[prev]
                    v1 = uniq[u]
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
                    best_left = int(nl)
            nl += c
            left_pos += pos_buf[u]
            prev = u
        return best_gain, best_thr, best_left
    order = np.argsort(rk, kind="mergesort")
    left_pos = 0.0
    for i in range(n - 1):
        left_pos += ys[order[i]]
        nl = i + 1
        if nl < min_leaf:
            continue
        if n - nl < min_leaf:
            break
        r0 = rk[order[i]]
        r1 = rk[order[i + 1]]
        if r0 == r1:
            continue
        nr = n - nl
        child = (nl * _entropy(left_pos, nl) + nr * _entropy(total_pos - left_pos, nr)) / n
        gain = parent - child
        if gain > best_gain + 1e-12:
            best_gain = gain
            v0 = uniq[r0]
            v1 = uniq[r1]
            thr = 0.5 * (v0 + v1)
            if thr >= v1:
                thr = v0
            best_thr = thr
            best_left = nl
    return best_gain, best_thr, best_left


def dense_ranks(X):
    """Per-feature dense ranks (m x n), padded sorted unique values and their counts."""
    n, m = X.shape
    ranks = np.empty((m, n), np.int64)
    n_uniq = np.empty(m, np.int64)
    uniques = []
    for f in range(m):
        u, inv = np.unique(X[:, f], return_inverse=True)
        ranks[f] = inv
        n_uniq[f] = u.shape[0]
        uniques.append(u)
    uniq = np.zeros((m, int(n_uniq.max()) if m else 1))
    for f, u in enumerate(uniques):
        uniq[f, :u.shape[0]] = u
    return ranks, uniq, n_uniq


@njit(cache=True)
def _split_info(nl, n):
    return _entropy(float(nl), float(n))


@njit(cache=True)
def grow_tree(X, y, idx, ranks, uniq, n_uniq, max_features, min_leaf, max_depth, criterion):
    """Grow one tree over rows ``idx`` of X. Uses numba's global RNG (seed it first)."""
    n_rows = idx.shape[0]
    m = X.shape[1]
    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    work = idx.copy()
    # stack entries: node, start, end, depth
    stack = np.empty((cap, 4), np.int64)
    sp = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_rows
    stack[0, 3] = 0
    sp = 1
    n_nodes = 1
    gains = np.empty(m)
    thrs = np.empty(m)
    feats = np.empty(m, np.int64)
    nls = np.empty(m, np.int64)
    cnt_buf = np.empty(uniq.shape[1])
    pos_buf = np.empty(uniq.shape[1])
    rk = np.empty(n_rows, np.int64)
    while sp > 0:
        sp -= 1
        node = stack[sp, 0]
        start = stack[sp, 1]
        end = stack[sp, 2]
        depth = stack[sp, 3]
        cnt = end - start
        pos = 0.0
        for i in range(start, end):
            pos += y[work[i]]
        value[node] = pos / cnt
        if pos == 0.0 or pos == cnt or cnt < 2 * min_leaf or depth >= max_depth:
            continue
        rows = work[start:end]
        ys = np.empty(cnt)
        for i in range(cnt):
            ys[i] = y[rows[i]]
        if max_features < m:
            order = np.random.permutation(m)
        else:
            order = np.arange(m)
        n_eval = 0
        found = False
        best_f = -1
        best_score = -1.0
        for k in range(m):
            if n_eval >= max_features and found:
                break
            f = order[k]
            for i in range(cnt):
                rk[i] = ranks[f, rows[i]]
            g, t, nl = _best_threshold(rk[:cnt], ys, uniq[f], n_uniq[f], min_leaf, pos,
                                       cnt_buf, pos_buf)
            gains[n_eval] = g
            thrs[n_eval] = t
            feats[n_eval] = f
            nls[n_eval] = nl
            n_eval += 1
            if g > 1e-12:
                found = True
                if criterion == GAIN and g > best_score + 1e-12:
                    best_score = g
                    best_f = f
        if not found:
            continue
        if criterion == GAIN_RATIO:
            # candidates must reach the average gain of the usable attributes
            total = 0.0
            usable = 0
            for k in range(n_eval):
                if gains[k] > 1e-12:
                    total += gains[k]
                    usable += 1
            avg = total / usable
            for k in range(n_eval):
                g = gains[k]
                if g <= 1e-12 or g < avg - 1e-12:
                    continue
                si = _split_info(nls[k], cnt)
                ratio = g / si if si > 0 else 0.0
                if ratio > best_score + 1e-12:
                    best_score = ratio
                    best_f = feats[k]
        thr = 0.0
        for k in range(n_eval):
            if feats[k] == best_f:
                thr = thrs[k]
        # partition work[start:end] in place
        i = start
        j = end - 1
        while i <= j:
            if X[work[i], best_f] <= thr:
                i += 1
            else:
                tmp = work[i]
                work[i] = work[j]
                work[j] = tmp
                j -= 1
        mid = i
        if mid == start or mid == end:
            continue
        feature[node] = best_f
        threshold[node] = thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        stack[sp, 0] = rnode
        stack[sp, 1] = mid
        stack[sp, 2] = end
        stack[sp, 3] = depth + 1
        sp += 1
        stack[sp, 0] = lnode
        stack[sp, 1] = start
        stack[sp, 2] = mid
        stack[sp, 3] = depth + 1
        sp += 1
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right, value, offset):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = offset
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = offset + left[node]
            else:
                node = offset + right[node]
        out[r] = value[node]
    return out


@njit(cache=True)
def seed_numba(seed):
    np.random.seed(seed)


@njit(cache=True)
def grow_forest(X, y, ranks, uniq, n_uniq, n_trees, max_features, min_leaf, max_depth, seed):
    """Bootstrap forest; returns concatenated node arrays plus per-tree offsets."""
    np.random.seed(seed)
    n = X.shape[0]
    parts = []
    offsets = np.zeros(n_trees + 1, np.int64)
    for t in range(n_trees):
        idx = np.random.randint(0, n, n).astype(np.int64)
        tree = grow_tree(X, y, idx, ranks, uniq, n_uniq, max_features, min_leaf, max_depth,
                         GAIN)
        parts.append(tree)
        offsets[t + 1] = offsets[t] + tree[0].shape[0]
    total = offsets[n_trees]
    feature = np.empty(total, np.int64)
    threshold = np.empty(total)
    left = np.empty(total, np.int64)
    right = np.empty(total, np.int64)
    value = np.empty(total)
    for t in range(n_trees):
        a = offsets[t]
        b = offsets[t + 1]
        f, th, l, r, v = parts[t]
        feature[a:b] = f
        threshold[a:b] = th
        left[a:b] = l
        right[a:b] = r
        value[a:b] = v
    return feature, threshold, left, right, value, offsets


@njit(cache=True)
def forest_votes(X, feature, threshold, left, right, value, offsets):
    """Fraction of trees voting positive (a 0.5 leaf counts as half a vote)."""
    n_trees = offsets.shape[0] - 1
    out = np.zeros(X.shape[0])
    for t in range(n_trees):
        leaf = apply_tree(X, feature, threshold, left, right, value, offsets[t])
        for r in range(X.shape[0]):
            if leaf[r] > 0.5:
                out[r] += 1.0
            elif leaf[r] == 0.5:
                out[r] += 0.5
    return out / n_trees
