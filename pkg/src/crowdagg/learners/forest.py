"""Random forest of CART trees (Gini impurity, bootstrap, random feature subsets).

Tree growing and traversal are compiled with numba; the leave-one-out
protocols fit hundreds of thousands of trees, so this is the hot path of the
whole package.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .base import Classifier


@njit(cache=True)
def _grow_tree(X, y, w, order, n_classes, mtry, max_depth, min_leaf, feat, thr, left, right, leaf, base):
    """Grow one tree into the node arrays starting at offset ``base``.

    ``w`` holds integer sample weights (bootstrap counts); rows with weight 0
    are ignored. ``order[f]`` is the argsort of column ``f`` over all rows.
    Each node owns the same segment of every per-feature sorted sample list;
    splitting partitions all lists stably, so no sorting happens below the
    root. Returns the number of nodes written.
    """
    n, d = X.shape
    n_used = 0
    for i in range(n):
        if w[i] > 0:
            n_used += 1
    srt = np.empty((d, n_used), dtype=np.int64)
    for f in range(d):
        k = 0
        for i in range(n):
            s = order[f, i]
            if w[s] > 0:
                srt[f, k] = s
                k += 1

    features = np.arange(d)
    counts = np.zeros(n_classes, dtype=np.float64)
    lc = np.zeros(n_classes, dtype=np.float64)
    buf = np.empty(n_used, dtype=np.int64)
    goes_left = np.zeros(n, dtype=np.bool_)

    # stack entries: node id, start, end, depth
    stack = np.empty((2 * n_used + 2, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_used
    stack[0, 3] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = stack[sp, 0]
        start = stack[sp, 1]
        end = stack[sp, 2]
        depth = stack[sp, 3]
        at = base + node

        counts[:] = 0.0
        for t in range(start, end):
            s = srt[0, t]
            counts[y[s]] += w[s]
        total = 0.0
        best_c = 0
        n_nonzero = 0
        for c in range(n_classes):
            total += counts[c]
            if counts[c] > counts[best_c]:
                best_c = c
            if counts[c] > 0:
                n_nonzero += 1

        feat[at] = -1
        thr[at] = 0.0
        left[at] = -1
        right[at] = -1
        leaf[at] = best_c

        m = end - start
        if n_nonzero <= 1 or m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        best_score = -1.0
        best_f = -1
        best_t = 0.0
        visited = 0
        for j in range(d):
            # partial Fisher-Yates: draw the next candidate feature
            r = j + np.random.randint(0, d - j)
            tmp = features[j]
            features[j] = features[r]
            features[r] = tmp
            f = features[j]

            if X[srt[f, start], f] == X[srt[f, end - 1], f]:
                continue
            visited += 1

            lc[:] = 0.0
            wl = 0.0
            for t in range(m - 1):
                s = srt[f, start + t]
                lc[y[s]] += w[s]
                wl += w[s]
                v0 = X[s, f]
                v1 = X[srt[f, start + t + 1], f]
                if v0 == v1:
                    continue
                if t + 1 < min_leaf or m - t - 1 < min_leaf:
                    continue
                wr = total - wl
                sl = 0.0
                sr = 0.0
                for c in range(n_classes):
                    sl += lc[c] * lc[c]
                    rc = counts[c] - lc[c]
                    sr += rc * rc
                score = sl / wl + sr / wr
                if score > best_score:
                    best_score = score
                    best_f = f
                    mid = 0.5 * (v0 + v1)
                    if mid >= v1:
                        mid = v0
                    best_t = mid
            if visited >= mtry:
                break

        if best_f < 0:
            continue

        nl = 0
        for t in range(start, end):
            s = srt[0, t]
            g = X[s, best_f] <= best_t
            goes_left[s] = g
            if g:
                nl += 1
        for f in range(d):
            a = start
            b = 0
            for t in range(start, end):
                s = srt[f, t]
                if goes_left[s]:
                    srt[f, a] = s
                    a += 1
                else:
                    buf[b] = s
                    b += 1
            for t in range(b):
                srt[f, a + t] = buf[t]

        feat[at] = best_f
        thr[at] = best_t
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[at] = lnode
        right[at] = rnode
        stack[sp, 0] = rnode
        stack[sp, 1] = start + nl
        stack[sp, 2] = end
        stack[sp, 3] = depth + 1
        sp += 1
        stack[sp, 0] = lnode
        stack[sp, 1] = start
        stack[sp, 2] = start + nl
        stack[sp, 3] = depth + 1
        sp += 1
    return n_nodes


@njit(cache=True)
def _grow_forest(X, y, n_classes, n_trees, mtry, max_depth, min_leaf, bootstrap, seeds):
    n, d = X.shape
    order = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        order[f] = np.argsort(X[:, f], kind="mergesort")
    cap = 2 * n + 1
    feat = np.empty(n_trees * cap, dtype=np.int64)
    thr = np.empty(n_trees * cap, dtype=np.float64)
    left = np.empty(n_trees * cap, dtype=np.int64)
    right = np.empty(n_trees * cap, dtype=np.int64)
    leaf = np.empty(n_trees * cap, dtype=np.int64)
    offsets = np.empty(n_trees + 1, dtype=np.int64)
    inbag = np.zeros((n_trees, n), dtype=np.int32)
    w = np.empty(n, dtype=np.int64)
    pos = 0
    for t in range(n_trees):
        np.random.seed(seeds[t])
        if bootstrap:
            w[:] = 0
            for i in range(n):
                w[np.random.randint(0, n)] += 1
        else:
            w[:] = 1
        for i in range(n):
            inbag[t, i] = w[i]
        offsets[t] = pos
        used = _grow_tree(X, y, w, order, n_classes, mtry, max_depth, min_leaf, feat, thr, left, right, leaf, pos)
        pos += used
    offsets[n_trees] = pos
    return feat[:pos].copy(), thr[:pos].copy(), left[:pos].copy(), right[:pos].copy(), leaf[:pos].copy(), offsets, inbag


@njit(cache=True)
def _forest_votes(X, feat, thr, left, right, leaf, offsets, n_classes):
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    votes = np.zeros((n, n_classes), dtype=np.float64)
    for i in range(n):
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while feat[base + node] >= 0:
                if X[i, feat[base + node]] <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            votes[i, leaf[base + node]] += 1.0
    return votes


def tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    s = int(seed) % 2**64
    ss = np.random.SeedSequence([s & 0xFFFFFFFF, s >> 32, 0x52F])
    return ss.generate_state(n_trees, dtype=np.uint32).astype(np.int64)


class RandomForest(Classifier):
    """Bagged CART trees; ``predict_proba`` is the fraction of trees voting each class."""

    kind = "RF"

    def __init__(self, seed=0, n_trees=100, max_features="sqrt", max_depth=None, min_leaf=1, bootstrap=True):
        super().__init__(
            seed,
            n_trees=n_trees,
            max_features=max_features,
            max_depth=max_depth,
            min_leaf=min_leaf,
            bootstrap=bootstrap,
        )
        self.n_trees = int(n_trees)
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_leaf = int(min_leaf)
        self.bootstrap = bool(bootstrap)
        self.inbag_: np.ndarray | None = None

    def _mtry(self, d: int) -> int:
        mf = self.max_features
        if mf is None:
            return d
        if mf == "sqrt":
            return max(1, math.ceil(math.sqrt(d)))
        if mf == "log2":
            return max(1, math.ceil(math.log2(d))) if d > 1 else 1
        if isinstance(mf, float):
            return max(1, min(d, math.ceil(mf * d)))
        return max(1, min(d, int(mf)))

    def _fit(self, X, y):
        depth = -1 if self.max_depth is None else int(self.max_depth)
        out = _grow_forest(
            np.ascontiguousarray(X),
            y,
            len(self.classes_),
            self.n_trees,
            self._mtry(X.shape[1]),
            depth,
            self.min_leaf,
            self.bootstrap,
            tree_seeds(self.seed, self.n_trees),
        )
        self.feat_, self.thr_, self.left_, self.right_, self.leaf_, self.offsets_, self.inbag_ = out

    def tree_votes(self, X) -> np.ndarray:
        return _forest_votes(
            np.ascontiguousarray(X, dtype=float),
            self.feat_,
            self.thr_,
            self.left_,
            self.right_,
            self.leaf_,
            self.offsets_,
            len(self.classes_),
        )

    def _predict_proba(self, X):
        return self.tree_votes(X) / self.n_trees

    def get_state(self):
        return {
            "feat": self.feat_.tolist(),
            "thr": self.thr_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "leaf": self.leaf_.tolist(),
            "offsets": self.offsets_.tolist(),
        }

    def set_state(self, state):
        self.feat_ = np.asarray(state["feat"], dtype=np.int64)
        self.thr_ = np.asarray(state["thr"], dtype=np.float64)
        self.left_ = np.asarray(state["left"], dtype=np.int64)
        self.right_ = np.asarray(state["right"], dtype=np.int64)
        self.leaf_ = np.asarray(state["leaf"], dtype=np.int64)
        self.offsets_ = np.asarray(state["offsets"], dtype=np.int64)
