"""Flat-array regression trees with exact greedy split search.

Feature columns are integer-coded once per ensemble fit (codes index the
sorted distinct values), so per-node statistics reduce to bincounts and
prefix sums over code bins.  This is exact greedy search, not histogram
binning: every observed value boundary is a candidate, and the stored
threshold is the midpoint of the two observed values it separates, so it
lies strictly between them.  Routing is ``x < threshold`` goes left.

Split gain follows the second-order formulation

    gain = 1/2 [ GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam) ] - gamma

with leaf weight -G/(H+lam).  Least-squares tree fitting is the special
case h = 1, lam = 0 (the leaf is then the mean residual).
"""

from dataclasses import dataclass, field

import numpy as np


def encode_columns(X):
    """Integer-code each column; returns (codes int32, list of value arrays)."""
    X = np.asarray(X, dtype=float)
    codes = np.empty(X.shape, dtype=np.int32)
    values = []
    for j in range(X.shape[1]):
        vals, inv = np.unique(X[:, j], return_inverse=True)
        codes[:, j] = inv
        values.append(vals)
    return codes, values


@dataclass
class GrowParams:
    max_depth: int = 3
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    reg_lambda: float = 0.0
    gamma: float = 0.0
    # candidate features per split (None = all); mutually exclusive in
    # practice with a fixed per-tree subset passed to grow_tree
    max_features: int | None = None


@dataclass
class TreeArrays:
    """Binary tree as parallel arrays; node 0 is the root, -1 marks a leaf."""

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    n_features: int
    leaf_rows: list = field(default_factory=list)  # training row indices per node (leaves only)

    @property
    def n_nodes(self):
        return self.children_left.shape[0]

    def apply(self, X):
        """Leaf index for each row of X."""
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = X[rows, feat[rows]] < self.threshold[nd]
            node[rows] = np.where(
                go_left, self.children_left[nd], self.children_right[nd]
            )

    def predict(self, X):
        return self.value[self.apply(X)]

    def split_feature_counts(self):
        used = self.feature[self.feature >= 0]
        return np.bincount(used, minlength=self.n_features)

    def max_depth(self):
        depth = {0: 0}
        out = 0
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.children_left[i]] = depth[i] + 1
                depth[self.children_right[i]] = depth[i] + 1
            else:
                out = max(out, depth[i])
        return out


class _Builder:
    __slots__ = ("children_left", "children_right", "feature", "threshold",
                 "value", "cover", "leaf_rows")

    def __init__(self):
        self.children_left = []
        self.children_right = []
        self.feature = []
        self.threshold = []
        self.value = []
        self.cover = []
        self.leaf_rows = []

    def add(self):
        for lst, default in (
            (self.children_left, -1),
            (self.children_right, -1),
            (self.feature, -1),
            (self.threshold, np.nan),
            (self.value, 0.0),
            (self.cover, 0.0),
            (self.leaf_rows, None),
        ):
            lst.append(default)
        return len(self.feature) - 1

    def build(self, n_features, keep_rows):
        return TreeArrays(
            np.asarray(self.children_left, dtype=np.int32),
            np.asarray(self.children_right, dtype=np.int32),
            np.asarray(self.feature, dtype=np.int32),
            np.asarray(self.threshold, dtype=float),
            np.asarray(self.value, dtype=float),
            np.asarray(self.cover, dtype=float),
            n_features,
            self.leaf_rows if keep_rows else [],
        )


def _best_split_for_feature(codes_j, n_bins, g, h, params, total):
    n, g_sum, h_sum = total
    cnt = np.bincount(codes_j, minlength=n_bins)
    gb = np.bincount(codes_j, weights=g, minlength=n_bins)
    hb = np.bincount(codes_j, weights=h, minlength=n_bins)
    c_cnt = np.cumsum(cnt)
    c_g = np.cumsum(gb)
    c_h = np.cumsum(hb)
    lam = params.reg_lambda
    valid = (
        (cnt > 0)
        & (c_cnt >= params.min_samples_leaf)
        & (n - c_cnt >= params.min_samples_leaf)
        & (c_cnt < n)
    )
    if not valid.any():
        return None
    parent = g_sum**2 / (h_sum + lam) if (h_sum + lam) > 0 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(c_h + lam > 0, c_g**2 / (c_h + lam), 0.0)
        right_h = h_sum - c_h
        right = np.where(right_h + lam > 0, (g_sum - c_g) ** 2 / (right_h + lam), 0.0)
    gain = 0.5 * (left + right - parent) - params.gamma
    gain[~valid] = -np.inf
    b = int(np.argmax(gain))
    if not np.isfinite(gain[b]) or gain[b] <= 0.0:
        return None
    return float(gain[b]), b


def grow_tree(codes, values, g, h, params, rng, feature_subset=None, keep_rows=False):
    """Grow one tree on integer-coded features.

    ``g``/``h`` are per-row gradient statistics in the loss convention
    (leaf weight -G/(H+lambda)).  ``feature_subset`` fixes the candidate
    set for every split; otherwise ``params.max_features`` candidates are
    drawn fresh at each split.  Ties break toward the first candidate and
    the smallest threshold, so growth is deterministic given the rng.
    """
    codes = np.asarray(codes)
    n, p = codes.shape
    builder = _Builder()
    root = builder.add()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        g_node = g[rows]
        h_node = h[rows]
        g_sum = float(g_node.sum())
        h_sum = float(h_node.sum())
        builder.cover[node] = float(rows.size)

        split = None
        if depth < params.max_depth and rows.size >= params.min_samples_split:
            if feature_subset is not None:
                candidates = feature_subset
            elif params.max_features is not None and params.max_features < p:
                candidates = rng.choice(p, size=params.max_features, replace=False)
            else:
                candidates = np.arange(p)
            best_gain = 0.0
            for j in candidates:
                found = _best_split_for_feature(
                    codes[rows, j], len(values[j]), g_node, h_node, params,
                    (rows.size, g_sum, h_sum),
                )
                if found is not None and found[0] > best_gain:
                    best_gain, bin_idx = found
                    split = (int(j), bin_idx)

        if split is None:
            denom = h_sum + params.reg_lambda
            builder.value[node] = -g_sum / denom if denom > 0 else 0.0
            if keep_rows:
                builder.leaf_rows[node] = rows
            continue

        j, b = split
        col = codes[rows, j]
        vals_j = values[j]
        right_bins = np.unique(col[col > b])
        threshold = 0.5 * (vals_j[b] + vals_j[right_bins[0]])
        left_mask = col <= b
        left_node = builder.add()
        right_node = builder.add()
        builder.feature[node] = j
        builder.threshold[node] = threshold
        builder.children_left[node] = left_node
        builder.children_right[node] = right_node
        stack.append((right_node, rows[~left_mask], depth + 1))
        stack.append((left_node, rows[left_mask], depth + 1))

    return builder.build(p, keep_rows)
