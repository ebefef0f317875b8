"""From-scratch gradient-boosted decision trees (binary logistic
objective, Newton boosting, histogram splits) and a random-forest
baseline sharing the same tree grower.

Missing feature values are first-class: each split learns which side
missing rows go to by trying both and keeping the gain-maximizing one.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import expit

from .config import ForestConfig, TrainConfig

# ---------------------------------------------------------------------------
# Feature binning


@dataclass
class BinMapper:
    """Per-feature histogram bin edges fitted on training data.

    If a feature has at most n_bins distinct values the edges are the
    midpoints between consecutive distinct values, so histogram splits
    coincide with exact greedy splits. Otherwise edges come from sample
    quantiles. Bin b holds values x with edges[b-1] < x <= edges[b];
    missing values map to bin -1.
    """

    n_bins: int
    edges: list[np.ndarray] = field(default_factory=list)

    def fit(self, X: np.ndarray) -> "BinMapper":
        self.edges = []
        for f in range(X.shape[1]):
            col = X[:, f]
            vals = col[np.isfinite(col)]
            distinct = np.unique(vals)
            if distinct.size <= 1:
                self.edges.append(np.empty(0, dtype=np.float64))
            elif distinct.size <= self.n_bins:
                self.edges.append((distinct[:-1] + distinct[1:]) / 2.0)
            else:
                qs = np.quantile(vals, np.arange(1, self.n_bins) / self.n_bins)
                self.edges.append(np.unique(qs))
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        binned = np.empty(X.shape, dtype=np.int32)
        for f, edges in enumerate(self.edges):
            col = X[:, f]
            miss = ~np.isfinite(col)
            binned[:, f] = np.searchsorted(edges, col, side="left")
            binned[miss, f] = -1
        return binned

    def bins_per_feature(self) -> np.ndarray:
        return np.array([e.size + 1 for e in self.edges], dtype=np.int64)


@njit(cache=True)
def _build_hist(binned, g, h, idx, feature_ids, max_bins):
    n_f = feature_ids.shape[0]
    hg = np.zeros((n_f, max_bins), dtype=np.float64)
    hh = np.zeros((n_f, max_bins), dtype=np.float64)
    hc = np.zeros((n_f, max_bins), dtype=np.int64)
    mg = np.zeros(n_f, dtype=np.float64)
    mh = np.zeros(n_f, dtype=np.float64)
    mc = np.zeros(n_f, dtype=np.int64)
    for jj in range(idx.shape[0]):
        i = idx[jj]
        gi = g[i]
        hi = h[i]
        for ff in range(n_f):
            b = binned[i, feature_ids[ff]]
            if b < 0:
                mg[ff] += gi
                mh[ff] += hi
                mc[ff] += 1
            else:
                hg[ff, b] += gi
                hh[ff, b] += hi
                hc[ff, b] += 1
    return hg, hh, hc, mg, mh, mc


# ---------------------------------------------------------------------------
# Tree structure


@dataclass
class Tree:
    feature: np.ndarray  # int32, -1 for leaves
    threshold: np.ndarray  # float64
    missing_left: np.ndarray  # bool
    left: np.ndarray  # int32, -1 for leaves
    right: np.ndarray  # int32
    value: np.ndarray  # float64 leaf values
    is_leaf: np.ndarray  # bool
    gain: np.ndarray  # float64 split gain, 0 for leaves
    n_samples: np.ndarray  # int64

    @property
    def n_leaves(self) -> int:
        return int(self.is_leaf.sum())


def tree_apply(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Leaf value per row; missing values follow stored directions."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        pending = np.flatnonzero(~tree.is_leaf[node])
        if pending.size == 0:
            return tree.value[node]
        nd = node[pending]
        x = X[pending, tree.feature[nd]]
        miss = np.isnan(x)
        with np.errstate(invalid="ignore"):
            go_left = np.where(miss, tree.missing_left[nd], x <= tree.threshold[nd])
        node[pending] = np.where(go_left, tree.left[nd], tree.right[nd])


class _TreeBuilder:
    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.missing_left: list[bool] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.is_leaf: list[bool] = []
        self.gain: list[float] = []
        self.n_samples: list[int] = []

    def add_node(self, value: float, n_samples: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.missing_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.is_leaf.append(True)
        self.gain.append(0.0)
        self.n_samples.append(n_samples)
        return len(self.feature) - 1

    def make_internal(self, node, feature, threshold, missing_left, left, right, gain) -> None:
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.missing_left[node] = missing_left
        self.left[node] = left
        self.right[node] = right
        self.is_leaf[node] = False
        self.gain[node] = gain

    def freeze(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            missing_left=np.asarray(self.missing_left, dtype=bool),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
            is_leaf=np.asarray(self.is_leaf, dtype=bool),
            gain=np.asarray(self.gain, dtype=np.float64),
            n_samples=np.asarray(self.n_samples, dtype=np.int64),
        )


@dataclass(frozen=True)
class _Split:
    gain: float
    feature: int
    bin: int
    threshold: float
    missing_left: bool


@njit(cache=True)
def _best_split_kernel(
    hg, hh, hc, mg, mh, mc, nb_arr, feature_ids,
    min_samples_leaf, min_gain, reg_lambda,
):
    """Scan all candidate (feature, bin, missing-direction) splits.

    Gain is the Newton objective reduction
    0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)). Ties keep the first
    candidate in (feature, missing-left-first, bin) order.
    """
    best_gain = -np.inf
    best_ff = -1
    best_bin = -1
    best_ml = False
    for ff in range(feature_ids.shape[0]):
        nb = nb_arr[feature_ids[ff]]
        if nb < 2:
            continue
        g_tot = mg[ff]
        h_tot = mh[ff]
        c_tot = mc[ff]
        for b in range(nb):
            g_tot += hg[ff, b]
            h_tot += hh[ff, b]
            c_tot += hc[ff, b]
        denom_p = h_tot + reg_lambda
        parent = g_tot * g_tot / denom_p if denom_p > 0 else 0.0
        for case in range(2):
            ml = case == 0
            gl = mg[ff] if ml else 0.0
            hl = mh[ff] if ml else 0.0
            cl = mc[ff] if ml else 0
            for b in range(nb - 1):
                gl += hg[ff, b]
                hl += hh[ff, b]
                cl += hc[ff, b]
                cr = c_tot - cl
                if cl < min_samples_leaf or cr < min_samples_leaf:
                    continue
                dl = hl + reg_lambda
                dr = (h_tot - hl) + reg_lambda
                if dl <= 0 or dr <= 0:
                    continue
                gr = g_tot - gl
                gain = 0.5 * (gl * gl / dl + gr * gr / dr - parent)
                if gain > min_gain and gain > best_gain:
                    best_gain = gain
                    best_ff = ff
                    best_bin = b
                    best_ml = ml
    return best_gain, best_ff, best_bin, best_ml


def _find_best_split(
    binned, g, h, idx, feature_ids, nb_per_feature, edges, max_bins,
    min_samples_leaf, min_gain, reg_lambda,
):
    hg, hh, hc, mg, mh, mc = _build_hist(binned, g, h, idx, feature_ids, max_bins)
    gain, ff, b, ml = _best_split_kernel(
        hg, hh, hc, mg, mh, mc, nb_per_feature, feature_ids,
        min_samples_leaf, float(min_gain), float(reg_lambda),
    )
    if ff < 0:
        return None
    f = int(feature_ids[ff])
    return _Split(gain=float(gain), feature=f, bin=int(b), threshold=float(edges[f][b]), missing_left=bool(ml))


def _grow_tree(
    binned, nb_per_feature, edges, g, h, idx, *,
    max_leaves, min_samples_leaf, min_gain, reg_lambda, leaf_scale, max_bins,
    feature_sampler=None, n_features=None,
):
    """Best-first leaf expansion until max_leaves or no positive-gain
    split remains. Returns the tree, per-feature (gain, split count)
    accumulators, and the list of (sample indices, value) leaf slots."""
    builder = _TreeBuilder()
    all_features = np.arange(n_features, dtype=np.int64)
    feat_gain = np.zeros(n_features, dtype=np.float64)
    feat_count = np.zeros(n_features, dtype=np.int64)
    leaf_slots: list[tuple[np.ndarray, float]] = []

    def leaf_value(node_idx: np.ndarray) -> float:
        gs = float(g[node_idx].sum())
        hs = float(h[node_idx].sum())
        denom = hs + reg_lambda
        return (-gs / denom) * leaf_scale if denom > 0 else 0.0

    def candidates(node_idx: np.ndarray):
        feats = feature_sampler() if feature_sampler is not None else all_features
        return _find_best_split(
            binned, g, h, node_idx, feats, nb_per_feature, edges, max_bins,
            min_samples_leaf, min_gain, reg_lambda,
        )

    root = builder.add_node(leaf_value(idx), idx.shape[0])
    heap: list[tuple[float, int, int]] = []
    pending: dict[int, tuple[_Split, np.ndarray]] = {}
    counter = 0
    split = candidates(idx) if idx.shape[0] >= 2 * min_samples_leaf else None
    if split is None:
        leaf_slots.append((idx, builder.value[root]))
    else:
        heapq.heappush(heap, (-split.gain, counter, root))
        pending[root] = (split, idx)
        counter += 1

    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, _, node = heapq.heappop(heap)
        split, node_idx = pending.pop(node)
        b = binned[node_idx, split.feature]
        left_mask = np.where(b >= 0, b <= split.bin, split.missing_left)
        left_idx = node_idx[left_mask]
        right_idx = node_idx[~left_mask]
        left = builder.add_node(leaf_value(left_idx), left_idx.shape[0])
        right = builder.add_node(leaf_value(right_idx), right_idx.shape[0])
        builder.make_internal(
            node, split.feature, split.threshold, split.missing_left, left, right, split.gain
        )
        feat_gain[split.feature] += split.gain
        feat_count[split.feature] += 1
        n_leaves += 1
        for child, child_idx in ((left, left_idx), (right, right_idx)):
            child_split = candidates(child_idx) if child_idx.shape[0] >= 2 * min_samples_leaf else None
            if child_split is None:
                leaf_slots.append((child_idx, builder.value[child]))
            else:
                heapq.heappush(heap, (-child_split.gain, counter, child))
                pending[child] = (child_split, child_idx)
                counter += 1

    # nodes still on the heap stay leaves
    for node, (_, node_idx) in pending.items():
        leaf_slots.append((node_idx, builder.value[node]))
    return builder.freeze(), feat_gain, feat_count, leaf_slots


# ---------------------------------------------------------------------------
# Models


@dataclass
class GbdtModel:
    base_score: float
    trees: list[Tree]
    feature_names: list[str]
    config: TrainConfig
    feature_gain: np.ndarray
    feature_split_count: np.ndarray
    train_loss: list[float]
    kind: str = "gbdt"


@dataclass
class ForestModel:
    trees: list[Tree]
    feature_names: list[str]
    config: ForestConfig
    feature_gain: np.ndarray
    feature_split_count: np.ndarray
    oob_prediction: np.ndarray | None = None
    kind: str = "rf"


def _validate_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("X must be a 2-d matrix with at least one feature")
    y = np.asarray(y)
    if np.any(np.isnan(y.astype(np.float64))):
        raise ValueError("NaN in y")
    y = y.astype(np.int64)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("y must be binary 0/1")
    if y.min() == y.max():
        raise ValueError("degenerate labels: only one class present")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y length mismatch")
    return X, y


def _logistic_loss(raw: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    # sum_i w_i * (softplus(raw_i) - y_i * raw_i), numerically stable
    softplus = np.maximum(raw, 0.0) + np.log1p(np.exp(-np.abs(raw)))
    return float(np.sum(w * (softplus - y * raw)))


def train_gbdt(X, y, config: TrainConfig, feature_names: list[str] | None = None) -> GbdtModel:
    """Newton boosting on logistic loss: per iteration the gradients are
    p - y and hessians p(1-p), a tree is grown by best-first histogram
    splits, and leaf values -G/(H+lambda) are shrunk by learning_rate.
    Bit-deterministic for a fixed config."""
    X, y = _validate_xy(X, y)
    n, d = X.shape
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(d)]
    if len(names) != d:
        raise ValueError("feature_names length mismatch")
    w = np.where(y == 1, config.positive_weight, 1.0)
    prior = float(np.sum(w * y) / np.sum(w))
    base_score = math.log(prior / (1.0 - prior))

    mapper = BinMapper(config.n_bins).fit(X)
    binned = mapper.transform(X)
    nb = mapper.bins_per_feature()
    max_bins = int(nb.max())
    all_idx = np.arange(n, dtype=np.int64)

    raw = np.full(n, base_score, dtype=np.float64)
    trees: list[Tree] = []
    feature_gain = np.zeros(d, dtype=np.float64)
    feature_split_count = np.zeros(d, dtype=np.int64)
    losses: list[float] = []
    for _ in range(config.n_trees):
        p = expit(raw)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        tree, fg, fc, slots = _grow_tree(
            binned, nb, mapper.edges, g, h, all_idx,
            max_leaves=config.max_leaves,
            min_samples_leaf=config.min_samples_leaf,
            min_gain=config.min_gain,
            reg_lambda=config.reg_lambda,
            leaf_scale=config.learning_rate,
            max_bins=max_bins,
            n_features=d,
        )
        for slot_idx, value in slots:
            raw[slot_idx] += value
        trees.append(tree)
        feature_gain += fg
        feature_split_count += fc
        losses.append(_logistic_loss(raw, y, w))
    return GbdtModel(
        base_score=base_score,
        trees=trees,
        feature_names=names,
        config=config,
        feature_gain=feature_gain,
        feature_split_count=feature_split_count,
        train_loss=losses,
    )


def train_random_forest(X, y, config: ForestConfig, feature_names: list[str] | None = None) -> ForestModel:
    """Bootstrap-sampled trees with per-node random feature subsets
    (sqrt(d) by default); a leaf predicts its class-probability mean and
    the forest averages over trees. Shares the GBDT tree grower with
    squared-loss statistics (g = -y, h = 1)."""
    X, y = _validate_xy(X, y)
    n, d = X.shape
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(d)]
    if len(names) != d:
        raise ValueError("feature_names length mismatch")
    mapper = BinMapper(config.n_bins).fit(X)
    binned = mapper.transform(X)
    nb = mapper.bins_per_feature()
    max_bins = int(nb.max())
    g = -y.astype(np.float64)
    h = np.ones(n, dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    if config.feature_subset == "sqrt":
        n_sub = max(1, int(round(math.sqrt(d))))
    elif config.feature_subset == "all":
        n_sub = d
    else:
        raise ValueError(f"unknown feature_subset: {config.feature_subset}")

    def sampler():
        if n_sub == d:
            return np.arange(d, dtype=np.int64)
        return np.sort(rng.choice(d, size=n_sub, replace=False)).astype(np.int64)

    trees: list[Tree] = []
    feature_gain = np.zeros(d, dtype=np.float64)
    feature_split_count = np.zeros(d, dtype=np.int64)
    oob_sum = np.zeros(n, dtype=np.float64)
    oob_cnt = np.zeros(n, dtype=np.int64)
    for _ in range(config.n_trees):
        idx = rng.integers(0, n, size=n).astype(np.int64) if config.bootstrap else np.arange(n, dtype=np.int64)
        tree, fg, fc, _ = _grow_tree(
            binned, nb, mapper.edges, g, h, idx,
            max_leaves=config.max_leaves,
            min_samples_leaf=config.min_samples_leaf,
            min_gain=config.min_gain,
            reg_lambda=config.reg_lambda,
            leaf_scale=1.0,
            max_bins=max_bins,
            feature_sampler=sampler,
            n_features=d,
        )
        trees.append(tree)
        feature_gain += fg
        feature_split_count += fc
        if config.bootstrap:
            oob = np.ones(n, dtype=bool)
            oob[np.unique(idx)] = False
            if oob.any():
                oob_sum[oob] += tree_apply(tree, X[oob])
                oob_cnt[oob] += 1
    oob_pred = None
    if config.bootstrap:
        with np.errstate(invalid="ignore"):
            oob_pred = np.where(oob_cnt > 0, oob_sum / np.maximum(oob_cnt, 1), np.nan)
    return ForestModel(
        trees=trees,
        feature_names=names,
        config=config,
        feature_gain=feature_gain,
        feature_split_count=feature_split_count,
        oob_prediction=oob_pred,
    )


def predict(model, X) -> np.ndarray:
    """Probability of the positive class per row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != len(model.feature_names):
        raise ValueError(
            f"feature arity mismatch: model has {len(model.feature_names)}, got {X.shape[1]}"
        )
    if model.kind == "gbdt":
        raw = np.full(X.shape[0], model.base_score, dtype=np.float64)
        for tree in model.trees:
            raw += tree_apply(tree, X)
        return expit(raw)
    out = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        out += tree_apply(tree, X)
    return np.clip(out / len(model.trees), 0.0, 1.0)


def feature_importance(model) -> list[tuple[str, float]]:
    """Average split gain per feature (cumulative gain / split count),
    sorted descending; unused features report 0."""
    out = []
    for name, gain, count in zip(model.feature_names, model.feature_gain, model.feature_split_count):
        out.append((name, float(gain / count) if count > 0 else 0.0))
    return sorted(out, key=lambda item: (-item[1], item[0]))


# ---------------------------------------------------------------------------
# Serialization: self-describing JSON text format


def _tree_to_payload(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "missing_left": tree.missing_left.astype(int).tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
        "is_leaf": tree.is_leaf.astype(int).tolist(),
        "gain": tree.gain.tolist(),
        "n_samples": tree.n_samples.tolist(),
    }


def _tree_from_payload(p: dict) -> Tree:
    return Tree(
        feature=np.asarray(p["feature"], dtype=np.int32),
        threshold=np.asarray(p["threshold"], dtype=np.float64),
        missing_left=np.asarray(p["missing_left"], dtype=bool),
        left=np.asarray(p["left"], dtype=np.int32),
        right=np.asarray(p["right"], dtype=np.int32),
        value=np.asarray(p["value"], dtype=np.float64),
        is_leaf=np.asarray(p["is_leaf"], dtype=bool),
        gain=np.asarray(p["gain"], dtype=np.float64),
        n_samples=np.asarray(p["n_samples"], dtype=np.int64),
    )


def save_model(model, path: str) -> None:
    payload = {
        "format": "bestanswer-trees",
        "version": 1,
        "kind": model.kind,
        "config": {k: getattr(model.config, k) for k in model.config.__dataclass_fields__},
        "feature_names": model.feature_names,
        "feature_gain": model.feature_gain.tolist(),
        "feature_split_count": model.feature_split_count.tolist(),
        "trees": [_tree_to_payload(t) for t in model.trees],
    }
    if model.kind == "gbdt":
        payload["base_score"] = model.base_score
        payload["train_loss"] = model.train_loss
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"), sort_keys=True)


def load_model(path: str):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "bestanswer-trees":
        raise ValueError(f"not a tree model file: {path}")
    trees = [_tree_from_payload(t) for t in payload["trees"]]
    gain = np.asarray(payload["feature_gain"], dtype=np.float64)
    count = np.asarray(payload["feature_split_count"], dtype=np.int64)
    if payload["kind"] == "gbdt":
        return GbdtModel(
            base_score=payload["base_score"],
            trees=trees,
            feature_names=payload["feature_names"],
            config=TrainConfig(**payload["config"]),
            feature_gain=gain,
            feature_split_count=count,
            train_loss=list(payload.get("train_loss", [])),
        )
    return ForestModel(
        trees=trees,
        feature_names=payload["feature_names"],
        config=ForestConfig(**payload["config"]),
        feature_gain=gain,
        feature_split_count=count,
    )
