"""Evaluation protocol: ROC AUC, question-grouped stratified k-fold,
cross-validation and the paired t-test between fold AUC vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .boosting import predict, train_gbdt, train_random_forest
from .config import ForestConfig, TrainConfig, fingerprint


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic with
    midranks for ties: P(s+ > s-) + 0.5 * P(s+ = s-)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-d and aligned")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.shape[0], dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < s.shape[0]:
        j = i
        while j + 1 < s.shape[0] and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[y == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def grouped_stratified_kfold(question_ids, k: int, seed: int = 0) -> np.ndarray:
    """Fold assignment per instance such that every instance of one
    question lands in the same fold. Folds are balanced exactly on
    question count and greedily on instance count (hence approximately
    on positive rate, one positive per question). Deterministic per
    seed."""
    if k < 2:
        raise ValueError("k must be >= 2")
    qids = np.asarray(question_ids)
    unique, counts = np.unique(qids, return_counts=True)
    if unique.size < k:
        raise ValueError(f"fewer questions ({unique.size}) than folds ({k})")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(unique.size)
    order = perm[np.argsort(-counts[perm], kind="mergesort")]
    fold_q = np.zeros(k, dtype=np.int64)
    fold_i = np.zeros(k, dtype=np.int64)
    assignment: dict = {}
    for pos in order:
        min_q = fold_q.min()
        candidates = np.flatnonzero(fold_q == min_q)
        target = candidates[np.argmin(fold_i[candidates])]
        assignment[unique[pos]] = target
        fold_q[target] += 1
        fold_i[target] += counts[pos]
    return np.array([assignment[q] for q in qids], dtype=np.int64)


@dataclass
class EvaluationReport:
    classifier: str
    k: int
    seed: int
    fold_aucs: list[float]
    mean_auc: float
    std_auc: float
    config_fingerprint: str
    t_test: tuple[float, float, str] | None = None  # (t, p, baseline id)

    def summary_line(self) -> str:
        folds = " ".join(f"{a:.4f}" for a in self.fold_aucs)
        return f"{self.classifier} k={self.k} mean AUC {self.mean_auc:.4f} (+/- {self.std_auc:.4f}) folds [{folds}]"


def _train_and_score(X_tr, y_tr, X_te, classifier, config, feature_names):
    if classifier == "gbdt":
        model = train_gbdt(X_tr, y_tr, config, feature_names)
    elif classifier == "rf":
        model = train_random_forest(X_tr, y_tr, config, feature_names)
    else:
        raise ValueError(f"unknown classifier: {classifier}")
    return predict(model, X_te)


def cross_validate(
    X,
    y,
    question_ids,
    config: TrainConfig | ForestConfig,
    k: int = 5,
    seed: int = 0,
    classifier: str = "gbdt",
    fold_ids: np.ndarray | None = None,
    feature_names: list[str] | None = None,
) -> EvaluationReport:
    """Per fold: train on the other k-1 folds, score the held-out fold,
    report per-fold AUCs and their mean. A precomputed fold assignment
    can be passed in so competing feature sets are compared paired."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if fold_ids is None:
        fold_ids = grouped_stratified_kfold(question_ids, k, seed)
    fold_aucs = []
    for fold in range(k):
        test = fold_ids == fold
        train = ~test
        scores = _train_and_score(X[train], y[train], X[test], classifier, config, feature_names)
        fold_aucs.append(auc(scores, y[test]))
    mean = float(np.mean(fold_aucs))
    std = float(np.std(fold_aucs, ddof=1)) if k > 1 else 0.0
    return EvaluationReport(
        classifier=classifier,
        k=k,
        seed=seed,
        fold_aucs=[float(a) for a in fold_aucs],
        mean_auc=mean,
        std_auc=std,
        config_fingerprint=fingerprint(config, k, seed, classifier),
    )


def paired_t_test(auc_a, auc_b) -> tuple[float, float]:
    """Two-sided paired t-test on per-fold AUC differences; p from
    Student's t with k-1 degrees of freedom.

    Zero-variance convention: p = 1 (t = 0) when the mean difference is
    also zero, else p = 0 with t = +/-inf.
    """
    a = np.asarray(auc_a, dtype=np.float64)
    b = np.asarray(auc_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two aligned vectors of length >= 2")
    diff = a - b
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    n = diff.size
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(scipy_stats.t.sf(abs(t), df=n - 1))
    return t, p
