import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as scipy_stats

from bestanswer.config import TrainConfig
from bestanswer.evaluation import auc, cross_validate, grouped_stratified_kfold, paired_t_test


def brute_force_auc(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return float(wins) / (len(pos) * len(neg))


# --- auc ------------------------------------------------------------------------


def test_auc_hand_example():
    assert auc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(0.75)


def test_auc_perfect_and_ties():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5


def test_auc_requires_both_classes():
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1, 1])


def test_auc_equals_pair_counting_oracle():
    rng = np.random.default_rng(12)
    for _ in range(300):
        n = int(rng.integers(2, 200))
        scores = rng.choice([0.0, 0.25, 0.5, 0.77, 1.0], size=n) if rng.random() < 0.5 else rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        assert abs(auc(scores, labels) - brute_force_auc(scores, labels)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(-5, 5, allow_nan=False), st.integers(0, 1)),
        min_size=4,
        max_size=40,
    )
)
def test_auc_invariant_under_monotone_transform(pairs):
    # quantize so exp() cannot collapse distinct scores into new ties
    scores = np.array([round(s, 3) for s, _ in pairs])
    labels = np.array([l for _, l in pairs])
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    before = auc(scores, labels)
    after = auc(np.exp(scores / 3), labels)
    assert before == pytest.approx(after, abs=1e-12)


# --- grouped folds ----------------------------------------------------------------


def test_kfold_balances_question_counts():
    qids = np.repeat(np.arange(10), 2)
    folds = grouped_stratified_kfold(qids, k=5, seed=0)
    for fold in range(5):
        assert len(np.unique(qids[folds == fold])) == 2


def test_kfold_group_constraint_exhaustive():
    rng = np.random.default_rng(1)
    qids = np.repeat(np.arange(40), rng.integers(1, 6, size=40))
    folds = grouped_stratified_kfold(qids, k=5, seed=3)
    for q in np.unique(qids):
        assert len(np.unique(folds[qids == q])) == 1


def test_kfold_partition():
    qids = np.repeat(np.arange(23), 3)
    folds = grouped_stratified_kfold(qids, k=4, seed=2)
    assert folds.shape == qids.shape
    assert set(np.unique(folds)) == set(range(4))


def test_kfold_errors_when_too_few_questions():
    with pytest.raises(ValueError):
        grouped_stratified_kfold(np.array([1, 1, 2]), k=5)


def test_kfold_deterministic_per_seed():
    qids = np.repeat(np.arange(30), 2)
    assert np.array_equal(
        grouped_stratified_kfold(qids, 5, seed=7), grouped_stratified_kfold(qids, 5, seed=7)
    )
    assert not np.array_equal(
        grouped_stratified_kfold(qids, 5, seed=7), grouped_stratified_kfold(qids, 5, seed=8)
    )


# --- cross_validate -----------------------------------------------------------------


def _cv_data(n=600, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 5))
    y = (X[:, 0] > 0).astype(int)
    qids = np.arange(n) // 3
    return X, y, qids


def test_cv_separable():
    X, y, qids = _cv_data()
    report = cross_validate(
        X, y, qids, TrainConfig(n_trees=40, learning_rate=0.2, max_leaves=15, min_samples_leaf=5), k=5
    )
    assert len(report.fold_aucs) == 5
    assert report.mean_auc >= 0.99


def test_cv_permuted_labels_near_chance():
    X, y, qids = _cv_data(n=500)
    cfg = TrainConfig(n_trees=25, learning_rate=0.2, max_leaves=15, min_samples_leaf=5)
    means = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        y_perm = rng.permutation(y)
        if y_perm.min() == y_perm.max():
            continue
        report = cross_validate(X, y_perm, qids, cfg, k=5, seed=seed)
        means.append(report.mean_auc)
    assert 0.45 <= float(np.mean(means)) <= 0.55


def test_cv_report_shape_and_fingerprint():
    X, y, qids = _cv_data(n=300)
    cfg = TrainConfig(n_trees=5, max_leaves=7, min_samples_leaf=5)
    a = cross_validate(X, y, qids, cfg, k=3, seed=1)
    b = cross_validate(X, y, qids, cfg, k=3, seed=1)
    assert a.fold_aucs == b.fold_aucs
    assert a.config_fingerprint == b.config_fingerprint
    assert a.k == 3


def test_cv_unknown_classifier():
    X, y, qids = _cv_data(n=100)
    with pytest.raises(ValueError):
        cross_validate(X, y, qids, TrainConfig(n_trees=2), k=2, classifier="svm")


# --- paired t-test -------------------------------------------------------------------


def test_t_test_identity_convention():
    assert paired_t_test([0.9, 0.8, 0.7], [0.9, 0.8, 0.7]) == (0.0, 1.0)


def test_t_test_constant_positive_difference():
    # exactly representable values so the difference variance is exactly 0
    t, p = paired_t_test([0.75, 1.5], [0.5, 1.25])
    assert t == np.inf and p == 0.0


def test_t_test_against_scipy():
    a = np.array([0.91, 0.912, 0.909, 0.910, 0.9105])
    b = np.array([0.90, 0.901, 0.900, 0.900, 0.9005])
    t, p = paired_t_test(a, b)
    ref = scipy_stats.ttest_rel(a, b)
    assert t == pytest.approx(ref.statistic, rel=1e-10)
    assert p == pytest.approx(ref.pvalue, rel=1e-10)


def test_t_test_example_statistic():
    diffs = np.array([0.01, 0.011, 0.009, 0.010, 0.010])
    t, _ = paired_t_test(diffs, np.zeros(5))
    expected = diffs.mean() / (diffs.std(ddof=1) / np.sqrt(5))
    assert t == pytest.approx(expected)


def test_t_test_antisymmetric():
    a = [0.9, 0.85, 0.95, 0.88]
    b = [0.87, 0.86, 0.90, 0.85]
    t_ab, p_ab = paired_t_test(a, b)
    t_ba, p_ba = paired_t_test(b, a)
    assert t_ab == pytest.approx(-t_ba)
    assert p_ab == pytest.approx(p_ba)


def test_t_test_validates_input():
    with pytest.raises(ValueError):
        paired_t_test([0.9], [0.8])
