import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bestanswer.config import LdaConfig
from bestanswer.topics import (
    TopicModel,
    coherence,
    cosine,
    extract_textual,
    infer,
    infer_many,
    jsd,
    kl,
    load_model,
    r2,
    save_model,
    select_k,
    train_lda,
)


def planted_corpus(n_topics=3, vocab_per=20, n_docs=150, doc_len=30, seed=5):
    """Disjoint-vocabulary topics; doc d is pure topic d % n_topics."""
    rng = np.random.default_rng(seed)
    docs = []
    for d in range(n_docs):
        k = d % n_topics
        docs.append([f"t{k}w{i}" for i in rng.integers(0, vocab_per, size=doc_len)])
    return docs


def planted_distributions(model, n_topics, vocab_per):
    planted = np.zeros((n_topics, model.vocab_size))
    for k in range(n_topics):
        for i in range(vocab_per):
            w = f"t{k}w{i}"
            if w in model.word_index:
                planted[k, model.word_index[w]] = 1.0 / vocab_per
    return planted


def best_permutation_tv(phi, planted):
    k = planted.shape[0]
    return min(
        float(np.mean([0.5 * np.abs(phi[p[i]] - planted[i]).sum() for i in range(k)]))
        for p in permutations(range(k))
    )


# --- training ----------------------------------------------------------------


def test_count_conservation_after_every_sweep_count():
    docs = planted_corpus()
    total = sum(len(d) for d in docs)
    for iters in (1, 3, 7):
        model = train_lda(docs, 3, alpha=1.0, beta=0.01, n_iters=iters, seed=2)
        assert int(model.topic_totals.sum()) == total
        assert np.array_equal(model.topic_word.sum(axis=1), model.topic_totals)
        assert (model.topic_word >= 0).all()


def test_train_deterministic():
    docs = planted_corpus()
    a = train_lda(docs, 3, alpha=1.0, beta=0.01, n_iters=30, seed=9)
    b = train_lda(docs, 3, alpha=1.0, beta=0.01, n_iters=30, seed=9)
    assert np.array_equal(a.topic_word, b.topic_word)


def test_train_recovers_planted_topics():
    docs = planted_corpus(n_topics=3, n_docs=150)
    model = train_lda(docs, 3, alpha=0.5, beta=0.01, n_iters=200, seed=4)
    tv = best_permutation_tv(model.topic_word_distributions(), planted_distributions(model, 3, 20))
    assert tv <= 0.15


def test_train_validation_errors():
    with pytest.raises(ValueError):
        train_lda([], 2, 1.0, 0.01, 10, 0)
    with pytest.raises(ValueError):
        train_lda([["a"]], 1, 1.0, 0.01, 10, 0)
    with pytest.raises(ValueError):
        train_lda([["a", "b"]], 5, 1.0, 0.01, 10, 0)  # k > tokens
    with pytest.raises(ValueError):
        train_lda([["a", "b", "c"]], 2, -1.0, 0.01, 10, 0)


def test_empty_documents_allowed():
    docs = [["a", "b"], [], ["a", "a", "b"]]
    model = train_lda(docs, 2, 0.5, 0.01, 20, 1)
    assert int(model.topic_totals.sum()) == 5


def test_sampler_matches_exact_collapsed_posterior():
    """On a 4-token corpus the chain's end-state distribution must match
    the collapsed posterior, enumerated exactly over all assignments."""
    from itertools import product

    from bestanswer.topics import _gibbs_train

    k, v = 2, 2
    alpha, beta = 0.7, 0.4
    words = np.array([0, 1, 0, 0], dtype=np.int32)  # docs: (a b), (a a)
    offsets = np.array([0, 2, 4], dtype=np.int64)

    def log_posterior(z):
        n_dk = np.zeros((2, k))
        n_kw = np.zeros((k, v))
        n_k = np.zeros(k)
        for d, (s, e) in enumerate(((0, 2), (2, 4))):
            for pos in range(s, e):
                n_dk[d, z[pos]] += 1
                n_kw[z[pos], words[pos]] += 1
                n_k[z[pos]] += 1
        lp = 0.0
        for d in range(2):
            for t in range(k):
                lp += math.lgamma(n_dk[d, t] + alpha) - math.lgamma(alpha)
        for t in range(k):
            lp += math.lgamma(v * beta) - math.lgamma(n_k[t] + v * beta)
            for w in range(v):
                lp += math.lgamma(n_kw[t, w] + beta) - math.lgamma(beta)
        return lp

    assignments = list(product(range(k), repeat=4))
    logs = np.array([log_posterior(z) for z in assignments])
    exact = np.exp(logs - logs.max())
    exact /= exact.sum()

    n_samples = 6000
    index = {z: i for i, z in enumerate(assignments)}
    counts = np.zeros(len(assignments))
    for seed in range(n_samples):
        z, *_ = _gibbs_train(words, offsets, k, v, alpha, beta, 60, seed)
        counts[index[tuple(int(x) for x in z)]] += 1
    tv = 0.5 * np.abs(counts / n_samples - exact).sum()
    assert tv <= 0.05


# --- inference ---------------------------------------------------------------


def test_infer_empty_doc_uniform():
    docs = planted_corpus()
    model = train_lda(docs, 3, 0.5, 0.01, 50, 0)
    theta = infer(model, [], n_iters=50, seed=0)
    assert theta == pytest.approx(np.full(3, 1 / 3))


def test_infer_sums_to_one_and_positive():
    docs = planted_corpus()
    model = train_lda(docs, 3, 0.5, 0.01, 50, 0)
    theta = infer(model, docs[0], n_iters=50, seed=3)
    assert abs(theta.sum() - 1.0) <= 1e-9
    assert (theta > 0).all()


def test_infer_exclusive_topic_doc_peaks():
    docs = planted_corpus(n_topics=3, n_docs=150)
    model = train_lda(docs, 3, alpha=0.1, beta=0.01, n_iters=200, seed=4)
    doc = [f"t1w{i % 20}" for i in range(40)]
    theta = infer(model, doc, n_iters=100, seed=7)
    assert theta.max() > 0.8


def test_infer_deterministic_and_order_free():
    docs = planted_corpus()
    model = train_lda(docs, 3, 0.5, 0.01, 50, 0)
    batch = infer_many(model, docs[:4], n_iters=50, seed=11)
    again = infer_many(model, docs[:4], n_iters=50, seed=11)
    assert np.array_equal(batch, again)
    solo = infer(model, docs[2], n_iters=50, seed=(11 + 3 * 0x9E3779B97F4A7C15) % (1 << 63))
    assert np.array_equal(batch[2], solo)


# --- coherence ----------------------------------------------------------------


def _manual_model(vocab, counts, k, alpha=1.0, beta=0.01):
    topic_word = np.asarray(counts, dtype=np.int64)
    return TopicModel(
        k=k, alpha=alpha, beta=beta, vocab=list(vocab),
        topic_word=topic_word, topic_totals=topic_word.sum(axis=1),
        n_iters=0, seed=0,
    )


def test_coherence_always_cooccurring_words():
    # every doc contains both words: D(wi,wj) = D(wj) = 4
    corpus = [["x", "y"]] * 4
    model = _manual_model(["x", "y"], [[10, 5], [0, 0]], k=2)
    scores, _ = coherence(model, corpus, top_n=2)
    assert scores[0] == pytest.approx(math.log(5 / 4))
    assert scores[0] > 0


def test_coherence_never_cooccurring_words():
    corpus = [["x"], ["y"], ["x"], ["y"]]
    model = _manual_model(["x", "y"], [[10, 5], [0, 0]], k=2)
    scores, _ = coherence(model, corpus, top_n=2)
    # D(x,y) = 0, D(y) = 2 -> ln(1/2)
    assert scores[0] == pytest.approx(math.log(1 / 2))
    assert scores[0] < 0


def test_coherence_planted_beats_shuffled():
    docs = planted_corpus(n_topics=3, n_docs=120)
    model = train_lda(docs, 3, 0.5, 0.01, 150, 3)
    _, planted_score = coherence(model, docs, top_n=8)
    rng = np.random.default_rng(0)
    shuffled = _manual_model(
        model.vocab,
        rng.multinomial(int(model.topic_totals.sum()) // 3, np.ones(model.vocab_size) / model.vocab_size, size=3),
        k=3,
    )
    _, random_score = coherence(shuffled, docs, top_n=8)
    assert planted_score > random_score


def test_coherence_rejects_small_top_n():
    docs = planted_corpus()
    model = train_lda(docs, 3, 0.5, 0.01, 20, 0)
    with pytest.raises(ValueError):
        coherence(model, docs, top_n=1)


# --- select_k -----------------------------------------------------------------


def test_select_k_singleton_grid():
    docs = planted_corpus()
    cfg = LdaConfig(alpha=0.5, n_train_iters=50, seed=1)
    result = select_k(docs, [5], cfg)
    assert result.k_star == 5
    assert result.table == [(5, pytest.approx(result.table[0][1]))]


def test_select_k_table_shape():
    docs = planted_corpus()
    cfg = LdaConfig(alpha=0.5, n_train_iters=40, seed=1)
    result = select_k(docs, [2, 4], cfg)
    assert [k for k, _ in result.table] == [2, 4]
    assert result.model.k == result.k_star


# --- similarity metrics --------------------------------------------------------


def test_kl_hand_example():
    assert kl([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.1438, abs=1e-4)
    assert kl([0.25, 0.75], [0.5, 0.5]) == pytest.approx(0.1308, abs=1e-4)


def test_identity_cases():
    p = [0.3, 0.7]
    assert kl(p, p) == pytest.approx(0.0)
    assert jsd(p, p) == pytest.approx(0.0)
    assert cosine(p, p) == pytest.approx(1.0)
    assert r2(p, p, 2) == pytest.approx(1.0)


def test_r2_hand_example():
    assert r2([0.8, 0.2], [0.6, 0.4], 2) == pytest.approx(0.5556, abs=1e-4)


def test_r2_uniform_question_conventions():
    uniform = [0.5, 0.5]
    assert r2(uniform, uniform, 2) == 1.0
    assert r2(uniform, [0.9, 0.1], 2) == -10.0


def test_metric_length_mismatch():
    with pytest.raises(ValueError):
        kl([0.5, 0.5], [1.0])


def _simplex(draw_len=4):
    return (
        st.lists(st.floats(1e-3, 1.0), min_size=draw_len, max_size=draw_len)
        .map(lambda xs: np.array(xs) / np.sum(xs))
    )


@settings(max_examples=80, deadline=None)
@given(p=_simplex(), q=_simplex())
def test_kl_nonnegative_and_jsd_bounds(p, q):
    assert kl(p, q) >= -1e-9
    j = jsd(p, q)
    assert -1e-12 <= j <= math.log(2) + 1e-12
    assert j == pytest.approx(jsd(q, p))
    assert 0.0 <= cosine(p, q) <= 1.0 + 1e-12
    assert r2(p, q, len(p)) <= 1.0 + 1e-12


@settings(max_examples=50, deadline=None)
@given(p=_simplex())
def test_kl_zero_iff_equal(p):
    assert kl(p, p) == pytest.approx(0.0, abs=1e-12)
    q = p.copy()
    q[0], q[1] = q[0] * 0.5, q[1] + q[0] * 0.5
    if not np.allclose(p, q):
        assert kl(p, q) > 0


def test_extract_textual_ordering_and_symmetry():
    q = np.array([0.5, 0.5])
    a = np.array([0.25, 0.75])
    feats = extract_textual(q, a)
    assert feats.kl_q_a == pytest.approx(kl(q, a))
    assert feats.kl_a_q == pytest.approx(kl(a, q))
    assert feats.kl_q_a != pytest.approx(feats.kl_a_q)
    assert feats.jsd == pytest.approx(extract_textual(a, q).jsd)
    identical = extract_textual(q, q)
    assert (identical.kl_q_a, identical.kl_a_q, identical.jsd) == (0.0, 0.0, 0.0)
    assert identical.r2 == pytest.approx(1.0)
    assert identical.cosine == pytest.approx(1.0)


# --- persistence ---------------------------------------------------------------


def test_model_round_trip(tmp_path):
    docs = planted_corpus()
    model = train_lda(docs, 3, 0.5, 0.01, 30, 6)
    path = str(tmp_path / "model.json")
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.k == model.k
    assert loaded.vocab == model.vocab
    assert np.array_equal(loaded.topic_word, model.topic_word)
    theta_a = infer(model, docs[0], n_iters=30, seed=1)
    theta_b = infer(loaded, docs[0], n_iters=30, seed=1)
    assert np.array_equal(theta_a, theta_b)
