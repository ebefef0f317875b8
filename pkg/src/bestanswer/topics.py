"""Textual feature group (T): LDA by collapsed Gibbs sampling, topic
count selection by coherence, inference of per-document topic
distributions, and question/answer similarity metrics.

The samplers run in numba and use an inlined xorshift64* generator so
results are bit-deterministic for a given seed, independent of numpy's
global RNG state.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np
from numba import njit

from .config import LdaConfig
from .corpus import Thread
from .text import stopwords, tokenize

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _rng_next(state):
    s = state[0]
    s ^= s >> np.uint64(12)
    s ^= s << np.uint64(25)
    s ^= s >> np.uint64(27)
    state[0] = s
    return s * np.uint64(2685821657736338717)


@njit(cache=True, inline="always")
def _rng_uniform(state):
    return (_rng_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _seed_state(seed):
    z = np.uint64(seed) + _SPLITMIX_GAMMA
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = _SPLITMIX_GAMMA
    return z


@njit(cache=True)
def _gibbs_train(words, doc_offsets, n_topics, vocab_size, alpha, beta, n_iters, seed):
    n_docs = doc_offsets.shape[0] - 1
    n_tokens = words.shape[0]
    z = np.empty(n_tokens, dtype=np.int32)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, vocab_size), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    state[0] = _seed_state(seed)

    for d in range(n_docs):
        for pos in range(doc_offsets[d], doc_offsets[d + 1]):
            k = int(_rng_next(state) % np.uint64(n_topics))
            z[pos] = k
            n_dk[d, k] += 1
            n_kw[k, words[pos]] += 1
            n_k[k] += 1

    cum = np.empty(n_topics, dtype=np.float64)
    vbeta = vocab_size * beta
    for _ in range(n_iters):
        for d in range(n_docs):
            for pos in range(doc_offsets[d], doc_offsets[d + 1]):
                w = words[pos]
                k = z[pos]
                n_dk[d, k] -= 1
                n_kw[k, w] -= 1
                n_k[k] -= 1
                total = 0.0
                for k2 in range(n_topics):
                    total += (n_dk[d, k2] + alpha) * (n_kw[k2, w] + beta) / (n_k[k2] + vbeta)
                    cum[k2] = total
                u = _rng_uniform(state) * total
                k = 0
                while k < n_topics - 1 and cum[k] <= u:
                    k += 1
                z[pos] = k
                n_dk[d, k] += 1
                n_kw[k, w] += 1
                n_k[k] += 1
    return z, n_dk, n_kw, n_k


@njit(cache=True)
def _gibbs_infer(doc_words, n_kw, n_k, alpha, beta, n_iters, seed):
    n_topics = n_kw.shape[0]
    vocab_size = n_kw.shape[1]
    n_tokens = doc_words.shape[0]
    theta = np.zeros(n_topics, dtype=np.float64)
    if n_tokens == 0:
        for k in range(n_topics):
            theta[k] = 1.0 / n_topics
        return theta

    state = np.empty(1, dtype=np.uint64)
    state[0] = _seed_state(seed)
    z = np.empty(n_tokens, dtype=np.int32)
    nd = np.zeros(n_topics, dtype=np.int64)
    for pos in range(n_tokens):
        k = int(_rng_next(state) % np.uint64(n_topics))
        z[pos] = k
        nd[k] += 1

    cum = np.empty(n_topics, dtype=np.float64)
    vbeta = vocab_size * beta
    avg_from = n_iters - max(1, n_iters // 4)
    n_avg = 0
    denom = n_tokens + n_topics * alpha
    for it in range(n_iters):
        for pos in range(n_tokens):
            w = doc_words[pos]
            k = z[pos]
            nd[k] -= 1
            total = 0.0
            for k2 in range(n_topics):
                total += (nd[k2] + alpha) * (n_kw[k2, w] + beta) / (n_k[k2] + vbeta)
                cum[k2] = total
            u = _rng_uniform(state) * total
            k = 0
            while k < n_topics - 1 and cum[k] <= u:
                k += 1
            z[pos] = k
            nd[k] += 1
        if it >= avg_from:
            n_avg += 1
            for k2 in range(n_topics):
                theta[k2] += (nd[k2] + alpha) / denom
    for k2 in range(n_topics):
        theta[k2] /= n_avg
    return theta


# ---------------------------------------------------------------------------
# Model


@dataclass
class TopicModel:
    k: int
    alpha: float
    beta: float
    vocab: list[str]
    topic_word: np.ndarray  # (k, V) int64 counts
    topic_totals: np.ndarray  # (k,) int64
    n_iters: int
    seed: int

    def __post_init__(self) -> None:
        self.word_index = {w: i for i, w in enumerate(self.vocab)}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def topic_word_distributions(self) -> np.ndarray:
        """Smoothed per-topic word distributions, rows on the simplex."""
        phi = self.topic_word + self.beta
        return phi / phi.sum(axis=1, keepdims=True)

    def top_words(self, topic: int, top_n: int) -> list[str]:
        counts = self.topic_word[topic]
        order = np.lexsort((np.arange(len(counts)), -counts))
        return [self.vocab[i] for i in order[:top_n] if counts[i] > 0]


def train_lda(
    corpus: list[list[str]],
    k: int,
    alpha: float,
    beta: float,
    n_iters: int,
    seed: int,
) -> TopicModel:
    """Train LDA with a collapsed Gibbs sampler.

    Each sweep resamples every token's topic from its full conditional
    (doc-topic count + alpha) * (topic-word count + beta) /
    (topic total + V*beta), with the token's own counts removed during
    the draw. Deterministic for a fixed seed.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if k < 2:
        raise ValueError("k must be >= 2")
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be > 0")
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    vocab = sorted({w for doc in corpus for w in doc})
    total_tokens = sum(len(doc) for doc in corpus)
    if k > total_tokens:
        raise ValueError(f"k={k} exceeds total token count {total_tokens}")
    index = {w: i for i, w in enumerate(vocab)}
    words = np.fromiter(
        (index[w] for doc in corpus for w in doc), dtype=np.int32, count=total_tokens
    )
    offsets = np.zeros(len(corpus) + 1, dtype=np.int64)
    for i, doc in enumerate(corpus):
        offsets[i + 1] = offsets[i] + len(doc)
    _, _, n_kw, n_k = _gibbs_train(
        words, offsets, k, len(vocab), float(alpha), float(beta), int(n_iters), int(seed)
    )
    return TopicModel(
        k=k, alpha=float(alpha), beta=float(beta), vocab=vocab,
        topic_word=n_kw, topic_totals=n_k, n_iters=n_iters, seed=seed,
    )


def infer(model: TopicModel, doc_tokens: list[str], n_iters: int = 100, seed: int = 0) -> np.ndarray:
    """Topic distribution of one document under a trained model.

    Topic-word counts stay fixed; only the document's assignments are
    Gibbs-sampled. theta is averaged over the last quarter of sweeps.
    Words outside the model vocabulary are ignored; an empty document
    maps to the uniform distribution.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    ids = np.fromiter(
        (model.word_index[w] for w in doc_tokens if w in model.word_index), dtype=np.int32
    )
    return _gibbs_infer(
        ids, model.topic_word, model.topic_totals, model.alpha, model.beta, int(n_iters), int(seed)
    )


def _doc_seed(seed: int, i: int) -> int:
    return (int(seed) + (i + 1) * 0x9E3779B97F4A7C15) % (1 << 63)


def infer_many(model: TopicModel, docs: list[list[str]], n_iters: int = 100, seed: int = 0) -> np.ndarray:
    """Infer a distribution per document; per-document seeds derive from
    (seed, position) so results do not depend on evaluation order."""
    out = np.empty((len(docs), model.k), dtype=np.float64)
    for i, doc in enumerate(docs):
        out[i] = infer(model, doc, n_iters=n_iters, seed=_doc_seed(seed, i))
    return out


# ---------------------------------------------------------------------------
# Coherence and topic-count selection


def coherence(model: TopicModel, corpus: list[list[str]], top_n: int = 10) -> tuple[np.ndarray, float]:
    """Document co-occurrence coherence per topic and its mean.

    For each topic's top_n words (probability descending), sums
    ln((D(w_i, w_j) + 1) / D(w_j)) over pairs i < j, where D counts the
    documents of ``corpus`` containing the word(s).
    """
    if top_n < 2:
        raise ValueError("top_n must be >= 2")
    top_lists = [model.top_words(t, top_n) for t in range(model.k)]
    needed = {w for lst in top_lists for w in lst}
    doc_sets: dict[str, set[int]] = {w: set() for w in needed}
    for d, doc in enumerate(corpus):
        for w in set(doc) & needed:
            doc_sets[w].add(d)
    scores = np.zeros(model.k, dtype=np.float64)
    for t, top in enumerate(top_lists):
        total = 0.0
        for j in range(1, len(top)):
            dj = len(doc_sets[top[j]])
            if dj == 0:
                raise ValueError(f"top word {top[j]!r} absent from coherence corpus")
            for i in range(j):
                dij = len(doc_sets[top[i]] & doc_sets[top[j]])
                total += math.log((dij + 1) / dj)
        scores[t] = total
    return scores, float(scores.mean())


@dataclass
class SelectKResult:
    k_star: int
    table: list[tuple[int, float]]  # (k, mean coherence) per grid entry
    model: TopicModel


def select_k(corpus: list[list[str]], k_grid: list[int] | tuple[int, ...], cfg: LdaConfig) -> SelectKResult:
    """Train one model per K and keep the argmax of mean coherence,
    ties going to the smallest K."""
    if not k_grid:
        raise ValueError("empty k grid")
    best: tuple[float, int, TopicModel] | None = None
    table: list[tuple[int, float]] = []
    for k in sorted(set(k_grid)):
        model = train_lda(
            corpus, k, cfg.alpha_for(k), cfg.beta, cfg.n_train_iters, cfg.seed
        )
        _, mean_coh = coherence(model, corpus, cfg.top_n)
        table.append((k, mean_coh))
        if best is None or mean_coh > best[0]:
            best = (mean_coh, k, model)
    assert best is not None
    return SelectKResult(k_star=best[1], table=table, model=best[2])


# ---------------------------------------------------------------------------
# Distribution similarity metrics (Q, A on the topic simplex)


def _check_pair(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return p, q


def kl(p, q) -> float:
    """Kullback-Leibler divergence sum(p * ln(p/q)), natural log."""
    p, q = _check_pair(p, q)
    return float(np.sum(p * np.log(p / q)))


def jsd(p, q) -> float:
    """Jensen-Shannon divergence, symmetric and bounded by ln 2."""
    p, q = _check_pair(p, q)
    m = 0.5 * (p + q)
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def cosine(p, q) -> float:
    p, q = _check_pair(p, q)
    return float(np.dot(p, q) / (np.linalg.norm(p) * np.linalg.norm(q)))


def r2(q_dist, a_dist, k: int) -> float:
    """1 - sum((a - q)^2) / sum((q - 1/k)^2): similarity of the answer's
    topic mix to the question's, relative to the uniform baseline.

    A near-uniform question makes the denominator vanish; then: 1 when
    the answer matches too, else a floor of -10.
    """
    q_dist, a_dist = _check_pair(q_dist, a_dist)
    num = float(np.sum((a_dist - q_dist) ** 2))
    den = float(np.sum((q_dist - 1.0 / k) ** 2))
    if den < 1e-12:
        return 1.0 if num < 1e-12 else -10.0
    return 1.0 - num / den


@dataclass(frozen=True)
class TextualFeatures:
    kl_q_a: float
    kl_a_q: float
    jsd: float
    r2: float
    cosine: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


TEXTUAL_FEATURE_NAMES = tuple(f.name for f in fields(TextualFeatures))


def extract_textual(question_dist: np.ndarray, answer_dist: np.ndarray) -> TextualFeatures:
    """All five similarity metrics, with the question distribution as
    the first argument where order matters."""
    q, a = _check_pair(question_dist, answer_dist)
    return TextualFeatures(
        kl_q_a=kl(q, a),
        kl_a_q=kl(a, q),
        jsd=jsd(q, a),
        r2=r2(q, a, len(q)),
        cosine=cosine(q, a),
    )


# ---------------------------------------------------------------------------
# Corpus preparation and model persistence


def build_lda_corpus(threads: list[Thread], min_df: int = 2) -> tuple[list[int], list[list[str]]]:
    """LDA documents are individual posts: every question and answer of
    the assembled threads, in thread order. Tokens drop stop words and
    words occurring in fewer than min_df documents.

    Returns (post_ids, token lists) aligned by position.
    """
    stop = stopwords()
    post_ids: list[int] = []
    raw_docs: list[list[str]] = []
    for t in threads:
        for post in (t.question, *t.answers):
            post_ids.append(post.post_id)
            raw_docs.append([w for w in tokenize(post.body_text) if w not in stop])
    df: Counter[str] = Counter()
    for doc in raw_docs:
        df.update(set(doc))
    keep = {w for w, c in df.items() if c >= min_df}
    return post_ids, [[w for w in doc if w in keep] for doc in raw_docs]


def save_model(model: TopicModel, path: str) -> None:
    payload = {
        "format": "bestanswer-lda",
        "version": 1,
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "n_iters": model.n_iters,
        "seed": model.seed,
        "vocab": model.vocab,
        "topic_word": model.topic_word.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, separators=(",", ":"), sort_keys=True)


def load_model(path: str) -> TopicModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "bestanswer-lda":
        raise ValueError(f"not a topic model file: {path}")
    topic_word = np.asarray(payload["topic_word"], dtype=np.int64)
    return TopicModel(
        k=payload["k"],
        alpha=payload["alpha"],
        beta=payload["beta"],
        vocab=list(payload["vocab"]),
        topic_word=topic_word,
        topic_totals=topic_word.sum(axis=1),
        n_iters=payload["n_iters"],
        seed=payload["seed"],
    )
