"""Shallow feature group (S): meta, linguistic, vocabulary and HTML-tag
features per answer, plus within-thread rank and percent-rank helpers.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, fields
from html.parser import HTMLParser

from .corpus import Thread
from .text import count_syllables, split_sentences, tokenize

log = logging.getLogger(__name__)

_HYPERLINK_RE = re.compile(r"<a\s[^>]*href|https?://|\bwww\.", re.IGNORECASE)


@dataclass(frozen=True)
class VocabularyModel:
    """Add-one smoothed unigram model over a question thread's text.

    One extra count slot is reserved for unseen words, so every word has
    nonzero probability.
    """

    counts: dict[str, int]
    total: int

    @property
    def unique(self) -> int:
        return len(self.counts)

    def probability(self, word: str) -> float:
        return (self.counts.get(word, 0) + 1) / (self.total + self.unique + 1)


def build_thread_vocabulary(thread: Thread) -> VocabularyModel:
    """Count tokens over the question body, every answer body, and all
    comments in the thread."""
    counter: Counter[str] = Counter(tokenize(thread.question.body_text))
    for c in thread.comments_on_question:
        counter.update(tokenize(c.text))
    for a in thread.answers:
        counter.update(tokenize(a.body_text))
        for c in thread.comments_for(a.post_id):
            counter.update(tokenize(c.text))
    return VocabularyModel(counts=dict(counter), total=sum(counter.values()))


def normalized_log_likelihood(answer_text: str, vocab) -> float:
    """Average per-unique-word log probability of the answer's words
    under the vocabulary model (natural log). Empty answers map to 0.

    ``vocab`` needs only a ``probability(word) -> float`` method.
    """
    words = tokenize(answer_text)
    if not words:
        return 0.0
    counts = Counter(words)
    total = sum(c * math.log(vocab.probability(w)) for w, c in counts.items())
    return total / len(counts)


def flesch_kincaid(awps: float, asps: float) -> float:
    """Grade level from average words per sentence and average syllables
    per word: 0.39 * awps + 11.8 * asps - 15.59."""
    return 0.39 * awps + 11.8 * asps - 15.59


class _TagCounter(HTMLParser):
    """Counts blockquote elements (with inner text) and strong/b tags.

    Unbalanced markup is tolerated: opening tags are what gets counted,
    with a warning when quotes are left unclosed.
    """

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.quote_texts: list[str] = []
        self.strong_count = 0
        self._open_quotes: list[list[str]] = []

    def handle_starttag(self, tag, attrs) -> None:
        if tag == "blockquote":
            self._open_quotes.append([])
        elif tag in ("strong", "b"):
            self.strong_count += 1

    def handle_endtag(self, tag) -> None:
        if tag == "blockquote" and self._open_quotes:
            self.quote_texts.append("".join(self._open_quotes.pop()))

    def handle_data(self, data: str) -> None:
        for buf in self._open_quotes:
            buf.append(data)

    def finish(self) -> None:
        if self._open_quotes:
            log.warning("unbalanced blockquote tags; counting opening tags")
        while self._open_quotes:
            self.quote_texts.append("".join(self._open_quotes.pop()))


def html_tag_features(answer_html: str, question_text: str) -> tuple[int, int, int]:
    """(quote_count, contains_count, strong_count) for one answer.

    quote_count: number of blockquote elements. contains_count: those
    whose whitespace-normalized inner text is a non-empty substring of
    the whitespace-normalized question text. strong_count: strong plus
    b elements.
    """
    parser = _TagCounter()
    parser.feed(answer_html)
    parser.close()
    parser.finish()
    question_norm = " ".join(question_text.split())
    contains = 0
    for text in parser.quote_texts:
        norm = " ".join(text.split())
        if norm and norm in question_norm:
            contains += 1
    return len(parser.quote_texts), contains, parser.strong_count


@dataclass(frozen=True)
class ShallowFeatures:
    age_seconds: float
    rating_score: float
    length_chars: float
    word_count: float
    sentence_count: float
    longest_sentence_chars: float
    avg_words_per_sentence: float
    avg_chars_per_word: float
    contains_hyperlink: float
    answer_count_in_thread: float
    ll_n: float
    flesch_kincaid: float
    quote_count: float
    contains_count: float
    strong_count: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


SHALLOW_FEATURE_NAMES = tuple(f.name for f in fields(ShallowFeatures))


def extract_shallow(thread: Thread) -> list[ShallowFeatures]:
    """All shallow features for each answer of the thread, in thread
    answer order. Negative ages (clock-skewed data) are kept as-is."""
    vocab = build_thread_vocabulary(thread)
    q = thread.question
    n_answers = len(thread.answers)
    out = []
    for a in thread.answers:
        age = (a.creation_time - q.creation_time).total_seconds()
        if age < 0:
            log.warning("answer %s predates its question (clock skew?)", a.post_id)
        words = tokenize(a.body_text)
        sentences = split_sentences(a.body_text)
        n_words = len(words)
        n_sents = len(sentences)
        awps = n_words / n_sents if n_sents else 0.0
        asps = sum(count_syllables(w) for w in words) / n_words if n_words else 0.0
        quote, contains, strong = html_tag_features(a.body_html, q.body_text)
        out.append(
            ShallowFeatures(
                age_seconds=age,
                rating_score=float(a.score),
                length_chars=float(len(a.body_text)),
                word_count=float(n_words),
                sentence_count=float(n_sents),
                longest_sentence_chars=float(max((len(s) for s in sentences), default=0)),
                avg_words_per_sentence=awps,
                avg_chars_per_word=sum(len(w) for w in words) / n_words if n_words else 0.0,
                contains_hyperlink=float(bool(_HYPERLINK_RE.search(a.body_html))),
                answer_count_in_thread=float(n_answers),
                ll_n=normalized_log_likelihood(a.body_text, vocab),
                flesch_kincaid=flesch_kincaid(awps, asps),
                quote_count=float(quote),
                contains_count=float(contains),
                strong_count=float(strong),
            )
        )
    return out


def rank_within_thread(values: list[float | None], higher_better: bool = True) -> list[float | None]:
    """Rank the answers of one thread on a feature; rank 1 is best.

    Ties share the minimum rank of the tied block. Missing values stay
    missing and do not take part in the ranking.
    """
    present = [(i, v) for i, v in enumerate(values) if v is not None and not (isinstance(v, float) and math.isnan(v))]
    ranks: list[float | None] = [None] * len(values)
    for i, v in present:
        better = sum(1 for _, u in present if (u > v if higher_better else u < v))
        ranks[i] = float(better + 1)
    return ranks


def percent_rank(ranks: list[float | None], n_answers: int) -> list[float | None]:
    """Rank divided by the thread's answer count; the biggest rank maps
    to 1 and the smallest approaches 0."""
    if n_answers < 1:
        raise ValueError("n_answers must be >= 1")
    return [r / n_answers if r is not None else None for r in ranks]
