import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bestanswer.shallow import (
    build_thread_vocabulary,
    extract_shallow,
    flesch_kincaid,
    html_tag_features,
    normalized_log_likelihood,
    percent_rank,
    rank_within_thread,
)
from helpers import make_answer, make_comment, make_question, make_thread


class FixedProbs:
    def __init__(self, probs):
        self.probs = probs

    def probability(self, word):
        return self.probs[word]


# --- Flesch-Kincaid ---------------------------------------------------------


def test_flesch_kincaid_values():
    assert flesch_kincaid(10, 1.5) == pytest.approx(6.01)
    assert flesch_kincaid(0, 0) == pytest.approx(-15.59)
    assert flesch_kincaid(20, 2.0) == pytest.approx(15.81)


@settings(max_examples=50, deadline=None)
@given(
    awps=st.floats(0, 1e3, allow_nan=False),
    asps=st.floats(0, 1e2, allow_nan=False),
    bump=st.floats(1e-6, 10),
)
def test_flesch_kincaid_strictly_increasing(awps, asps, bump):
    base = flesch_kincaid(awps, asps)
    assert flesch_kincaid(awps + bump, asps) > base
    assert flesch_kincaid(awps, asps + bump) > base


# --- Normalised log likelihood ----------------------------------------------


def test_lln_hand_example():
    # (2 ln 0.5 + 1 ln 0.25) / 2 with injected probabilities
    value = normalized_log_likelihood("a a b", FixedProbs({"a": 0.5, "b": 0.25}))
    assert value == pytest.approx(-1.3863, abs=1e-4)


def test_lln_empty_answer():
    assert normalized_log_likelihood("", FixedProbs({})) == 0.0


def test_lln_in_vocabulary_beats_oov():
    q = make_question(body="<p>common common common word word</p>", accepted=2)
    a1 = make_answer(2, body="<p>common common common</p>")
    thread = make_thread(q, [a1])
    vocab = build_thread_vocabulary(thread)
    frequent = normalized_log_likelihood("common common common", vocab)
    unseen = normalized_log_likelihood("zzz zzz zzz", vocab)
    assert frequent > unseen


def test_lln_nonpositive_after_smoothing():
    q = make_question(body="<p>alpha beta gamma alpha</p>", accepted=2)
    a = make_answer(2, body="<p>alpha delta</p>")
    thread = make_thread(q, [a])
    vocab = build_thread_vocabulary(thread)
    assert normalized_log_likelihood(a.body_text, vocab) <= 0.0


# --- Thread vocabulary --------------------------------------------------------


def test_vocabulary_counts():
    q = make_question(body="<p>a b a</p>", accepted=2)
    a = make_answer(2, body="")
    vocab = build_thread_vocabulary(make_thread(q, [a]))
    assert vocab.counts == {"a": 2, "b": 1}
    assert vocab.total == 3


def test_vocabulary_empty_thread_text():
    q = make_question(body="", accepted=2)
    a = make_answer(2, body="")
    vocab = build_thread_vocabulary(make_thread(q, [a]))
    assert vocab.counts == {} and vocab.total == 0


def test_vocabulary_contains_answers_and_comments():
    q = make_question(body="<p>alpha</p>", accepted=2)
    a = make_answer(2, body="<p>beta</p>")
    c = make_comment(1, 2, text="gamma")
    thread = make_thread(q, [a], comments_by_answer={2: (c,)})
    vocab = build_thread_vocabulary(thread)
    assert set(vocab.counts) == {"alpha", "beta", "gamma"}


# --- HTML tag features --------------------------------------------------------


def test_tags_quote_contained_in_question():
    quote, contains, strong = html_tag_features("<blockquote>foo bar</blockquote>", "say foo bar again")
    assert (quote, contains, strong) == (1, 1, 0)


def test_tags_quote_not_contained():
    quote, contains, strong = html_tag_features("<blockquote>baz</blockquote>", "nothing here")
    assert (quote, contains, strong) == (1, 0, 0)


def test_tags_strong_and_b():
    assert html_tag_features("<strong>x</strong><b>y</b>", "")[2] == 2


def test_tags_nested_blockquotes_count_each():
    quote, contains, _ = html_tag_features(
        "<blockquote>outer <blockquote>inner</blockquote></blockquote>", "inner"
    )
    assert quote == 2
    assert contains == 1  # only the inner text matches the question


def test_tags_unbalanced_counts_openings():
    quote, _, strong = html_tag_features("<blockquote>oops <b>bold", "")
    assert quote == 1 and strong == 1


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["foo bar", "hello", "unrelated text"]), max_size=5))
def test_tags_contains_never_exceeds_quotes(texts):
    html = "".join(f"<blockquote>{t}</blockquote>" for t in texts)
    quote, contains, _ = html_tag_features(html, "foo bar hello")
    assert contains <= quote == len(texts)


# --- extract_shallow ----------------------------------------------------------


def _sample_thread():
    q = make_question(body="<p>How do I do this thing?</p>", accepted=3)
    a1 = make_answer(2, body="<p>One two. Three.</p>", minutes=60, score=2)
    a2 = make_answer(
        3,
        body='<p>Use the tool. See <a href="https://x.example">docs</a>.</p>',
        minutes=30,
        score=5,
    )
    return make_thread(q, [a2, a1])  # creation-time order: a2 first


def test_extract_shallow_age_and_counts():
    feats = extract_shallow(_sample_thread())
    assert feats[0].age_seconds == pytest.approx(1800)
    assert feats[1].age_seconds == pytest.approx(3600)
    assert all(f.answer_count_in_thread == 2 for f in feats)


def test_extract_shallow_word_sentence_counts():
    feats = extract_shallow(_sample_thread())
    f = feats[1]  # "One two. Three."
    assert f.word_count == 3
    assert f.sentence_count == 2
    assert f.avg_words_per_sentence == pytest.approx(1.5)


def test_extract_shallow_hyperlink_flag():
    feats = extract_shallow(_sample_thread())
    assert feats[0].contains_hyperlink == 1.0
    assert feats[1].contains_hyperlink == 0.0


def test_extract_shallow_is_pure():
    thread = _sample_thread()
    first = [f.as_dict() for f in extract_shallow(thread)]
    second = [f.as_dict() for f in extract_shallow(thread)]
    assert first == second


# --- Ranks --------------------------------------------------------------------


def test_rank_min_tie():
    assert rank_within_thread([5, 9, 9, 1]) == [3.0, 1.0, 1.0, 4.0]


def test_rank_singleton():
    assert rank_within_thread([42.0]) == [1.0]


def test_rank_lower_better():
    assert rank_within_thread([5, 9, 1], higher_better=False) == [2.0, 3.0, 1.0]


def test_rank_missing_passthrough():
    assert rank_within_thread([3.0, None, 1.0]) == [1.0, None, 2.0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=8))
def test_rank_invariant_under_monotone_transform(values):
    # quantize so exp() cannot collapse distinct values into new ties
    values = [round(v, 3) for v in values]
    direct = rank_within_thread(values)
    transformed = rank_within_thread([math.exp(v / 10) for v in values])
    assert direct == transformed


def test_percent_rank_spec_example():
    assert percent_rank([1, 2, 3, 4], 4) == [0.25, 0.5, 0.75, 1.0]


def test_percent_rank_singleton():
    assert percent_rank([1.0], 1) == [1.0]


def test_percent_rank_requires_answers():
    with pytest.raises(ValueError):
        percent_rank([1.0], 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=1, max_size=10, unique=True))
def test_percent_rank_distinct_values_form_grid(values):
    n = len(values)
    pranks = percent_rank(rank_within_thread(values), n)
    assert all(0 < p <= 1 for p in pranks)
    assert sorted(pranks) == pytest.approx([i / n for i in range(1, n + 1)])
