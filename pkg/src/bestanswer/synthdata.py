"""Synthetic Stack-Exchange-style dump generator.

Writes Posts.xml / Users.xml / Comments.xml / Badges.xml in the dump
schema, with a planted data-generating process: answer acceptance is
driven by answer quality (author skill, topical match with the
question, speed), scores track quality, active users answer and
comment more. That gives the ingestion pipeline realistic structure
and gives the learner a recoverable signal at desk scale for tests and
benchmarks. It is a stand-in, not a substitute for real site data.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime, timedelta
from xml.sax.saxutils import quoteattr

import numpy as np

_CONSONANTS = "btslmnkrdpgvz"
_VOWELS = "aeiou"
_FUNCTION_WORDS = (
    "the a of to and in is it that for with on as this not are was but".split()
)


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 300
    n_questions: int = 900
    n_topics: int = 8
    words_per_topic: int = 100
    n_common_words: int = 40
    accept_probability: float = 0.82
    anonymous_rate: float = 0.03
    seed: int = 7
    start_date: str = "2019-03-01T09:00:00"
    span_days: int = 1000


def _make_word(rng: np.random.Generator) -> str:
    n_syll = int(rng.integers(1, 5))
    return "".join(
        _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
        for _ in range(n_syll)
    )


def _make_vocab(rng: np.random.Generator, cfg: SynthConfig) -> tuple[list[list[str]], list[str]]:
    seen: set[str] = set(_FUNCTION_WORDS)

    def fresh() -> str:
        while True:
            w = _make_word(rng)
            if w not in seen:
                seen.add(w)
                return w

    topics = [[fresh() for _ in range(cfg.words_per_topic)] for _ in range(cfg.n_topics)]
    common = [fresh() for _ in range(cfg.n_common_words)]
    return topics, common


class _TextSampler:
    def __init__(self, rng, topic_vocab, common_vocab, n_topics):
        self.rng = rng
        self.topic_vocab = topic_vocab
        self.common_vocab = common_vocab
        self.n_topics = n_topics

    def word(self, topic: int, on_topic: float) -> str:
        r = self.rng.random()
        if r < 0.2:
            return _FUNCTION_WORDS[self.rng.integers(len(_FUNCTION_WORDS))]
        if r < 0.35:
            return self.common_vocab[self.rng.integers(len(self.common_vocab))]
        if self.rng.random() < on_topic:
            pool = self.topic_vocab[topic]
        else:
            other = (topic + 1 + self.rng.integers(self.n_topics - 1)) % self.n_topics
            pool = self.topic_vocab[other]
        return pool[self.rng.integers(len(pool))]

    def sentence(self, topic: int, on_topic: float) -> str:
        n = int(self.rng.integers(5, 13))
        words = [self.word(topic, on_topic) for _ in range(n)]
        end = "?" if self.rng.random() < 0.15 else "."
        return words[0].capitalize() + " " + " ".join(words[1:]) + end

    def paragraphs(self, topic: int, on_topic: float, n_sentences: int) -> list[str]:
        return [self.sentence(topic, on_topic) for _ in range(n_sentences)]


def _fmt_time(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3]


def _row(attrs: dict) -> str:
    parts = " ".join(f"{k}={quoteattr(str(v))}" for k, v in attrs.items() if v is not None)
    return f"  <row {parts} />"


def generate_dump(out_dir: str, cfg: SynthConfig = SynthConfig()) -> dict:
    """Write the four dump files into out_dir; returns generation stats."""
    rng = np.random.default_rng(cfg.seed)
    os.makedirs(out_dir, exist_ok=True)
    topic_vocab, common_vocab = _make_vocab(rng, cfg)
    sampler = _TextSampler(rng, topic_vocab, common_vocab, cfg.n_topics)
    start = datetime.strptime(cfg.start_date, "%Y-%m-%dT%H:%M:%S")

    # users: activity drives participation, skill drives answer quality
    n_u = cfg.n_users
    activity = rng.lognormal(0.0, 1.0, size=n_u)
    activity /= activity.max()
    # active users tend to be better answerers, so graph degrees carry signal
    skill = np.clip(0.15 + 0.55 * activity + 0.3 * rng.beta(2.0, 2.0, size=n_u), 0.05, 1.0)
    reputation = np.where(
        rng.random(n_u) < 0.15,
        101,
        np.maximum(1, np.round(101 + 4000 * activity * skill * rng.lognormal(0, 0.3, n_u))),
    ).astype(int)
    bronze = rng.poisson(reputation / 300.0)
    silver = rng.poisson(reputation / 1500.0)
    gold = rng.poisson(reputation / 8000.0)
    up_votes = rng.poisson(50 * activity * (0.3 + 0.7 * skill)).astype(int)
    down_votes = rng.poisson(6 * activity * (1.0 - 0.5 * skill)).astype(int)
    views = rng.poisson(80 * activity).astype(int)
    user_ids = np.arange(1, n_u + 1)

    p_ask = activity / activity.sum()
    answer_weight = activity * (0.5 + skill)
    comment_weight = activity / activity.sum()

    posts_rows: list[str] = []
    comments_rows: list[str] = []
    next_post_id = 1
    next_comment_id = 1
    n_answers_total = 0
    n_accepted = 0

    def maybe_anonymous(uid: int) -> int | None:
        return None if rng.random() < cfg.anonymous_rate else uid

    for qi in range(cfg.n_questions):
        topic = int(rng.integers(cfg.n_topics))
        asker_ix = int(rng.choice(n_u, p=p_ask))
        q_time = start + timedelta(
            days=cfg.span_days * qi / cfg.n_questions, minutes=float(rng.integers(0, 600))
        )
        q_sentences = sampler.paragraphs(topic, 0.9, int(rng.integers(3, 8)))
        q_body = "".join(f"<p>{s}</p>" for s in q_sentences)
        q_id = next_post_id
        next_post_id += 1

        n_answers = int(2 + min(rng.poisson(1.3), 6))
        weights = answer_weight.copy()
        weights[asker_ix] *= 0.1
        weights /= weights.sum()
        answerers = rng.choice(n_u, size=min(n_answers, n_u - 1), replace=False, p=weights)
        n_answers = len(answerers)
        n_answers_total += n_answers

        lags_h = np.sort(rng.lognormal(2.3, 1.8, size=n_answers))
        on_topic = np.clip(0.15 + 0.75 * skill[answerers] + rng.normal(0, 0.15, n_answers), 0.05, 0.98)
        speed = np.exp(-lags_h / 36.0)
        # voters reward content; the asker additionally rewards speed,
        # so rating score and age carry complementary signal
        content = 0.4 * skill[answerers] + 1.1 * on_topic + rng.normal(0, 0.15, n_answers)
        quality = content + 1.4 * speed + rng.normal(0, 0.15, n_answers)
        scores = np.maximum(-2, np.round(content * 4.0 + 0.8 * speed + rng.normal(0, 0.8, n_answers))).astype(int)

        answer_ids = []
        answer_owner_attr = []
        for j, ans_ix in enumerate(answerers):
            a_id = next_post_id
            next_post_id += 1
            answer_ids.append(a_id)
            n_sent = int(rng.integers(3, 9))
            sentences = sampler.paragraphs(topic, float(on_topic[j]), n_sent)
            body = "".join(f"<p>{s}</p>" for s in sentences)
            fancy = quality[j] > np.median(quality) - 0.1
            if fancy and rng.random() < 0.35:
                quoted = q_sentences[rng.integers(len(q_sentences))]
                body = f"<blockquote><p>{quoted}</p></blockquote>" + body
            elif rng.random() < 0.08:
                body = f"<blockquote><p>{sampler.sentence(topic, 0.3)}</p></blockquote>" + body
            if fancy and rng.random() < 0.3:
                body += f'<p>See <a href="https://example.com/{a_id}">this reference</a>.</p>'
            if rng.random() < 0.2:
                body += f"<p><strong>{sampler.word(topic, 0.9)}</strong> matters here.</p>"
            owner = maybe_anonymous(int(user_ids[ans_ix]))
            answer_owner_attr.append(owner)
            posts_rows.append(
                _row(
                    {
                        "Id": a_id,
                        "PostTypeId": 2,
                        "ParentId": q_id,
                        "CreationDate": _fmt_time(q_time + timedelta(hours=float(lags_h[j]))),
                        "Score": int(scores[j]),
                        "Body": body,
                        "OwnerUserId": owner,
                    }
                )
            )
            for _ in range(rng.poisson(0.8)):
                c_ix = int(rng.choice(n_u, p=comment_weight))
                comments_rows.append(
                    _row(
                        {
                            "Id": next_comment_id,
                            "PostId": a_id,
                            "UserId": maybe_anonymous(int(user_ids[c_ix])),
                            "CreationDate": _fmt_time(
                                q_time + timedelta(hours=float(lags_h[j]) + float(rng.integers(1, 72)))
                            ),
                            "Text": sampler.sentence(topic, 0.6),
                        }
                    )
                )
                next_comment_id += 1

        accepted_attr = None
        if rng.random() < cfg.accept_probability:
            best = int(np.argmax(quality + rng.normal(0, 0.10, n_answers)))
            accepted_attr = answer_ids[best]
            n_accepted += 1

        posts_rows.insert(
            len(posts_rows) - n_answers,
            _row(
                {
                    "Id": q_id,
                    "PostTypeId": 1,
                    "CreationDate": _fmt_time(q_time),
                    "Score": int(max(0, rng.poisson(2))),
                    "Body": q_body,
                    "OwnerUserId": maybe_anonymous(int(user_ids[asker_ix])),
                    "AcceptedAnswerId": accepted_attr,
                }
            ),
        )
        for _ in range(rng.poisson(0.35)):
            c_ix = int(rng.choice(n_u, p=comment_weight))
            comments_rows.append(
                _row(
                    {
                        "Id": next_comment_id,
                        "PostId": q_id,
                        "UserId": maybe_anonymous(int(user_ids[c_ix])),
                        "CreationDate": _fmt_time(q_time + timedelta(hours=float(rng.integers(1, 48)))),
                        "Text": sampler.sentence(topic, 0.6),
                    }
                )
            )
            next_comment_id += 1

    # a couple of non-Q/A rows the parser must skip
    posts_rows.append(
        _row(
            {
                "Id": next_post_id,
                "PostTypeId": 4,
                "CreationDate": _fmt_time(start),
                "Score": 0,
                "Body": "<p>tag wiki excerpt</p>",
            }
        )
    )
    next_post_id += 1
    posts_rows.append(
        _row(
            {
                "Id": next_post_id,
                "PostTypeId": 5,
                "CreationDate": _fmt_time(start),
                "Score": 0,
                "Body": "<p>tag wiki</p>",
            }
        )
    )
    next_post_id += 1

    def write(name: str, root: str, rows: list[str]) -> None:
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write('<?xml version="1.0" encoding="utf-8"?>\n')
            fh.write(f"<{root}>\n")
            fh.write("\n".join(rows))
            fh.write(f"\n</{root}>\n")

    write("Posts.xml", "posts", posts_rows)

    user_rows = [
        _row(
            {
                "Id": int(uid),
                "Reputation": int(reputation[i]),
                "CreationDate": _fmt_time(start - timedelta(days=int(rng.integers(10, 2000)))),
                "DisplayName": f"user{uid}",
                "Views": int(views[i]),
                "UpVotes": int(up_votes[i]),
                "DownVotes": int(down_votes[i]),
            }
        )
        for i, uid in enumerate(user_ids)
    ]
    user_rows.insert(
        0,
        _row(
            {
                "Id": -1,
                "Reputation": 1,
                "CreationDate": _fmt_time(start - timedelta(days=3000)),
                "DisplayName": "Community",
                "Views": 0,
                "UpVotes": 0,
                "DownVotes": 0,
            }
        ),
    )
    write("Users.xml", "users", user_rows)
    write("Comments.xml", "comments", comments_rows)

    badge_rows = []
    badge_id = 1
    for i, uid in enumerate(user_ids):
        for cls, count in ((1, gold[i]), (2, silver[i]), (3, bronze[i])):
            for _ in range(int(count)):
                badge_rows.append(
                    _row(
                        {
                            "Id": badge_id,
                            "UserId": int(uid),
                            "Class": cls,
                            "Name": {1: "gold", 2: "silver", 3: "bronze"}[cls],
                            "Date": _fmt_time(start + timedelta(days=int(rng.integers(0, cfg.span_days)))),
                        }
                    )
                )
                badge_id += 1
    write("Badges.xml", "badges", badge_rows)

    return {
        "questions": cfg.n_questions,
        "answers": n_answers_total,
        "accepted": n_accepted,
        "comments": next_comment_id - 1,
        "users": n_u + 1,
    }
