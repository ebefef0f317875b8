"""Answerer (A), questioner (Q) and difference feature groups.

Missing values stay missing (None) all the way into the learner, which
routes them to a learned default branch; no imputation, so sentinel
values like the 101 starter reputation keep their meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .corpus import Post, Thread, User

USER_FEATURE_NAMES = (
    "reputation",
    "bronze",
    "silver",
    "gold",
    "q_count",
    "a_count",
    "up_vote_count",
    "down_vote_count",
    "view_count",
    "accept_rate",
)


@dataclass(frozen=True)
class UserFeatureVector:
    reputation: float | None = None
    bronze: float | None = None
    silver: float | None = None
    gold: float | None = None
    q_count: float | None = None
    a_count: float | None = None
    up_vote_count: float | None = None
    down_vote_count: float | None = None
    view_count: float | None = None
    accept_rate: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


MISSING_USER = UserFeatureVector()


def _from_user(user: User | None) -> UserFeatureVector:
    if user is None:
        return MISSING_USER
    return UserFeatureVector(
        reputation=float(user.reputation),
        bronze=float(user.bronze),
        silver=float(user.silver),
        gold=float(user.gold),
        q_count=float(user.q_count),
        a_count=float(user.a_count),
        up_vote_count=float(user.up_vote_count),
        down_vote_count=float(user.down_vote_count),
        view_count=float(user.view_count),
        accept_rate=float(user.accept_rate) if user.accept_rate is not None else None,
    )


def extract_answerer(answer: Post, users: dict[int, User]) -> UserFeatureVector:
    """Answerer features; anonymous or unknown authors give an
    all-missing vector."""
    if answer.owner_user_id is None:
        return MISSING_USER
    return _from_user(users.get(answer.owner_user_id))


def extract_questioner(thread: Thread, users: dict[int, User]) -> UserFeatureVector:
    """Questioner features: the same vector is attached to every
    instance of the thread."""
    if thread.question.owner_user_id is None:
        return MISSING_USER
    return _from_user(users.get(thread.question.owner_user_id))


def difference_features(qf: UserFeatureVector, af: UserFeatureVector) -> dict[str, float | None]:
    """Per field, questioner minus answerer; missing on either side
    stays missing. Only used when both A and Q groups are active."""
    out: dict[str, float | None] = {}
    qd, ad = qf.as_dict(), af.as_dict()
    for name in USER_FEATURE_NAMES:
        qv, av = qd[name], ad[name]
        out[name] = (qv - av) if qv is not None and av is not None else None
    return out
