"""Shared builders for handcrafted corpus objects."""

from __future__ import annotations

from datetime import datetime, timedelta

from bestanswer.corpus import Comment, Post, Thread, User

T0 = datetime(2021, 5, 1, 12, 0, 0)


def make_question(post_id=1, body="<p>What is the answer?</p>", owner=10, accepted=None, t=T0):
    from bestanswer.corpus import strip_html

    return Post(
        post_id=post_id,
        kind="question",
        body_html=body,
        body_text=strip_html(body),
        creation_time=t,
        score=1,
        owner_user_id=owner,
        accepted_answer_id=accepted,
    )


def make_answer(post_id, parent_id=1, body="<p>An answer.</p>", owner=20, minutes=60, score=0, t0=T0):
    from bestanswer.corpus import strip_html

    return Post(
        post_id=post_id,
        kind="answer",
        body_html=body,
        body_text=strip_html(body),
        creation_time=t0 + timedelta(minutes=minutes),
        score=score,
        owner_user_id=owner,
        parent_id=parent_id,
    )


def make_comment(comment_id, post_id, user_id=30, minutes=120, text="nice point", t0=T0):
    return Comment(
        comment_id=comment_id,
        post_id=post_id,
        user_id=user_id,
        creation_time=t0 + timedelta(minutes=minutes),
        text=text,
    )


def make_thread(question=None, answers=(), comments_q=(), comments_by_answer=None):
    q = question if question is not None else make_question(accepted=answers[0].post_id if answers else None)
    return Thread(
        question=q,
        answers=tuple(answers),
        comments_on_question=tuple(comments_q),
        comments_by_answer=dict(comments_by_answer or {}),
    )


def make_user(user_id, **kwargs):
    return User(user_id=user_id, **kwargs)
