"""Stack Exchange dump parsing and the hierarchical discussion model.

Input files are the extracted dump XML (Posts.xml, Users.xml,
Comments.xml, Badges.xml): one ``<row .../>`` element per record with
the entity's fields as attributes. The output of ``build_dataset`` is a
list of question threads plus one labelled instance per (question,
answer) pair, where the positive instance is the accepted answer.
"""

from __future__ import annotations

import json
import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import datetime
from html.parser import HTMLParser
from typing import IO, Iterable

log = logging.getLogger(__name__)


class DataError(Exception):
    """Raised for unusable input data (malformed XML, missing files)."""


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class User:
    user_id: int
    reputation: int = 0
    gold: int = 0
    silver: int = 0
    bronze: int = 0
    q_count: int = 0
    a_count: int = 0
    up_vote_count: int = 0
    down_vote_count: int = 0
    view_count: int = 0
    accept_rate: float | None = None


@dataclass(frozen=True)
class Post:
    post_id: int
    kind: str  # "question" | "answer"
    body_html: str
    body_text: str
    creation_time: datetime
    score: int
    owner_user_id: int | None = None
    accepted_answer_id: int | None = None  # questions only
    parent_id: int | None = None  # answers only


@dataclass(frozen=True)
class Comment:
    comment_id: int
    post_id: int
    user_id: int | None
    creation_time: datetime
    text: str


@dataclass(frozen=True)
class Thread:
    """One question, its answers (creation-time ascending), and comments."""

    question: Post
    answers: tuple[Post, ...]
    comments_on_question: tuple[Comment, ...] = ()
    comments_by_answer: dict[int, tuple[Comment, ...]] = field(default_factory=dict)

    def comments_for(self, answer_id: int) -> tuple[Comment, ...]:
        return self.comments_by_answer.get(answer_id, ())


@dataclass(frozen=True)
class Instance:
    """A labelled (thread, answer) pair; label 1 iff accepted answer."""

    thread: Thread
    answer: Post
    label: int

    @property
    def question_id(self) -> int:
        return self.thread.question.post_id

    @property
    def answer_id(self) -> int:
        return self.answer.post_id


@dataclass
class ParseStats:
    """Counters for rows that had to be skipped or repaired."""

    rows_missing_attr: int = 0
    rows_non_qa: int = 0
    comments_dangling: int = 0
    badges_unknown_class: int = 0
    answers_orphaned: int = 0
    threads_no_answers: int = 0
    threads_no_accepted: int = 0
    answers_negative_age: int = 0


# ---------------------------------------------------------------------------
# HTML stripping

_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "blockquote", "pre",
    "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table", "hr",
}


class _TextExtractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []

    def handle_data(self, data: str) -> None:
        self.chunks.append(data)

    def handle_starttag(self, tag, attrs) -> None:
        if tag in _BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_endtag(self, tag) -> None:
        if tag in _BLOCK_TAGS:
            self.chunks.append("\n")


def strip_html(html: str) -> str:
    """HTML to plain text: drop tags, unescape entities, collapse
    whitespace. Code blocks are kept as text; block tags become
    whitespace so adjacent paragraphs do not merge into one word."""
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    return " ".join("".join(parser.chunks).split())


# ---------------------------------------------------------------------------
# XML dump parsing

_TIME_FORMATS = ("%Y-%m-%dT%H:%M:%S.%f", "%Y-%m-%dT%H:%M:%S")


def parse_dump_time(value: str) -> datetime:
    """Dump timestamps are ISO-8601 without a zone designator (UTC)."""
    for fmt in _TIME_FORMATS:
        try:
            return datetime.strptime(value, fmt)
        except ValueError:
            continue
    raise ValueError(f"unparseable CreationDate: {value!r}")


def _iter_rows(source: str | IO) -> Iterable[ET.Element]:
    try:
        for event, elem in ET.iterparse(source, events=("end",)):
            if elem.tag == "row":
                yield elem
            elem.clear()
    except ET.ParseError as exc:
        line, col = exc.position
        raise DataError(f"malformed XML at line {line}, column {col}: {exc}") from exc


def parse_posts(source: str | IO, stats: ParseStats | None = None) -> list[Post]:
    """Parse Posts.xml. Rows with PostTypeId 1 (question) or 2 (answer)
    become Posts; every other post type is skipped. Rows missing a
    required attribute are skipped and counted."""
    stats = stats if stats is not None else ParseStats()
    posts: list[Post] = []
    for row in _iter_rows(source):
        kind_id = row.get("PostTypeId")
        if kind_id is None:
            stats.rows_missing_attr += 1
            log.warning("Posts.xml row skipped, missing PostTypeId (Id=%s)", row.get("Id"))
            continue
        if kind_id not in ("1", "2"):
            stats.rows_non_qa += 1
            continue
        post_id = row.get("Id")
        created = row.get("CreationDate")
        score = row.get("Score")
        body = row.get("Body")
        if post_id is None or created is None or score is None or body is None:
            stats.rows_missing_attr += 1
            log.warning("Posts.xml row skipped, missing required attribute (Id=%s)", post_id)
            continue
        if kind_id == "2" and row.get("ParentId") is None:
            stats.rows_missing_attr += 1
            log.warning("Posts.xml answer row %s skipped, missing ParentId", post_id)
            continue
        owner = row.get("OwnerUserId")
        posts.append(
            Post(
                post_id=int(post_id),
                kind="question" if kind_id == "1" else "answer",
                body_html=body,
                body_text=strip_html(body),
                creation_time=parse_dump_time(created),
                score=int(score),
                owner_user_id=int(owner) if owner is not None else None,
                accepted_answer_id=(
                    int(row.get("AcceptedAnswerId")) if kind_id == "1" and row.get("AcceptedAnswerId") else None
                ),
                parent_id=int(row.get("ParentId")) if kind_id == "2" else None,
            )
        )
    return posts


def parse_users(source: str | IO, stats: ParseStats | None = None) -> list[User]:
    """Parse Users.xml. Badge counts start at zero (see parse_badges);
    q_count / a_count / accept_rate are filled by derive_user_stats."""
    stats = stats if stats is not None else ParseStats()
    users: list[User] = []
    for row in _iter_rows(source):
        uid = row.get("Id")
        if uid is None:
            stats.rows_missing_attr += 1
            log.warning("Users.xml row skipped, missing Id")
            continue
        users.append(
            User(
                user_id=int(uid),
                reputation=max(int(row.get("Reputation", "0")), 0),
                up_vote_count=int(row.get("UpVotes", "0")),
                down_vote_count=int(row.get("DownVotes", "0")),
                view_count=int(row.get("Views", "0")),
            )
        )
    return users


def parse_badges(source: str | IO, stats: ParseStats | None = None) -> dict[int, tuple[int, int, int]]:
    """Parse Badges.xml into per-user (gold, silver, bronze) counts.

    Class 1 = gold, 2 = silver, 3 = bronze; an unknown class is counted
    as bronze with a warning.
    """
    stats = stats if stats is not None else ParseStats()
    counts: dict[int, list[int]] = {}
    for row in _iter_rows(source):
        uid = row.get("UserId")
        if uid is None:
            stats.rows_missing_attr += 1
            continue
        cls = row.get("Class", "3")
        triple = counts.setdefault(int(uid), [0, 0, 0])
        if cls == "1":
            triple[0] += 1
        elif cls == "2":
            triple[1] += 1
        else:
            if cls != "3":
                stats.badges_unknown_class += 1
                log.warning("Badges.xml: unknown Class=%s counted as bronze", cls)
            triple[2] += 1
    return {uid: (g, s, b) for uid, (g, s, b) in counts.items()}


def apply_badges(users: list[User], badges: dict[int, tuple[int, int, int]]) -> list[User]:
    out = []
    for u in users:
        g, s, b = badges.get(u.user_id, (0, 0, 0))
        out.append(replace(u, gold=g, silver=s, bronze=b))
    return out


def parse_comments(
    source: str | IO,
    valid_post_ids: set[int] | None = None,
    stats: ParseStats | None = None,
) -> list[Comment]:
    """Parse Comments.xml. When valid_post_ids is given, comments whose
    PostId does not resolve are dropped and counted."""
    stats = stats if stats is not None else ParseStats()
    comments: list[Comment] = []
    for row in _iter_rows(source):
        cid = row.get("Id")
        pid = row.get("PostId")
        created = row.get("CreationDate")
        if cid is None or pid is None or created is None:
            stats.rows_missing_attr += 1
            log.warning("Comments.xml row skipped, missing required attribute (Id=%s)", cid)
            continue
        pid_i = int(pid)
        if valid_post_ids is not None and pid_i not in valid_post_ids:
            stats.comments_dangling += 1
            log.warning("Comments.xml row %s dropped, PostId %s not in dump", cid, pid)
            continue
        uid = row.get("UserId")
        comments.append(
            Comment(
                comment_id=int(cid),
                post_id=pid_i,
                user_id=int(uid) if uid is not None else None,
                creation_time=parse_dump_time(created),
                text=row.get("Text", ""),
            )
        )
    return comments


# ---------------------------------------------------------------------------
# Thread assembly


def build_dataset(
    posts: list[Post],
    comments: list[Comment],
    users: list[User],
    stats: ParseStats | None = None,
) -> tuple[list[Thread], list[Instance]]:
    """Assemble threads and labelled instances.

    Excluded entirely: threads with zero answers, threads whose question
    has no accepted answer, and threads whose accepted answer id does
    not resolve to one of its answers. Answers whose parent question is
    missing are counted as orphans and dropped. Within a thread answers
    are ordered by (creation_time, post_id) ascending.
    """
    stats = stats if stats is not None else ParseStats()
    questions = {p.post_id: p for p in posts if p.kind == "question"}
    answers_by_parent: dict[int, list[Post]] = {}
    for p in posts:
        if p.kind != "answer":
            continue
        if p.parent_id not in questions:
            stats.answers_orphaned += 1
            continue
        answers_by_parent.setdefault(p.parent_id, []).append(p)

    comments_by_post: dict[int, list[Comment]] = {}
    for c in comments:
        comments_by_post.setdefault(c.post_id, []).append(c)

    threads: list[Thread] = []
    instances: list[Instance] = []
    for qid in sorted(questions):
        q = questions[qid]
        ans = answers_by_parent.get(qid)
        if not ans:
            stats.threads_no_answers += 1
            continue
        ans = sorted(ans, key=lambda a: (a.creation_time, a.post_id))
        if q.accepted_answer_id is None or q.accepted_answer_id not in {a.post_id for a in ans}:
            stats.threads_no_accepted += 1
            continue
        thread = Thread(
            question=q,
            answers=tuple(ans),
            comments_on_question=tuple(
                sorted(comments_by_post.get(qid, []), key=lambda c: (c.creation_time, c.comment_id))
            ),
            comments_by_answer={
                a.post_id: tuple(
                    sorted(comments_by_post.get(a.post_id, []), key=lambda c: (c.creation_time, c.comment_id))
                )
                for a in ans
                if a.post_id in comments_by_post
            },
        )
        threads.append(thread)
        for a in ans:
            if a.creation_time < q.creation_time:
                stats.answers_negative_age += 1
            instances.append(Instance(thread=thread, answer=a, label=int(a.post_id == q.accepted_answer_id)))
    return threads, instances


def derive_user_stats(threads: list[Thread], users: list[User]) -> list[User]:
    """Fill q_count, a_count and accept_rate from the assembled threads.

    accept_rate = accepted answers / authored answers, missing when the
    user authored no answers in the dataset.
    """
    q_counts: dict[int, int] = {}
    a_counts: dict[int, int] = {}
    accepted: dict[int, int] = {}
    for t in threads:
        q_owner = t.question.owner_user_id
        if q_owner is not None:
            q_counts[q_owner] = q_counts.get(q_owner, 0) + 1
        for a in t.answers:
            if a.owner_user_id is None:
                continue
            a_counts[a.owner_user_id] = a_counts.get(a.owner_user_id, 0) + 1
            if a.post_id == t.question.accepted_answer_id:
                accepted[a.owner_user_id] = accepted.get(a.owner_user_id, 0) + 1
    out = []
    for u in users:
        ac = a_counts.get(u.user_id, 0)
        out.append(
            replace(
                u,
                q_count=q_counts.get(u.user_id, 0),
                a_count=ac,
                accept_rate=(accepted.get(u.user_id, 0) / ac) if ac > 0 else None,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Internal line-delimited dataset format

_TS = "%Y-%m-%dT%H:%M:%S.%f"


def _dt_to_str(dt: datetime) -> str:
    return dt.strftime(_TS)


def _post_to_record(p: Post) -> dict:
    return {
        "post_id": p.post_id,
        "kind": p.kind,
        "body_html": p.body_html,
        "body_text": p.body_text,
        "creation_time": _dt_to_str(p.creation_time),
        "score": p.score,
        "owner_user_id": p.owner_user_id,
        "accepted_answer_id": p.accepted_answer_id,
        "parent_id": p.parent_id,
    }


def _post_from_record(r: dict) -> Post:
    return Post(
        post_id=r["post_id"],
        kind=r["kind"],
        body_html=r["body_html"],
        body_text=r["body_text"],
        creation_time=datetime.strptime(r["creation_time"], _TS),
        score=r["score"],
        owner_user_id=r["owner_user_id"],
        accepted_answer_id=r["accepted_answer_id"],
        parent_id=r["parent_id"],
    )


def _user_to_record(u: User) -> dict:
    return {
        "user_id": u.user_id,
        "reputation": u.reputation,
        "gold": u.gold,
        "silver": u.silver,
        "bronze": u.bronze,
        "q_count": u.q_count,
        "a_count": u.a_count,
        "up_vote_count": u.up_vote_count,
        "down_vote_count": u.down_vote_count,
        "view_count": u.view_count,
        "accept_rate": u.accept_rate,
    }


def _comment_to_record(c: Comment) -> dict:
    return {
        "comment_id": c.comment_id,
        "post_id": c.post_id,
        "user_id": c.user_id,
        "creation_time": _dt_to_str(c.creation_time),
        "text": c.text,
    }


def _comment_from_record(r: dict) -> Comment:
    return Comment(
        comment_id=r["comment_id"],
        post_id=r["post_id"],
        user_id=r["user_id"],
        creation_time=datetime.strptime(r["creation_time"], _TS),
        text=r["text"],
    )


def _write_jsonl(path: str, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _read_jsonl(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_dataset(directory: str, posts: list[Post], users: list[User], comments: list[Comment]) -> None:
    """Write the parsed entities as line-delimited JSON (one file per
    entity, one record per line, keys sorted). Records are sorted by id
    so identical inputs produce byte-identical files."""
    os.makedirs(directory, exist_ok=True)
    _write_jsonl(os.path.join(directory, "posts.jsonl"),
                 (_post_to_record(p) for p in sorted(posts, key=lambda p: p.post_id)))
    _write_jsonl(os.path.join(directory, "users.jsonl"),
                 (_user_to_record(u) for u in sorted(users, key=lambda u: u.user_id)))
    _write_jsonl(os.path.join(directory, "comments.jsonl"),
                 (_comment_to_record(c) for c in sorted(comments, key=lambda c: c.comment_id)))


def read_dataset(directory: str) -> tuple[list[Post], list[User], list[Comment]]:
    for name in ("posts.jsonl", "users.jsonl", "comments.jsonl"):
        if not os.path.exists(os.path.join(directory, name)):
            raise DataError(f"dataset file missing: {os.path.join(directory, name)}")
    posts = [_post_from_record(r) for r in _read_jsonl(os.path.join(directory, "posts.jsonl"))]
    users = [User(**r) for r in _read_jsonl(os.path.join(directory, "users.jsonl"))]
    comments = [_comment_from_record(r) for r in _read_jsonl(os.path.join(directory, "comments.jsonl"))]
    return posts, users, comments


def dataset_summary(posts: list[Post], threads: list[Thread], instances: list[Instance]) -> dict:
    """Counts echoing the site/question/answer/ratio table format."""
    n_q = sum(1 for p in posts if p.kind == "question")
    n_a = sum(1 for p in posts if p.kind == "answer")
    n_pos = sum(i.label for i in instances)
    n_neg = len(instances) - n_pos
    return {
        "questions": n_q,
        "answers": n_a,
        "threads_kept": len(threads),
        "instances": len(instances),
        "positives": n_pos,
        "negatives": n_neg,
        "positive_negative_ratio": f"1:{n_neg / n_pos:.1f}" if n_pos else "n/a",
    }
