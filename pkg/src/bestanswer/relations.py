"""User-relation feature group (UR): a directed message-count graph
over users and the six edge-count features read off it.

Edge naming follows the relationship diagram's arrows literally: the
edge drawn questioner -> answerer is aqSendEdge and the edge drawn
answerer -> questioner is qaSendEdge, prefixes notwithstanding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Post, Thread

RELATION_FEATURE_NAMES = (
    "aqSendEdge",
    "qaSendEdge",
    "qUserSendEdge",
    "qUserGetEdge",
    "aUserSendEdge",
    "aUserGetEdge",
)


@dataclass
class UserRelationGraph:
    edge_counts: dict[tuple[int, int], int] = field(default_factory=dict)
    out_degree: dict[int, int] = field(default_factory=dict)
    in_degree: dict[int, int] = field(default_factory=dict)
    total_messages: int = 0

    def add_message(self, sender: int | None, receiver: int | None) -> None:
        """One directed message event; anonymous endpoints and
        self-messages are skipped."""
        if sender is None or receiver is None or sender == receiver:
            return
        key = (sender, receiver)
        self.edge_counts[key] = self.edge_counts.get(key, 0) + 1
        self.out_degree[sender] = self.out_degree.get(sender, 0) + 1
        self.in_degree[receiver] = self.in_degree.get(receiver, 0) + 1
        self.total_messages += 1

    def count(self, sender: int, receiver: int) -> int:
        return self.edge_counts.get((sender, receiver), 0)

    def sent(self, user: int) -> int:
        return self.out_degree.get(user, 0)

    def received(self, user: int) -> int:
        return self.in_degree.get(user, 0)


def build_graph(threads: list[Thread]) -> UserRelationGraph:
    """Message events over the whole dataset: each answer sends
    answerer -> questioner, each comment sends commenter -> owner of
    the commented post (question comments included)."""
    graph = UserRelationGraph()
    for t in threads:
        q_owner = t.question.owner_user_id
        for c in t.comments_on_question:
            graph.add_message(c.user_id, q_owner)
        for a in t.answers:
            graph.add_message(a.owner_user_id, q_owner)
            for c in t.comments_for(a.post_id):
                graph.add_message(c.user_id, a.owner_user_id)
    return graph


def write_edge_list(graph: UserRelationGraph, path: str) -> None:
    """Graph export: one ``sender receiver count`` line per edge,
    sorted for reproducibility."""
    with open(path, "w", encoding="utf-8") as fh:
        for (sender, receiver) in sorted(graph.edge_counts):
            fh.write(f"{sender} {receiver} {graph.edge_counts[(sender, receiver)]}\n")


def degree_summary(graph: UserRelationGraph, threads: list[Thread]) -> dict[str, dict[str, float]]:
    """Distributional summary of questioner out-degrees and answerer
    out-degrees over the dataset's instances (reported, not asserted:
    questioners tend to have sent little, active answerers a lot)."""
    q_sent = []
    a_sent = []
    for t in threads:
        q = t.question.owner_user_id
        for a in t.answers:
            if q is not None and a.owner_user_id is not None:
                q_sent.append(graph.sent(q))
                a_sent.append(graph.sent(a.owner_user_id))

    def stats(values):
        if not values:
            return {"min": 0.0, "median": 0.0, "max": 0.0}
        ordered = sorted(values)
        return {
            "min": float(ordered[0]),
            "median": float(ordered[len(ordered) // 2]),
            "max": float(ordered[-1]),
        }

    return {"qUserSendEdge": stats(q_sent), "aUserSendEdge": stats(a_sent)}


def extract_relation(thread: Thread, answer: Post, graph: UserRelationGraph) -> dict[str, float | None]:
    """The six edge-count features for one (question, answer) pair; an
    anonymous questioner or answerer makes all six missing."""
    q = thread.question.owner_user_id
    a = answer.owner_user_id
    if q is None or a is None:
        return {name: None for name in RELATION_FEATURE_NAMES}
    return {
        "aqSendEdge": float(graph.count(q, a)),
        "qaSendEdge": float(graph.count(a, q)),
        "qUserSendEdge": float(graph.sent(q)),
        "qUserGetEdge": float(graph.received(q)),
        "aUserSendEdge": float(graph.sent(a)),
        "aUserGetEdge": float(graph.received(a)),
    }
