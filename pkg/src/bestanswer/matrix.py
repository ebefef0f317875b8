"""Feature matrix assembly and the feature CSV format.

Column naming is ``<group>.<feature>[.rank|.prank]`` with groups s, t,
a, q, ur and diff. Every numeric feature carries a within-thread ranked
version; percent-rank versions are added when the PR toggle is on.
Difference features (diff.*) exist exactly when both the answerer (a)
and questioner (q) groups are active. Missing values are empty CSV
cells. Column order is fixed: groups in the order s, t, a, q, ur, diff,
features in their documented group order, and raw / .rank / .prank
consecutively per feature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Instance, Thread, User
from .relations import RELATION_FEATURE_NAMES, UserRelationGraph, extract_relation
from .shallow import SHALLOW_FEATURE_NAMES, extract_shallow, percent_rank, rank_within_thread
from .topics import TEXTUAL_FEATURE_NAMES, extract_textual
from .users import USER_FEATURE_NAMES, difference_features, extract_answerer, extract_questioner

GROUP_ORDER = ("s", "t", "a", "q", "ur", "diff")
SELECTABLE_GROUPS = ("s", "t", "a", "q", "ur")

GROUP_FEATURES: dict[str, tuple[str, ...]] = {
    "s": SHALLOW_FEATURE_NAMES,
    "t": TEXTUAL_FEATURE_NAMES,
    "a": USER_FEATURE_NAMES,
    "q": USER_FEATURE_NAMES,
    "ur": RELATION_FEATURE_NAMES,
    "diff": USER_FEATURE_NAMES,
}

# Rank direction per feature: rank 1 = best. Age is the one feature
# where smaller raw values are better (faster answers); everything else
# defaults to higher-is-better.
LOWER_BETTER = frozenset({"s.age_seconds"})


def group_of(column: str) -> str:
    return column.split(".", 1)[0]


def is_rank_column(column: str) -> bool:
    return column.endswith(".rank")


def is_prank_column(column: str) -> bool:
    return column.endswith(".prank")


def base_column(column: str) -> str:
    for suffix in (".rank", ".prank"):
        if column.endswith(suffix):
            return column[: -len(suffix)]
    return column


def normalize_groups(groups) -> tuple[str, ...]:
    out = []
    for g in groups:
        g = g.strip().lower()
        if g not in SELECTABLE_GROUPS:
            raise ValueError(f"unknown feature group: {g!r} (expected one of {SELECTABLE_GROUPS})")
        if g not in out:
            out.append(g)
    if not out:
        raise ValueError("empty feature group set")
    return tuple(sorted(out, key=SELECTABLE_GROUPS.index))


def active_groups(groups: tuple[str, ...]) -> tuple[str, ...]:
    """Selected groups plus diff when both a and q are present."""
    out = list(groups)
    if "a" in groups and "q" in groups:
        out.append("diff")
    return tuple(sorted(out, key=GROUP_ORDER.index))


def column_layout(groups: tuple[str, ...], pr: bool) -> list[str]:
    cols = []
    for g in active_groups(groups):
        for feat in GROUP_FEATURES[g]:
            cols.append(f"{g}.{feat}")
            cols.append(f"{g}.{feat}.rank")
            if pr:
                cols.append(f"{g}.{feat}.prank")
    return cols


@dataclass
class FeatureMatrix:
    columns: list[str]
    question_ids: np.ndarray
    answer_ids: np.ndarray
    labels: np.ndarray
    values: np.ndarray  # (n, d) float64, NaN = missing

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def groups_present(self) -> tuple[str, ...]:
        seen = {group_of(c) for c in self.columns}
        return tuple(g for g in SELECTABLE_GROUPS if g in seen)

    def select_groups(self, groups, pr: bool = True) -> "FeatureMatrix":
        groups = normalize_groups(groups)
        present = set(self.groups_present())
        missing = [g for g in groups if g not in present]
        if missing:
            raise ValueError(f"groups not present in feature matrix: {missing}")
        wanted = set(active_groups(groups))
        keep = [
            i
            for i, c in enumerate(self.columns)
            if group_of(c) in wanted and (pr or not is_prank_column(c))
        ]
        return FeatureMatrix(
            columns=[self.columns[i] for i in keep],
            question_ids=self.question_ids,
            answer_ids=self.answer_ids,
            labels=self.labels,
            values=self.values[:, keep],
        )


def build_matrix(
    threads: list[Thread],
    instances: list[Instance],
    users: dict[int, User],
    groups=SELECTABLE_GROUPS,
    pr: bool = True,
    graph: UserRelationGraph | None = None,
    topic_dists: dict[int, np.ndarray] | None = None,
) -> FeatureMatrix:
    """Assemble the per-instance feature matrix for the given groups.

    topic_dists maps post_id to an inferred topic distribution and is
    required for group t; graph is required for group ur.
    """
    groups = normalize_groups(groups)
    if "t" in groups and topic_dists is None:
        raise ValueError("group t requested but no topic distributions given")
    if "ur" in groups and graph is None:
        raise ValueError("group ur requested but no user-relation graph given")

    act = active_groups(groups)
    base_cols = [f"{g}.{feat}" for g in act for feat in GROUP_FEATURES[g]]
    col_index = {c: i for i, c in enumerate(base_cols)}
    n = len(instances)
    base = np.full((n, len(base_cols)), np.nan, dtype=np.float64)

    by_thread: dict[int, list[tuple[int, Instance]]] = {}
    for row, inst in enumerate(instances):
        by_thread.setdefault(inst.question_id, []).append((row, inst))
    threads_by_qid = {t.question.post_id: t for t in threads}

    def put(row: int, group: str, feats: dict[str, float | None]) -> None:
        for name, value in feats.items():
            if value is not None:
                base[row, col_index[f"{group}.{name}"]] = value

    for qid, rows in by_thread.items():
        thread = threads_by_qid[qid]
        answer_pos = {a.post_id: i for i, a in enumerate(thread.answers)}
        shallow = extract_shallow(thread) if "s" in act else None
        qf = extract_questioner(thread, users) if ("q" in act or "diff" in act) else None
        q_dist = topic_dists.get(qid) if "t" in act else None
        for row, inst in rows:
            if shallow is not None:
                put(row, "s", shallow[answer_pos[inst.answer_id]].as_dict())
            if "t" in act:
                a_dist = topic_dists.get(inst.answer_id)
                if q_dist is None or a_dist is None:
                    raise ValueError(f"missing topic distribution for thread {qid}")
                put(row, "t", extract_textual(q_dist, a_dist).as_dict())
            af = extract_answerer(inst.answer, users) if ("a" in act or "diff" in act) else None
            if "a" in act:
                put(row, "a", af.as_dict())
            if "q" in act:
                put(row, "q", qf.as_dict())
            if "ur" in act:
                put(row, "ur", extract_relation(thread, inst.answer, graph))
            if "diff" in act:
                put(row, "diff", difference_features(qf, af))

    columns = column_layout(groups, pr)
    values = np.full((n, len(columns)), np.nan, dtype=np.float64)
    out_index = {c: i for i, c in enumerate(columns)}
    for c in base_cols:
        values[:, out_index[c]] = base[:, col_index[c]]
    for c in base_cols:
        higher_better = c not in LOWER_BETTER
        rank_col = out_index[f"{c}.rank"]
        prank_col = out_index.get(f"{c}.prank")
        src = col_index[c]
        for rows in by_thread.values():
            row_ids = [r for r, _ in rows]
            vals = [None if math.isnan(base[r, src]) else float(base[r, src]) for r in row_ids]
            ranks = rank_within_thread(vals, higher_better=higher_better)
            pranks = percent_rank(ranks, len(row_ids)) if prank_col is not None else None
            for i, r in enumerate(row_ids):
                if ranks[i] is not None:
                    values[r, rank_col] = ranks[i]
                if pranks is not None and pranks[i] is not None:
                    values[r, prank_col] = pranks[i]

    return FeatureMatrix(
        columns=columns,
        question_ids=np.array([inst.question_id for inst in instances], dtype=np.int64),
        answer_ids=np.array([inst.answer_id for inst in instances], dtype=np.int64),
        labels=np.array([inst.label for inst in instances], dtype=np.int64),
        values=values,
    )


# ---------------------------------------------------------------------------
# CSV round trip


def _format_value(v: float) -> str:
    if math.isnan(v):
        return ""
    return repr(float(v))


def write_feature_csv(matrix: FeatureMatrix, path: str, manifest_id: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if manifest_id is not None:
            fh.write(f"# manifest={manifest_id}\n")
        fh.write(",".join(["question_id", "answer_id", "label", *matrix.columns]))
        fh.write("\n")
        for i in range(matrix.n_rows):
            cells = [
                str(int(matrix.question_ids[i])),
                str(int(matrix.answer_ids[i])),
                str(int(matrix.labels[i])),
            ]
            cells.extend(_format_value(v) for v in matrix.values[i])
            fh.write(",".join(cells))
            fh.write("\n")


def read_feature_csv(path: str) -> FeatureMatrix:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"empty feature CSV: {path}")
    header = lines[0].split(",")
    if header[:3] != ["question_id", "answer_id", "label"]:
        raise ValueError(f"unexpected feature CSV header in {path}")
    columns = header[3:]
    n = len(lines) - 1
    qids = np.empty(n, dtype=np.int64)
    aids = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    values = np.full((n, len(columns)), np.nan, dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        qids[i] = int(cells[0])
        aids[i] = int(cells[1])
        labels[i] = int(cells[2])
        for j, cell in enumerate(cells[3:]):
            if cell:
                values[i, j] = float(cell)
    return FeatureMatrix(columns=columns, question_ids=qids, answer_ids=aids, labels=labels, values=values)
