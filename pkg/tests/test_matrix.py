import numpy as np
import pytest

from bestanswer.corpus import Instance
from bestanswer.matrix import (
    FeatureMatrix,
    build_matrix,
    column_layout,
    group_of,
    normalize_groups,
    read_feature_csv,
    write_feature_csv,
)
from bestanswer.relations import build_graph
from helpers import make_answer, make_question, make_thread, make_user


def small_dataset():
    q1 = make_question(post_id=1, owner=10, accepted=3, body="<p>How to fix this? It fails.</p>")
    a2 = make_answer(2, owner=20, minutes=30, score=1, body="<p>Try restarting.</p>")
    a3 = make_answer(3, owner=21, minutes=90, score=7, body="<p>Patch the config. Works well.</p>")
    t1 = make_thread(q1, [a2, a3])
    q2 = make_question(post_id=5, owner=21, accepted=6, body="<p>Another question?</p>")
    a6 = make_answer(6, parent_id=5, owner=None, minutes=10, score=2, body="<p>Anon answer.</p>")
    t2 = make_thread(q2, [a6])
    threads = [t1, t2]
    instances = [
        Instance(t1, a2, 0),
        Instance(t1, a3, 1),
        Instance(t2, a6, 1),
    ]
    users = {
        10: make_user(10, reputation=500, view_count=9),
        20: make_user(20, reputation=101, accept_rate=0.5, a_count=2),
        21: make_user(21, reputation=1500, accept_rate=1.0, a_count=1, q_count=1),
    }
    return threads, instances, users


def test_column_layout_order_and_suffixes():
    cols = column_layout(("s",), pr=True)
    assert cols[0] == "s.age_seconds"
    assert cols[1] == "s.age_seconds.rank"
    assert cols[2] == "s.age_seconds.prank"
    assert all(group_of(c) == "s" for c in cols)


def test_column_layout_diff_rule():
    with_both = column_layout(normalize_groups(["a", "q"]), pr=False)
    assert any(c.startswith("diff.") for c in with_both)
    only_a = column_layout(("a",), pr=False)
    assert not any(c.startswith("diff.") for c in only_a)


def test_normalize_groups_validates():
    assert normalize_groups(["UR", "s"]) == ("s", "ur")
    with pytest.raises(ValueError):
        normalize_groups(["bogus"])
    with pytest.raises(ValueError):
        normalize_groups([])


def test_build_matrix_shapes_and_ids():
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("s", "a", "q"), graph=None)
    assert mat.n_rows == 3
    assert list(mat.question_ids) == [1, 1, 5]
    assert list(mat.answer_ids) == [2, 3, 6]
    assert list(mat.labels) == [0, 1, 1]
    assert set(map(group_of, mat.columns)) == {"s", "a", "q", "diff"}


def test_build_matrix_rank_and_prank_values():
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("s",))
    col = {c: i for i, c in enumerate(mat.columns)}
    score = mat.values[:, col["s.rating_score"]]
    assert list(score[:2]) == [1.0, 7.0]
    # higher-better: score 7 ranks 1
    assert list(mat.values[:2, col["s.rating_score.rank"]]) == [2.0, 1.0]
    assert list(mat.values[:2, col["s.rating_score.prank"]]) == [1.0, 0.5]
    # age is lower-better: the earlier answer ranks 1
    assert list(mat.values[:2, col["s.age_seconds.rank"]]) == [1.0, 2.0]
    # singleton thread
    assert mat.values[2, col["s.rating_score.rank"]] == 1.0
    assert mat.values[2, col["s.rating_score.prank"]] == 1.0


def test_build_matrix_missing_user_features():
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("a",))
    col = {c: i for i, c in enumerate(mat.columns)}
    assert np.isnan(mat.values[2, col["a.reputation"]])  # anonymous answerer
    assert np.isnan(mat.values[2, col["a.reputation.rank"]])
    assert mat.values[0, col["a.reputation"]] == 101.0


def test_build_matrix_requires_inputs_for_groups():
    threads, instances, users = small_dataset()
    with pytest.raises(ValueError):
        build_matrix(threads, instances, users, groups=("t",))
    with pytest.raises(ValueError):
        build_matrix(threads, instances, users, groups=("ur",))


def test_build_matrix_ur_group():
    threads, instances, users = small_dataset()
    graph = build_graph(threads)
    mat = build_matrix(threads, instances, users, groups=("ur",), graph=graph)
    col = {c: i for i, c in enumerate(mat.columns)}
    assert mat.values[1, col["ur.qaSendEdge"]] == 1.0
    assert np.isnan(mat.values[2, col["ur.qaSendEdge"]])  # anonymous answerer


def test_select_groups_filters_columns():
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("s", "a", "q"))
    only_s = mat.select_groups(("s",))
    assert set(map(group_of, only_s.columns)) == {"s"}
    no_pr = mat.select_groups(("s",), pr=False)
    assert not any(c.endswith(".prank") for c in no_pr.columns)
    with pytest.raises(ValueError):
        mat.select_groups(("ur",))


def test_select_groups_diff_travels_with_a_and_q():
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("s", "a", "q"))
    both = mat.select_groups(("a", "q"))
    assert any(c.startswith("diff.") for c in both.columns)
    only_a = mat.select_groups(("a",))
    assert not any(c.startswith("diff.") for c in only_a.columns)


def test_csv_round_trip(tmp_path):
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("s", "a"))
    path = str(tmp_path / "features.csv")
    write_feature_csv(mat, path, manifest_id="abc123")
    with open(path) as fh:
        first = fh.readline()
    assert first == "# manifest=abc123\n"
    loaded = read_feature_csv(path)
    assert loaded.columns == mat.columns
    assert np.array_equal(loaded.question_ids, mat.question_ids)
    assert np.array_equal(loaded.labels, mat.labels)
    assert np.allclose(loaded.values, mat.values, equal_nan=True)


def test_csv_missing_cells_empty(tmp_path):
    mat = FeatureMatrix(
        columns=["a.reputation"],
        question_ids=np.array([1]),
        answer_ids=np.array([2]),
        labels=np.array([0]),
        values=np.array([[np.nan]]),
    )
    path = str(tmp_path / "f.csv")
    write_feature_csv(mat, path)
    lines = open(path).read().splitlines()
    assert lines[1] == "1,2,0,"
    assert np.isnan(read_feature_csv(path).values[0, 0])


def test_write_is_deterministic(tmp_path):
    threads, instances, users = small_dataset()
    mat = build_matrix(threads, instances, users, groups=("s",))
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    write_feature_csv(mat, p1, "m")
    write_feature_csv(build_matrix(threads, instances, users, groups=("s",)), p2, "m")
    assert open(p1, "rb").read() == open(p2, "rb").read()
