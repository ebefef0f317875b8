"""Greedy forward selection over feature groups, plus grid and
feature-importance reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boosting import feature_importance
from .evaluation import EvaluationReport, cross_validate, grouped_stratified_kfold, paired_t_test
from .matrix import SELECTABLE_GROUPS, FeatureMatrix, group_of

CANONICAL_ORDER = SELECTABLE_GROUPS  # (s, t, a, q, ur)


def set_label(groups, pr: bool) -> str:
    """Human-readable label like ``S+UR+A+PR`` (canonical group order)."""
    parts = [g.upper() for g in CANONICAL_ORDER if g in groups]
    if pr:
        parts.append("PR")
    return "+".join(parts)


@dataclass
class SelectionStep:
    added_group: str
    groups: tuple[str, ...]
    label: str
    mean_auc: float
    fold_aucs: list[float]
    p_value_vs_prev: float | None


@dataclass
class SelectionTrace:
    classifier: str
    pr: bool
    k: int
    seed: int
    steps: list[SelectionStep] = field(default_factory=list)
    evaluations: list[tuple[str, float, list[float]]] = field(default_factory=list)

    def final_groups(self) -> tuple[str, ...]:
        return self.steps[-1].groups if self.steps else ()


def greedy_select(
    matrix: FeatureMatrix,
    groups,
    config,
    k: int = 5,
    seed: int = 0,
    classifier: str = "gbdt",
    pr: bool = True,
) -> SelectionTrace:
    """Forward selection: step 1 evaluates each group alone and keeps
    the argmax mean CV AUC; each later step adds the remaining group
    with the best mean AUC, until all groups are included. Ties go to
    the group earliest in canonical order. All evaluations share one
    fold assignment, so per-fold AUCs are paired across steps.
    """
    groups = tuple(g for g in CANONICAL_ORDER if g in {x.lower() for x in groups})
    if not groups:
        raise ValueError("no feature groups to select over")
    fold_ids = grouped_stratified_kfold(matrix.question_ids, k, seed)
    cache: dict[tuple[str, ...], EvaluationReport] = {}

    def evaluate(subset: tuple[str, ...]) -> EvaluationReport:
        if subset not in cache:
            sub = matrix.select_groups(subset, pr=pr)
            cache[subset] = cross_validate(
                sub.values, sub.labels, sub.question_ids, config,
                k=k, seed=seed, classifier=classifier,
                fold_ids=fold_ids, feature_names=sub.columns,
            )
        return cache[subset]

    trace = SelectionTrace(classifier=classifier, pr=pr, k=k, seed=seed)
    current: tuple[str, ...] = ()
    prev_folds: list[float] | None = None
    remaining = list(groups)
    while remaining:
        best_group = None
        best_report = None
        for g in remaining:  # canonical order; strict > keeps the earlier group on ties
            subset = tuple(x for x in CANONICAL_ORDER if x in (*current, g))
            report = evaluate(subset)
            trace.evaluations.append((set_label(subset, pr), report.mean_auc, report.fold_aucs))
            if best_report is None or report.mean_auc > best_report.mean_auc:
                best_group, best_report = g, report
        assert best_group is not None and best_report is not None
        current = tuple(x for x in CANONICAL_ORDER if x in (*current, best_group))
        p_value = None
        if prev_folds is not None:
            _, p_value = paired_t_test(best_report.fold_aucs, prev_folds)
        trace.steps.append(
            SelectionStep(
                added_group=best_group,
                groups=current,
                label=set_label(current, pr),
                mean_auc=best_report.mean_auc,
                fold_aucs=best_report.fold_aucs,
                p_value_vs_prev=p_value,
            )
        )
        prev_folds = best_report.fold_aucs
        remaining.remove(best_group)
    return trace


# ---------------------------------------------------------------------------
# Reports


def report_table(results: dict[str, list[tuple[str, float]]]) -> str:
    """Grid of mean AUC (3 decimals): rows are feature-set labels,
    columns the classifiers that were run. Rows sort by set size then
    label, so rendering is deterministic."""
    classifiers = sorted(results)
    rows: dict[str, dict[str, float]] = {}
    for clf in classifiers:
        for label, mean_auc in results[clf]:
            rows.setdefault(label, {})[clf] = mean_auc
    ordered = sorted(rows, key=lambda lbl: (lbl.count("+"), lbl))
    width = max(12, max((len(lbl) for lbl in ordered), default=12) + 2)
    lines = ["Feature Group".ljust(width) + "".join(c.upper().rjust(8) for c in classifiers)]
    for label in ordered:
        cells = "".join(
            (f"{rows[label][c]:.3f}" if c in rows[label] else "-").rjust(8) for c in classifiers
        )
        lines.append(label.ljust(width) + cells)
    return "\n".join(lines)


def report_table_csv(results: dict[str, list[tuple[str, float]]]) -> str:
    classifiers = sorted(results)
    rows: dict[str, dict[str, float]] = {}
    for clf in classifiers:
        for label, mean_auc in results[clf]:
            rows.setdefault(label, {})[clf] = mean_auc
    lines = [",".join(["feature_group", *classifiers])]
    for label in sorted(rows, key=lambda lbl: (lbl.count("+"), lbl)):
        cells = [f"{rows[label][c]:.3f}" if c in rows[label] else "" for c in classifiers]
        lines.append(",".join([label, *cells]))
    return "\n".join(lines) + "\n"


def report_importance(model, top_n: int = 20) -> list[tuple[str, float, str]]:
    """Top-N features by average split gain, tagged with their group."""
    ranked = feature_importance(model)
    return [(name, gain, group_of(name)) for name, gain in ranked[:top_n]]


def render_importance(entries: list[tuple[str, float, str]]) -> str:
    if not entries:
        return "(no splits recorded)"
    width = max(len(name) for name, _, _ in entries) + 2
    lines = ["feature".ljust(width) + "avg_gain".rjust(12) + "  group"]
    for name, gain, group in entries:
        lines.append(name.ljust(width) + f"{gain:12.4f}" + f"  {group}")
    return "\n".join(lines)


def plot_importance(entries: list[tuple[str, float, str]], path: str) -> None:
    """Horizontal bar chart of average gains (static file output)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [name for name, _, _ in entries][::-1]
    gains = [gain for _, gain, _ in entries][::-1]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.3 * len(names))))
    ax.barh(np.arange(len(names)), gains)
    ax.set_yticks(np.arange(len(names)))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xlabel("average split gain")
    ax.set_title("feature importance")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
