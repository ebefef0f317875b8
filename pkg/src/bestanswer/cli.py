"""Command-line pipeline: ingest -> lda-train -> features -> evaluate /
select -> report.

Every command writes its artifacts under the workspace together with a
run manifest (config, seeds, input hashes); identical manifests
reproduce byte-identical outputs. Exit codes: 0 success, 2 usage
error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import os
import shutil
import sys
import traceback

import numpy as np

from . import __version__, boosting, topics
from .config import ForestConfig, LdaConfig, RunConfig, TrainConfig, run_config_from_dict, to_dict
from .corpus import (
    DataError,
    ParseStats,
    apply_badges,
    build_dataset,
    dataset_summary,
    derive_user_stats,
    parse_badges,
    parse_comments,
    parse_posts,
    parse_users,
    read_dataset,
    write_dataset,
)
from .evaluation import cross_validate, paired_t_test
from .matrix import (
    SELECTABLE_GROUPS,
    build_matrix,
    group_of,
    normalize_groups,
    read_feature_csv,
    write_feature_csv,
)
from .relations import build_graph, degree_summary, write_edge_list
from .selection import (
    greedy_select,
    plot_importance,
    render_importance,
    report_importance,
    report_table,
    report_table_csv,
    set_label,
)
from .text import stopwords, tokenize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    """Invalid flag values (exit code 2)."""


def _parse_groups(spec: str | None) -> tuple[str, ...]:
    if not spec:
        return tuple(SELECTABLE_GROUPS)
    try:
        return normalize_groups(spec.split(","))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_k_grid(spec: str) -> tuple[int, ...]:
    try:
        return tuple(int(k) for k in spec.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --k-grid value: {spec!r}") from exc


# ---------------------------------------------------------------------------
# Workspace helpers


@contextlib.contextmanager
def workspace_lock(workspace: str):
    os.makedirs(workspace, exist_ok=True)
    path = os.path.join(workspace, ".lock")
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise DataError(f"workspace is locked by another process ({path}); remove the lock if stale")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        os.unlink(path)


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(command: str, config: dict, inputs: list[str]) -> tuple[dict, str]:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {os.path.basename(p): _sha256_file(p) for p in sorted(inputs)},
        "package_version": __version__,
    }
    manifest_id = hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode("utf-8")
    ).hexdigest()
    return manifest, manifest_id


def _stage_dir(workspace: str, *parts: str) -> str:
    return os.path.join(workspace, *parts)


def _prepare_stage(out_dir: str, manifest: dict, force: bool) -> bool:
    """Returns True when the stage should run; False when an identical
    run already exists (idempotent skip)."""
    mpath = os.path.join(out_dir, "manifest.json")
    if os.path.exists(mpath):
        with open(mpath, encoding="utf-8") as fh:
            existing = json.load(fh)
        if existing == manifest and not force:
            return False
        if existing != manifest and not force:
            raise DataError(
                f"{out_dir} holds output from a different configuration; rerun with --force to overwrite"
            )
        shutil.rmtree(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    return True


def _finish_stage(out_dir: str, manifest: dict) -> None:
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(path: str, stage: str) -> str:
    if not os.path.exists(path):
        raise DataError(f"missing {path}; run `bestanswer {stage}` first")
    return path


def _load_threads(workspace: str):
    dataset_dir = _require(_stage_dir(workspace, "dataset"), "ingest")
    posts, users, comments = read_dataset(dataset_dir)
    threads, instances = build_dataset(posts, comments, users)
    return posts, users, comments, threads, instances


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args) -> int:
    dump_dir = args.dump_dir
    required = ["Posts.xml", "Users.xml", "Comments.xml"]
    for name in required:
        if not os.path.exists(os.path.join(dump_dir, name)):
            raise DataError(f"dump file missing: {os.path.join(dump_dir, name)}")
    badges_path = os.path.join(dump_dir, "Badges.xml")
    inputs = [os.path.join(dump_dir, n) for n in required]
    if os.path.exists(badges_path):
        inputs.append(badges_path)

    manifest, manifest_id = _manifest("ingest", {"dump_dir": os.path.abspath(dump_dir)}, inputs)
    out_dir = _stage_dir(args.workspace, "dataset")
    with workspace_lock(args.workspace):
        if not _prepare_stage(out_dir, manifest, args.force):
            print(f"dataset up to date ({out_dir}); use --force to rebuild")
            return EXIT_OK
        stats = ParseStats()
        posts = parse_posts(os.path.join(dump_dir, "Posts.xml"), stats)
        users = parse_users(os.path.join(dump_dir, "Users.xml"), stats)
        if os.path.exists(badges_path):
            users = apply_badges(users, parse_badges(badges_path, stats))
        else:
            print("note: Badges.xml absent, badge counts stay 0", file=sys.stderr)
        comments = parse_comments(
            os.path.join(dump_dir, "Comments.xml"), {p.post_id for p in posts}, stats
        )
        threads, instances = build_dataset(posts, comments, users, stats)
        users = derive_user_stats(threads, users)
        write_dataset(out_dir, posts, users, comments)
        summary = dataset_summary(posts, threads, instances)
        summary["parse_stats"] = stats.__dict__
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _finish_stage(out_dir, manifest)
    print(
        f"questions {summary['questions']}  answers {summary['answers']}  "
        f"ratio {summary['positive_negative_ratio']}  "
        f"(threads kept {summary['threads_kept']}, instances {summary['instances']})"
    )
    print(f"dataset written to {out_dir} (manifest {manifest_id[:12]})")
    return EXIT_OK


def cmd_lda_train(args) -> int:
    cfg = args.run_config.lda
    cfg = LdaConfig(
        alpha=args.alpha if args.alpha is not None else cfg.alpha,
        beta=args.beta if args.beta is not None else cfg.beta,
        n_train_iters=args.iters if args.iters is not None else cfg.n_train_iters,
        n_infer_iters=cfg.n_infer_iters,
        seed=args.seed if args.seed is not None else cfg.seed,
        top_n=cfg.top_n,
        min_df=args.min_df if args.min_df is not None else cfg.min_df,
        k_grid=_parse_k_grid(args.k_grid) if args.k_grid else cfg.k_grid,
    )
    dataset_dir = _require(_stage_dir(args.workspace, "dataset"), "ingest")
    inputs = [os.path.join(dataset_dir, n) for n in ("posts.jsonl", "users.jsonl", "comments.jsonl")]
    manifest, manifest_id = _manifest("lda-train", to_dict(cfg), inputs)
    out_dir = _stage_dir(args.workspace, "lda")
    with workspace_lock(args.workspace):
        if not _prepare_stage(out_dir, manifest, args.force):
            print(f"topic model up to date ({out_dir}); use --force to retrain")
            return EXIT_OK
        _, _, _, threads, _ = _load_threads(args.workspace)
        _, docs = topics.build_lda_corpus(threads, min_df=cfg.min_df)
        result = topics.select_k(docs, cfg.k_grid, cfg)
        topics.save_model(result.model, os.path.join(out_dir, "model.json"))
        with open(os.path.join(out_dir, "coherence.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write("k,mean_coherence\n")
            for k, coh in result.table:
                fh.write(f"{k},{coh!r}\n")
        _finish_stage(out_dir, manifest)
    for k, coh in result.table:
        marker = " *" if k == result.k_star else ""
        print(f"K={k:<4d} mean coherence {coh:.4f}{marker}")
    print(f"selected K={result.k_star}; model written to {out_dir}")
    return EXIT_OK


def _topic_distributions(workspace: str, threads, cfg: LdaConfig) -> dict[int, np.ndarray]:
    model_path = _require(os.path.join(_stage_dir(workspace, "lda"), "model.json"), "lda-train")
    model = topics.load_model(model_path)
    stop = stopwords()
    post_ids: list[int] = []
    docs: list[list[str]] = []
    for t in threads:
        for post in (t.question, *t.answers):
            post_ids.append(post.post_id)
            docs.append([w for w in tokenize(post.body_text) if w not in stop])
    dists = topics.infer_many(model, docs, n_iters=cfg.n_infer_iters, seed=cfg.seed)
    return {pid: dists[i] for i, pid in enumerate(post_ids)}


def cmd_features(args) -> int:
    groups = _parse_groups(args.groups)
    pr = args.pr
    lda_cfg = args.run_config.lda
    if args.infer_iters is not None:
        lda_cfg = LdaConfig(**{**to_dict(lda_cfg), "n_infer_iters": args.infer_iters})
    if args.seed is not None:
        lda_cfg = LdaConfig(**{**to_dict(lda_cfg), "seed": args.seed})
    dataset_dir = _require(_stage_dir(args.workspace, "dataset"), "ingest")
    inputs = [os.path.join(dataset_dir, n) for n in ("posts.jsonl", "users.jsonl", "comments.jsonl")]
    if "t" in groups:
        inputs.append(_require(os.path.join(_stage_dir(args.workspace, "lda"), "model.json"), "lda-train"))
    manifest, manifest_id = _manifest(
        "features",
        {"groups": list(groups), "pr": pr, "lda": to_dict(lda_cfg)},
        inputs,
    )
    out_dir = _stage_dir(args.workspace, "features")
    with workspace_lock(args.workspace):
        if not _prepare_stage(out_dir, manifest, args.force):
            print(f"features up to date ({out_dir}); use --force to rebuild")
            return EXIT_OK
        _, users, _, threads, instances = _load_threads(args.workspace)
        users_by_id = {u.user_id: u for u in users}
        graph = build_graph(threads) if "ur" in groups else None
        dists = _topic_distributions(args.workspace, threads, lda_cfg) if "t" in groups else None
        mat = build_matrix(threads, instances, users_by_id, groups, pr=pr, graph=graph, topic_dists=dists)
        write_feature_csv(mat, os.path.join(out_dir, "features.csv"), manifest_id)
        with open(os.path.join(out_dir, "columns.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(mat.columns))
            fh.write("\n")
        if graph is not None and args.export_graph:
            write_edge_list(graph, os.path.join(out_dir, "graph.edges"))
        _finish_stage(out_dir, manifest)
    if graph is not None:
        for name, st_ in degree_summary(graph, threads).items():
            print(f"{name}: min {st_['min']:.0f}  median {st_['median']:.0f}  max {st_['max']:.0f}")
    print(f"{mat.n_rows} instances x {len(mat.columns)} feature columns -> {out_dir}/features.csv")
    return EXIT_OK


def _train_config(args, base: TrainConfig) -> TrainConfig:
    fields = dict(to_dict(base))
    for name in ("n_trees", "learning_rate", "max_leaves", "min_samples_leaf", "positive_weight"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if args.seed is not None:
        fields["seed"] = args.seed
    return TrainConfig(**fields)


def _forest_config(args, base: ForestConfig) -> ForestConfig:
    fields = dict(to_dict(base))
    if getattr(args, "n_trees", None) is not None:
        fields["n_trees"] = args.n_trees
    if getattr(args, "max_leaves", None) is not None:
        fields["max_leaves"] = args.max_leaves
    if args.seed is not None:
        fields["seed"] = args.seed
    return ForestConfig(**fields)


def _load_eval_report_csv(path: str) -> list[float]:
    folds = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("fold") or not line.strip():
                continue
            key, value = line.strip().split(",", 1)
            if key.isdigit():
                folds.append(float(value))
    return folds


def cmd_evaluate(args) -> int:
    groups = _parse_groups(args.groups)
    classifier = args.classifier
    k = args.k if args.k is not None else args.run_config.k_folds
    seed = args.seed if args.seed is not None else args.run_config.seed
    if classifier == "gbdt":
        config = _train_config(args, args.run_config.train)
    else:
        config = _forest_config(args, args.run_config.forest)
    features_path = _require(os.path.join(_stage_dir(args.workspace, "features"), "features.csv"), "features")
    manifest, manifest_id = _manifest(
        "evaluate",
        {
            "groups": list(groups),
            "pr": args.pr,
            "classifier": classifier,
            "k": k,
            "seed": seed,
            "learner": to_dict(config),
        },
        [features_path],
    )
    run_id = manifest_id[:12]
    out_dir = _stage_dir(args.workspace, "eval", run_id)
    with workspace_lock(args.workspace):
        if not _prepare_stage(out_dir, manifest, args.force):
            print(f"evaluation {run_id} up to date ({out_dir})")
            return EXIT_OK
        mat = read_feature_csv(features_path).select_groups(groups, pr=args.pr)
        report = cross_validate(
            mat.values, mat.labels, mat.question_ids, config,
            k=k, seed=seed, classifier=classifier, feature_names=mat.columns,
        )
        t_line = ""
        if args.baseline:
            base_csv = _require(
                os.path.join(_stage_dir(args.workspace, "eval", args.baseline), "report.csv"), "evaluate"
            )
            base_folds = _load_eval_report_csv(base_csv)
            if len(base_folds) != k:
                raise DataError(f"baseline run {args.baseline} has {len(base_folds)} folds, expected {k}")
            t, p = paired_t_test(report.fold_aucs, base_folds)
            report.t_test = (t, p, args.baseline)
            t_line = f"t={t!r},p={p!r},baseline={args.baseline}"
        with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write(f"# feature_set={set_label(groups, args.pr)} classifier={classifier}\n")
            fh.write("fold,auc\n")
            for i, a in enumerate(report.fold_aucs):
                fh.write(f"{i},{a!r}\n")
            fh.write(f"mean,{report.mean_auc!r}\n")
            fh.write(f"std,{report.std_auc!r}\n")
            if t_line:
                fh.write(f"t_test,\"{t_line}\"\n")
        # full-data model for the importance report
        if classifier == "gbdt":
            model = boosting.train_gbdt(mat.values, mat.labels, config, mat.columns)
        else:
            model = boosting.train_random_forest(mat.values, mat.labels, config, mat.columns)
        boosting.save_model(model, os.path.join(out_dir, "model.json"))
        with open(os.path.join(out_dir, "importance.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write("feature,avg_gain,group\n")
            for name, gain, grp in report_importance(model, top_n=len(mat.columns)):
                fh.write(f"{name},{gain!r},{grp}\n")
        _finish_stage(out_dir, manifest)
    print(f"[{set_label(groups, args.pr)}] {report.summary_line()}")
    if report.t_test:
        t, p, baseline = report.t_test
        print(f"paired t-test vs {baseline}: t={t:.4f} p={p:.4g}")
    print(f"run {run_id} -> {out_dir}")
    return EXIT_OK


def cmd_select(args) -> int:
    classifier = args.classifier
    k = args.k if args.k is not None else args.run_config.k_folds
    seed = args.seed if args.seed is not None else args.run_config.seed
    if classifier == "gbdt":
        config = _train_config(args, args.run_config.train)
    else:
        config = _forest_config(args, args.run_config.forest)
    features_path = _require(os.path.join(_stage_dir(args.workspace, "features"), "features.csv"), "features")
    manifest, manifest_id = _manifest(
        "select",
        {"classifier": classifier, "k": k, "seed": seed, "pr": args.pr, "learner": to_dict(config)},
        [features_path],
    )
    out_dir = _stage_dir(args.workspace, "selection", classifier)
    with workspace_lock(args.workspace):
        if not _prepare_stage(out_dir, manifest, args.force):
            print(f"selection up to date ({out_dir}); use --force to rerun")
            return EXIT_OK
        mat = read_feature_csv(features_path)
        trace = greedy_select(
            mat, mat.groups_present(), config, k=k, seed=seed, classifier=classifier, pr=args.pr
        )
        with open(os.path.join(out_dir, "trace.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write("step,added_group,feature_set,mean_auc,fold_aucs,p_value_vs_prev\n")
            for i, step in enumerate(trace.steps, start=1):
                folds = ";".join(repr(a) for a in step.fold_aucs)
                p = repr(step.p_value_vs_prev) if step.p_value_vs_prev is not None else ""
                fh.write(f"{i},{step.added_group},{step.label},{step.mean_auc!r},{folds},{p}\n")
        with open(os.path.join(out_dir, "evaluations.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write("feature_set,mean_auc,fold_aucs\n")
            for label, mean_auc, folds in trace.evaluations:
                fh.write(f"{label},{mean_auc!r},{';'.join(repr(a) for a in folds)}\n")
        _finish_stage(out_dir, manifest)
    for i, step in enumerate(trace.steps, start=1):
        p = f"  p_vs_prev={step.p_value_vs_prev:.4f}" if step.p_value_vs_prev is not None else ""
        print(f"step {i}: +{step.added_group.upper():<3s} -> {step.label:<18s} mean AUC {step.mean_auc:.4f}{p}")
    print(f"selection trace -> {out_dir}")
    return EXIT_OK


def _collect_eval_runs(workspace: str) -> list[dict]:
    eval_root = _stage_dir(workspace, "eval")
    runs = []
    if not os.path.isdir(eval_root):
        return runs
    for run_id in sorted(os.listdir(eval_root)):
        run_dir = os.path.join(eval_root, run_id)
        mpath = os.path.join(run_dir, "manifest.json")
        rpath = os.path.join(run_dir, "report.csv")
        if not (os.path.exists(mpath) and os.path.exists(rpath)):
            continue
        with open(mpath, encoding="utf-8") as fh:
            manifest = json.load(fh)
        folds = _load_eval_report_csv(rpath)
        cfg = manifest["config"]
        runs.append(
            {
                "run_id": run_id,
                "groups": tuple(cfg["groups"]),
                "pr": cfg["pr"],
                "classifier": cfg["classifier"],
                "label": set_label(tuple(cfg["groups"]), cfg["pr"]),
                "mean_auc": float(np.mean(folds)) if folds else float("nan"),
                "model_path": os.path.join(run_dir, "model.json"),
            }
        )
    return runs


def cmd_report(args) -> int:
    runs = _collect_eval_runs(args.workspace)
    if not runs:
        raise DataError("no completed evaluations; run `bestanswer evaluate` first")
    results: dict[str, list[tuple[str, float]]] = {}
    for run in runs:
        results.setdefault(run["classifier"], []).append((run["label"], run["mean_auc"]))
    grid = report_table(results)
    grid_csv = report_table_csv(results)

    if args.run_id:
        chosen = [r for r in runs if r["run_id"] == args.run_id]
        if not chosen:
            raise DataError(f"no evaluation run with id {args.run_id}")
        chosen_run = chosen[0]
    else:
        chosen_run = max(runs, key=lambda r: (len(r["groups"]), r["classifier"] == "gbdt", r["label"]))
    model = boosting.load_model(chosen_run["model_path"])
    entries = report_importance(model, top_n=args.top_n)
    importance_text = render_importance(entries)

    manifest, manifest_id = _manifest(
        "report",
        {"run_id": chosen_run["run_id"], "top_n": args.top_n},
        [chosen_run["model_path"]],
    )
    out_dir = _stage_dir(args.workspace, "reports")
    with workspace_lock(args.workspace):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("Average AUC by feature group\n")
            fh.write(grid)
            fh.write("\n\nTop features (" + chosen_run["label"] + ", " + chosen_run["classifier"] + ")\n")
            fh.write(importance_text)
            fh.write("\n")
        with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write(grid_csv)
        with open(os.path.join(out_dir, "importance.csv"), "w", encoding="utf-8") as fh:
            fh.write(f"# manifest={manifest_id}\n")
            fh.write("feature,avg_gain,group\n")
            for name, gain, grp in entries:
                fh.write(f"{name},{gain!r},{grp}\n")
        if args.plot:
            plot_importance(entries, os.path.join(out_dir, args.plot))
        _finish_stage(out_dir, manifest)
    print(grid)
    print()
    print(importance_text)
    print(f"\nreports -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workspace",
        "-w",
        default=None,
        help="workspace directory (default: $CQA_WORKSPACE or ./workspace)",
    )
    parser.add_argument("--config", default=None, help="JSON config file mirroring RunConfig; flags win")
    parser.add_argument("--force", action="store_true", help="overwrite existing stage output")
    parser.add_argument("--seed", type=int, default=None, help="stage seed override")


def _add_learner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-trees", dest="n_trees", type=int, default=None)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    parser.add_argument("--max-leaves", dest="max_leaves", type=int, default=None)
    parser.add_argument("--min-samples-leaf", dest="min_samples_leaf", type=int, default=None)
    parser.add_argument("--positive-weight", dest="positive_weight", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bestanswer",
        description="Best-answer prediction pipeline over Stack Exchange dumps",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse dump XML into the internal dataset")
    p.add_argument("--dump-dir", required=True, help="directory with Posts.xml, Users.xml, Comments.xml")
    p.add_argument("--out", dest="workspace_out", default=None, help="alias for --workspace")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("lda-train", help="train the topic model, selecting K by coherence")
    p.add_argument("--k-grid", default=None, help="comma-separated topic counts, e.g. 10,20,40")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--iters", type=int, default=None, help="training sweeps per model")
    p.add_argument("--min-df", type=int, default=None, help="minimum document frequency for LDA tokens")
    _add_common(p)
    p.set_defaults(func=cmd_lda_train)

    p = sub.add_parser("features", help="build the feature matrix CSV")
    p.add_argument("--groups", default=None, help="comma-separated groups from s,t,a,q,ur (default all)")
    p.add_argument("--pr", dest="pr", action="store_true", default=True, help="include percent-rank columns (default)")
    p.add_argument("--no-pr", dest="pr", action="store_false")
    p.add_argument("--infer-iters", type=int, default=None, help="Gibbs sweeps per document at inference")
    p.add_argument("--export-graph", action="store_true", help="also write the user graph as an edge list")
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("evaluate", help="cross-validated AUC for one feature-group set")
    p.add_argument("--groups", default=None, help="comma-separated groups (default: all in the CSV)")
    p.add_argument("--classifier", choices=("gbdt", "rf"), default="gbdt")
    p.add_argument("--k", type=int, default=None, help="number of folds")
    p.add_argument("--pr", dest="pr", action="store_true", default=True)
    p.add_argument("--no-pr", dest="pr", action="store_false")
    p.add_argument("--baseline", default=None, help="eval run id for a paired t-test")
    _add_learner_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("select", help="greedy forward selection over feature groups")
    p.add_argument("--classifier", choices=("gbdt", "rf"), default="gbdt")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--pr", dest="pr", action="store_true", default=True)
    p.add_argument("--no-pr", dest="pr", action="store_false")
    _add_learner_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("report", help="AUC grid and feature-importance reports")
    p.add_argument("--run-id", default=None, help="evaluation run for the importance report")
    p.add_argument("--top-n", type=int, default=20)
    p.add_argument("--plot", default=None, metavar="FILE.png", help="also write a bar chart")
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def _resolve_run_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        if not os.path.exists(args.config):
            raise DataError(f"config file not found: {args.config}")
        with open(args.config, encoding="utf-8") as fh:
            cfg = run_config_from_dict(json.load(fh))
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.run_config = _resolve_run_config(args)
        workspace = (
            args.workspace
            or getattr(args, "workspace_out", None)
            or os.environ.get("CQA_WORKSPACE")
            or args.run_config.workspace
        )
        args.workspace = workspace
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
