#!/usr/bin/env python3
"""End-to-end desk experiment: build (or take) a dump, run the full
pipeline, evaluate the headline feature-group combinations with both
classifiers, run greedy selection, and render the AUC grid plus the
feature-importance report.

Examples:
    python scripts/run_desk_experiment.py --workspace /tmp/desk
    python scripts/run_desk_experiment.py --dump-dir /data/workplace --workspace /tmp/wp \
        --n-trees 150 --skip-select
"""

import argparse
import os
import sys
import tempfile
import time

from bestanswer import cli
from bestanswer.synthdata import SynthConfig, generate_dump

COMBOS = ["S", "T", "A", "Q", "UR", "S,UR", "S,T", "S,A", "S,Q", "S,UR,A", "S,T,A,Q,UR"]


def run(argv) -> None:
    code = cli.main(argv)
    if code != 0:
        print(f"command failed ({code}): {' '.join(argv)}", file=sys.stderr)
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dump-dir", default=None, help="existing dump; default: generate synthetic")
    parser.add_argument("--workspace", required=True)
    parser.add_argument("--questions", type=int, default=SynthConfig.n_questions)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--k-grid", default="10,20,40")
    parser.add_argument("--lda-iters", type=int, default=300)
    parser.add_argument("--n-trees", type=int, default=150)
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--skip-select", action="store_true", help="skip the greedy selection pass")
    parser.add_argument("--plot", action="store_true", help="write the importance bar chart")
    args = parser.parse_args()

    t0 = time.time()
    dump_dir = args.dump_dir
    if dump_dir is None:
        dump_dir = tempfile.mkdtemp(prefix="synthdump_")
        stats = generate_dump(dump_dir, SynthConfig(n_questions=args.questions))
        print(f"synthetic dump at {dump_dir}: {stats}")

    ws = args.workspace
    run(["ingest", "--dump-dir", dump_dir, "-w", ws])
    run(["lda-train", "-w", ws, "--k-grid", args.k_grid, "--iters", str(args.lda_iters),
         "--seed", str(args.seed)])
    run(["features", "-w", ws, "--export-graph"])

    for classifier in ("gbdt", "rf"):
        for combo in COMBOS:
            run(["evaluate", "-w", ws, "--groups", combo, "--classifier", classifier,
                 "--k", str(args.k), "--seed", str(args.seed), "--n-trees", str(args.n_trees)])
    # the baseline row without percent ranks
    run(["evaluate", "-w", ws, "--groups", "S", "--no-pr", "--classifier", "gbdt",
         "--k", str(args.k), "--seed", str(args.seed), "--n-trees", str(args.n_trees)])

    if not args.skip_select:
        run(["select", "-w", ws, "--classifier", "gbdt", "--k", str(args.k),
             "--seed", str(args.seed), "--n-trees", str(args.n_trees)])

    report_args = ["report", "-w", ws, "--top-n", "20"]
    if args.plot:
        report_args += ["--plot", "importance.png"]
    run(report_args)
    print(f"\ndone in {time.time() - t0:.0f}s; artifacts under {os.path.abspath(ws)}")


if __name__ == "__main__":
    main()
