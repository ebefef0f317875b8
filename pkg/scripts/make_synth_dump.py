#!/usr/bin/env python3
"""Generate a synthetic Stack-Exchange-style dump for experiments.

Example:
    python scripts/make_synth_dump.py --out /tmp/dump --questions 900 --seed 7
"""

import argparse

from bestanswer.synthdata import SynthConfig, generate_dump


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory for the XML files")
    parser.add_argument("--users", type=int, default=SynthConfig.n_users)
    parser.add_argument("--questions", type=int, default=SynthConfig.n_questions)
    parser.add_argument("--topics", type=int, default=SynthConfig.n_topics)
    parser.add_argument("--seed", type=int, default=SynthConfig.seed)
    args = parser.parse_args()
    stats = generate_dump(
        args.out,
        SynthConfig(n_users=args.users, n_questions=args.questions, n_topics=args.topics, seed=args.seed),
    )
    for key, value in stats.items():
        print(f"{key}: {value}")


if __name__ == "__main__":
    main()
