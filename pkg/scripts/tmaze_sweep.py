#!/usr/bin/env python3
"""T-maze seed sweep: does the agent pay an information toll before it commits?

The maze has four locations: a start cell, two absorbing arms, and an off-path
cue cell.  One arm holds a reward, the other a punishment, and which is which
is invisible from the start.  Reading the cue costs a step but collapses the
uncertainty.

The sweep runs many seeds under two settings and tallies behaviour:

  rewarded   the usual preferences (like reward, dread punishment) -- a
             planner that values information should detour to the cue on step
             one and then enter the arm the cue named, on every seed
  flat       all outcomes equally preferred -- arm entries carry no pragmatic
             pull, so runs that do commit to an arm should split roughly
             50/50 between left and right rather than herd to one side

Usage:
    python3 scripts/tmaze_sweep.py --runs 200
    python3 scripts/tmaze_sweep.py --runs 500 --out sweep.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from beliefmesh.config import ExperimentConfig
from beliefmesh.envs import TMAZE_CUE, TMAZE_LEFT, TMAZE_RIGHT, build_tmaze_model
from beliefmesh.harness import run_single_agent


@dataclass(frozen=True)
class SweepRow:
    seed: int
    setting: str
    first_action: int
    cue_first: bool
    final_location: int
    reward_side: int
    correct_arm: bool


def run_one(seed: int, setting: str) -> SweepRow:
    cfg = ExperimentConfig(scenario="tmaze", steps=2, seed=seed)
    model = None
    if setting == "flat":
        model = build_tmaze_model(preferences=[0.0, 0.0, 0.0])
    result = run_single_agent(cfg, model=model)
    extras = result.extras
    first = extras["actions"][0]
    side = extras["reward_side"]
    good = TMAZE_LEFT if side == 0 else TMAZE_RIGHT
    return SweepRow(
        seed=seed,
        setting=setting,
        first_action=first,
        cue_first=first == TMAZE_CUE,
        final_location=extras["final_location"],
        reward_side=side,
        correct_arm=extras["final_location"] == good,
    )


def summarize(rows: list[SweepRow]) -> None:
    for setting in ("rewarded", "flat"):
        subset = [r for r in rows if r.setting == setting]
        n = len(subset)
        cue = sum(r.cue_first for r in subset)
        print(f"\n[{setting}]  {n} runs")
        print(f"  cue visited first : {cue}/{n}")
        if setting == "rewarded":
            correct = sum(r.correct_arm for r in subset)
            print(f"  correct arm taken : {correct}/{n}")
        else:
            lefts = sum(r.final_location == TMAZE_LEFT for r in subset)
            rights = sum(r.final_location == TMAZE_RIGHT for r in subset)
            committed = lefts + rights
            if committed:
                print(
                    f"  arm entries       : {committed}/{n} "
                    f"(left {lefts}, right {rights}, "
                    f"left share {lefts / committed:.2f})"
                )
            else:
                print("  arm entries       : none")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=200, help="seeds per setting")
    parser.add_argument("--seed0", type=int, default=0, help="first seed")
    parser.add_argument("--out", type=Path, default=None, help="optional CSV path")
    args = parser.parse_args(argv)

    rows: list[SweepRow] = []
    for setting in ("rewarded", "flat"):
        for seed in range(args.seed0, args.seed0 + args.runs):
            rows.append(run_one(seed, setting))

    summarize(rows)

    if args.out is not None:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["seed", "setting", "first_action", "cue_first",
                 "final_location", "reward_side", "correct_arm"]
            )
            for r in rows:
                writer.writerow(
                    [r.seed, r.setting, r.first_action, int(r.cue_first),
                     r.final_location, r.reward_side, int(r.correct_arm)]
                )
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
