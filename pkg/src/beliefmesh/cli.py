"""Command line front end.

    beliefmesh run tmaze --steps 2 --seed 1 --out runs/demo
    beliefmesh run elephant --agents 3 --steps 5 --no-share --transport socket

precedence: dataclass defaults < --config file < explicit flags.
Exit codes: 0 success, 2 bad configuration or usage, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigInvalidError, ExperimentConfig, config_from_dict
from .harness import run_experiment

_OVERRIDE_FIELDS = (
    "agents",
    "steps",
    "seed",
    "share",
    "k",
    "gamma",
    "depth",
    "noise",
    "transport",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefmesh",
        description="multi-agent active inference experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and optionally write logs")
    run.add_argument("scenario", choices=("tmaze", "elephant"))
    run.add_argument("--agents", type=int, help="number of agents")
    run.add_argument("--steps", type=int, help="environment steps / sharing rounds")
    run.add_argument("--seed", type=int, help="seed for every source of randomness")
    share = run.add_mutually_exclusive_group()
    share.add_argument("--share", dest="share", action="store_true", default=None)
    share.add_argument("--no-share", dest="share", action="store_false")
    run.add_argument("--k", type=int, help="sources fused per agent per round")
    run.add_argument("--gamma", type=float, help="action precision")
    run.add_argument("--depth", type=int, help="planning horizon")
    run.add_argument("--noise", type=float, help="observation confusion probability")
    run.add_argument("--transport", choices=("mem", "socket"))
    run.add_argument("--out", metavar="DIR", help="directory for CSV logs and manifest")
    run.add_argument("--config", metavar="FILE", help="JSON config; flags override it")
    return parser


def _assemble_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalidError([f"cannot read config file: {exc}"]) from exc
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalidError([f"not valid JSON: {exc}"]) from exc
        if not isinstance(loaded, dict):
            raise ConfigInvalidError(["configuration must be a JSON object"])
        data.update(loaded)
    data["scenario"] = args.scenario
    for name in _OVERRIDE_FIELDS:
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    if args.out is not None:
        data["out_dir"] = args.out
    if data.get("agents") is None and args.scenario == "elephant":
        data["agents"] = 3
    return config_from_dict(data)


def _summarize(result, cfg: ExperimentConfig) -> str:
    lines = [
        f"completed {cfg.scenario}: agents={cfg.agents} steps={cfg.steps} seed={cfg.seed}"
    ]
    if cfg.scenario == "tmaze":
        lines.append(
            "actions=" + ",".join(str(a) for a in result.extras["actions"])
            + f" reward_side={result.extras['reward_side']}"
            + f" final_location={result.extras['final_location']}"
        )
    if result.synchrony_series:
        lines.append(
            f"final mean pairwise synchrony: {result.synchrony_series[-1]!r}"
        )
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _assemble_config(args)
    except ConfigInvalidError as exc:
        print(f"beliefmesh: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_experiment(cfg)
        print(_summarize(result, cfg))
        if cfg.out_dir is not None:
            for path in sorted(Path(cfg.out_dir).iterdir()):
                print(f"wrote {path}")
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"beliefmesh: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
