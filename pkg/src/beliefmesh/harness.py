"""Experiment runners: a solo planning agent and a belief-sharing collective.

Both runners are deterministic functions of the config seed. Actions are
sampled from the policy posterior rather than taken by argmax so that
exactly tied options (a flat-preference maze offers several) resolve by
seeded chance instead of index order.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .core import (
    BeliefState,
    Categorical,
    DimMismatchError,
    GenerativeModel,
    Policy,
    js_divergence,
    log_stable,
    normalized_exp,
)
from .envs import (
    ELEPHANT,
    NUM_LOCATIONS,
    ElephantRoomEnv,
    TMazeEnv,
    build_elephant_model,
    build_tmaze_model,
    feel_log_evidence,
)
from .inference import infer_states, variational_free_energy
from .net import (
    BeliefMessage,
    FactorSpec,
    MemoryBus,
    SharedFactorRegistry,
    SocketHub,
    SpatialAddress,
    connect_socket_endpoint,
    fuse_evidence,
    select_sources,
)
from .planning import EFEReport, expected_free_energy, sophisticated_root_values

# Wire vectors must stay finite, so impossible outcomes are reported at this
# floor instead of -inf. exp(-700) underflows to zero after normalization,
# which keeps fused posteriors exact to double precision.
LOG_EVIDENCE_FLOOR = -700.0

# Posterior mass at most exp(floor/2) can only be clamp residue; return it to
# the exact zero the unclamped evidence implies.
POSTERIOR_SNAP = 1e-150

WHAT_FACTOR_ID = 0


def _snap(posterior: Categorical) -> Categorical:
    probs = np.where(posterior.probs < POSTERIOR_SNAP, 0.0, posterior.probs)
    return Categorical(probs / probs.sum())


@dataclass(frozen=True)
class StepRecord:
    t: int
    beliefs: tuple[np.ndarray, ...]
    free_energy: float
    efe: EFEReport | None
    action: tuple[int, ...] | None
    obs: tuple[int, ...]
    policy_efes: tuple[EFEReport, ...] | None = None
    action_probs: np.ndarray | None = None


@dataclass(frozen=True)
class AgentTrajectory:
    agent_id: int
    records: tuple[StepRecord, ...]


@dataclass(frozen=True)
class RunResult:
    config: ExperimentConfig
    trajectories: tuple[AgentTrajectory, ...]
    synchrony_series: tuple[float, ...]
    extras: dict = field(default_factory=dict)


def synchrony(p, q) -> float:
    """Jensen-Shannon divergence between two belief vectors; 0 means aligned,
    ln 2 means disjoint support."""
    p = p.probs if isinstance(p, Categorical) else np.asarray(p, dtype=float)
    q = q.probs if isinstance(q, Categorical) else np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimMismatchError(f"belief dims differ: {p.shape} vs {q.shape}")
    return max(0.0, js_divergence(p, q))


def mean_pairwise_synchrony(beliefs) -> float:
    pairs = list(combinations(beliefs, 2))
    if not pairs:
        return 0.0
    return float(np.mean([synchrony(a, b) for a, b in pairs]))


def _action_prior(m: GenerativeModel, actions) -> np.ndarray:
    """Marginal prior over first-step controls implied by the policy prior."""
    index = {a: i for i, a in enumerate(actions)}
    prior = np.zeros(len(actions))
    for policy, weight in zip(m.policies, m.E.probs):
        prior[index[policy.controls[0]]] += weight
    return prior


def _transition_prior(m: GenerativeModel, belief: BeliefState, action) -> BeliefState:
    factors = tuple(
        Categorical(m.B[f][:, :, action[f]] @ belief.factors[f].probs)
        for f in range(m.num_factors)
    )
    return BeliefState(factors)


def run_single_agent(cfg: ExperimentConfig, model: GenerativeModel | None = None) -> RunResult:
    """A lone agent in the maze: infer, plan ahead, sample an action, move."""
    if cfg.scenario != "tmaze":
        raise ValueError(f"run_single_agent handles the tmaze scenario, got {cfg.scenario!r}")
    m = build_tmaze_model() if model is None else model
    root = np.random.SeedSequence(cfg.seed)
    env_seq, action_seq = root.spawn(2)
    env = TMazeEnv()
    obs = env.reset(int(env_seq.generate_state(1)[0]))
    rng = np.random.default_rng(action_seq)

    prior = m.initial_belief()
    records = []
    action_log = []
    location_log = [obs[0]]
    for t in range(cfg.steps):
        result = infer_states(m, obs, prior=prior)
        belief = result.belief
        report = variational_free_energy(belief, m, obs, prior=prior)

        actions, values = sophisticated_root_values(
            m, belief, depth=cfg.depth, prune_threshold=cfg.prune_threshold
        )
        log_prior = log_stable(_action_prior(m, actions))
        probs = normalized_exp(log_prior - cfg.gamma * values)
        action = actions[int(rng.choice(len(actions), p=probs))]
        efe = expected_free_energy(m, belief, Policy((action,)))
        policy_efes = tuple(expected_free_energy(m, belief, pol) for pol in m.policies)

        records.append(
            StepRecord(
                t=t,
                beliefs=belief.arrays(),
                free_energy=report.free_energy,
                efe=efe,
                action=action,
                obs=obs,
                policy_efes=policy_efes,
                action_probs=probs,
            )
        )
        action_log.append(action)
        obs = env.step(action)
        location_log.append(obs[0])
        prior = _transition_prior(m, belief, action)

    extras = {
        "reward_side": env.true_state()[1],
        "final_location": env.true_state()[0],
        "actions": [a[0] for a in action_log],
        "locations": location_log,
    }
    trajectory = AgentTrajectory(agent_id=0, records=tuple(records))
    return RunResult(cfg, (trajectory,), (), extras)


def shared_factor_registry() -> SharedFactorRegistry:
    registry = SharedFactorRegistry()
    registry.register(
        WHAT_FACTOR_ID,
        FactorSpec(
            cardinality=3,
            description="scene category (elephant, statue, empty)",
            reference_prior=Categorical.uniform(3),
        ),
    )
    return registry


def _sender_index(msg: BeliefMessage) -> int:
    return int(msg.origin.segments[-1].rsplit("-", 1)[-1])


def run_collective(
    cfg: ExperimentConfig,
    true_what: int = ELEPHANT,
    locations: list[int] | None = None,
) -> RunResult:
    """N agents around one scene, each feeling its own corner, optionally
    pooling log-evidence about the shared factor over the wire.

    locations defaults to spreading agents over the vantage points in order;
    pass an explicit list to co-locate agents."""
    if cfg.scenario != "elephant":
        raise ValueError(f"run_collective handles the elephant scenario, got {cfg.scenario!r}")
    n = cfg.agents
    if locations is None:
        locations = [i % NUM_LOCATIONS for i in range(n)]
    elif len(locations) != n:
        raise ValueError(f"{len(locations)} locations for {n} agents")
    registry = shared_factor_registry()
    ref_prior = registry.get(WHAT_FACTOR_ID).reference_prior
    models = [build_elephant_model(locations[i], noise=cfg.noise) for i in range(n)]
    envs = [ElephantRoomEnv(locations[i], true_what=true_what, noise=cfg.noise) for i in range(n)]

    root = np.random.SeedSequence(cfg.seed)
    env_seeds = [int(seq.generate_state(1)[0]) for seq in root.spawn(n)]
    observations = [envs[i].reset(env_seeds[i]) for i in range(n)]

    hub = None
    endpoints = []
    if cfg.share:
        if cfg.transport == "socket":
            hub = SocketHub()
            endpoints = [connect_socket_endpoint(hub.address, f"agent-{i}") for i in range(n)]
        else:
            bus = MemoryBus()
            endpoints = [bus.endpoint(f"agent-{i}") for i in range(n)]

    cumulative = [np.zeros(3) for _ in range(n)]
    records = [[] for _ in range(n)]
    synchrony_series = []
    try:
        for t in range(cfg.steps):
            if t > 0:
                observations = [envs[i].step() for i in range(n)]
            for i in range(n):
                own = feel_log_evidence(models[i], observations[i][0], locations[i])
                cumulative[i] = cumulative[i] + np.maximum(own, LOG_EVIDENCE_FLOOR)

            if cfg.share:
                for i in range(n):
                    endpoints[i].send(
                        BeliefMessage(
                            origin=SpatialAddress(("room", f"agent-{i}")),
                            factor_id=WHAT_FACTOR_ID,
                            log_evidence=cumulative[i],
                            precision=1.0,
                            timestamp=t,
                        )
                    )
                inboxes = [
                    endpoints[i].poll(expect=n - 1, timeout=30.0) for i in range(n)
                ]

            posteriors = []
            for i in range(n):
                own_only = Categorical(
                    normalized_exp(log_stable(ref_prior.probs) + cumulative[i])
                )
                if cfg.share:
                    fresh = {
                        _sender_index(msg): msg
                        for msg in inboxes[i]
                        if msg.factor_id == WHAT_FACTOR_ID and msg.timestamp == t
                    }
                    sources = [
                        (j, models[j].A[0][:, :, locations[j]]) for j in range(n) if j != i
                    ]
                    chosen = select_sources(own_only, sources, min(cfg.resolved_k(), n - 1))
                    selected = [fresh[j] for j in sorted(chosen) if j in fresh]
                    posterior = fuse_evidence(ref_prior, selected, own_log_evidence=cumulative[i])
                else:
                    posterior = own_only
                posteriors.append(_snap(posterior))

            synchrony_series.append(mean_pairwise_synchrony([p.probs for p in posteriors]))
            for i in range(n):
                belief = BeliefState(
                    (posteriors[i], Categorical.delta(locations[i], NUM_LOCATIONS))
                )
                report = variational_free_energy(belief, models[i], observations[i])
                records[i].append(
                    StepRecord(
                        t=t,
                        beliefs=belief.arrays(),
                        free_energy=report.free_energy,
                        efe=None,
                        action=None,
                        obs=observations[i],
                    )
                )
    finally:
        for ep in endpoints:
            ep.close()
        if hub is not None:
            hub.close()

    trajectories = tuple(
        AgentTrajectory(agent_id=i, records=tuple(records[i])) for i in range(n)
    )
    extras = {
        "true_what": true_what,
        "locations": locations,
        "decode_errors": [len(ep.decode_errors) for ep in endpoints] if endpoints else [],
    }
    return RunResult(cfg, trajectories, tuple(synchrony_series), extras)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    if cfg.scenario == "tmaze":
        result = run_single_agent(cfg)
    else:
        result = run_collective(cfg)
    if cfg.out_dir is not None:
        write_logs(result, cfg.out_dir)
    return result


# --- logging -----------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _cells(values) -> str:
    return "|".join(str(int(v)) for v in values)


def write_logs(result: RunResult, out_dir) -> list[Path]:
    """One CSV per agent plus a manifest; floats use repr so identical runs
    produce identical bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(len(b) for traj in result.trajectories for r in traj.records for b in r.beliefs)
    header = (
        ["t", "factor"]
        + [f"b{i}" for i in range(width)]
        + ["free_energy", "G", "risk", "ambiguity", "info_gain", "pragmatic", "action", "obs"]
    )
    written = []
    for traj in result.trajectories:
        path = out / f"agent{traj.agent_id}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for rec in traj.records:
                for f, belief in enumerate(rec.beliefs):
                    row = [str(rec.t), str(f)]
                    row += [_fmt(p) for p in belief]
                    row += [""] * (width - len(belief))
                    if f == 0:
                        row.append(_fmt(rec.free_energy))
                        if rec.efe is not None:
                            row += [
                                _fmt(rec.efe.G),
                                _fmt(rec.efe.risk),
                                _fmt(rec.efe.ambiguity),
                                _fmt(rec.efe.info_gain),
                                _fmt(rec.efe.pragmatic),
                            ]
                        else:
                            row += [""] * 5
                        row.append(_cells(rec.action) if rec.action is not None else "")
                        row.append(_cells(rec.obs))
                    else:
                        row += [""] * 8
                    writer.writerow(row)
        written.append(path)

    manifest = {
        "config": result.config.to_dict(),
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
        "agents": len(result.trajectories),
        "steps": result.config.steps,
        "final_mean_pairwise_synchrony": (
            result.synchrony_series[-1] if result.synchrony_series else None
        ),
        "extras": _jsonable(result.extras),
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(manifest_path)
    return written


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value
