"""Seeded, paired Monte Carlo experiments.

Trial ``k`` of cell (N, M) draws its scenario and its episode stream from
``SeedSequence(seed, spawn_key=(N, M, k))``. Every policy and every
constraint level of that cell replays the same scenario and the same loss
draws, so per-trial differences between policies are paired samples.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import GENERATOR, make_rng, run_episode_p1, run_episode_p2
from .model import ChannelModel, PacketUniverse, apply_stage1
from .policies import PolicyConfig
from .traces import load_trace

SCHEMA = "idncsim-results-v1"
CSV_HEADER = ("schema", "policy", "N", "M", "constraint", "metric_name", "mean", "stderr", "trials", "seed")


def trial_seeds(master_seed, n_devices, n_packets, trial):
    root = np.random.SeedSequence(master_seed, spawn_key=(n_devices, n_packets, trial))
    setup, episode = root.spawn(2)
    return setup, episode


def draw_scenario(spec, n_devices, n_packets, setup_seed, trace=None, trial=0):
    """Importances, channel and post-stage-1 state for one trial.

    Returns (state, per-device total importance before any packet is dropped).
    """
    rng = make_rng(setup_seed)
    N, M = n_devices, n_packets
    if spec.importance == "gamma":
        shape = spec.gamma_mean ** 2 / spec.gamma_variance
        scale = spec.gamma_variance / spec.gamma_mean
        universe = PacketUniverse.create(rng.gamma(shape, scale, size=(M, N)))
    elif spec.importance == "uniform":
        universe = PacketUniverse.create(np.ones((M, N)))
    else:
        universe = trace.universe(trial % len(trace), N)
    lo, hi = spec.stage1_loss
    stage1 = rng.uniform(lo, hi, size=N)
    lo, hi = spec.d2d_loss
    d2d = rng.uniform(lo, hi, size=(N, N))
    channel = ChannelModel(d2d, stage1)
    totals = [universe.total(n) for n in range(N)]
    return apply_stage1(universe, channel, rng), totals


def _policy(spec, kind, constraint, totals):
    if spec.objective == "P1":
        return PolicyConfig(kind, p=spec.p_norm, d_cons=tuple(constraint * t for t in totals),
                            greedy_clique=spec.greedy_clique)
    return PolicyConfig(kind, p=spec.p_norm, t_cons=int(constraint), greedy_clique=spec.greedy_clique)


def run_trial(spec, n_devices, n_packets, trial, trace=None):
    """Metrics of every (constraint, policy) for one paired trial."""
    setup, episode = trial_seeds(spec.seed, n_devices, n_packets, trial)
    state, totals = draw_scenario(spec, n_devices, n_packets, setup, trace, trial)
    out = {}
    for c in spec.constraints:
        for kind in spec.policies:
            policy = _policy(spec, kind, c, totals)
            if spec.objective == "P1":
                res = run_episode_p1(state, policy, make_rng(episode), spec.max_rounds)
                out[(kind, c)] = {"completion_time": res.completion_time,
                                  "successful_rounds": res.successful_rounds,
                                  "abnormal": not res.terminated_normally}
            else:
                res = run_episode_p2(state, policy, make_rng(episode))
                out[(kind, c)] = {"distortion_norm": res.distortion_norm(),
                                  "abnormal": False}
    return out


def _run_task(args):
    spec, n, m, trial = args
    trace = load_trace(spec.trace_path, spec.block_size) if spec.importance == "trace" else None
    return run_trial(spec, n, m, trial, trace)


@dataclass
class MonteCarloResult:
    spec: object
    samples: dict  # (policy, N, M, constraint, metric) -> per-trial values
    abnormal: dict = field(default_factory=dict)

    def sample(self, policy, n, m, constraint, metric):
        return self.samples[(policy, n, m, constraint, metric)]

    def rows(self):
        spec = self.spec
        rows = []
        for n in spec.n_values:
            for m in spec.m_values:
                for c in spec.constraints:
                    for pol in spec.policies:
                        for metric in spec.metric_names:
                            x = self.samples[(pol, n, m, c, metric)]
                            mean, err = mean_stderr(x)
                            rows.append({"schema": SCHEMA, "policy": pol, "N": n, "M": m,
                                         "constraint": c, "metric_name": metric, "mean": mean,
                                         "stderr": err, "trials": len(x), "seed": spec.seed})
        return rows

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        for r in self.rows():
            buf.write(",".join(_cell(r[k]) for k in CSV_HEADER) + "\n")
        return buf.getvalue()

    def metadata(self):
        from .experiment import emit_config
        return {
            "schema": SCHEMA,
            "generator": GENERATOR,
            "seed_derivation": "SeedSequence(seed, spawn_key=(N, M, trial)).spawn(2) -> setup, episode",
            "config": emit_config(self.spec),
            "abnormal_terminations": {"|".join(map(str, k)): v for k, v in sorted(
                self.abnormal.items(), key=lambda kv: tuple(map(str, kv[0])))},
        }

    def write(self, path, meta=True):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        if meta:
            with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
                json.dump(self.metadata(), fh, indent=2, sort_keys=True)
                fh.write("\n")


def _cell(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def mean_stderr(values):
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    mean = math.fsum(x.tolist()) / x.size
    if x.size == 1:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / math.sqrt(x.size))


def paired_difference(a, b, z=1.959963984540054):
    """Mean of a - b with a normal-approximation 95% confidence interval."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    mean, err = mean_stderr(d)
    return mean, (mean - z * err, mean + z * err)


def run_monte_carlo(spec, workers=1, progress=None):
    """Run every (N, M, trial) of ``spec``; aggregation is keyed, not ordered."""
    tasks = [(spec, n, m, k) for n in spec.n_values for m in spec.m_values for k in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        trace = load_trace(spec.trace_path, spec.block_size) if spec.importance == "trace" else None
        outputs = []
        for i, (_, n, m, k) in enumerate(tasks):
            outputs.append(run_trial(spec, n, m, k, trace))
            if progress is not None:
                progress(i + 1, len(tasks))

    samples, abnormal = {}, {}
    for (_, n, m, k), out in zip(tasks, outputs):
        for (pol, c), metrics in out.items():
            for metric in spec.metric_names:
                samples.setdefault((pol, n, m, c, metric), [None] * spec.trials)[k] = metrics[metric]
            if metrics["abnormal"]:
                abnormal[(pol, n, m, c)] = abnormal.get((pol, n, m, c), 0) + 1
    samples = {key: np.asarray(v, dtype=float) for key, v in samples.items()}
    return MonteCarloResult(spec, samples, abnormal)
