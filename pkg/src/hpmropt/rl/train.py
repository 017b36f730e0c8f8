"""PPO training loop, random-search baseline and trace/champion files."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import design as dg
from ..surrogate.dataset import fmt
from .ppo import PolicyState, PPOHyper, Rollout, ppo_update, sample_actions
from .reward import ConstraintSpec, evaluate_rewards, is_feasible

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("epoch", "mean_reward", "max_reward", "best_lcoe", "feasible_fraction")
CHAMPION_QOIS = ("lifetime", "sdm", "fdh", "q_max")


@dataclass(frozen=True)
class TrainConfig:
    total_samples: int = 100_000
    n_workers: int = 8
    n_steps: int = 8  # episodes per worker per rollout
    epoch_samples: int = 10_000
    top_k: int = 10
    init_std: float = 0.5
    seed: int = 0
    max_failures: int = 10
    threads: int = 1  # evaluate worker batches concurrently when > 1
    ppo: PPOHyper = field(default_factory=PPOHyper)

    @classmethod
    def from_dict(cls, d: dict | None) -> "TrainConfig":
        d = dict(d or {})
        ppo = PPOHyper.from_dict(d.pop("ppo", None))
        return cls(ppo=ppo, **d)


@dataclass
class EpochRecord:
    epoch: int
    mean_reward: float
    max_reward: float
    best_lcoe: float
    feasible_fraction: float


@dataclass
class Candidate:
    x: np.ndarray  # physical design
    lcoe: float
    reward: float
    qois: dict  # evaluation-path QoIs
    true_qois: dict = None
    true_lcoe: float = math.nan
    true_feasible: bool = False


@dataclass
class TrainingResult:
    trace: list
    candidates: list  # top-k by evaluation-path LCOE, re-evaluated if possible
    champion: Candidate | None
    state: PolicyState
    samples: int
    failures: int = 0
    best_reward_curve: list = field(default_factory=list)


class _TopK:
    """Best ``k`` feasible designs by LCOE (deduplicated)."""

    def __init__(self, k):
        self.k = k
        self.items = []
        self._keys = set()

    def offer(self, X, lcoe, reward, feasible, qois):
        idx = np.flatnonzero(feasible)
        if not len(idx):
            return
        worst = self.items[-1].lcoe if len(self.items) >= self.k else math.inf
        for i in idx[np.argsort(lcoe[idx], kind="stable")]:
            if lcoe[i] >= worst:
                break
            key = tuple(np.round(X[i], 12))
            if key in self._keys:
                continue
            self._keys.add(key)
            self.items.append(Candidate(X[i].copy(), float(lcoe[i]), float(reward[i]),
                                        {k: float(qois[k][i]) for k in qois}))
            self.items.sort(key=lambda c: c.lcoe)
            if len(self.items) > self.k:
                drop = self.items.pop()
                self._keys.discard(tuple(np.round(drop.x, 12)))
            worst = self.items[-1].lcoe if len(self.items) >= self.k else math.inf


class _EpochAccumulator:
    """Cuts the sample stream into fixed-size epochs."""

    def __init__(self, epoch_samples):
        self.size = epoch_samples
        self.records = []
        self._r, self._f = [], []
        self._count = 0
        self.best_lcoe = math.inf

    def add(self, reward, lcoe, feasible):
        i = 0
        while i < len(reward):
            j = min(len(reward), i + self.size - self._count)
            r, l, f = reward[i:j], lcoe[i:j], feasible[i:j]
            self._r.append(r)
            self._f.append(f)
            self._count += len(r)
            if f.any():
                self.best_lcoe = min(self.best_lcoe, float(l[f].min()))
            if self._count >= self.size:
                self.close()
            i = j

    def close(self):
        if not self._count:
            return
        r = np.concatenate(self._r)
        f = np.concatenate(self._f)
        self.records.append(EpochRecord(len(self.records) + 1, float(r.mean()), float(r.max()), self.best_lcoe,
                                        float(f.mean())))
        self._r, self._f, self._count = [], [], 0


def _reevaluate(cands, full_evaluator, lcoe_fn, spec):
    if full_evaluator is None or not cands:
        return
    X = np.array([c.x for c in cands])
    out = evaluate_rewards(X, full_evaluator, lcoe_fn, spec)
    for i, c in enumerate(cands):
        c.true_qois = {k: float(v[i]) for k, v in out["qois"].items()}
        c.true_lcoe = float(out["lcoe"][i])
        c.true_feasible = bool(out["feasible"][i])


def _pick_champion(cands, reevaluated):
    if not cands:
        return None
    if reevaluated:
        ok = [c for c in cands if c.true_feasible]
        if ok:
            return min(ok, key=lambda c: c.true_lcoe)
    return cands[0]


def train(
    evaluator,
    lcoe_fn,
    spec: ConstraintSpec | None = None,
    config: TrainConfig | None = None,
    full_evaluator=None,
) -> TrainingResult:
    """Run PPO for ``config.total_samples`` single-step episodes.

    ``evaluator`` drives training (surrogate or oracle); ``full_evaluator``
    re-evaluates the top-k designs at the end.
    """
    cfg = config or TrainConfig()
    spec = spec or ConstraintSpec()
    ss = np.random.SeedSequence(cfg.seed)
    upd_seq, *worker_seqs = ss.spawn(cfg.n_workers + 1)
    upd_rng = np.random.default_rng(upd_seq)
    worker_rngs = [np.random.default_rng(s) for s in worker_seqs]
    state = PolicyState.initial(std=cfg.init_std)
    topk = _TopK(cfg.top_k)
    acc = _EpochAccumulator(cfg.epoch_samples)
    best_curve = []
    best = -math.inf
    failures = 0
    done = 0
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        while done < cfg.total_samples:
            per_worker = [min(cfg.n_steps, max(0, cfg.total_samples - done - w * cfg.n_steps)) for w in range(cfg.n_workers)]
            draws = [sample_actions(state, n, rng) for n, rng in zip(per_worker, worker_rngs) if n > 0]

            def run(d):
                return evaluate_rewards(d[3], evaluator, lcoe_fn, spec)

            try:
                results = list(pool.map(run, draws)) if pool else [run(d) for d in draws]
            except Exception:
                failures += 1
                log.warning("rollout evaluation failed (%d/%d)", failures, cfg.max_failures, exc_info=True)
                if failures >= cfg.max_failures:
                    raise
                continue
            raw = np.concatenate([d[0] for d in draws])
            logp = np.concatenate([d[2] for d in draws])
            X = np.concatenate([d[3] for d in draws])
            rew = np.concatenate([r["reward"] for r in results])
            lcoe = np.concatenate([r["lcoe"] for r in results])
            feas = np.concatenate([r["feasible"] for r in results])
            qois = {k: np.concatenate([r["qois"][k] for r in results]) for k in CHAMPION_QOIS}
            topk.offer(X, lcoe, rew, feas, qois)
            acc.add(rew, lcoe, feas)
            best = max(best, float(rew.max()))
            best_curve.append(best)
            rollout = Rollout(raw, logp, rew, np.full(len(rew), state.value))
            state, _ = ppo_update(state, rollout, cfg.ppo, upd_rng)
            done += len(rew)
    finally:
        if pool:
            pool.shutdown()
    acc.close()
    cands = topk.items
    _reevaluate(cands, full_evaluator, lcoe_fn, spec)
    champion = _pick_champion(cands, full_evaluator is not None)
    return TrainingResult(acc.records, cands, champion, state, done, failures, best_curve)


@dataclass
class BaselineResult:
    best_x: np.ndarray
    best_reward: float
    trace: list
    feasible_mean_lcoe: float
    feasible_count: int
    best_feasible_lcoe: float
    best_reward_curve: np.ndarray


def random_search_baseline(budget: int, seed: int, evaluator, lcoe_fn, spec: ConstraintSpec | None = None,
                           epoch_samples: int = 10_000, chunk: int = 10_000) -> BaselineResult:
    """Uniform sampling over the normalized cube with the same reward."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    spec = spec or ConstraintSpec()
    rng = np.random.default_rng(seed)
    acc = _EpochAccumulator(epoch_samples)
    best_r, best_x = -math.inf, None
    curve = []
    feas_sum, feas_n = 0.0, 0
    for lo in range(0, budget, chunk):
        n = min(chunk, budget - lo)
        X = dg.denormalize(rng.random((n, len(dg.PARAM_NAMES))))
        out = evaluate_rewards(X, evaluator, lcoe_fn, spec)
        r = out["reward"]
        acc.add(r, out["lcoe"], out["feasible"])
        i = int(np.argmax(r))
        if r[i] > best_r:
            best_r, best_x = float(r[i]), X[i].copy()
        curve.append(r)
        feas_sum += float(out["lcoe"][out["feasible"]].sum())
        feas_n += int(out["feasible"].sum())
    acc.close()
    curve = np.maximum.accumulate(np.concatenate(curve))
    return BaselineResult(best_x, best_r, acc.records, feas_sum / feas_n if feas_n else math.nan, feas_n,
                          acc.best_lcoe, curve)


# ------------------------------------------------------------------ files

def trace_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in records:
        w.writerow([r.epoch, fmt(r.mean_reward), fmt(r.max_reward), fmt(r.best_lcoe), fmt(r.feasible_fraction)])
    return buf.getvalue()


def champions_csv(cands) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(dg.PARAM_NAMES) + [f"pred_{q}" for q in CHAMPION_QOIS] + ["pred_lcoe_foak"]
    header += [f"true_{q}" for q in CHAMPION_QOIS] + ["true_lcoe_foak", "true_feasible"]
    w.writerow(header)
    for c in cands:
        row = [fmt(v) for v in c.x] + [fmt(c.qois[q]) for q in CHAMPION_QOIS] + [fmt(c.lcoe)]
        t = c.true_qois or {}
        row += [fmt(t.get(q, math.nan)) for q in CHAMPION_QOIS] + [fmt(c.true_lcoe), str(int(c.true_feasible))]
        w.writerow(row)
    return buf.getvalue()
