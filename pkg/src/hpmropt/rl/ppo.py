"""Diagonal-Gaussian policy over the unit design cube and the PPO update.

Each episode is a single step: the policy proposes one normalized design,
the environment returns one reward. The policy mean is ``sigmoid(theta)``
so it always lies inside the cube; actions are sampled around it, recorded
with their pre-clip log-probabilities, then clipped to [0, 1].

Gradients are analytic (the parameter vector is tiny), applied with Adam
(or plain SGD) after global-norm clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import design as dg

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PPOHyper:
    learning_rate: float = 2.5e-4
    clip_eps: float = 0.2
    c_vf: float = 0.5
    c_h: float = 1e-4
    max_grad_norm: float = 0.5
    batch_fraction: float = 0.5  # minibatch size as a fraction of the rollout
    n_epochs: int = 10
    gamma: float = 0.99
    gae_lambda: float = 0.95
    normalize_advantages: bool = True
    optimizer: str = "adam"  # adam | sgd
    min_log_std: float = math.log(1e-3)

    @classmethod
    def from_dict(cls, d: dict | None) -> "PPOHyper":
        return cls(**dict(d or {}))


@dataclass(frozen=True)
class PolicyState:
    theta_mu: np.ndarray  # pre-sigmoid mean
    log_std: np.ndarray
    value: float  # single-state value baseline
    m: np.ndarray = None  # Adam moments over the flat parameter vector
    v: np.ndarray = None
    step: int = 0

    @classmethod
    def initial(cls, dim: int = len(dg.PARAM_NAMES), mean=0.5, std: float = 0.25) -> "PolicyState":
        mean = np.clip(np.broadcast_to(np.asarray(mean, dtype=float), (dim,)), 1e-6, 1 - 1e-6)
        theta = np.log(mean / (1.0 - mean))
        n = 2 * dim + 1
        return cls(theta, np.full(dim, math.log(std)), 0.0, np.zeros(n), np.zeros(n), 0)

    @property
    def mean(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.theta_mu))

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    @property
    def dim(self) -> int:
        return len(self.theta_mu)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta_mu, self.log_std, [self.value]])

    def with_flat(self, p, m=None, v=None, step=None) -> "PolicyState":
        d = self.dim
        return replace(
            self,
            theta_mu=p[:d].copy(),
            log_std=p[d : 2 * d].copy(),
            value=float(p[2 * d]),
            m=self.m if m is None else m,
            v=self.v if v is None else v,
            step=self.step if step is None else step,
        )


def log_prob(state: PolicyState, actions) -> np.ndarray:
    a = np.atleast_2d(actions)
    z = (a - state.mean) / state.std
    return np.sum(-0.5 * z * z - state.log_std - 0.5 * LOG_2PI, axis=1)


def entropy(state: PolicyState) -> float:
    return float(np.sum(state.log_std + 0.5 * (LOG_2PI + 1.0)))


def sample_actions(state: PolicyState, n: int, rng: np.random.Generator):
    """Draw ``n`` actions; returns ``(raw, clipped, log_prob, designs)``.

    ``raw`` are the pre-clip Gaussian samples whose log-probabilities are
    recorded; ``clipped`` lie in the unit cube; ``designs`` are physical.
    """
    if n < 1:
        raise ValueError("need at least one action")
    eps = rng.standard_normal((n, state.dim))
    raw = state.mean + state.std * eps
    clipped = np.clip(raw, 0.0, 1.0)
    return raw, clipped, log_prob(state, raw), dg.denormalize(clipped)


def gae(rewards, values, gamma: float = 0.99, lam: float = 0.95, dones=None, last_value: float = 0.0):
    """Generalized advantage estimates along one trajectory.

    ``dones[t]`` marks the end of an episode after step ``t``; single-step
    episodes (all done) give ``A = r - V`` for any ``gamma`` and ``lam``.
    """
    r = np.asarray(rewards, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.shape != v.shape:
        raise ValueError("rewards and values must have the same length")
    done = np.ones_like(r, dtype=bool) if dones is None else np.asarray(dones, dtype=bool)
    if done.shape != r.shape:
        raise ValueError("dones must match rewards")
    adv = np.zeros_like(r)
    running = 0.0
    for t in range(len(r) - 1, -1, -1):
        nonterminal = 0.0 if done[t] else 1.0
        next_v = last_value if t == len(r) - 1 else v[t + 1]
        delta = r[t] + gamma * next_v * nonterminal - v[t]
        running = delta + gamma * lam * nonterminal * running
        adv[t] = running
    return adv


def clipped_objective(ratio, adv, eps: float):
    """Per-sample ``min(r A, clip(r, 1 - eps, 1 + eps) A)``."""
    ratio = np.asarray(ratio, dtype=float)
    adv = np.asarray(adv, dtype=float)
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv)


@dataclass
class Rollout:
    raw_actions: np.ndarray
    old_log_prob: np.ndarray
    rewards: np.ndarray
    values: np.ndarray  # baseline at collection time
    advantages: np.ndarray = None
    returns: np.ndarray = None

    def finish(self, hyper: PPOHyper) -> "Rollout":
        self.advantages = gae(self.rewards, self.values, hyper.gamma, hyper.gae_lambda)
        self.returns = self.advantages + self.values
        return self


def loss_and_grad(state: PolicyState, raw, old_logp, adv, returns, hyper: PPOHyper):
    """PPO loss (to minimize) and its gradient w.r.t. ``state.flat()``."""
    mu, sigma = state.mean, state.std
    z = (raw - mu) / sigma
    logp = np.sum(-0.5 * z * z - state.log_std - 0.5 * LOG_2PI, axis=1)
    ratio = np.exp(logp - old_logp)
    surr = clipped_objective(ratio, adv, hyper.clip_eps)
    unclipped = ratio * adv <= np.clip(ratio, 1.0 - hyper.clip_eps, 1.0 + hyper.clip_eps) * adv
    n = len(raw)
    # d surr / d logp = r A on the active unclipped branch, else 0
    w = np.where(unclipped, ratio * adv, 0.0) / n
    g_mu = -(w[:, None] * z / sigma).sum(axis=0) * mu * (1.0 - mu)
    g_ls = -(w[:, None] * (z * z - 1.0)).sum(axis=0) - hyper.c_h
    v_err = state.value - returns
    g_v = hyper.c_vf * 2.0 * np.mean(v_err)
    loss = -np.mean(surr) + hyper.c_vf * np.mean(v_err**2) - hyper.c_h * entropy(state)
    grad = np.concatenate([g_mu, g_ls, [g_v]])
    info = {
        "policy_loss": float(-np.mean(surr)),
        "value_loss": float(np.mean(v_err**2)),
        "entropy": entropy(state),
        "clip_fraction": float(np.mean(~unclipped)),
    }
    return float(loss), grad, info


def apply_gradient(state: PolicyState, grad, hyper: PPOHyper) -> PolicyState:
    norm = float(np.linalg.norm(grad))
    if math.isfinite(hyper.max_grad_norm) and norm > hyper.max_grad_norm:
        grad = grad * (hyper.max_grad_norm / norm)
    p = state.flat()
    lr = hyper.learning_rate
    if hyper.optimizer == "sgd":
        new = state.with_flat(p - lr * grad, step=state.step + 1)
    elif hyper.optimizer == "adam":
        b1, b2, eps = 0.9, 0.999, 1e-8
        step = state.step + 1
        m = b1 * state.m + (1 - b1) * grad
        v = b2 * state.v + (1 - b2) * grad * grad
        upd = lr * (m / (1 - b1**step)) / (np.sqrt(v / (1 - b2**step)) + eps)
        new = state.with_flat(p - upd, m=m, v=v, step=step)
    else:
        raise ValueError(f"unknown optimizer {hyper.optimizer!r}")
    if np.any(new.log_std < hyper.min_log_std):
        new = replace(new, log_std=np.maximum(new.log_std, hyper.min_log_std))
    return new


def ppo_update(state: PolicyState, batch: Rollout, hyper: PPOHyper, rng: np.random.Generator):
    """Several epochs of minibatch PPO on one rollout; returns ``(state, info)``."""
    if batch.advantages is None:
        batch.finish(hyper)
    adv = batch.advantages
    if hyper.normalize_advantages and len(adv) > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    n = len(adv)
    mb = max(1, int(round(hyper.batch_fraction * n)))
    info = {}
    for _ in range(hyper.n_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, mb):
            idx = perm[start : start + mb]
            loss, grad, info = loss_and_grad(
                state, batch.raw_actions[idx], batch.old_log_prob[idx], adv[idx], batch.returns[idx], hyper
            )
            if not math.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite PPO loss (reward mean {np.mean(batch.rewards):.4g}, std {np.std(batch.rewards):.4g})"
                )
            state = apply_gradient(state, grad, hyper)
            info["loss"] = loss
    return state, info
