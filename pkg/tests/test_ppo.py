import math

import numpy as np
import pytest

from hpmropt import design as dg
from hpmropt.rl import ppo
from hpmropt.rl.ppo import PolicyState, PPOHyper, Rollout


def test_clip_examples():
    assert ppo.clipped_objective(1.3, 1.0, 0.2) == pytest.approx(1.2)
    assert ppo.clipped_objective(0.5, -1.0, 0.2) == pytest.approx(-0.8)


def test_unit_ratio_gives_advantage(rng):
    A = rng.standard_normal(50)
    np.testing.assert_array_equal(ppo.clipped_objective(np.ones(50), A, 0.2), A)


def test_clip_min_structure(rng):
    r = rng.uniform(0.1, 3.0, 500)
    A = rng.standard_normal(500)
    c = ppo.clipped_objective(r, A, 0.2)
    assert np.all(c <= r * A + 1e-15)


def test_gae_single_step():
    assert ppo.gae([3.0, -2.0], [0.0, 0.0]).tolist() == [3.0, -2.0]
    assert ppo.gae([-584.4], [-600.0])[0] == pytest.approx(15.6)
    r, v = np.array([1.0, 5.0, -2.0]), np.array([0.5, 0.5, 0.5])
    for g, l in ((0.0, 0.0), (0.5, 0.9), (0.99, 0.95)):
        np.testing.assert_array_equal(ppo.gae(r, v, g, l), r - v)


def test_gae_multi_step_recursion():
    r = np.array([1.0, 2.0, 3.0])
    v = np.array([0.5, 1.0, 1.5])
    g, l = 0.9, 0.8
    adv = ppo.gae(r, v, g, l, dones=[False, False, True])
    d = [r[0] + g * v[1] - v[0], r[1] + g * v[2] - v[1], r[2] - v[2]]
    expect = [d[0] + g * l * (d[1] + g * l * d[2]), d[1] + g * l * d[2], d[2]]
    np.testing.assert_allclose(adv, expect)


def test_gae_length_mismatch():
    with pytest.raises(ValueError):
        ppo.gae([1.0, 2.0], [0.0])


def test_zero_std_samples_equal_mean(rng):
    s = PolicyState.initial(mean=0.3, std=1e-300)
    _, clipped, _, X = ppo.sample_actions(s, 5, rng)
    np.testing.assert_allclose(clipped, 0.3)
    np.testing.assert_allclose(X, dg.denormalize(np.full((5, 7), 0.3)))


def test_sampling_deterministic():
    s = PolicyState.initial()
    a = ppo.sample_actions(s, 20, np.random.default_rng(5))
    b = ppo.sample_actions(s, 20, np.random.default_rng(5))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_sampling_statistics(rng):
    mean = np.linspace(0.3, 0.7, 7)
    s = PolicyState.initial(mean=mean, std=0.05)
    raw, clipped, logp, X = ppo.sample_actions(s, 10_000, rng)
    se = 0.05 / math.sqrt(10_000)
    assert np.all(np.abs(clipped.mean(axis=0) - mean) < 3 * se)
    assert np.all((clipped >= 0) & (clipped <= 1))
    assert all(dg.is_valid(dg.DesignPoint(*x)) for x in X[:200])


def test_log_prob_recorded_pre_clip(rng):
    s = PolicyState.initial(std=2.0)
    raw, clipped, logp, _ = ppo.sample_actions(s, 200, rng)
    assert np.any(raw != clipped)
    np.testing.assert_allclose(logp, ppo.log_prob(s, raw))


def test_sample_needs_one():
    with pytest.raises(ValueError):
        ppo.sample_actions(PolicyState.initial(), 0, np.random.default_rng(0))


def test_entropy_increases_with_log_std():
    s = PolicyState.initial()
    for i in range(s.dim):
        ls = s.log_std.copy()
        ls[i] += 0.1
        assert ppo.entropy(PolicyState.initial().with_flat(np.r_[s.theta_mu, ls, 0.0])) > ppo.entropy(s)


def _fd_grad_logp(state, raw):
    """Per-sample d log pi / d (theta_mu, log_std) by central differences."""
    p = state.flat()
    h = 1e-6
    G = np.zeros((len(raw), 2 * state.dim))
    for j in range(2 * state.dim):
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        G[:, j] = (ppo.log_prob(state.with_flat(up), raw) - ppo.log_prob(state.with_flat(dn), raw)) / (2 * h)
    return G


def test_ppo_reduces_to_vanilla_policy_gradient(rng):
    state = PolicyState.initial(mean=rng.uniform(0.2, 0.8, 7), std=0.2)
    raw, _, logp, _ = ppo.sample_actions(state, 64, rng)
    rewards = rng.standard_normal(64)
    hyper = PPOHyper(learning_rate=1e-3, clip_eps=math.inf, c_h=0.0, max_grad_norm=math.inf, batch_fraction=1.0,
                     n_epochs=1, normalize_advantages=False, optimizer="sgd")
    batch = Rollout(raw, logp, rewards, np.zeros(64))
    new, _ = ppo.ppo_update(state, batch, hyper, rng)
    # vanilla policy gradient ascent: theta += lr * mean(A * grad log pi)
    G = _fd_grad_logp(state, raw)
    step = 1e-3 * (rewards[:, None] * G).mean(axis=0)
    np.testing.assert_allclose(new.flat()[:14] - state.flat()[:14], step, rtol=0, atol=1e-8)


def test_gradient_matches_finite_differences(rng):
    state = PolicyState.initial(mean=rng.uniform(0.2, 0.8, 7), std=0.3)
    raw, _, logp, _ = ppo.sample_actions(state, 32, rng)
    # perturb so ratios differ from one and some clip
    state = state.with_flat(state.flat() + 0.05 * rng.standard_normal(15))
    adv, ret = rng.standard_normal(32), rng.standard_normal(32)
    hyper = PPOHyper()
    _, g, _ = ppo.loss_and_grad(state, raw, logp, adv, ret, hyper)
    p = state.flat()
    h = 1e-6
    for j in range(len(p)):
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        fd = (ppo.loss_and_grad(state.with_flat(up), raw, logp, adv, ret, hyper)[0]
              - ppo.loss_and_grad(state.with_flat(dn), raw, logp, adv, ret, hyper)[0]) / (2 * h)
        assert fd == pytest.approx(g[j], rel=1e-4, abs=1e-7)


def test_gradient_norm_clipped():
    s = PolicyState.initial()
    hyper = PPOHyper(optimizer="sgd", learning_rate=1.0, max_grad_norm=0.5)
    new = ppo.apply_gradient(s, np.full(15, 10.0), hyper)
    assert np.linalg.norm(new.flat() - s.flat()) == pytest.approx(0.5)


def test_non_finite_loss_reported(rng):
    s = PolicyState.initial()
    raw, _, logp, _ = ppo.sample_actions(s, 8, rng)
    batch = Rollout(raw, logp, np.full(8, np.nan), np.zeros(8))
    with pytest.raises(FloatingPointError, match="reward mean"):
        ppo.ppo_update(s, batch, PPOHyper(), rng)


def test_update_moves_toward_high_reward(rng):
    s = PolicyState.initial(std=0.2)
    for _ in range(30):
        raw, clipped, logp, _ = ppo.sample_actions(s, 64, rng)
        r = -np.sum((clipped - 0.8) ** 2, axis=1)
        s, info = ppo.ppo_update(s, Rollout(raw, logp, r, np.full(64, s.value)), PPOHyper(learning_rate=0.05), rng)
    assert np.all(s.mean > 0.6)
    assert {"policy_loss", "value_loss", "entropy", "clip_fraction", "loss"} <= set(info)


def test_unknown_optimizer():
    with pytest.raises(ValueError):
        ppo.apply_gradient(PolicyState.initial(), np.zeros(15), PPOHyper(optimizer="rmsprop"))
