"""Network output contracts: box containment, sigma floor, densities."""
import numpy as np
import pytest
import torch

from fristrain import GaussianActor, ReturnCritic

LOW = np.array([-2.0, 0.0, 1e-6, -90.0])
HIGH = np.array([2.0, 2 * np.pi, 1.0 - 1e-6, 90.0])


def make_actor(seed=0, dtype=torch.float64):
    torch.manual_seed(seed)
    actor = GaussianActor(3, 4, LOW, HIGH, hidden=(16, 16))
    return actor.to(dtype)


def test_sampled_actions_always_inside_box():
    actor = make_actor()
    for seed in range(20):
        torch.manual_seed(seed)
        states = torch.randn(64, 3, dtype=torch.float64) * 5.0
        actions, _ = actor.sample(states)
        a = actions.detach().numpy()
        assert np.all(a >= LOW) and np.all(a <= HIGH)


def test_deterministic_action_inside_box_and_repeatable():
    actor = make_actor()
    states = torch.randn(32, 3, dtype=torch.float64)
    a1 = actor.act(states)
    a2 = actor.act(states)
    assert torch.equal(a1, a2)
    a = a1.numpy()
    assert np.all(a >= LOW) and np.all(a <= HIGH)


def test_log_prob_matches_sampling_density():
    actor = make_actor(3)
    torch.manual_seed(11)
    states = torch.randn(128, 3, dtype=torch.float64)
    actions, logp = actor.sample(states)
    recomputed = actor.log_prob(states, actions.detach())
    assert torch.allclose(logp, recomputed, rtol=1e-6, atol=1e-6)


def test_log_prob_integrates_to_one_in_1d():
    # brute-force quadrature over a 1-dimensional action space
    torch.manual_seed(5)
    actor = GaussianActor(1, 1, [-2.0], [3.0], hidden=(8,)).double()
    state = torch.zeros(1, 1, dtype=torch.float64)
    grid = torch.linspace(-2.0 + 1e-4, 3.0 - 1e-4, 20001, dtype=torch.float64)
    batch_s = state.expand(grid.numel(), 1)
    logp = actor.log_prob(batch_s, grid.unsqueeze(-1))
    mass = torch.trapz(logp.exp(), grid).item()
    assert mass == pytest.approx(1.0, abs=2e-3)


def test_sigma_floor_holds_under_fuzz():
    torch.manual_seed(0)
    floor = 1e-3
    critic = ReturnCritic(3, 2, hidden=(16, 16), sigma_min=floor)
    for seed in range(50):
        gen = torch.Generator().manual_seed(seed)
        s = torch.randn(64, 3, generator=gen) * 10 ** (seed % 5)
        a = torch.randn(64, 2, generator=gen) * 10 ** (seed % 3)
        _, sigma = critic(s, a)
        assert torch.all(sigma >= floor)


def test_sigma_floor_even_with_hostile_weights():
    critic = ReturnCritic(2, 1, hidden=(4,), sigma_min=1e-3)
    with torch.no_grad():
        for p in critic.parameters():
            p.fill_(-50.0)  # drives the raw sigma output far negative
    _, sigma = critic(torch.ones(8, 2), torch.ones(8, 1))
    assert torch.all(sigma >= 1e-3)


def test_critic_sample_uses_given_noise():
    torch.manual_seed(1)
    critic = ReturnCritic(2, 1, hidden=(8,)).double()
    s = torch.randn(5, 2, dtype=torch.float64)
    a = torch.randn(5, 1, dtype=torch.float64)
    mean, sigma = critic(s, a)
    zero = critic.sample(s, a, noise=torch.zeros_like(mean))
    assert torch.allclose(zero, mean)
    one = critic.sample(s, a, noise=torch.ones_like(mean))
    assert torch.allclose(one, mean + sigma)


def test_bad_bounds_rejected():
    with pytest.raises(ValueError):
        GaussianActor(2, 2, [0.0, 0.0], [1.0])
    with pytest.raises(ValueError):
        GaussianActor(2, 2, [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        ReturnCritic(2, 1, sigma_min=0.0)
