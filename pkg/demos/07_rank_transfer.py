"""Train 3 agents once, deploy 8 without retraining.

One parameter-shared policy learns on a grid with three agents. Because
it is conditioned on ordinal rank, nothing in its feature space is tied
to the team size, so the same weights drive larger teams. The comparison
policy conditions on global rank and meets one-hot inputs it never saw
in training.

Takes a couple of minutes.
"""

import numpy as np

from spcg import engine, forl, graphs
from spcg import prizes as prize_mod


class Argmax:
    def __init__(self, inner):
        self.inner = inner

    def action_distribution(self, obs):
        dist = np.asarray(self.inner.action_distribution(obs), dtype=float)
        out = np.zeros_like(dist)
        if dist.sum() > 0:
            out[int(np.argmax(dist))] = 1.0
        return out


g = graphs.make_grid_with_deadends(3, 4, 0.0, seed=0)
config = engine.GameConfig(l_max=7.0, terminal_prize=15.0)
model = prize_mod.uniform_model(g)

shared = {}
for mode in ("or", "gr"):
    spec = forl.FeatureSpec(g, config.l_max, rank_mode=mode)
    learner = forl.LinearSoftmaxPolicy(spec, 0.5)
    shared[mode], _ = forl.train_parameter_shared(
        g, model, config, learner, t_max=60_000, seed=11, n_agents=3,
        batch_size=200)
    print(f"trained the {mode}-conditioned policy at n=3")

print()
for n in (3, 8):
    means = {}
    for mode in ("or", "gr"):
        team = []
        for k in range(40):
            log = engine.rollout(g, model, config,
                                 [Argmax(shared[mode])] * n,
                                 seed=9_000 + k)
            team.append(log.team_reward)
        means[mode] = float(np.mean(team))
    note = "(training size)" if n == 3 else "(zero-shot)"
    print(f"n={n} {note}: ordinal-rank policy {means['or']:.2f}, "
          f"global-rank policy {means['gr']:.2f}")

print("\npast the training size the global-rank policy extrapolates")
print("through untrained rank inputs while ordinal ranks stay in the")
print("range seen during training. any one 40-episode block is noisy;")
print("the paired evaluation in the acceptance suite repeats this over")
print("20 blocks and the ordinal policy wins the large majority.")
