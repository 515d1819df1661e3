"""Watch the sequential-freezing loop train two agents.

One agent trains at a time against the frozen (or, before the first
freeze, uniform-random) other. An entropy staircase gates progress: the
trainee must commit to near-deterministic play before the next agent gets
its turn, and the junior starts from a copy of the senior's weights.

Takes about half a minute.
"""

import numpy as np

from spcg import engine, equilibrium, forl, graphs, topsolver
from spcg import prizes as prize_mod

rng = np.random.default_rng(42)
g = graphs.make_complete(5)
starts = [0, 1]
values = np.zeros(5)
free = [u for u in g.non_terminals() if u not in starts]
values[free] = rng.uniform(0.0, 10.0, size=len(free))
values[4] = 15.0
config = engine.GameConfig(l_max=2.0, terminal_prize=15.0)
print("prizes:", {u: round(float(values[u]), 2) for u in free})

model = prize_mod.fixed_model(
    g, {u: float(values[u]) for u in g.non_terminals()}, terminal_value=15.0)
spec = forl.FeatureSpec(g, config.l_max)
sched = forl.default_schedule(g.n_nodes, h0_fraction=0.8, rounds=8,
                              h_stop=0.05)

policies, log = forl.forl_train(
    g, model, config, lambda: forl.LinearSoftmaxPolicy(spec, 0.8), sched,
    t_max=60_000, seed=0, n_agents=2, starts=starts, batch_size=100)

print(f"\n{len(log.entries)} policy updates; the freeze events:")
for e in log.entries:
    if not e["event"]:
        continue
    h = ", ".join(f"{x:.3f}" for x in e["entropies"])
    print(f"  t={e['t']:>6} trainee {e['trainee']} "
          f"threshold {e['freezing_point']:.3f} [{e['event']}] "
          f"entropies ({h})")

# deterministic evaluation against the rank-greedy reference


class Argmax:
    def __init__(self, inner):
        self.inner = inner

    def action_distribution(self, obs):
        dist = np.asarray(self.inner.action_distribution(obs), dtype=float)
        out = np.zeros_like(dist)
        if dist.sum() > 0:
            out[int(np.argmax(dist))] = 1.0
        return out


learned = engine.rollout(g, None, config, [Argmax(p) for p in policies],
                         seed=0, starts=starts, initial_prizes=values)
_, reference = equilibrium.greedy_routes(g, values, starts, config)
sol = topsolver.solve_exact(topsolver.TopInstance(
    g, values, tuple(starts), config.l_max, config.terminal_prize))

print(f"\nlearned trajectories:   {learned.trajectories}")
print(f"greedy equilibrium play: {reference.trajectories}")
print(f"match: {learned.trajectories == reference.trajectories}")
print(f"team reward {learned.team_reward:.3f} vs optimum {sol.team_reward:.3f}")
