"""Rank-greedy play on a complete graph, certified two ways.

In the two-move budget regime each agent reaches one prize and exits.
Seniority settles conflicts, so greedy target assignment by rank is
stable, and together the agents sweep the top prizes: the profile is both
an equilibrium and team-optimal.
"""

import numpy as np

from spcg import engine, equilibrium, graphs, topsolver

rng = np.random.default_rng(7)
g = graphs.make_complete(6)
starts = [0, 1]
values = np.zeros(6)
free = [u for u in g.non_terminals() if u not in starts]
values[free] = rng.uniform(0.0, 10.0, size=len(free))
values[5] = 15.0
config = engine.GameConfig(l_max=2.0, terminal_prize=15.0)

print("prizes:", {u: round(float(values[u]), 2) for u in free})

routes, log = equilibrium.greedy_routes(g, values, starts, config)
for i, r in enumerate(routes):
    print(f"agent {i + 1} (rank {i + 1}) plays {r}")

ok, deviation = equilibrium.verify_unilateral_deviations(
    g, values, starts, config, routes)
print(f"\nstable against every unilateral deviation: {ok}")

prize_tot, term_tot = equilibrium.simulate_route_profile(
    g, values, starts, routes, config)
team = float(prize_tot.sum() + term_tot.sum())
sol = topsolver.solve_exact(topsolver.TopInstance(
    g, values, tuple(starts), config.l_max, config.terminal_prize))
print(f"greedy team reward {team:.4f} vs exact optimum {sol.team_reward:.4f}")
print(f"gap: {abs(team - sol.team_reward):.2e}")
