"""One episode, narrated step by step.

Two agents start on the hub of a star graph and contest the same leaf.
The senior agent takes the contested prize; the junior walks away with the
second-best. Shows arrivals, conflicts, budgets, and the final accounting.
"""

import numpy as np

from spcg import engine, graphs

g = graphs.make_star(4, [1.0, 1.0, 1.0, 1.0])
# hub is node 0, leaves 1..4, terminal is leaf 4
values = np.array([0.0, 8.0, 3.0, 1.0, 0.0])
config = engine.GameConfig(l_max=4.0, terminal_prize=15.0)

state = engine.initial_state(g, values, config, [0, 0])
print("both agents on the hub; prizes",
      {u: float(values[u]) for u in (1, 2, 3)})

script = {1: [1, 0, 4], 2: [1, 0, 2]}   # both lunge for leaf 1 first
t = 0
while state.any_active():
    moves = {}
    for a in state.agents:
        if a.active and script[a.id]:
            moves[a.id] = script[a.id].pop(0)
    if not moves:
        break
    out = engine.step(state, moves)
    t += 1
    parts = []
    for a in out.new_state.agents:
        parts.append(f"agent {a.id} at {a.node} "
                     f"(budget {a.budget:.0f}, reward +{out.rewards[a.id - 1]:.0f})")
    note = f", {out.conflicts} agent(s) lost a tie" if out.conflicts else ""
    print(f"step {t}: " + "; ".join(parts) + note)
    state = out.new_state

print("\nthe tie at leaf 1 went to agent 1 by seniority;")
print("agent 2 doubled back for leaf 2 instead.")
print("note: agent 2 ends on a prize leaf, not the terminal, so it keeps")
print("its collected prize but forfeits the terminal payment.")
