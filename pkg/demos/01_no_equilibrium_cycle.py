"""Two agents, three routes each, and no stable outcome.

Builds the hand-constructed instance whose 3x3 payoff table contains a
best-response cycle, prints the table for one asymmetry value, and walks
the cycle explicitly.
"""

import numpy as np

from spcg import engine, equilibrium, graphs

ALPHA = 0.5

g, prizes = graphs.make_counterexample(ALPHA)
config = engine.GameConfig(l_max=graphs.COUNTEREXAMPLE_BUDGET,
                           terminal_prize=graphs.COUNTEREXAMPLE_TERMINAL_PRIZE)

matrix = equilibrium.payoff_matrix(g, prizes, [0, 0], config)
names = [str(r) for r in matrix.strategies[0]]

print(f"alpha = {ALPHA}; routes available to each agent: {names}")
print()
header = " " * 10 + "".join(f"{n:>16}" for n in names)
print(header)
for i, row_name in enumerate(names):
    cells = []
    for j in range(len(names)):
        a, b = matrix.cell((i, j))
        cells.append(f"({a:.2f}, {b:.2f})".rjust(16))
    print(f"{row_name:>10}" + "".join(cells))
print()

result = equilibrium.find_pure_nash(matrix)
print(f"pure equilibria found: {len(result.equilibria)}")

# follow best responses from (0, 0) until a profile repeats
def best_response(idx, agent):
    others = list(idx)
    best, best_val = None, -np.inf
    for k in range(len(names)):
        others[agent] = k
        val = matrix.cell(tuple(others))[agent]
        if val > best_val:
            best, best_val = k, val
    return best

idx = (0, 0)
seen = [idx]
print(f"\nbest-response walk from ({names[0]}, {names[0]}), agent 2 first:")
for turn in range(10):
    agent = (turn + 1) % 2
    nxt = best_response(idx, agent)
    new = (nxt, idx[1]) if agent == 0 else (idx[0], nxt)
    if new == idx:
        print(f"  agent {agent + 1} stays put; profile would be stable")
        break
    idx = new
    mark = " <- seen before, cycle closed" if idx in seen else ""
    print(f"  agent {agent + 1} switches to {names[idx[agent]]}: "
          f"now ({names[idx[0]]}, {names[idx[1]]}){mark}")
    if mark:
        break
    seen.append(idx)
