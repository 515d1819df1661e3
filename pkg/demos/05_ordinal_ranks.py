"""Global rank vs ordinal rank.

Global rank is an agent's fixed index. Ordinal rank is its seniority
among the agents it can actually collide with right now: agents whose
one-step reach overlaps land in one component, and rank counts seniors
inside that component only. On a long path, agent 3 can sit in the middle
of the team order yet be the senior of its own local contest.
"""

from spcg import graphs, ordinal

# path 0-1-...-9, terminal at the right end
g = graphs.make_explicit(10, {(u, u + 1): 1.0 for u in range(9)}, {9})

placements = [
    ("3 and 4 share a frontier", [(1, 0), (2, 3), (3, 6), (4, 8)]),
    ("two separate contests", [(1, 0), (2, 2), (3, 5), (4, 7)]),
    ("one long chain", [(1, 2), (2, 4), (3, 6), (4, 8)]),
]

for label, positions in placements:
    sep = ordinal.separating_graph_from_positions(g, positions)
    comps = ordinal.ors(sep)
    ranks = ordinal.ordinal_ranks(comps)
    where = ", ".join(f"a{i}@{v}" for i, v in positions)
    pairs = ", ".join(f"agent {i}: {i}->{ranks[i]}" for i, _ in positions)
    print(f"{label} ({where})")
    print(f"  components {comps}")
    print(f"  global -> ordinal: {pairs}")
    print()

print("in the first placement agents 3 and 4 both reach node 7, so they")
print("form a two-agent contest in which agent 3 is the senior: ordinal")
print("rank 1 despite global rank 3. a policy conditioned on ordinal rank")
print("sees 'senior of 2' the same way at any team size, which is what")
print("lets one shared policy transfer to larger teams.")
