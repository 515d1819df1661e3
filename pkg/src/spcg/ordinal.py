"""Ordinal ranks from reachable-set overlap.

Agents whose one-step reachable sets intersect can contest the same node next
step. The separating graph joins such pairs; its connected components are the
localized stage games, and an agent's ordinal rank is its seniority position
inside its own component: 1 + the number of more-senior agents sharing it.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SeparatingGraph:
    """Agents as vertices, edges between agents with overlapping reach."""
    agents: tuple[int, ...]
    edges: frozenset[frozenset[int]]

    def neighbors(self, i: int) -> list[int]:
        out = []
        for e in self.edges:
            if i in e:
                (j,) = e - {i}
                out.append(j)
        return sorted(out)


def separating_graph_from_positions(graph, positions) -> SeparatingGraph:
    """Build the separating graph from (agent_id, node) pairs of active agents.

    Reachable sets are one-step neighborhoods; inactive agents must already be
    filtered out by the caller.
    """
    reach = {i: frozenset(graph.neighbors(node)) for i, node in positions}
    ids = sorted(reach)
    edges = set()
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            i, j = ids[a], ids[b]
            if reach[i] & reach[j]:
                edges.add(frozenset((i, j)))
    return SeparatingGraph(tuple(ids), frozenset(edges))


def build_separating_graph(state) -> SeparatingGraph:
    """Separating graph for a game state (inactive agents are dropped)."""
    positions = [(a.id, a.node) for a in state.agents if a.active]
    return separating_graph_from_positions(state.graph, positions)


def ors(sep: SeparatingGraph) -> list[list[int]]:
    """Connected components by iterative depth-first search.

    Unvisited agents seed a stack; popped agents join the current component
    and push their neighbors. Members come back ascending, components sorted
    by smallest member.
    """
    visited = set()
    components = []
    for i in sep.agents:
        if i in visited:
            continue
        comp = set()
        stack = [i]
        while stack:
            a = stack.pop()
            if a in visited:
                continue
            visited.add(a)
            comp.add(a)
            stack.extend(sep.neighbors(a))
        components.append(sorted(comp))
    return sorted(components, key=lambda c: c[0])


def ordinal_ranks(components) -> dict[int, int]:
    """Rank of each agent inside its component: 1 + count of smaller ids."""
    ranks = {}
    for comp in components:
        for i in comp:
            ranks[i] = 1 + sum(1 for j in comp if j < i)
    return ranks


def ranks_for_state(state) -> dict[int, int]:
    """Ordinal ranks of every active agent in a game state."""
    return ordinal_ranks(ors(build_separating_graph(state)))


def ranks_from_positions(graph, positions) -> dict[int, int]:
    """Ordinal ranks from (agent_id, node) pairs of active agents."""
    return ordinal_ranks(ors(separating_graph_from_positions(graph, positions)))
