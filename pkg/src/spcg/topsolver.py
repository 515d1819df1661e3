"""Exact and anytime team-orienteering baselines.

The team optimum maximizes the prize mass covered by joint simple routes
(each node's prize counted once across the team) plus one terminal payment
per agent. Routes start at each agent's start node, end at a terminal, and
cost at most l_max. Search is branch and bound: agents' routes are extended
depth first in rank order, pruned with an admissible reachable-prize bound.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .equilibrium import RouteStrategy
from .graphs import Graph

_EPS = 1e-9


class InfeasibleInstanceError(ValueError):
    """Some agent cannot reach any terminal within the budget."""


class SearchBudgetError(RuntimeError):
    """Estimated profile space exceeds the node budget; use solve_bound."""


@dataclass(frozen=True)
class TopInstance:
    graph: Graph
    prizes: np.ndarray
    starts: tuple[int, ...]
    l_max: float
    terminal_prize: float = 15.0

    @property
    def n_agents(self) -> int:
        return len(self.starts)

    def __post_init__(self):
        for s in self.starts:
            if s in self.graph.terminals:
                raise InfeasibleInstanceError(
                    f"start {s} is a terminal; nothing to solve for that agent")


@dataclass
class TopSolution:
    routes: list[RouteStrategy]
    team_reward: float
    optimal: bool
    upper_bound: float
    nodes_expanded: int = 0


def profile_prize_mass(instance: TopInstance, routes) -> float:
    """Canonical team prize mass of a route profile: each covered
    intermediate node counted once, starts and terminals excluded."""
    covered = sorted({v for r in routes for v in r.nodes})
    return float(instance.prizes[covered].sum()) if covered else 0.0


class _Search:
    def __init__(self, instance: TopInstance, deadline=None):
        self.inst = instance
        g = instance.graph
        self.dist = g.distances()
        self.tdist = np.array([g.terminal_distance(u) for u in range(g.n_nodes)])
        for s in instance.starts:
            if self.tdist[s] > instance.l_max + _EPS:
                raise InfeasibleInstanceError(
                    f"agent starting at {s} cannot reach a terminal within "
                    f"the budget {instance.l_max}")
        self.deadline = deadline
        self.prize_nodes = [v for v in range(g.n_nodes)
                            if v not in g.terminals and instance.prizes[v] > 0]
        self.cover = np.zeros(g.n_nodes, dtype=int)
        self.best_mass = -1.0
        self.best_routes: list[list[int]] = []
        self.expanded = 0
        self.timed_out = False
        self.abandoned_bound = -np.inf
        self._seed_incumbent()

    def _seed_incumbent(self):
        # direct shortest routes to the nearest terminal always exist here
        g = self.inst.graph
        paths = []
        for s in self.inst.starts:
            t = g.nearest_terminal(s)
            path = [s]
            while path[-1] != t:
                path.append(g.next_hop(path[-1], t))
            paths.append(path)
        covered = sorted({v for p in paths for v in p[1:-1]})
        mass = float(self.inst.prizes[covered].sum()) if covered else 0.0
        self.best_mass = mass
        self.best_routes = paths

    def _bound(self, k, x, budget, mass):
        """mass plus every uncollected prize some remaining agent could still
        pick up on the way to a terminal (admissible overcount)."""
        extra = 0.0
        for v in self.prize_nodes:
            if self.cover[v] > 0:
                continue
            if self.dist[x, v] + self.tdist[v] <= budget + _EPS:
                extra += self.inst.prizes[v]
                continue
            for j in range(k + 1, self.inst.n_agents):
                sj = self.inst.starts[j]
                if self.dist[sj, v] + self.tdist[v] <= self.inst.l_max + _EPS:
                    extra += self.inst.prizes[v]
                    break
        return mass + extra

    def _out_of_time(self):
        return self.deadline is not None and time.monotonic() >= self.deadline

    def run(self):
        self._extend(0, [self.inst.starts[0]], self.inst.l_max, 0.0, [])
        return self

    def _extend(self, k, path, budget, mass, finished):
        g = self.inst.graph
        x = path[-1]
        bound = self._bound(k, x, budget, mass)
        if self._out_of_time():
            self.timed_out = True
            self.abandoned_bound = max(self.abandoned_bound, bound)
            return
        if bound <= self.best_mass + 1e-12:
            return
        self.expanded += 1
        in_path = set(path)
        children = []
        for v in g.neighbors(x):
            w = g.weight(x, v)
            if v in g.terminals:
                if w <= budget + _EPS:
                    children.append((v, w, True))
            elif v not in in_path and w + self.tdist[v] <= budget + _EPS:
                gain = self.inst.prizes[v] if self.cover[v] == 0 else 0.0
                children.append((v, w, False, gain))
        # promising extensions first (higher fresh prize, then cheaper, then id)
        children.sort(key=lambda c: (-(c[3] if len(c) > 3 else 0.0), c[1], c[0]))
        for child in children:
            if self.timed_out:
                self.abandoned_bound = max(self.abandoned_bound, bound)
                return
            v, w = child[0], child[1]
            if child[2]:  # terminal: this agent's route is complete
                route = path + [v]
                if k + 1 == self.inst.n_agents:
                    if mass > self.best_mass + 1e-12:
                        self.best_mass = mass
                        self.best_routes = [list(p) for p in finished] + [route]
                else:
                    self._extend(k + 1, [self.inst.starts[k + 1]],
                                 self.inst.l_max, mass, finished + [route])
            else:
                gain = child[3]
                self.cover[v] += 1
                self._extend(k, path + [v], budget - w, mass + gain, finished)
                self.cover[v] -= 1

    def solution(self) -> TopSolution:
        inst = self.inst
        routes = []
        for path in self.best_routes:
            cost = sum(inst.graph.weight(path[j], path[j + 1])
                       for j in range(len(path) - 1))
            routes.append(RouteStrategy(path[0], tuple(path[1:-1]), path[-1],
                                        cost))
        mass = profile_prize_mass(inst, routes)
        reward = mass + inst.n_agents * inst.terminal_prize
        if self.timed_out:
            ub_mass = max(self.best_mass, self.abandoned_bound)
        else:
            ub_mass = mass
        return TopSolution(routes=routes, team_reward=reward,
                           optimal=not self.timed_out,
                           upper_bound=ub_mass + inst.n_agents * inst.terminal_prize,
                           nodes_expanded=self.expanded)


def count_routes(graph, start, l_max, cap) -> int:
    """Simple feasible routes from start, counting stops early past cap."""
    if start in graph.terminals:
        return 0
    count = 0

    def dfs(node, visited, cost):
        nonlocal count
        if count > cap:
            return
        for v in sorted(graph.neighbors(node)):
            c = cost + graph.weight(node, v)
            if c > l_max + _EPS:
                continue
            if v in graph.terminals:
                count += 1
            elif v not in visited:
                dfs(v, visited | {v}, c)

    dfs(start, {start}, 0.0)
    return count


def solve_exact(instance: TopInstance, node_budget: int = 100_000_000) -> TopSolution:
    """Provably optimal joint routes by branch and bound.

    Refuses instances whose estimated joint-profile count exceeds node_budget
    (raises SearchBudgetError pointing at solve_bound).
    """
    estimate = 1
    for s in instance.starts:
        per_agent = count_routes(instance.graph, s, instance.l_max,
                                 node_budget + 1)
        estimate *= max(per_agent, 1)
        if estimate > node_budget:
            raise SearchBudgetError(
                f"estimated profile space exceeds {node_budget}; "
                "use solve_bound for an anytime incumbent")
    return _Search(instance).run().solution()


def solve_bound(instance: TopInstance, time_limit: float) -> TopSolution:
    """Anytime search: best incumbent and a valid upper bound at the limit.

    time_limit 0 returns the trivial direct-to-terminal incumbent.
    """
    deadline = time.monotonic() + max(0.0, time_limit)
    return _Search(instance, deadline=deadline).run().solution()


def save_instance(path, instance: TopInstance) -> None:
    g = instance.graph
    rec = {"record": "top_instance", "n_nodes": g.n_nodes,
           "edges": [[u, v, g.weight(u, v)] for u, v in g.edge_list()],
           "terminals": sorted(g.terminals),
           "prizes": [float(x) for x in instance.prizes],
           "starts": list(instance.starts), "l_max": instance.l_max,
           "terminal_prize": instance.terminal_prize}
    with open(path, "a") as fh:
        fh.write(json.dumps(rec) + "\n")


def load_instance(path) -> TopInstance:
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.get("record") == "top_instance":
                weights = {(u, v): w for u, v, w in rec["edges"]}
                graph = Graph(rec["n_nodes"], weights, rec["terminals"])
                return TopInstance(graph=graph,
                                   prizes=np.array(rec["prizes"]),
                                   starts=tuple(rec["starts"]),
                                   l_max=rec["l_max"],
                                   terminal_prize=rec["terminal_prize"])
    raise ValueError(f"no top_instance record in {path}")


def save_solution(path, solution: TopSolution) -> None:
    rec = {"record": "top_solution",
           "routes": [list(r.full_path) for r in solution.routes],
           "team_reward": solution.team_reward, "optimal": solution.optimal,
           "upper_bound": solution.upper_bound,
           "nodes_expanded": solution.nodes_expanded}
    with open(path, "a") as fh:
        fh.write(json.dumps(rec) + "\n")
