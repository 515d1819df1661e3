"""Route strategies, payoff tensors, pure equilibria, and the rank-greedy
equilibrium construction for complete and star graphs.

A route strategy is a simple path from a start node to a terminal within the
travel budget, written as its intermediate nodes: (1, 2) means
start -> 1 -> 2 -> terminal. Payoff tensors hold non-terminal rewards only;
the constant terminal payment is added back by the team-reward helpers.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from . import engine, ordinal
from .graphs import GraphKind

_EPS = 1e-9


@dataclass(frozen=True)
class RouteStrategy:
    start: int
    nodes: tuple[int, ...]   # intermediate nodes, start and terminal excluded
    terminal: int
    cost: float

    @property
    def full_path(self) -> tuple[int, ...]:
        return (self.start,) + self.nodes + (self.terminal,)

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.nodes) + ")"


def enumerate_strategies(graph, start: int, config,
                         allow_revisits: bool = False) -> list[RouteStrategy]:
    """All routes from start to any terminal with cost <= l_max.

    Simple paths by default (no node revisits, terminals never intermediate).
    allow_revisits permits revisits under a hop guard of
    l_max / min positive weight. Deterministic depth-first order.
    """
    l_max = config.l_max
    if start in graph.terminals:
        return []
    results = []
    if allow_revisits:
        wmin = min((graph.weight(u, v) for u, v in graph.edge_list()
                    if graph.weight(u, v) > 0), default=1.0)
        max_hops = int(l_max / wmin) + 1
    else:
        max_hops = graph.n_nodes

    def dfs(node, visited, path, cost):
        if len(path) + 1 > max_hops:
            return
        for v in sorted(graph.neighbors(node)):
            c = cost + graph.weight(node, v)
            if c > l_max + _EPS:
                continue
            if v in graph.terminals:
                results.append(RouteStrategy(start, tuple(path), v, c))
            elif allow_revisits or v not in visited:
                dfs(v, visited | {v}, path + [v], c)

    dfs(start, {start}, [], 0.0)
    return results


def simulate_route_profile(graph, prize_vector, starts, routes, config):
    """Step-synchronous play of fixed routes under stationary prizes.

    Returns (prize_totals, terminal_totals) per agent, 0-indexed. Produces
    byte-identical rewards to driving the same routes through engine.step
    (a property test holds the two implementations together).
    """
    n = len(routes)
    prize = np.asarray(prize_vector, dtype=float).copy()
    paths = []
    for i, r in enumerate(routes):
        if r.start != starts[i]:
            raise ValueError(f"route {i} starts at {r.start}, agent at {starts[i]}")
        paths.append(r.nodes + (r.terminal,))
    pos = list(starts)
    budget = [config.l_max] * n
    prize_tot = np.zeros(n)
    term_tot = np.zeros(n)
    done = [False] * n
    k = 0
    while not all(done):
        arrivals: dict[int, list[int]] = {}
        for i in range(n):
            if done[i]:
                continue
            v = paths[i][k]
            w = graph.weight(pos[i], v)
            budget[i] -= w
            if budget[i] < -_EPS:
                raise ValueError(f"route for agent {i + 1} exceeds the budget")
            pos[i] = v
            arrivals.setdefault(v, []).append(i)
        for v in sorted(arrivals):
            group = sorted(arrivals[v])
            if v in graph.terminals:
                paid = group if config.terminal_conflict == engine.TERMINAL_SHARED \
                    else group[:1]
                for i in paid:
                    term_tot[i] += config.terminal_prize
                for i in group:
                    done[i] = True
            elif prize[v] != 0.0:
                prize_tot[group[0]] += prize[v]
                prize[v] = 0.0
        k += 1
    return prize_tot, term_tot


@dataclass
class PayoffMatrix:
    """Payoff tensor over joint route profiles.

    payoffs has shape (k_1, ..., k_n, n) where k_i counts agent i's
    strategies; entries are non-terminal rewards only.
    """
    strategies: list[list[RouteStrategy]]
    payoffs: np.ndarray
    config: object

    @property
    def n_agents(self) -> int:
        return len(self.strategies)

    def cell(self, idx) -> np.ndarray:
        return self.payoffs[tuple(idx)]

    def team_reward(self, idx, include_terminal: bool = True) -> float:
        base = float(self.payoffs[tuple(idx)].sum())
        if include_terminal:
            base += self.n_agents * self.config.terminal_prize
        return base

    def to_csv(self, path) -> None:
        n = self.n_agents
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"strategy_{i + 1}" for i in range(n)]
                            + [f"payoff_{i + 1}" for i in range(n)])
            for idx in itertools.product(*(range(len(s)) for s in self.strategies)):
                row = [str(self.strategies[i][idx[i]]) for i in range(n)]
                row += [repr(float(x)) for x in self.payoffs[idx]]
                writer.writerow(row)


def payoff_matrix(graph, prize_vector, starts, config,
                  strategies=None) -> PayoffMatrix:
    """Evaluate every joint route profile (2 to 4 agents).

    Strategies default to enumerate_strategies per start. Payoff entries are
    the non-terminal rewards of deterministic stationary play.
    """
    n = len(starts)
    if not 2 <= n <= 4:
        raise ValueError(f"payoff tensors support 2 to 4 agents, got {n}")
    if strategies is None:
        strategies = [enumerate_strategies(graph, s, config) for s in starts]
    for i, strats in enumerate(strategies):
        if not strats:
            raise ValueError(f"agent {i + 1} has no feasible route from "
                             f"{starts[i]}")
    shape = tuple(len(s) for s in strategies) + (n,)
    payoffs = np.zeros(shape)
    for idx in itertools.product(*(range(len(s)) for s in strategies)):
        routes = [strategies[i][idx[i]] for i in range(n)]
        prize_tot, _ = simulate_route_profile(graph, prize_vector, starts,
                                              routes, config)
        payoffs[idx] = prize_tot
    return PayoffMatrix(strategies=strategies, payoffs=payoffs, config=config)


@dataclass(frozen=True)
class PneResult:
    exists: bool
    equilibria: tuple[tuple[int, ...], ...]


def find_pure_nash(matrix: PayoffMatrix, tol: float = 1e-9) -> PneResult:
    """Exhaustive pure-equilibrium search with weak-inequality deviations."""
    shape = matrix.payoffs.shape[:-1]
    found = []
    for idx in itertools.product(*(range(k) for k in shape)):
        stable = True
        for i in range(matrix.n_agents):
            here = matrix.payoffs[idx][i]
            for alt in range(shape[i]):
                if alt == idx[i]:
                    continue
                dev = idx[:i] + (alt,) + idx[i + 1:]
                if matrix.payoffs[dev][i] > here + tol:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            found.append(idx)
    return PneResult(exists=bool(found), equilibria=tuple(found))


def worst_equilibrium_team_reward(matrix: PayoffMatrix, result: PneResult,
                                  include_terminal: bool = True) -> float:
    if not result.exists:
        raise ValueError("no pure equilibrium to take the worst of")
    return min(matrix.team_reward(idx, include_terminal)
               for idx in result.equilibria)


def price_of_anarchy(worst_equilibrium_reward: float, top_optimum: float) -> float:
    """Ratio of worst equilibrium team reward to the team optimum."""
    if not top_optimum > 0:
        raise ValueError(f"team optimum must be positive, got {top_optimum}")
    return worst_equilibrium_reward / top_optimum


# ---------------------------------------------------------------------------
# rank-greedy equilibrium play


def rank_greedy_moves(graph, config, prizes, positions, budgets) -> dict[int, int | None]:
    """Joint stage decision: each agent heads for the prize matching its rank.

    positions holds (agent_id, node) for active agents. Per component of the
    separating graph, agents claim the largest unclaimed prizes in seniority
    order, never their own node. Groups of equal prizes are settled junior
    first by minimum travel cost (then lowest node id). A claim is kept only
    if the agent can reach the prize and still afford a terminal; otherwise
    the agent heads for the nearest terminal. Returns agent -> next node
    (None when even the terminal is out of reach).
    """
    pos = dict(positions)
    comps = ordinal.ors(ordinal.separating_graph_from_positions(graph, positions))
    dist = graph.distances()
    pool = sorted(((prizes[v], v) for v in range(graph.n_nodes)
                   if v not in graph.terminals and prizes[v] > 0),
                  key=lambda t: (-t[0], t[1]))
    taken: set[int] = set()
    targets: dict[int, int | None] = {}
    for comp in comps:
        members = sorted(comp)
        chosen: dict[int, tuple[float, int] | None] = {}
        for a in members:
            chosen[a] = None
            for value, node in pool:
                if node in taken or node == pos[a]:
                    continue
                chosen[a] = (value, node)
                taken.add(node)
                break
        # equal-prize groups: junior takes the cheapest of the tied nodes
        by_value: dict[float, list[int]] = {}
        for a in members:
            if chosen[a] is not None:
                by_value.setdefault(chosen[a][0], []).append(a)
        for value, group in by_value.items():
            if len(group) < 2:
                continue
            nodes = {chosen[a][1] for a in group}
            for a in sorted(group, reverse=True):
                options = [v for v in nodes if v != pos[a]]
                if not options:
                    chosen[a] = None
                    continue
                best = min(options, key=lambda v: (dist[pos[a], v], v))
                chosen[a] = (value, best)
                nodes.discard(best)
        for a in members:
            targets[a] = chosen[a][1] if chosen[a] is not None else None

    moves: dict[int, int | None] = {}
    for (a, x) in positions:
        budget = budgets[a]
        target = targets.get(a)
        if target is not None:
            to_target = (graph.weight(x, target) if graph.has_edge(x, target)
                         else dist[x, target])
            if to_target + graph.terminal_distance(target) <= budget + _EPS:
                moves[a] = (target if graph.has_edge(x, target)
                            else graph.next_hop(x, target))
                continue
        if graph.terminal_distance(x) <= budget + _EPS:
            moves[a] = graph.next_hop(x, graph.nearest_terminal(x))
        else:
            moves[a] = None
    return moves


class RankGreedyPolicy:
    """Deterministic stage-greedy policy for one agent.

    Every agent recomputes the same joint assignment from its observation, so
    a team of these policies plays a consistent joint move.
    """

    def __init__(self, graph, config, agent_id: int):
        self.graph = graph
        self.config = config
        self.agent_id = agent_id

    def action_distribution(self, obs) -> np.ndarray:
        positions = [(i + 1, obs.all_nodes[i]) for i in range(obs.n_agents)
                     if obs.active_flags[i]]
        budgets = {i + 1: obs.all_budgets[i] for i in range(obs.n_agents)}
        moves = rank_greedy_moves(self.graph, self.config, obs.prizes,
                                  positions, budgets)
        dist = np.zeros(self.graph.n_nodes)
        move = moves.get(self.agent_id)
        if move is not None:
            dist[move] = 1.0
        return dist

    def act(self, obs, rng=None) -> int | None:
        dist = self.action_distribution(obs)
        return int(np.argmax(dist)) if dist.sum() > 0 else None

    # Policy-interface stubs: the greedy construction has nothing to learn.
    def update(self, batch):
        pass

    def entropy(self, observations) -> float:
        return 0.0

    def parameters(self) -> np.ndarray:
        return np.zeros(0)

    def load_parameters(self, params) -> None:
        pass


def greedy_pne_policy(graph, config, n_agents: int) -> list[RankGreedyPolicy]:
    """Stage-greedy joint policy for complete graphs (and star graphs, where
    collection happens on alternating stages) with stationary prizes and
    |V| > n.

    The profile is a pure equilibrium when the travel budget admits one
    collection per agent (reach any prize, then exit) but not multi-prize
    routes, and the terminal payment exceeds every node prize. With a larger
    budget a senior agent can profitably sweep prizes assigned to juniors,
    winning each tie by rank; the profile remains team-optimal but stops
    being deviation-proof."""
    if graph.kind not in (GraphKind.COMPLETE, GraphKind.STAR):
        raise ValueError("greedy equilibrium play needs a complete or star graph")
    if config.prize_mode != "stationary":
        raise ValueError("greedy equilibrium play needs stationary prizes")
    if not graph.n_nodes > n_agents:
        raise ValueError("greedy equilibrium play needs more nodes than agents")
    return [RankGreedyPolicy(graph, config, i + 1) for i in range(n_agents)]


def routes_from_log(graph, log: engine.EpisodeLog) -> list[RouteStrategy | None]:
    """Recover each agent's executed route; None if it never reached a terminal."""
    routes = []
    for trajectory in log.trajectories:
        route = None
        for k in range(1, len(trajectory)):
            if trajectory[k] in graph.terminals:
                path = trajectory[:k + 1]
                cost = sum(graph.weight(path[j], path[j + 1])
                           for j in range(len(path) - 1))
                route = RouteStrategy(path[0], tuple(path[1:-1]), path[k], cost)
                break
        routes.append(route)
    return routes


def greedy_routes(graph, prize_vector, starts, config):
    """Play the rank-greedy joint policy once; returns (routes, episode log)."""
    policies = greedy_pne_policy(graph, config, len(starts))
    log = engine.rollout(graph, None, config, policies, seed=0, starts=starts,
                         initial_prizes=prize_vector)
    return routes_from_log(graph, log), log


def verify_unilateral_deviations(graph, prize_vector, starts, config, routes,
                                 tol: float = 1e-9, strategy_lists=None):
    """Check a route profile for pure-equilibrium stability.

    Tries every alternative route of every agent with the others held fixed.
    Returns (True, None) if no deviation gains more than tol, otherwise
    (False, (agent_id, better_route, gain)).
    """
    base = simulate_route_profile(graph, prize_vector, starts, routes, config)
    base_total = base[0] + base[1]
    for i in range(len(routes)):
        alts = (strategy_lists[i] if strategy_lists is not None
                else enumerate_strategies(graph, starts[i], config))
        for alt in alts:
            if alt == routes[i]:
                continue
            trial = list(routes)
            trial[i] = alt
            pt, tt = simulate_route_profile(graph, prize_vector, starts, trial,
                                            config)
            gain = (pt[i] + tt[i]) - base_total[i]
            if gain > tol:
                return False, (i + 1, alt, float(gain))
    return True, None
