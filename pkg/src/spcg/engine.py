"""Simultaneous-move game engine.

Agents move along edges under a shared travel budget, collect node prizes on
arrival (seniority wins co-arrivals: the smallest agent id takes the whole
prize), are paid the terminal prize when they reach a terminal, and then drop
out. step() is functional: it validates the joint action, applies it, and
returns the rewards together with the successor state.

Conventions: agent ids are 1-based ranks (id 1 is the most senior); reward
arrays are indexed by id - 1.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import ordinal
from . import prizes as prize_mod

_EPS = 1e-9

RANK_PRIORITY = "rank_priority"
TERMINAL_SHARED = "shared"
TERMINAL_SENIOR_ONLY = "senior_only"


class EngineError(ValueError):
    pass


class InfeasibleActionError(EngineError):
    """Action targets a non-adjacent node or comes from an inactive agent."""


class UnaffordableActionError(EngineError):
    """Action's edge weight exceeds the agent's remaining budget."""


class MissingActionError(EngineError):
    """An active agent with affordable moves was given no action."""


@dataclass(frozen=True)
class AgentState:
    id: int          # global rank, 1-based; smaller id = more senior
    node: int
    budget: float
    active: bool


@dataclass(frozen=True)
class GameConfig:
    """Game parameters shared by every agent.

    l_max is the common travel budget. terminal_conflict picks how same-step
    co-arrivals at a terminal are paid: "shared" pays everyone (the default),
    "senior_only" pays only the senior arrival.
    """
    l_max: float
    terminal_prize: float = 15.0
    prize_mode: str = prize_mod.STATIONARY
    gamma: float = 1.0
    conflict_rule: str = RANK_PRIORITY
    terminal_conflict: str = TERMINAL_SHARED
    step_cap: int | None = None

    def __post_init__(self):
        if not self.l_max > 0:
            raise ValueError(f"l_max must be positive, got {self.l_max}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.conflict_rule != RANK_PRIORITY:
            raise ValueError(f"unknown conflict rule {self.conflict_rule!r}")
        if self.prize_mode not in (prize_mod.STATIONARY, prize_mod.DYNAMIC):
            raise ValueError(f"unknown prize mode {self.prize_mode!r}")
        if self.terminal_conflict not in (TERMINAL_SHARED, TERMINAL_SENIOR_ONLY):
            raise ValueError(
                f"unknown terminal conflict mode {self.terminal_conflict!r}")


@dataclass(frozen=True)
class GameState:
    graph: object
    agents: tuple[AgentState, ...]
    prizes: np.ndarray
    t: int
    config: GameConfig
    prize_model: object = None   # required only for dynamic prize mode

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def agent(self, agent_id: int) -> AgentState:
        a = self.agents[agent_id - 1]
        if a.id != agent_id:
            raise EngineError(f"agent ids out of order at {agent_id}")
        return a

    def any_active(self) -> bool:
        return any(a.active for a in self.agents)


@dataclass(frozen=True)
class StepOutcome:
    """Result of one simultaneous step.

    rewards[i-1] is agent i's full reward for the step (prize plus terminal
    payment); collected maps node -> collecting agent id; conflicts counts
    agents denied a nonzero prize by a more senior co-arrival.
    """
    rewards: np.ndarray
    collected: dict[int, int]
    terminal_payments: dict[int, float]
    conflicts: int
    new_state: GameState


@dataclass(frozen=True)
class Observation:
    """Per-agent view handed to policies.

    mask flags the adjacent nodes (budget feasibility is intentionally not
    baked in; policies filter unaffordable moves themselves).
    """
    agent_id: int
    own_node: int
    own_budget: float
    ordinal_rank: int
    mask: np.ndarray
    prizes: np.ndarray
    t: int
    n_agents: int
    all_nodes: tuple[int, ...]
    all_budgets: tuple[float, ...]
    active_flags: tuple[bool, ...]


def initial_state(graph, prize_vector, config: GameConfig, starts,
                  prize_model=None) -> GameState:
    """Place one agent per entry of `starts` with a full budget.

    Agents starting on a terminal (or with no budget) begin inactive.
    """
    starts = [int(s) for s in starts]
    if not starts:
        raise ValueError("need at least one agent")
    for s in starts:
        if not 0 <= s < graph.n_nodes:
            raise ValueError(f"start node {s} out of range")
    values = np.asarray(prize_vector, dtype=float).copy()
    if values.shape != (graph.n_nodes,):
        raise ValueError(f"prize vector must have length {graph.n_nodes}")
    if config.prize_mode == prize_mod.DYNAMIC and prize_model is None:
        raise ValueError("dynamic prize mode needs a prize_model")
    agents = tuple(
        AgentState(id=i + 1, node=s, budget=float(config.l_max),
                   active=(s not in graph.terminals and config.l_max > 0))
        for i, s in enumerate(starts))
    return GameState(graph=graph, agents=agents, prizes=values, t=0,
                     config=config, prize_model=prize_model)


def reachable_set(state: GameState, agent_id: int) -> frozenset[int]:
    """One-step reachable nodes; empty for inactive agents."""
    a = state.agent(agent_id)
    if not a.active:
        return frozenset()
    return frozenset(state.graph.neighbors(a.node))


def action_mask(state: GameState, agent_id: int) -> np.ndarray:
    """0/1 vector over nodes; adjacency only, all-zero when inactive."""
    mask = np.zeros(state.graph.n_nodes, dtype=np.int8)
    a = state.agent(agent_id)
    if a.active:
        mask[list(state.graph.neighbors(a.node))] = 1
    return mask


def affordable_moves(state: GameState, agent_id: int) -> list[int]:
    a = state.agent(agent_id)
    if not a.active:
        return []
    g = state.graph
    return [v for v in g.neighbors(a.node) if g.weight(a.node, v) <= a.budget + _EPS]


def step(state: GameState, actions: dict[int, int], rng=None) -> StepOutcome:
    """Apply one simultaneous joint move.

    actions maps agent id -> destination node for every active agent that
    moves. An active agent may be omitted only if it has no affordable move;
    it is then stranded (deactivated in place). Invalid actions raise.
    """
    g = state.graph
    cfg = state.config
    n = state.n_agents

    moves = {}
    for agent_id, target in actions.items():
        a = state.agent(agent_id)
        if not a.active:
            raise InfeasibleActionError(f"agent {agent_id} is inactive")
        target = int(target)
        if not g.has_edge(a.node, target):
            raise InfeasibleActionError(
                f"agent {agent_id}: no edge from {a.node} to {target}")
        w = g.weight(a.node, target)
        if w > a.budget + _EPS:
            raise UnaffordableActionError(
                f"agent {agent_id}: edge ({a.node},{target}) costs {w}, "
                f"budget is {a.budget}")
        moves[agent_id] = (target, w)

    for a in state.agents:
        if a.active and a.id not in moves:
            if affordable_moves(state, a.id):
                raise MissingActionError(
                    f"agent {a.id} is active with affordable moves but got "
                    "no action")

    new_prizes = state.prizes.copy()
    rewards = np.zeros(n)
    collected: dict[int, int] = {}
    terminal_payments: dict[int, float] = {}
    conflicts = 0

    arrivals: dict[int, list[int]] = {}
    new_agents = list(state.agents)
    for agent_id, (target, w) in moves.items():
        a = state.agent(agent_id)
        new_agents[agent_id - 1] = replace(a, node=target, budget=a.budget - w)
        arrivals.setdefault(target, []).append(agent_id)

    # prize collection on post-move occupancy, seniority wins
    for v in sorted(arrivals):
        group = sorted(arrivals[v])
        if v in g.terminals:
            if cfg.terminal_conflict == TERMINAL_SHARED:
                paid = group
            else:
                paid = group[:1]
            for agent_id in paid:
                rewards[agent_id - 1] += cfg.terminal_prize
                terminal_payments[agent_id] = cfg.terminal_prize
            continue
        if new_prizes[v] != 0.0:
            winner = group[0]
            rewards[winner - 1] += new_prizes[v]
            collected[v] = winner
            new_prizes[v] = 0.0
            conflicts += len(group) - 1

    # availability: out of budget or on a terminal means out of the game;
    # agents with no affordable move are stranded in place
    for i, a in enumerate(new_agents):
        if not a.active:
            continue
        if a.id in moves:
            still_in = a.budget > _EPS and a.node not in g.terminals
            if not still_in:
                new_agents[i] = replace(a, active=False)
        else:
            new_agents[i] = replace(a, active=False)

    if cfg.prize_mode == prize_mod.DYNAMIC:
        if state.prize_model is None:
            raise EngineError("dynamic prize mode needs a prize_model")
        if rng is None:
            raise EngineError("dynamic prize mode needs an rng for repopulation")
        occupied = {a.node for a in new_agents}
        new_prizes = prize_mod.repopulate(state.prize_model, new_prizes,
                                          occupied, rng)

    new_state = GameState(graph=g, agents=tuple(new_agents), prizes=new_prizes,
                          t=state.t + 1, config=cfg,
                          prize_model=state.prize_model)
    return StepOutcome(rewards=rewards, collected=collected,
                       terminal_payments=terminal_payments,
                       conflicts=conflicts, new_state=new_state)


def observe_all(state: GameState) -> dict[int, Observation]:
    """Observations for every active agent (ordinal ranks computed once)."""
    ranks = ordinal.ranks_for_state(state)
    all_nodes = tuple(a.node for a in state.agents)
    all_budgets = tuple(a.budget for a in state.agents)
    active_flags = tuple(a.active for a in state.agents)
    out = {}
    for a in state.agents:
        if not a.active:
            continue
        out[a.id] = Observation(
            agent_id=a.id, own_node=a.node, own_budget=a.budget,
            ordinal_rank=ranks[a.id], mask=action_mask(state, a.id),
            prizes=state.prizes, t=state.t, n_agents=state.n_agents,
            all_nodes=all_nodes, all_budgets=all_budgets,
            active_flags=active_flags)
    return out


def default_step_cap(graph, l_max: float) -> int:
    """4x the most moves a budget can buy; a livelock guard for rollouts."""
    wmin = min((graph.weight(u, v) for u, v in graph.edge_list()
                if graph.weight(u, v) > 0), default=1.0)
    return max(int(math.ceil(4 * l_max)), int(math.ceil(4 * l_max / wmin)), 4)


@dataclass
class EpisodeLog:
    """Full record of one rollout.

    steps holds one serializable record per step: t, per-agent node, action,
    reward and budget, and a digest of the prize vector. returns are
    undiscounted sums; discounted_returns apply gamma by step index.
    """
    n_agents: int
    gamma: float
    steps: list[dict] = field(default_factory=list)
    returns: np.ndarray = None
    discounted_returns: np.ndarray = None
    prize_returns: np.ndarray = None
    terminal_returns: np.ndarray = None
    stage_rewards: list[np.ndarray] = field(default_factory=list)
    trajectories: list[list[int]] = field(default_factory=list)
    conflicts: int = 0
    truncated: bool = False

    @property
    def team_reward(self) -> float:
        return float(np.sum(self.returns))

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            header = {"record": "episode", "n_agents": self.n_agents,
                      "gamma": self.gamma, "conflicts": self.conflicts,
                      "truncated": self.truncated,
                      "returns": list(map(float, self.returns)),
                      "discounted_returns": list(map(float,
                                                     self.discounted_returns))}
            fh.write(json.dumps(header) + "\n")
            for rec in self.steps:
                fh.write(json.dumps(rec) + "\n")

    @staticmethod
    def read_jsonl(path) -> list[dict]:
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]


def _prize_digest(values: np.ndarray) -> str:
    return hashlib.sha256(values.tobytes()).hexdigest()[:16]


def rollout(graph, prize_model, config: GameConfig, policies, seed,
            starts=None, step_cap=None, initial_prizes=None) -> EpisodeLog:
    """Play one episode with the given per-agent policies.

    policies[i] acts for agent i+1 and must expose
    action_distribution(observation) -> probability vector over nodes.
    starts defaults to uniform draws over non-terminal nodes. initial_prizes
    fixes the starting prize vector (otherwise it is sampled from the model;
    a model is optional for stationary games when initial_prizes is given).
    The episode ends when every agent is inactive or the step cap trips
    (truncated=True).
    """
    rng = np.random.default_rng(seed)
    n = len(policies)
    if starts is None:
        starts = [int(s) for s in
                  rng.choice(graph.non_terminals(), size=n, replace=True)]
    if initial_prizes is not None:
        prize0 = np.asarray(initial_prizes, dtype=float)
    else:
        prize0 = prize_mod.sample_with_rng(prize_model, rng)
    state = initial_state(graph, prize0, config, starts,
                          prize_model=prize_model)
    cap = step_cap if step_cap is not None else (
        config.step_cap if config.step_cap is not None
        else default_step_cap(graph, config.l_max))

    log = EpisodeLog(n_agents=n, gamma=config.gamma)
    totals = np.zeros(n)
    discounted = np.zeros(n)
    prize_totals = np.zeros(n)
    terminal_totals = np.zeros(n)
    conflicts = 0
    trajectories = [[a.node] for a in state.agents]

    k = 0
    while state.any_active() and k < cap:
        observations = observe_all(state)
        actions = {}
        mute = []
        for a in state.agents:
            if not a.active:
                continue
            dist = np.asarray(policies[a.id - 1].action_distribution(
                observations[a.id]), dtype=float)
            total = dist.sum()
            if total <= 0:
                mute.append(a.id)   # policy offers nothing: agent forfeits
                continue
            actions[a.id] = int(rng.choice(graph.n_nodes, p=dist / total))
        if mute:
            agents = tuple(replace(a, active=False) if a.id in mute else a
                           for a in state.agents)
            state = GameState(graph=state.graph, agents=agents,
                              prizes=state.prizes, t=state.t,
                              config=state.config,
                              prize_model=state.prize_model)
            if not state.any_active():
                break
        outcome = step(state, actions, rng)
        totals += outcome.rewards
        discounted += (config.gamma ** k) * outcome.rewards
        for agent_id, pay in outcome.terminal_payments.items():
            terminal_totals[agent_id - 1] += pay
        prize_totals = totals - terminal_totals
        conflicts += outcome.conflicts
        state = outcome.new_state
        for i, a in enumerate(state.agents):
            trajectories[i].append(a.node)
        log.steps.append({
            "t": state.t,
            "nodes": [a.node for a in state.agents],
            "actions": {str(i): actions.get(i) for i in range(1, n + 1)},
            "rewards": list(map(float, outcome.rewards)),
            "budgets": [float(a.budget) for a in state.agents],
            "active": [a.active for a in state.agents],
            "prize_digest": _prize_digest(state.prizes),
        })
        log.stage_rewards.append(outcome.rewards)
        k += 1

    log.returns = totals
    log.discounted_returns = discounted
    log.prize_returns = prize_totals
    log.terminal_returns = terminal_totals
    log.conflicts = conflicts
    log.truncated = state.any_active()
    log.trajectories = trajectories
    return log
