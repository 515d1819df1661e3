"""Rank-ordered sequential training with entropy freezing, plus baselines.

One agent trains at a time while the others stay frozen. When the trainee's
policy entropy drops to the current freezing point, training moves to the
next agent; after the most junior agent freezes, the freezing point steps
down and the cycle restarts from the most senior agent, until either the
freezing point passes h_stop or the step budget t_max runs out. The first
freeze of the most senior agent bootstraps every other agent with a copy of
its parameters; until then the non-trainees act uniformly at random over
their affordable moves.

Learner updates are batched: the control flow above is evaluated only at
update boundaries (default 2500 trainee transitions).
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import engine
from . import prizes as prize_mod
from .engine import Observation  # re-export for callers

_EPS = 1e-9


@dataclass(frozen=True)
class Transition:
    """One trainee step: what it saw, did, and earned."""
    obs: Observation
    action: int
    reward: float
    done: bool


class ForlDivergenceError(RuntimeError):
    """Training produced a non-finite entropy or parameter vector."""


def estimate_entropy(policy, batch) -> float:
    """Mean Shannon entropy (nats) of the policy's action distributions."""
    if not batch:
        raise ValueError("entropy estimate needs a non-empty observation batch")
    total = 0.0
    for obs in batch:
        p = np.asarray(policy.action_distribution(obs), dtype=float)
        p = p[p > 0]
        total += float(-(p * np.log(p)).sum()) if p.size else 0.0
    return total / len(batch)


class UniformRandomPolicy:
    """Uniform over affordable adjacent moves; the bootstrap-phase filler."""

    def __init__(self, graph, l_max=None):
        self.graph = graph

    def action_distribution(self, obs) -> np.ndarray:
        g = self.graph
        x = obs.own_node
        cands = [v for v in g.neighbors(x)
                 if g.weight(x, v) <= obs.own_budget + _EPS]
        dist = np.zeros(g.n_nodes)
        if cands:
            dist[cands] = 1.0 / len(cands)
        return dist

    def act(self, obs, rng):
        dist = self.action_distribution(obs)
        s = dist.sum()
        return int(rng.choice(self.graph.n_nodes, p=dist / s)) if s > 0 else None

    def update(self, batch):
        pass

    def entropy(self, observations):
        return estimate_entropy(self, observations)

    def parameters(self):
        return np.zeros(0)

    def load_parameters(self, params):
        pass


RANK_ORDINAL = "or"
RANK_GLOBAL = "gr"


class FeatureSpec:
    """Per-candidate-action features for the linear-softmax learner.

    Scalar block: prize value, travel cost, remaining budget after the move,
    a still-can-terminate flag, and a terminal flag. The prize's rank among
    the reachable prizes is a one-hot (a score linear in the rank number
    cannot prefer the second-largest prize, which rank-matched play needs).
    The agent's rank enters as one-hot(rank) x core-feature interactions;
    a standalone rank one-hot is constant across candidates and softmax
    ignores it. rank_mode "or" conditions on the ordinal rank, "gr" on the
    global rank. global_state adds contention counts from other agents'
    positions.
    """

    def __init__(self, graph, l_max, rank_mode=RANK_ORDINAL,
                 global_state=False, rank_cap=8, prize_rank_cap=6):
        if rank_mode not in (RANK_ORDINAL, RANK_GLOBAL):
            raise ValueError(f"rank_mode must be 'or' or 'gr', got {rank_mode!r}")
        self.graph = graph
        self.l_max = float(l_max)
        self.rank_mode = rank_mode
        self.global_state = bool(global_state)
        self.rank_cap = int(rank_cap)
        self.prize_rank_cap = int(prize_rank_cap)
        self.tdist = np.array([graph.terminal_distance(u)
                               for u in range(graph.n_nodes)])
        self._core = 2 + self.prize_rank_cap          # value, pr one-hot, terminal
        self._base = self._core + 3                   # + cost, after, can_term

    @property
    def size(self) -> int:
        n = self._base + self.rank_cap * self._core
        if self.global_state:
            n += 2
        return n

    def names(self) -> list[str]:
        core = (["prize_value"]
                + [f"prize_rank_{k + 1}" for k in range(self.prize_rank_cap)]
                + ["is_terminal"])
        names = core + ["travel_cost", "budget_after", "can_terminate"]
        for r in range(self.rank_cap):
            names += [f"rank{r + 1}*{c}" for c in core]
        if self.global_state:
            names += ["senior_contention", "other_contention"]
        return names

    def candidates(self, obs) -> list[int]:
        g = self.graph
        x = obs.own_node
        return [v for v in g.neighbors(x)
                if g.weight(x, v) <= obs.own_budget + _EPS]

    def features(self, obs):
        """Returns (candidate nodes, feature matrix of shape (k, size))."""
        g = self.graph
        cands = self.candidates(obs)
        k = len(cands)
        phi = np.zeros((k, self.size))
        if k == 0:
            return cands, phi
        prize_order = sorted(
            (v for v in cands if v not in g.terminals and obs.prizes[v] > 0),
            key=lambda v: (-obs.prizes[v], v))
        position = {v: min(i + 1, self.prize_rank_cap)
                    for i, v in enumerate(prize_order)}
        rank = obs.ordinal_rank if self.rank_mode == RANK_ORDINAL else obs.agent_id
        ridx = min(rank, self.rank_cap) - 1
        for row, v in enumerate(cands):
            core = np.zeros(self._core)
            is_term = v in g.terminals
            if not is_term:
                core[0] = obs.prizes[v] / 10.0
                if v in position:
                    core[position[v]] = 1.0
            else:
                core[1 + self.prize_rank_cap] = 1.0
            w = g.weight(obs.own_node, v)
            after = obs.own_budget - w
            phi[row, :self._core] = core
            phi[row, self._core] = w / self.l_max
            phi[row, self._core + 1] = after / self.l_max
            phi[row, self._core + 2] = 1.0 if after + _EPS >= self.tdist[v] else 0.0
            lo = self._base + ridx * self._core
            phi[row, lo:lo + self._core] = core
            if self.global_state:
                senior = other = 0
                for idx in range(obs.n_agents):
                    if not obs.active_flags[idx] or idx + 1 == obs.agent_id:
                        continue
                    if v in g.neighbors(obs.all_nodes[idx]):
                        other += 1
                        if idx + 1 < obs.agent_id:
                            senior += 1
                phi[row, -2] = senior / 8.0
                phi[row, -1] = other / 8.0
        return cands, phi


class LinearSoftmaxPolicy:
    """Linear softmax over candidate actions, trained by batched REINFORCE
    (likelihood-ratio gradient with a mean-return baseline, discounted
    returns computed on completed episodes)."""

    def __init__(self, feature_spec: FeatureSpec, learning_rate=0.1, gamma=1.0):
        self.spec = feature_spec
        self.learning_rate = float(learning_rate)
        self.gamma = float(gamma)
        self.w = np.zeros(feature_spec.size)

    def _dist(self, obs):
        cands, phi = self.spec.features(obs)
        if not cands:
            return cands, phi, np.zeros(0)
        scores = phi @ self.w
        scores -= scores.max()
        e = np.exp(scores)
        return cands, phi, e / e.sum()

    def action_distribution(self, obs) -> np.ndarray:
        cands, _, p = self._dist(obs)
        dist = np.zeros(self.spec.graph.n_nodes)
        dist[cands] = p
        return dist

    def act(self, obs, rng):
        cands, _, p = self._dist(obs)
        if not cands:
            return None
        return int(rng.choice(cands, p=p))

    def update(self, transitions) -> None:
        if not transitions:
            return
        steps = []
        g = 0.0
        for tr in reversed(transitions):
            if tr.done:
                g = 0.0
            g = tr.reward + self.gamma * g
            steps.append((tr.obs, tr.action, g))
        baseline = sum(s[2] for s in steps) / len(steps)
        grad = np.zeros_like(self.w)
        for obs, action, ret in steps:
            cands, phi, p = self._dist(obs)
            if action not in cands:
                continue
            row = cands.index(action)
            grad += (ret - baseline) * (phi[row] - p @ phi)
        self.w += self.learning_rate * grad / len(steps)

    def entropy(self, observations) -> float:
        return estimate_entropy(self, observations)

    def parameters(self) -> np.ndarray:
        return self.w.copy()

    def load_parameters(self, params) -> None:
        params = np.asarray(params, dtype=float)
        if params.shape != self.w.shape:
            raise ValueError(
                f"expected {self.w.shape[0]} parameters, got {params.shape}")
        self.w = params.copy()


def linear_softmax_learner(feature_spec: FeatureSpec, learning_rate=0.1,
                           gamma=1.0) -> LinearSoftmaxPolicy:
    return LinearSoftmaxPolicy(feature_spec, learning_rate, gamma)


@dataclass
class EntropySchedule:
    """Freezing-point staircase: start at h0, step down by dh, stop below
    h_stop. h_max is the uniform reference ln(n_nodes)."""
    h0: float
    dh: float
    h_stop: float
    h_max: float
    current: float = None
    kappa: int = 0

    def __post_init__(self):
        if self.current is None:
            self.current = self.h0
        if not 0.0 <= self.h_stop < self.h0 < self.h_max + 1e-12:
            raise ValueError(
                f"need 0 <= h_stop < h0 <= h_max, got h_stop={self.h_stop}, "
                f"h0={self.h0}, h_max={self.h_max}")
        if self.dh <= 0:
            raise ValueError(f"dh must be positive, got {self.dh}")


def default_schedule(n_nodes: int, h0_fraction=0.7, rounds=10,
                     h_stop=0.05) -> EntropySchedule:
    """h0 at a fraction of ln(n_nodes), stepping to h_stop in `rounds` rounds."""
    h_max = math.log(n_nodes)
    h0 = h0_fraction * h_max
    if not h_stop < h0:
        raise ValueError(f"h_stop {h_stop} must lie below h0 {h0}")
    return EntropySchedule(h0=h0, dh=(h0 - h_stop) / rounds, h_stop=h_stop,
                           h_max=h_max)


@dataclass
class ForlState:
    trainee: int
    t: int
    bootstrapped: bool
    freezing_point: float
    kappa: int


@dataclass
class ForlLog:
    """One entry per update boundary plus schedule metadata."""
    n_agents: int
    h0: float
    dh: float
    h_stop: float
    h_max: float
    entries: list[dict] = field(default_factory=list)
    final: ForlState = None

    def to_csv(self, path) -> None:
        n = self.n_agents
        cols = (["t", "trainee", "freezing_point", "event"]
                + [f"entropy_{i + 1}" for i in range(n)]
                + [f"mean_return_{i + 1}" for i in range(n)])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for e in self.entries:
                writer.writerow(
                    [e["t"], e["trainee"], repr(e["freezing_point"]), e["event"]]
                    + [repr(x) for x in e["entropies"]]
                    + [repr(x) for x in e["mean_returns"]])


def _digest(params: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(params).tobytes()).hexdigest()[:16]


def _play_episode(graph, prize_model, config, policies_by_id, rng, starts,
                  collect, obs_sink=None, step_cap=None):
    """One episode; returns (per-agent returns, env steps, trainee transitions)."""
    n = len(policies_by_id)
    prizes0 = prize_mod.sample_with_rng(prize_model, rng)
    model = prize_model if config.prize_mode == prize_mod.DYNAMIC else None
    state = engine.initial_state(graph, prizes0, config, starts,
                                 prize_model=model)
    cap = step_cap if step_cap is not None else (
        config.step_cap if config.step_cap is not None
        else engine.default_step_cap(graph, config.l_max))
    transitions = {i: [] for i in collect}
    returns = np.zeros(n)
    k = 0
    while state.any_active() and k < cap:
        observations = engine.observe_all(state)
        actions = {}
        chosen = {}
        mute = []
        for a in state.agents:
            if not a.active:
                continue
            o = observations[a.id]
            if obs_sink is not None:
                obs_sink[a.id].append(o)
            dist = policies_by_id[a.id].action_distribution(o)
            s = dist.sum()
            if s <= 0:
                mute.append(a.id)   # policy offers nothing: agent forfeits
                continue
            act = int(rng.choice(graph.n_nodes, p=dist / s))
            actions[a.id] = act
            chosen[a.id] = (o, act)
        if mute:
            agents = tuple(replace(a, active=False) if a.id in mute else a
                           for a in state.agents)
            state = engine.GameState(
                graph=state.graph, agents=agents, prizes=state.prizes,
                t=state.t, config=state.config,
                prize_model=state.prize_model)
            if not state.any_active():
                break
        outcome = engine.step(state, actions, rng)
        returns += outcome.rewards
        for i in collect:
            if i in chosen:
                transitions[i].append(Transition(
                    obs=chosen[i][0], action=chosen[i][1],
                    reward=float(outcome.rewards[i - 1]), done=False))
        state = outcome.new_state
        k += 1
    for i in collect:
        if transitions[i]:
            transitions[i][-1] = replace(transitions[i][-1], done=True)
    return returns, k, transitions


class _ObsRing:
    """Keeps the most recent observations per agent for entropy logging."""

    def __init__(self, n_agents, keep=200):
        self.keep = keep
        self.data = {i: [] for i in range(1, n_agents + 1)}

    def __getitem__(self, agent_id):
        return self.data[agent_id]

    def trim(self):
        for i, buf in self.data.items():
            if len(buf) > self.keep:
                self.data[i] = buf[-self.keep:]


def _entropies(policies, ring, n_agents):
    out = []
    for i in range(1, n_agents + 1):
        buf = ring[i]
        out.append(estimate_entropy(policies[i - 1], buf) if buf else float("nan"))
    return out


def forl_train(graph, prize_model, config, learner_factory, schedule,
               t_max, seed, n_agents, starts=None, batch_size=2500,
               empirical_h0=False, step_cap=None):
    """Train n_agents policies by rank-ordered sequential freezing.

    learner_factory() builds one fresh policy per agent. starts fixes the
    start nodes (None draws fresh uniform non-terminal starts each episode).
    Returns (policies, ForlLog); the log holds one entry per update boundary
    with entropies, mean returns, parameter digests, and control-flow events.
    """
    rng = np.random.default_rng(seed)
    policies = [learner_factory() for _ in range(n_agents)]
    uniform = UniformRandomPolicy(graph)
    sched = replace(schedule)
    current = sched.current
    j = 1
    bootstrapped = False
    kappa = sched.kappa
    t = 0
    buffer = []
    ring = _ObsRing(n_agents)
    ep_returns = {i: [] for i in range(1, n_agents + 1)}
    log = ForlLog(n_agents=n_agents, h0=sched.h0, dh=sched.dh,
                  h_stop=sched.h_stop, h_max=sched.h_max)
    measured_h0 = empirical_h0

    def log_entry(event, updated, fp):
        ring.trim()
        log.entries.append({
            "t": t, "trainee": updated, "freezing_point": fp, "event": event,
            "entropies": _entropies(policies, ring, n_agents),
            "mean_returns": [
                float(np.mean(ep_returns[i])) if ep_returns[i] else float("nan")
                for i in range(1, n_agents + 1)],
            "param_digests": [_digest(p.parameters()) for p in policies],
        })
        for i in ep_returns:
            ep_returns[i] = []

    stop = False
    while t < t_max and not stop:
        episode_starts = starts
        if episode_starts is None:
            episode_starts = [int(s) for s in rng.choice(
                graph.non_terminals(), size=n_agents, replace=True)]
        policies_by_id = {}
        for i in range(1, n_agents + 1):
            if i == j or bootstrapped:
                policies_by_id[i] = policies[i - 1]
            else:
                policies_by_id[i] = uniform
        returns, steps, transitions = _play_episode(
            graph, prize_model, config, policies_by_id, rng, episode_starts,
            collect={j}, obs_sink=ring, step_cap=step_cap)
        t += steps
        buffer.extend(transitions[j])
        for i in range(1, n_agents + 1):
            ep_returns[i].append(float(returns[i - 1]))

        if len(buffer) < batch_size:
            continue
        if measured_h0:
            # empirical-maximum initialization: first measurement becomes h0
            current = min(estimate_entropy(policies[j - 1],
                                           [tr.obs for tr in buffer]),
                          sched.h_max - 1e-9)
            measured_h0 = False
        trainee = policies[j - 1]
        trainee.update(buffer)
        params = trainee.parameters()
        if params.size and not np.all(np.isfinite(params)):
            raise ForlDivergenceError(
                f"non-finite parameters for agent {j} at t={t}")
        h = estimate_entropy(trainee, [tr.obs for tr in buffer])
        if math.isnan(h) or math.isinf(h):
            raise ForlDivergenceError(
                f"non-finite entropy {h} for agent {j} at t={t} "
                f"(freezing point {current}, batch {len(buffer)})")
        buffer = []
        event = ""
        updated = j
        fp_at_update = current
        if h <= current + 1e-12:
            event = "freeze"
            if j == 1 and not bootstrapped:
                for other in range(2, n_agents + 1):
                    policies[other - 1].load_parameters(params)
                bootstrapped = True
                event = "freeze|bootstrap"
            j += 1
            kappa = t
            if j > n_agents:
                current -= sched.dh
                j = 1
                event += "|round"
                if current < sched.h_stop - 1e-12:
                    event += "|stop"
                    stop = True
        log_entry(event, updated, fp_at_update)

    log.final = ForlState(trainee=j, t=t, bootstrapped=bootstrapped,
                          freezing_point=current, kappa=kappa)
    return policies, log


def train_independent(graph, prize_model, config, learner_factory, t_max,
                      seed, n_agents, starts=None, batch_size=2500,
                      step_cap=None):
    """All agents learn simultaneously on their own transitions (no
    sequencing, no entropy gate); stops at t_max."""
    rng = np.random.default_rng(seed)
    policies = [learner_factory() for _ in range(n_agents)]
    policies_by_id = {i + 1: policies[i] for i in range(n_agents)}
    buffers = {i: [] for i in range(1, n_agents + 1)}
    ring = _ObsRing(n_agents)
    ep_returns = {i: [] for i in range(1, n_agents + 1)}
    log = ForlLog(n_agents=n_agents, h0=float("nan"), dh=float("nan"),
                  h_stop=float("nan"), h_max=math.log(graph.n_nodes))
    t = 0
    since_update = 0
    while t < t_max:
        episode_starts = starts
        if episode_starts is None:
            episode_starts = [int(s) for s in rng.choice(
                graph.non_terminals(), size=n_agents, replace=True)]
        returns, steps, transitions = _play_episode(
            graph, prize_model, config, policies_by_id, rng, episode_starts,
            collect=set(buffers), obs_sink=ring, step_cap=step_cap)
        t += steps
        since_update += steps
        for i in buffers:
            buffers[i].extend(transitions[i])
            ep_returns[i].append(float(returns[i - 1]))
        if since_update < batch_size:
            continue
        for i in buffers:
            policies[i - 1].update(buffers[i])
            buffers[i] = []
        since_update = 0
        ring.trim()
        log.entries.append({
            "t": t, "trainee": 0, "freezing_point": float("nan"), "event": "",
            "entropies": _entropies(policies, ring, n_agents),
            "mean_returns": [
                float(np.mean(ep_returns[i])) if ep_returns[i] else float("nan")
                for i in range(1, n_agents + 1)],
            "param_digests": [_digest(p.parameters()) for p in policies],
        })
        for i in ep_returns:
            ep_returns[i] = []
    log.final = ForlState(trainee=0, t=t, bootstrapped=True,
                          freezing_point=float("nan"), kappa=0)
    return policies, log


def train_parameter_shared(graph, prize_model, config, learner, t_max, seed,
                           n_agents, starts=None, batch_size=2500,
                           step_cap=None):
    """One shared policy acts for every agent and updates on the pooled
    transitions of all of them; stops at t_max. Rank conditioning comes from
    the learner's feature spec (ordinal or global)."""
    rng = np.random.default_rng(seed)
    policies_by_id = {i: learner for i in range(1, n_agents + 1)}
    buffer = []
    ring = _ObsRing(n_agents)
    ep_returns = {i: [] for i in range(1, n_agents + 1)}
    log = ForlLog(n_agents=n_agents, h0=float("nan"), dh=float("nan"),
                  h_stop=float("nan"), h_max=math.log(graph.n_nodes))
    t = 0
    while t < t_max:
        episode_starts = starts
        if episode_starts is None:
            episode_starts = [int(s) for s in rng.choice(
                graph.non_terminals(), size=n_agents, replace=True)]
        returns, steps, transitions = _play_episode(
            graph, prize_model, config, policies_by_id, rng, episode_starts,
            collect=set(range(1, n_agents + 1)), obs_sink=ring,
            step_cap=step_cap)
        t += steps
        for i in sorted(transitions):
            buffer.extend(transitions[i])
            ep_returns[i].append(float(returns[i - 1]))
        if len(buffer) < batch_size:
            continue
        learner.update(buffer)
        buffer = []
        ring.trim()
        shared = [learner] * n_agents
        log.entries.append({
            "t": t, "trainee": 0, "freezing_point": float("nan"), "event": "",
            "entropies": _entropies(shared, ring, n_agents),
            "mean_returns": [
                float(np.mean(ep_returns[i])) if ep_returns[i] else float("nan")
                for i in range(1, n_agents + 1)],
            "param_digests": [_digest(learner.parameters())] * n_agents,
        })
        for i in ep_returns:
            ep_returns[i] = []
    log.final = ForlState(trainee=0, t=t, bootstrapped=True,
                          freezing_point=float("nan"), kappa=0)
    return learner, log


def save_policy(path, policy, feature_names=None) -> None:
    """Flat decimal parameter dump with a feature-name header line."""
    params = policy.parameters()
    with open(path, "w") as fh:
        fh.write("# features: " + ",".join(feature_names or []) + "\n")
        for x in params:
            fh.write(repr(float(x)) + "\n")


def load_policy_parameters(path):
    """Returns (parameter array, feature name list) written by save_policy."""
    names = []
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# features:"):
                tail = line.split(":", 1)[1].strip()
                names = [s for s in tail.split(",") if s]
            elif line:
                values.append(float(line))
    return np.array(values), names
